//! Resonances and scattering for discrete-time quantum walks on balanced
//! directed graphs with tails.
//!
//! A model is a [`GraphWithTails`] plus a [`CoinFamily`] of per-vertex
//! unitaries depending on a parameter `eps ≥ 0`. At a fixed `eps` the walk is
//! assembled into a [`WalkOperator`]; its interior block yields the
//! resonances ([`spectral`]) and the scattering matrix `Σ(z)` is computed
//! either from the resolvent or from the resonance expansion
//! ([`scattering`]).

pub mod asymptotics;
pub mod coins;
pub mod expr;
pub mod graph;
pub mod line;
pub mod model_file;
pub mod models;
pub mod par;
pub mod scattering;
pub mod spectral;
pub mod walk;

pub use coins::{CoinError, CoinFamily};
pub use expr::Expr;
pub use graph::{ArcId, GraphError, GraphWithTails, VertexId};
pub use models::WalkFamily;
pub use scattering::{Route as SigmaRoute, Scattering};
pub use spectral::EigenSystem;
pub use walk::{Route, WalkOperator};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] graph::GraphError),
    #[error(transparent)]
    Syntax(#[from] expr::SyntaxError),
    #[error(transparent)]
    Coin(#[from] coins::CoinError),
    #[error(transparent)]
    Walk(#[from] walk::WalkError),
    #[error(transparent)]
    Spectral(#[from] spectral::SpectralError),
    #[error(transparent)]
    Scattering(#[from] scattering::ScatteringError),
    #[error(transparent)]
    Line(#[from] line::LineError),
    #[error(transparent)]
    Model(#[from] models::ModelError),
    #[error(transparent)]
    Asymptotics(#[from] asymptotics::AsymptoticsError),
    #[error(transparent)]
    ModelFile(#[from] model_file::ModelFileError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
