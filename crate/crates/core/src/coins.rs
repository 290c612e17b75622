//! Per-vertex coin matrices with entries written as expressions in `eps`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::expr::{EvalError, Expr};
use crate::graph::{GraphWithTails, VertexId};

/// Unitarity tolerance on `max |U*U - I|`.
pub const UNITARITY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoinError {
    #[error("vertex {vertex}: coin is {rows}x{cols} but degree is {degree}")]
    DimensionMismatch {
        vertex: String,
        rows: usize,
        cols: usize,
        degree: usize,
    },
    #[error("expected {expected} coins, one per vertex, got {got}")]
    CountMismatch { expected: usize, got: usize },
    #[error("vertex {vertex}, entry ({row}, {col}): {source}")]
    Eval {
        vertex: String,
        row: usize,
        col: usize,
        source: EvalError,
    },
    #[error("vertex {vertex}: coin not unitary, residual {residual:.3e}")]
    NotUnitary { vertex: String, residual: f64 },
}

/// One square matrix of expressions per interior vertex, in vertex order.
/// Rows follow [`GraphWithTails::out_slots`], columns follow
/// [`GraphWithTails::in_slots`].
#[derive(Clone, Debug, PartialEq)]
pub struct CoinFamily {
    coins: Vec<DMatrix<Expr>>,
}

#[derive(Clone, Debug)]
pub struct EvaluatedCoins {
    pub eps: f64,
    pub matrices: Vec<DMatrix<Complex64>>,
    /// `max |U_v* U_v - I|` per vertex.
    pub residuals: Vec<f64>,
}

impl CoinFamily {
    pub fn new(graph: &GraphWithTails, coins: Vec<DMatrix<Expr>>) -> Result<Self, CoinError> {
        if coins.len() != graph.vertex_count() {
            return Err(CoinError::CountMismatch {
                expected: graph.vertex_count(),
                got: coins.len(),
            });
        }
        for (v, c) in graph.vertices().zip(&coins) {
            let degree = graph.degree(v);
            if c.nrows() != degree || c.ncols() != degree {
                return Err(CoinError::DimensionMismatch {
                    vertex: graph.vertex_name(v).to_string(),
                    rows: c.nrows(),
                    cols: c.ncols(),
                    degree,
                });
            }
        }
        Ok(CoinFamily { coins })
    }

    /// Coins that do not depend on `eps`.
    pub fn constant(
        graph: &GraphWithTails,
        matrices: &[DMatrix<Complex64>],
    ) -> Result<Self, CoinError> {
        let coins = matrices.iter().map(|m| m.map(Expr::constant)).collect();
        Self::new(graph, coins)
    }

    pub fn coin(&self, v: VertexId) -> &DMatrix<Expr> {
        &self.coins[v.0]
    }

    pub fn coins(&self) -> &[DMatrix<Expr>] {
        &self.coins
    }

    /// Evaluates every entry at `eps` and checks unitarity.
    pub fn eval(&self, graph: &GraphWithTails, eps: f64) -> Result<EvaluatedCoins, CoinError> {
        let out = self.eval_unchecked(graph, eps)?;
        for (v, &r) in out.residuals.iter().enumerate() {
            if !(r <= UNITARITY_TOL) {
                return Err(CoinError::NotUnitary {
                    vertex: graph.vertex_name(VertexId(v)).to_string(),
                    residual: r,
                });
            }
        }
        Ok(out)
    }

    /// Like [`CoinFamily::eval`] but reports residuals instead of failing on them.
    pub fn eval_unchecked(
        &self,
        graph: &GraphWithTails,
        eps: f64,
    ) -> Result<EvaluatedCoins, CoinError> {
        let mut matrices = Vec::with_capacity(self.coins.len());
        let mut residuals = Vec::with_capacity(self.coins.len());
        for (v, c) in self.coins.iter().enumerate() {
            let mut m = DMatrix::zeros(c.nrows(), c.ncols());
            for j in 0..c.ncols() {
                for i in 0..c.nrows() {
                    m[(i, j)] = c[(i, j)].eval(eps).map_err(|source| CoinError::Eval {
                        vertex: graph.vertex_name(VertexId(v)).to_string(),
                        row: i,
                        col: j,
                        source,
                    })?;
                }
            }
            residuals.push(unitarity_residual(&m));
            matrices.push(m);
        }
        Ok(EvaluatedCoins {
            eps,
            matrices,
            residuals,
        })
    }
}

pub fn unitarity_residual(m: &DMatrix<Complex64>) -> f64 {
    let g = m.adjoint() * m;
    let mut worst = 0.0f64;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}

/// Parses a row-major list of rows of expression strings.
pub fn parse_matrix(rows: &[Vec<String>]) -> Result<DMatrix<Expr>, crate::expr::SyntaxError> {
    let n = rows.len();
    let mut out = DMatrix::from_element(n, rows.first().map_or(0, |r| r.len()), Expr::Num(0.0));
    for (i, row) in rows.iter().enumerate() {
        for (j, s) in row.iter().enumerate() {
            out[(i, j)] = Expr::parse(s)?;
        }
    }
    Ok(out)
}
