//! The evolution operator on the finite carrier `A₀ ∪ Ω♭ ∪ Ω♯`.
//!
//! Carrier indices follow [`GraphWithTails::arcs`]: `0..n0` interior arcs,
//! `n0..n0+N` the incoming boundary arcs `ω_n♭`, `n0+N..n0+2N` the outgoing
//! boundary arcs `ω_n♯`. Matrices act on column vectors: column = arc before
//! the step, row = arc after it.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::coins::{CoinFamily, EvaluatedCoins};
use crate::graph::GraphWithTails;

/// Amplitudes below this are treated as zero when following free routing.
pub const SUPPORT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("vertex {vertex}: coin is {rows}x{cols}, degree is {degree}")]
    DimensionMismatch {
        vertex: String,
        rows: usize,
        cols: usize,
        degree: usize,
    },
    #[error("tail {tail}: state not a single arc after {step} steps")]
    NotDeterministic { tail: usize, step: usize },
    #[error("tail {0}: never reaches an outgoing tail")]
    NoExit(usize),
    #[error("tail {tail} exits through outgoing tail {reached}")]
    LabelMismatch { tail: usize, reached: usize },
}

#[derive(Clone, Debug)]
pub struct WalkOperator {
    pub eps: f64,
    n_interior: usize,
    n_tails: usize,
    full: DMatrix<Complex64>,
}

/// `U(0)^k δ_{ω_n♭} = c δ_{ω_n♯}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Route {
    pub tail: usize,
    pub steps: usize,
    pub phase: Complex64,
}

impl WalkOperator {
    pub fn assemble(graph: &GraphWithTails, coins: &EvaluatedCoins) -> Result<Self, WalkError> {
        let n0 = graph.interior_arc_count();
        let n = graph.tail_count();
        let dim = n0 + 2 * n;
        let mut full = DMatrix::zeros(dim, dim);
        for v in graph.vertices() {
            let c = &coins.matrices[v.0];
            let (ins, outs) = (graph.in_slots(v), graph.out_slots(v));
            if c.nrows() != outs.len() || c.ncols() != ins.len() {
                return Err(WalkError::DimensionMismatch {
                    vertex: graph.vertex_name(v).to_string(),
                    rows: c.nrows(),
                    cols: c.ncols(),
                    degree: ins.len(),
                });
            }
            for (j, b) in ins.iter().enumerate() {
                for (i, a) in outs.iter().enumerate() {
                    full[(a.0, b.0)] = c[(i, j)];
                }
            }
        }
        Ok(WalkOperator {
            eps: coins.eps,
            n_interior: n0,
            n_tails: n,
            full,
        })
    }

    pub fn from_parts(
        graph: &GraphWithTails,
        coins: &CoinFamily,
        eps: f64,
    ) -> Result<Self, crate::Error> {
        let evaluated = coins.eval(graph, eps)?;
        Ok(Self::assemble(graph, &evaluated)?)
    }

    /// `|A₀|`.
    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    /// `N`.
    pub fn n_tails(&self) -> usize {
        self.n_tails
    }

    pub fn full(&self) -> &DMatrix<Complex64> {
        &self.full
    }

    fn in_range(&self) -> std::ops::Range<usize> {
        self.n_interior..self.n_interior + self.n_tails
    }

    fn out_range(&self) -> std::ops::Range<usize> {
        self.n_interior + self.n_tails..self.n_interior + 2 * self.n_tails
    }

    /// `U|_{A₀}`.
    pub fn interior(&self) -> DMatrix<Complex64> {
        let n0 = self.n_interior;
        self.full.view((0, 0), (n0, n0)).into_owned()
    }

    /// `χ(A₀) U χ(Ω♭)*`.
    pub fn b_in(&self) -> DMatrix<Complex64> {
        let r = self.in_range();
        self.full.view((0, r.start), (self.n_interior, self.n_tails)).into_owned()
    }

    /// `χ(Ω♯) U χ(A₀)*`.
    pub fn b_out(&self) -> DMatrix<Complex64> {
        let r = self.out_range();
        self.full.view((r.start, 0), (self.n_tails, self.n_interior)).into_owned()
    }

    /// `χ(Ω♯) U χ(Ω♭)*`.
    pub fn direct(&self) -> DMatrix<Complex64> {
        let (ri, ro) = (self.in_range(), self.out_range());
        self.full.view((ro.start, ri.start), (self.n_tails, self.n_tails)).into_owned()
    }

    /// Maps a state on `A₀ ∪ Ω♭` (interior entries first) to `U` of it on
    /// `A₀ ∪ Ω♯` (interior entries first).
    pub fn apply(&self, state: &DVector<Complex64>) -> DVector<Complex64> {
        assert_eq!(state.len(), self.n_interior + self.n_tails, "state length");
        let mut carrier = DVector::zeros(self.full.nrows());
        carrier.rows_mut(0, state.len()).copy_from(state);
        let image = &self.full * carrier;
        let mut out = DVector::zeros(state.len());
        out.rows_mut(0, self.n_interior)
            .copy_from(&image.rows(0, self.n_interior));
        out.rows_mut(self.n_interior, self.n_tails)
            .copy_from(&image.rows(self.out_range().start, self.n_tails));
        out
    }

    /// `max |G - I|` for the Gram matrix of the columns indexed by `A₀ ∪ Ω♭`.
    pub fn isometry_residual(&self) -> f64 {
        let k = self.n_interior + self.n_tails;
        let cols = self.full.columns(0, k);
        let g = cols.adjoint() * cols;
        let mut worst = 0.0f64;
        for j in 0..k {
            for i in 0..k {
                let t = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - t).norm());
            }
        }
        worst
    }

    /// Follows each `δ_{ω_n♭}` under `U` until it leaves through `Ω♯`.
    /// Meant for the unperturbed operator.
    pub fn free_routing(&self) -> Result<Vec<Route>, WalkError> {
        let dim = self.full.nrows();
        let out_start = self.out_range().start;
        let mut routes = Vec::with_capacity(self.n_tails);
        for n in 1..=self.n_tails {
            let mut arc = self.n_interior + n - 1;
            let mut phase = Complex64::new(1.0, 0.0);
            let mut exit = None;
            for step in 1..=self.n_interior + 1 {
                let column = self.full.column(arc);
                let support: Vec<usize> = (0..dim).filter(|&i| column[i].norm() > SUPPORT_TOL).collect();
                if support.len() != 1 {
                    if support.is_empty() {
                        return Err(WalkError::NoExit(n));
                    }
                    return Err(WalkError::NotDeterministic { tail: n, step });
                }
                let amp = column[support[0]];
                if (amp.norm() - 1.0).abs() > SUPPORT_TOL {
                    return Err(WalkError::NotDeterministic { tail: n, step });
                }
                phase *= amp;
                arc = support[0];
                if arc >= out_start {
                    exit = Some((arc - out_start + 1, step));
                    break;
                }
            }
            let Some((m, steps)) = exit else {
                return Err(WalkError::NoExit(n));
            };
            if m != n {
                return Err(WalkError::LabelMismatch { tail: n, reached: m });
            }
            routes.push(Route {
                tail: n,
                steps,
                phase,
            });
        }
        Ok(routes)
    }
}

/// `Σ(0, z) = diag(z^{1-k_n} c_n)`.
pub fn sigma0(routes: &[Route], z: Complex64) -> DMatrix<Complex64> {
    let n = routes.len();
    let mut s = DMatrix::zeros(n, n);
    for (i, r) in routes.iter().enumerate() {
        s[(i, i)] = z.powi(1 - r.steps as i32) * r.phase;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn ms_routing_and_apply() {
        let fam = models::matrix_schrodinger();
        let w = fam.at(0.0).unwrap();
        let routes = w.free_routing().unwrap();
        assert_eq!(routes.len(), 2);
        for (n, r) in routes.iter().enumerate() {
            assert_eq!((r.tail, r.steps), (n + 1, 2));
            assert_eq!(r.phase, Complex64::new(1.0, 0.0));
        }
        let g = &fam.graph;
        let n0 = w.n_interior();
        let mut s = DVector::zeros(n0 + 2);
        s[n0] = Complex64::new(1.0, 0.0);
        let once = w.apply(&s);
        let a5 = g.arc_by_name("a5").unwrap().0;
        assert_eq!(once[a5], Complex64::new(1.0, 0.0));
        assert_eq!(once.iter().filter(|x| x.norm() > 0.0).count(), 1);
        let twice = w.apply(&once);
        assert_eq!(twice[n0], Complex64::new(1.0, 0.0));
        assert_eq!(twice.iter().filter(|x| x.norm() > 0.0).count(), 1);
        assert_eq!(w.apply(&DVector::zeros(n0 + 2)), DVector::zeros(n0 + 2));
    }

    #[test]
    fn cycle_routing_is_one_step() {
        let fam = models::cycle(5, &[1.0; 5]).unwrap();
        let routes = fam.at(0.0).unwrap().free_routing().unwrap();
        assert!(routes.iter().all(|r| r.steps == 1 && r.phase == Complex64::new(1.0, 0.0)));
        let z = Complex64::from_polar(1.0, 0.9);
        let s = sigma0(&routes, z);
        assert!((s - DMatrix::identity(5, 5)).camax() < 1e-15);
    }

    #[test]
    fn sigma0_ms_at_i() {
        let routes = models::matrix_schrodinger().at(0.0).unwrap().free_routing().unwrap();
        let s = sigma0(&routes, Complex64::i());
        assert!((s[(0, 0)] + Complex64::i()).norm() < 1e-15);
        assert!((s[(1, 1)] + Complex64::i()).norm() < 1e-15);
        assert_eq!(s[(0, 1)], Complex64::new(0.0, 0.0));
        let s1 = sigma0(&routes, Complex64::new(1.0, 0.0));
        assert_eq!(s1, DMatrix::identity(2, 2));
    }

    #[test]
    fn mixing_coin_is_not_deterministic() {
        let fam = models::cycle(3, &[1.0; 3]).unwrap();
        // at eps > 0 the cycle coin splits δ_{ω♭} between two arcs
        let err = fam.at(0.3).unwrap().free_routing().unwrap_err();
        assert_eq!(err, WalkError::NotDeterministic { tail: 1, step: 1 });
    }

    #[test]
    fn unperturbed_columns_are_orthonormal() {
        for w in [
            models::matrix_schrodinger().at(0.0).unwrap(),
            models::cycle(4, &[1.0; 4]).unwrap().at(0.0).unwrap(),
        ] {
            assert_eq!(w.isometry_residual(), 0.0);
        }
    }

    #[test]
    fn boundary_rows_and_columns_vanish() {
        let w = models::matrix_schrodinger().at(0.4).unwrap();
        let full = w.full();
        let (n0, n) = (w.n_interior(), w.n_tails());
        for k in 0..n {
            assert!(full.row(n0 + k).iter().all(|x| x.norm() == 0.0));
            assert!(full.column(n0 + n + k).iter().all(|x| x.norm() == 0.0));
        }
    }
}
