//! Generalized eigenfunctions and the scattering matrix `Σ(z)`.
//!
//! For incoming boundary data `α♭` the interior part `u` of the generalized
//! eigenfunction solves `(U|_{A₀} - z) u = -B_in α♭`, and the outgoing data is
//! `α♯ = B_out u + D α♭` (the convention `α♯ = z·χ(Ω♯)φ`). The solve goes
//! through the spectral projections of the off-circle clusters, which makes
//! it well defined for `z` on the unit circle even at eigenvalues of `U`.

use num_complex::Complex64;
use thiserror::Error;

use crate::spectral::{
    chain_tail_data, eigen_decompose, min_norm_solve, svd, CMatrix, CVector, Cluster, EigenSystem, SpectralOptions,
};
use crate::par::Execution;
use crate::walk::WalkOperator;

/// Projections of `f` onto unit-circle eigenspaces must stay below this
/// (relative to `max(1, ‖f‖)`).
pub const ORTHOGONALITY_TOL: f64 = 1e-8;
/// Points closer to the origin are rejected.
pub const MIN_ABS_Z: f64 = 1e-6;
/// Residual bound for the dense oracle solve.
pub const ORACLE_RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScatteringError {
    #[error("z = {0} too close to the origin")]
    ZTooSmall(Complex64),
    #[error("z = {z} coincides with the resonance {lambda}")]
    AtInteriorResonance { z: Complex64, lambda: Complex64 },
    #[error("incoming data not orthogonal to unit-circle eigenvectors (residual {0:.3e})")]
    OrthogonalityViolated(f64),
    #[error("dense solve failed (residual {0:.3e})")]
    SingularSystem(f64),
    #[error("expected a vector of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cluster {0} is the zero cluster")]
    ZeroCluster(usize),
    #[error("channel split must be a nonempty proper subset of 1..={n}: {members:?}")]
    BadSplit { members: Vec<usize>, n: usize },
    #[error("incoming data has weight outside the channel group")]
    BadSupport,
    #[error("incoming data has norm {0}, expected 1")]
    NotNormalized(f64),
    #[error(transparent)]
    Spectral(#[from] crate::spectral::SpectralError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    /// Reduced resolvent applied column by column.
    Resolvent,
    /// Sum of the resonance blocks `M_λ(z)` plus `M_0(z)`.
    Expansion,
}

#[derive(Clone, Debug)]
pub struct GeneralizedEigenfunction {
    pub u: CVector,
    pub alpha_out: CVector,
    /// Largest unit-circle projection of `B_in α♭`.
    pub orthogonality_residual: f64,
}

#[derive(Clone, Debug)]
pub struct ScatteringReport {
    pub z: Complex64,
    /// Columns indexed by incoming tails, rows by outgoing tails.
    pub sigma: CMatrix,
    /// Interior part of the generalized eigenfunction for each `δ_{ω_n♭}`
    /// (resolvent route only).
    pub interior_u: Vec<CVector>,
    /// `max |Σ*Σ - I|`.
    pub unitarity_residual: f64,
}

/// Channel group `J`, 1-based tail labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChannelSplit {
    members: Vec<usize>,
    n: usize,
}

impl ChannelSplit {
    pub fn new(members: &[usize], n: usize) -> Result<Self, ScatteringError> {
        let mut m = members.to_vec();
        m.sort_unstable();
        m.dedup();
        if m.is_empty() || m.len() >= n || m.iter().any(|&j| j == 0 || j > n) {
            return Err(ScatteringError::BadSplit { members: members.to_vec(), n });
        }
        Ok(ChannelSplit { members: m, n })
    }

    pub fn contains(&self, tail: usize) -> bool {
        self.members.binary_search(&tail).is_ok()
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn complement(&self) -> Vec<usize> {
        (1..=self.n).filter(|&j| !self.contains(j)).collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// A walk operator together with its eigen-decomposition and the tail data of
/// every nonzero cluster.
#[derive(Clone, Debug)]
pub struct Scattering {
    pub walk: WalkOperator,
    pub system: EigenSystem,
    /// `(χ(Ω♯)φ_{k,l}, χ(Ω♭)φ^⊛_{k,l})` per cluster; `None` for the zero cluster.
    tails: Vec<Option<(Vec<Vec<CVector>>, Vec<Vec<CVector>>)>>,
    b_in: CMatrix,
    b_out: CMatrix,
    direct: CMatrix,
}

fn pow_inv(x: Complex64, k: usize) -> Complex64 {
    x.powi(-(k as i32))
}

impl Scattering {
    pub fn new(walk: WalkOperator, opts: SpectralOptions) -> Result<Self, ScatteringError> {
        let system = eigen_decompose(&walk.interior(), opts)?;
        Self::with_system(walk, system)
    }

    pub fn with_system(walk: WalkOperator, system: EigenSystem) -> Result<Self, ScatteringError> {
        let mut tails = Vec::with_capacity(system.clusters.len());
        for c in &system.clusters {
            tails.push(if is_zero(c, &system) {
                None
            } else {
                Some(chain_tail_data(&walk, c)?)
            });
        }
        Ok(Scattering {
            b_in: walk.b_in(),
            b_out: walk.b_out(),
            direct: walk.direct(),
            walk,
            system,
            tails,
        })
    }

    pub fn n_tails(&self) -> usize {
        self.walk.n_tails()
    }

    pub fn is_zero_cluster(&self, k: usize) -> bool {
        self.tails[k].is_none()
    }

    /// `(χ(Ω♯)φ_{k,l}, χ(Ω♭)φ^⊛_{k,l})` for cluster `k`, `None` for the zero cluster.
    pub fn tail_data(&self, k: usize) -> Option<&(Vec<Vec<CVector>>, Vec<Vec<CVector>>)> {
        self.tails[k].as_ref()
    }

    fn check_z(&self, z: Complex64) -> Result<(), ScatteringError> {
        if !(z.norm() >= MIN_ABS_Z) {
            return Err(ScatteringError::ZTooSmall(z));
        }
        let tol = self.system.tol_cluster.max(1e-12);
        for c in &self.system.clusters {
            if !c.on_unit_circle && (z - c.lambda).norm() <= tol {
                return Err(ScatteringError::AtInteriorResonance { z, lambda: c.lambda });
            }
        }
        Ok(())
    }

    fn check_alpha(&self, alpha: &CVector) -> Result<(), ScatteringError> {
        if alpha.len() != self.n_tails() {
            return Err(ScatteringError::DimensionMismatch {
                expected: self.n_tails(),
                got: alpha.len(),
            });
        }
        Ok(())
    }

    /// Largest projection of `f` onto a unit-circle generalized eigenspace.
    pub fn circle_projection(&self, f: &CVector) -> f64 {
        self.system
            .clusters
            .iter()
            .filter(|c| c.on_unit_circle)
            .map(|c| c.project(f).norm())
            .fold(0.0, f64::max)
    }

    /// Reduced resolvent: `Σ_λ Σ_p (U|_{A₀} - λ)^p P_λ f / (z - λ)^{p+1}` over
    /// the off-circle clusters, which equals `(z - U|_{A₀})^{-1} f` for `f`
    /// orthogonal to the unit-circle eigenvectors.
    fn reduced_resolvent(&self, z: Complex64, f: &CVector) -> CVector {
        let mut u = CVector::zeros(f.len());
        for c in self.system.clusters.iter().filter(|c| !c.on_unit_circle) {
            let d = z - c.lambda;
            for (chain, co) in c.chains.iter().zip(&c.co_chains) {
                for (l, w) in co.iter().enumerate() {
                    let coef = w.dotc(f);
                    for p in 0..=l {
                        u.axpy(coef * pow_inv(d, p + 1), &chain[l - p], Complex64::new(1.0, 0.0));
                    }
                }
            }
        }
        u
    }

    pub fn generalized_eigenfunction(
        &self,
        z: Complex64,
        alpha_in: &CVector,
    ) -> Result<GeneralizedEigenfunction, ScatteringError> {
        self.check_z(z)?;
        self.check_alpha(alpha_in)?;
        let f = &self.b_in * alpha_in;
        let residual = self.circle_projection(&f);
        if residual > ORTHOGONALITY_TOL * f.norm().max(1.0) {
            return Err(ScatteringError::OrthogonalityViolated(residual));
        }
        // (M - z)u = -f  ⇔  u = (z - M)^{-1} f
        let u = self.reduced_resolvent(z, &f);
        let alpha_out = &self.b_out * &u + &self.direct * alpha_in;
        Ok(GeneralizedEigenfunction {
            u,
            alpha_out,
            orthogonality_residual: residual,
        })
    }

    /// Dense solve of `(U|_{A₀} - z) u = -B_in α♭`, by LU, or by minimum-norm
    /// least squares when the system is numerically singular.
    pub fn oracle_direct_solve(
        &self,
        z: Complex64,
        alpha_in: &CVector,
    ) -> Result<(CVector, CVector), ScatteringError> {
        self.check_alpha(alpha_in)?;
        if !(z.norm() >= MIN_ABS_Z) {
            return Err(ScatteringError::ZTooSmall(z));
        }
        let m = self.walk.interior();
        let n = m.nrows();
        let a = &m - CMatrix::identity(n, n) * z;
        let rhs = -(&self.b_in * alpha_in);
        let (s, _, _) = svd(&a);
        let smin = s.last().cloned().unwrap_or(1.0);
        let u = if smin > 1e-10 {
            a.clone().lu().solve(&rhs).ok_or(ScatteringError::SingularSystem(f64::INFINITY))?
        } else {
            min_norm_solve(&a, &rhs, 1e-10 * s[0].max(1.0))
        };
        let residual = (&a * &u - &rhs).norm();
        if residual > ORACLE_RESIDUAL_TOL * rhs.norm().max(1.0) {
            return Err(ScatteringError::SingularSystem(residual));
        }
        let alpha_out = &self.b_out * &u + &self.direct * alpha_in;
        Ok((u, alpha_out))
    }

    /// `M_λ(z)` for a nonzero cluster, from the boundary data of its chains.
    /// Unit-circle clusters give the zero matrix.
    pub fn m_lambda(&self, k: usize, z: Complex64) -> Result<CMatrix, ScatteringError> {
        let n = self.n_tails();
        let (outs, ins) = self.tails[k].as_ref().ok_or(ScatteringError::ZeroCluster(k))?;
        let c = &self.system.clusters[k];
        let mut out = CMatrix::zeros(n, n);
        if c.on_unit_circle {
            return Ok(out);
        }
        let lambda = c.lambda;
        let lb = lambda.conj();
        let d = z - lambda;
        let zero = CVector::zeros(n);
        for (phi, psi) in outs.iter().zip(ins) {
            let len = phi.len();
            let at = |j: usize| if j < len { &psi[j] } else { &zero };
            for (l, phi_l) in phi.iter().enumerate() {
                for p in 0..len - l {
                    // χ(Ω♭)U^{-2}φ^⊛_{l+p} written through the chain relation
                    let pair = at(l + p) * (lb * lb) + at(l + p + 1) * (lb * 2.0) + at(l + p + 2);
                    out += phi_l * pair.adjoint() * pow_inv(d, p + 1);
                }
            }
        }
        Ok(out)
    }

    /// `M_0(z)`: the zero-cluster chains plus the direct coupling `D`.
    pub fn m_zero(&self, z: Complex64) -> CMatrix {
        let mut out = self.direct.clone();
        let b_in_adj = self.b_in.adjoint();
        for (k, c) in self.system.clusters.iter().enumerate() {
            if self.tails[k].is_some() {
                continue;
            }
            for (chain, co) in c.chains.iter().zip(&c.co_chains) {
                for (l, v) in chain.iter().enumerate() {
                    let emit = &self.b_out * v;
                    for p in 0..chain.len() - l {
                        let pair = &b_in_adj * &co[l + p];
                        out += &emit * pair.adjoint() * pow_inv(z, p + 1);
                    }
                }
            }
        }
        out
    }

    pub fn sigma(&self, z: Complex64, route: Route) -> Result<ScatteringReport, ScatteringError> {
        self.check_z(z)?;
        let n = self.n_tails();
        let mut sigma = CMatrix::zeros(n, n);
        let mut interior_u = Vec::new();
        match route {
            Route::Resolvent => {
                for j in 0..n {
                    let mut e = CVector::zeros(n);
                    e[j] = Complex64::new(1.0, 0.0);
                    let g = self.generalized_eigenfunction(z, &e)?;
                    sigma.set_column(j, &g.alpha_out);
                    interior_u.push(g.u);
                }
            }
            Route::Expansion => {
                let f = &self.b_in;
                for j in 0..n {
                    let col = f.column(j).into_owned();
                    let r = self.circle_projection(&col);
                    if r > ORTHOGONALITY_TOL * col.norm().max(1.0) {
                        return Err(ScatteringError::OrthogonalityViolated(r));
                    }
                }
                sigma = self.m_zero(z);
                for k in 0..self.system.clusters.len() {
                    if self.tails[k].is_some() && !self.system.clusters[k].on_unit_circle {
                        sigma += self.m_lambda(k, z)?;
                    }
                }
            }
        }
        let unitarity_residual = unitarity_defect(&sigma);
        Ok(ScatteringReport {
            z,
            sigma,
            interior_u,
            unitarity_residual,
        })
    }

    /// `Σ` at every point of `zs`, in input order.
    pub fn sigma_grid(
        &self,
        zs: &[Complex64],
        route: Route,
        exec: Execution,
    ) -> Result<Vec<ScatteringReport>, ScatteringError> {
        exec.try_map(zs, |&z| self.sigma(z, route))
    }

    /// `‖χ(A₀)φ(α♭, z)‖²`.
    pub fn comfortability(&self, z: Complex64, alpha_in: &CVector) -> Result<f64, ScatteringError> {
        Ok(self.generalized_eigenfunction(z, alpha_in)?.u.norm_squared())
    }
}

fn is_zero(c: &Cluster, system: &EigenSystem) -> bool {
    c.lambda.norm() <= system.tol_cluster.max(1e-300)
}

pub fn unitarity_defect(s: &CMatrix) -> f64 {
    let g = s.adjoint() * s;
    let mut worst = 0.0f64;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let t = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - t).norm());
        }
    }
    worst
}

/// `(T, R)` for incoming data supported in the channel group `J`.
pub fn transmission_reflection(
    sigma: &CMatrix,
    split: &ChannelSplit,
    alpha_in: &CVector,
) -> Result<(f64, f64), ScatteringError> {
    if alpha_in.len() != split.n() || sigma.ncols() != split.n() {
        return Err(ScatteringError::DimensionMismatch {
            expected: split.n(),
            got: alpha_in.len(),
        });
    }
    let outside: f64 = (1..=split.n())
        .filter(|&j| !split.contains(j))
        .map(|j| alpha_in[j - 1].norm())
        .fold(0.0, f64::max);
    if outside > 0.0 {
        return Err(ScatteringError::BadSupport);
    }
    let norm = alpha_in.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(ScatteringError::NotNormalized(norm));
    }
    let out = sigma * alpha_in;
    let mut t = 0.0;
    let mut r = 0.0;
    for j in 1..=split.n() {
        if split.contains(j) {
            r += out[j - 1].norm_sqr();
        } else {
            t += out[j - 1].norm_sqr();
        }
    }
    Ok((t, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ms(eps: f64) -> Scattering {
        Scattering::new(models::matrix_schrodinger().at(eps).unwrap(), SpectralOptions::default()).unwrap()
    }

    #[test]
    fn ms_generalized_eigenfunction_matches_display() {
        let eps = 0.3;
        let s = ms(eps);
        let z = Complex64::from_polar(1.0, 0.7);
        let alpha = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let g = s.generalized_eigenfunction(z, &alpha).unwrap();
        let a5 = 4;
        let e2 = eps * eps;
        let z2 = z * z;
        let display = (1.0 - e2).sqrt() * (z2 + 1.0 - e2) / (z2 + 1.0 - 2.0 * e2);
        assert!((z * g.u[a5] - display).norm() < 1e-10);
        let out1 = (1.0 - e2) * (z2 + 1.0) / (z2 * (z2 + 1.0 - 2.0 * e2));
        assert!((g.alpha_out[0] - z * out1).norm() < 1e-10);
    }

    #[test]
    fn oracle_at_tunneling_point() {
        let s = ms(0.5);
        let alpha = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let (_, out) = s.oracle_direct_solve(Complex64::i(), &alpha).unwrap();
        assert!(out[0].norm() < 1e-12);
        assert!((out[1] + Complex64::i()).norm() < 1e-12);
    }

    #[test]
    fn oracle_rejects_interior_resonance() {
        let s = ms(0.5);
        let alpha = CVector::from_vec(vec![c(1.0, 0.0), c(0.3, 0.0)]);
        let err = s.oracle_direct_solve(c(0.0, 0.5f64.sqrt()), &alpha).unwrap_err();
        assert!(matches!(err, ScatteringError::SingularSystem(_)));
        let err = s.sigma(c(0.0, 0.5f64.sqrt()), Route::Resolvent).unwrap_err();
        assert!(matches!(err, ScatteringError::AtInteriorResonance { .. }));
    }

    #[test]
    fn routes_agree_inside_the_disk() {
        let s = ms(0.4);
        let z = c(0.3, -0.5);
        let a = s.sigma(z, Route::Resolvent).unwrap().sigma;
        let b = s.sigma(z, Route::Expansion).unwrap().sigma;
        assert!((a - b).camax() < 1e-10);
    }

    #[test]
    fn unperturbed_sigma_and_comfort() {
        let s = ms(0.0);
        let z = Complex64::from_polar(1.0, 1.1);
        let r = s.sigma(z, Route::Resolvent).unwrap();
        let routes = s.walk.free_routing().unwrap();
        assert!((r.sigma - crate::walk::sigma0(&routes, z)).camax() < 1e-12);
        let e = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        assert!((s.comfortability(z, &e).unwrap() - 1.0).abs() < 1e-12);
        let mixed = CVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        assert!((s.comfortability(z, &mixed).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tunneling_transmission() {
        let s = ms(0.5);
        let r = s.sigma(Complex64::i(), Route::Resolvent).unwrap();
        let split = ChannelSplit::new(&[1], 2).unwrap();
        let alpha = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let (t, rr) = transmission_reflection(&r.sigma, &split, &alpha).unwrap();
        assert!((t - 1.0).abs() < 1e-10 && rr.abs() < 1e-10);
        let bad = CVector::from_vec(vec![c(1.0, 0.0), c(0.1, 0.0)]);
        assert_eq!(
            transmission_reflection(&r.sigma, &split, &bad),
            Err(ScatteringError::BadSupport)
        );
        let short = CVector::from_vec(vec![c(0.5, 0.0), c(0.0, 0.0)]);
        assert!(matches!(
            transmission_reflection(&r.sigma, &split, &short),
            Err(ScatteringError::NotNormalized(_))
        ));
        assert!(ChannelSplit::new(&[1, 2], 2).is_err());
        assert!(ChannelSplit::new(&[], 2).is_err());
    }

    #[test]
    fn simple_block_is_rank_one_and_consistent() {
        let s = ms(0.3);
        let lambda = c(0.0, (1.0 - 2.0 * 0.09f64).sqrt());
        let k = s.system.nearest(lambda).unwrap();
        let z = Complex64::from_polar(1.0, 0.2);
        let m = s.m_lambda(k, z).unwrap();
        let (sv, _, _) = svd(&m);
        assert!(sv[1] < 1e-12 * sv[0]);
        // λ²(α, ψ) equals λ(α, B_in* w) for a simple chain
        let (outs, ins) = s.tail_data(k).unwrap();
        let cl = &s.system.clusters[k];
        let w = &cl.co_chains[0][0];
        let psi = &ins[0][0];
        let alpha = CVector::from_vec(vec![c(0.2, 0.1), c(-0.7, 0.4)]);
        let lhs = psi.dotc(&alpha) * cl.lambda * cl.lambda;
        let rhs = (s.walk.b_in().adjoint() * w).dotc(&alpha) * cl.lambda;
        assert!((lhs - rhs).norm() < 1e-12);
        assert!(outs[0][0].norm() > 0.0);
    }
}
