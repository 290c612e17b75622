//! Eigenvalue clusters of the (non-normal) interior block with right and left
//! Jordan chains, and the tail data of resonant states.
//!
//! Chains are indexed from 0. A right chain `v_0, …, v_{L-1}` satisfies
//! `(M - λ) v_l = v_{l-1}` with `v_{-1} = 0`, so `v_0` is an eigenvector. The
//! matching left chain satisfies `(M* - λ̄) w_l = w_{l+1}` with `w_L = 0`, so
//! `w_{L-1}` is a left eigenvector, and `(v_l, w_{l'}) = w_{l'}* v_l = δ`.

use nalgebra::{DMatrix, DVector, Schur};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use num_complex::Complex64;
use thiserror::Error;

use crate::walk::WalkOperator;

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

/// Relative threshold for numerical rank decisions.
pub const RANK_TOL: f64 = 1e-10;
/// Smallest admissible singular value of the right/left pairing matrix.
pub const PAIRING_TOL: f64 = 1e-12;
/// Iteration cap for one Schur reduction attempt.
const SCHUR_MAX_ITER: usize = 10_000;
pub const DEFAULT_TOL_CIRCLE: f64 = 1e-8;
/// Default cluster tolerance relative to `‖M‖₂`.
pub const DEFAULT_REL_TOL_CLUSTER: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("Schur iteration did not converge")]
    NoConvergence,
    #[error("eigenvalue clustering is order dependent near {near} (cluster diameter {diameter:.3e} exceeds {limit:.3e})")]
    ClusterAmbiguity {
        near: Complex64,
        diameter: f64,
        limit: f64,
    },
    #[error("ill-conditioned Jordan basis at {lambda}: pairing {pairing:.3e}")]
    IllConditionedChain { lambda: Complex64, pairing: f64 },
    #[error("cluster at {lambda} has multiplicity {multiplicity}, expected a simple resonance")]
    NotSimple { lambda: Complex64, multiplicity: usize },
    #[error("resonance {0} is zero")]
    ZeroResonance(Complex64),
}

#[derive(Clone, Copy, Debug)]
pub struct SpectralOptions {
    /// Absolute clustering tolerance; `None` means `1e-8·‖M‖₂`.
    pub tol_cluster: Option<f64>,
    pub tol_circle: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions {
            tol_cluster: None,
            tol_circle: DEFAULT_TOL_CIRCLE,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Cluster {
    /// Cluster centre (mean of the member eigenvalues).
    pub lambda: Complex64,
    /// Eigenvalues as returned by the Schur reduction.
    pub members: Vec<Complex64>,
    pub chains: Vec<Vec<CVector>>,
    pub co_chains: Vec<Vec<CVector>>,
    pub on_unit_circle: bool,
}

impl Cluster {
    pub fn multiplicity(&self) -> usize {
        self.members.len()
    }

    pub fn is_simple(&self) -> bool {
        self.members.len() == 1
    }

    /// Length of the longest chain.
    pub fn index(&self) -> usize {
        self.chains.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// `P_λ f = Σ_{k,l} (f, w_{k,l}) v_{k,l}`.
    pub fn project(&self, f: &CVector) -> CVector {
        let mut out = CVector::zeros(f.len());
        for (chain, co) in self.chains.iter().zip(&self.co_chains) {
            for (v, w) in chain.iter().zip(co) {
                out.axpy(w.dotc(f), v, Complex64::new(1.0, 0.0));
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub dim: usize,
    pub norm: f64,
    pub tol_cluster: f64,
    pub tol_circle: f64,
    pub clusters: Vec<Cluster>,
}

impl EigenSystem {
    pub fn total_multiplicity(&self) -> usize {
        self.clusters.iter().map(Cluster::multiplicity).sum()
    }

    /// Index of the cluster whose centre is nearest to `z`.
    pub fn nearest(&self, z: Complex64) -> Option<usize> {
        (0..self.clusters.len()).min_by(|&a, &b| {
            let da = (self.clusters[a].lambda - z).norm();
            let db = (self.clusters[b].lambda - z).norm();
            da.total_cmp(&db)
        })
    }

    pub fn projection_apply(&self, cluster: usize, f: &CVector) -> CVector {
        self.clusters[cluster].project(f)
    }

    /// Largest chain residuals and biorthogonality defect, for diagnostics.
    pub fn residuals(&self, m: &CMatrix) -> ChainResiduals {
        let mut out = ChainResiduals::default();
        let mut all_v = Vec::new();
        let mut all_w = Vec::new();
        for c in &self.clusters {
            let shifted = m - CMatrix::identity(self.dim, self.dim) * c.lambda;
            let shifted_adj = shifted.adjoint();
            for (chain, co) in c.chains.iter().zip(&c.co_chains) {
                for l in 0..chain.len() {
                    let mut r = &shifted * &chain[l];
                    if l > 0 {
                        r -= &chain[l - 1];
                    }
                    out.right = out.right.max(r.norm());
                    let mut r = &shifted_adj * &co[l];
                    if l + 1 < co.len() {
                        r -= &co[l + 1];
                    }
                    out.left = out.left.max(r.norm());
                }
                all_v.extend(chain.iter().cloned());
                all_w.extend(co.iter().cloned());
            }
        }
        for (i, w) in all_w.iter().enumerate() {
            for (j, v) in all_v.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                out.biorthogonality = out.biorthogonality.max((w.dotc(v) - target).norm());
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ChainResiduals {
    pub right: f64,
    pub left: f64,
    pub biorthogonality: f64,
}

/// One-sided Jacobi orthogonalization of the columns of `a`: returns the
/// column norms of `a·V` (descending) and the unitary `V`, columns permuted
/// to match.
fn jacobi_columns(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = a.ncols();
    let mut g = a.clone();
    let mut v = CMatrix::identity(n, n);
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = g.column(p).norm_squared();
                let beta = g.column(q).norm_squared();
                let gamma = g.column(p).dotc(&g.column(q));
                let gr = gamma.norm();
                if gr == 0.0 || gr <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // rotate (g_p, e^{-iφ} g_q), whose inner product is real
                let phase = (gamma / gr).conj();
                let zeta = (beta - alpha) / (2.0 * gr);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for m in [&mut g, &mut v] {
                    for i in 0..m.nrows() {
                        let x = m[(i, p)];
                        let y = m[(i, q)] * phase;
                        m[(i, p)] = x * c - y * s;
                        m[(i, q)] = x * s + y * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| g.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let sorted = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    (order.iter().map(|&j| norms[j]).collect(), sorted)
}

const JACOBI_MAX_SWEEPS: usize = 60;

/// Singular values (descending, `min(rows, cols)` of them) with full square
/// left and right singular vector matrices. Each side comes from its own
/// Jacobi sweep (on `m` and on `m*`), so trailing columns are accurate bases
/// of the kernel and co-kernel even when singular values are tiny.
pub fn svd(m: &CMatrix) -> (Vec<f64>, CMatrix, CMatrix) {
    let k = m.nrows().min(m.ncols());
    let (s, v) = jacobi_columns(m);
    let (_, u) = jacobi_columns(&m.adjoint());
    (s.into_iter().take(k).collect(), u, v)
}

pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    jacobi_columns(m).0[0]
}

/// Minimum-norm least-squares solution of `a x = b`, dropping singular
/// values at or below `cutoff`.
pub fn min_norm_solve(a: &CMatrix, b: &CVector, cutoff: f64) -> CVector {
    let (s, v) = jacobi_columns(a);
    let mut x = CVector::zeros(a.ncols());
    for (j, &sj) in s.iter().enumerate() {
        if sj > cutoff {
            let vj = v.column(j);
            let uj = a * vj;
            x.axpy(uj.dotc(b) / (sj * sj), &vj.into_owned(), Complex64::new(1.0, 0.0));
        }
    }
    x
}

pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>, SpectralError> {
    if m.nrows() != m.ncols() {
        return Err(SpectralError::NotSquare(m.nrows(), m.ncols()));
    }
    if m.is_empty() {
        return Ok(Vec::new());
    }
    if let Some(schur) = Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER) {
        return Ok(schur.unpack().1.diagonal().iter().cloned().collect());
    }
    // the shifted QR iteration can stall on matrices with exact symmetries
    // (permutation-like blocks); a unitary change of basis breaks them
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..4 {
        let q = crate::models::haar_unitary(m.nrows(), &mut rng);
        let rotated = q.adjoint() * m * &q;
        if let Some(schur) = Schur::try_new(rotated, f64::EPSILON, SCHUR_MAX_ITER) {
            return Ok(schur.unpack().1.diagonal().iter().cloned().collect());
        }
    }
    Err(SpectralError::NoConvergence)
}

/// Single-linkage groups of `values` under `|a - b| ≤ tol`.
fn link(values: &[Complex64], tol: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (values[i] - values[j]).norm() <= tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

fn mean(values: &[Complex64]) -> Complex64 {
    values.iter().sum::<Complex64>() / values.len() as f64
}

fn shifted_power(m: &CMatrix, lambda: Complex64, k: usize) -> CMatrix {
    let n = m.nrows();
    let shifted = m - CMatrix::identity(n, n) * lambda;
    let mut p = CMatrix::identity(n, n);
    for _ in 0..k {
        p = &shifted * p;
    }
    p
}

/// Number of singular values of `a` at or below `RANK_TOL·max(‖a‖, scale)`.
fn null_dim(s: &[f64], scale: f64) -> usize {
    let thr = RANK_TOL * s.first().cloned().unwrap_or(0.0).max(scale);
    s.iter().filter(|&&x| x <= thr).count()
}

/// Radius within which a defective eigenvalue of multiplicity `m` may be
/// scattered by rounding.
fn defect_radius(m: usize, norm: f64) -> f64 {
    (100.0 * f64::EPSILON.powf(1.0 / m as f64) * norm.max(1.0)).min(1e-3)
}

/// Clustered eigen-decomposition with Jordan chains.
pub fn eigen_decompose(m: &CMatrix, opts: SpectralOptions) -> Result<EigenSystem, SpectralError> {
    let values = eigenvalues(m)?;
    let n = m.nrows();
    let norm = spectral_norm(m);
    let tol = opts.tol_cluster.unwrap_or(DEFAULT_REL_TOL_CLUSTER * norm);

    let mut groups: Vec<Vec<Complex64>> = Vec::new();
    for g in link(&values, tol) {
        let members: Vec<Complex64> = g.iter().map(|&i| values[i]).collect();
        let mut diameter = 0.0f64;
        for a in &members {
            for b in &members {
                diameter = diameter.max((a - b).norm());
            }
        }
        if diameter > 2.0 * tol {
            return Err(SpectralError::ClusterAmbiguity {
                near: mean(&members),
                diameter,
                limit: 2.0 * tol,
            });
        }
        groups.push(members);
    }

    // rounding splits a defective eigenvalue of multiplicity m by about
    // eps^(1/m); merge linkage components of such groups when the merged
    // kernel has full dimension
    let mut tried: Vec<Vec<Complex64>> = Vec::new();
    'merge: loop {
        let centres: Vec<Complex64> = groups.iter().map(|g| mean(g)).collect();
        let mut pairs: Vec<f64> = Vec::new();
        for i in 0..centres.len() {
            for j in i + 1..centres.len() {
                pairs.push((centres[i] - centres[j]).norm());
            }
        }
        pairs.sort_by(f64::total_cmp);
        for d in pairs {
            if d > defect_radius(n, norm) {
                break;
            }
            for comp in link(&centres, d) {
                if comp.len() < 2 {
                    continue;
                }
                let merged: Vec<Complex64> = comp.iter().flat_map(|&i| groups[i].clone()).collect();
                if d > defect_radius(merged.len(), norm) || tried.contains(&merged) {
                    continue;
                }
                let mu = mean(&merged);
                let (s, _, _) = svd(&shifted_power(m, mu, merged.len()));
                if null_dim(&s, 1.0) >= merged.len() {
                    let mut next: Vec<Vec<Complex64>> = (0..groups.len())
                        .filter(|i| !comp.contains(i))
                        .map(|i| groups[i].clone())
                        .collect();
                    next.push(merged);
                    groups = next;
                    continue 'merge;
                }
                tried.push(merged);
            }
        }
        break;
    }

    let mut clusters = Vec::with_capacity(groups.len());
    for members in groups {
        clusters.push(build_cluster(m, members, norm, opts.tol_circle)?);
    }
    clusters.sort_by(|a, b| {
        b.lambda
            .norm()
            .total_cmp(&a.lambda.norm())
            .then(a.lambda.arg().total_cmp(&b.lambda.arg()))
    });
    Ok(EigenSystem {
        dim: n,
        norm,
        tol_cluster: tol,
        tol_circle: opts.tol_circle,
        clusters,
    })
}

fn build_cluster(
    m: &CMatrix,
    members: Vec<Complex64>,
    norm: f64,
    tol_circle: f64,
) -> Result<Cluster, SpectralError> {
    let n = m.nrows();
    let k = members.len();
    let mut lambda = mean(&members);

    // generalized eigenspace: kernel of (M - λ)^j for the least j giving k vectors
    let shifted = m - CMatrix::identity(n, n) * lambda;
    let mut power = CMatrix::identity(n, n);
    let mut basis = None;
    for j in 1..=k {
        power = &shifted * power;
        let (s, u, v) = svd(&power);
        if null_dim(&s, 1.0) >= k || j == k {
            basis = Some((v.columns(n - k, k).into_owned(), u.columns(n - k, k).into_owned()));
            break;
        }
    }
    let (q_right, q_left) = basis.expect("loop runs at least once");
    if k == 1 {
        // two-sided Rayleigh quotient: second-order accurate in the vectors
        let (v, w) = (q_right.column(0), q_left.column(0));
        let pairing = w.dotc(&v);
        if pairing.norm() > PAIRING_TOL {
            lambda = w.dotc(&(m * v)) / pairing;
        }
    }

    let nil = q_right.adjoint() * &shifted * &q_right;
    let local = local_chains(&nil, norm.max(1.0));
    let mut chains: Vec<Vec<CVector>> = local
        .into_iter()
        .map(|c| c.into_iter().map(|x| &q_right * x).collect())
        .collect();

    for chain in &mut chains {
        let v0 = &chain[0];
        let (imax, _) = v0
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (i, x)| if x.norm() > acc.1 { (i, x.norm()) } else { acc });
        let pivot = v0[imax];
        let scale = pivot.conj() / (pivot.norm() * v0.norm());
        for x in chain.iter_mut() {
            *x *= scale;
        }
    }

    // dual basis inside the left generalized eigenspace
    let flat: Vec<&CVector> = chains.iter().flatten().collect();
    let v_mat = CMatrix::from_columns(&flat.iter().map(|x| (*x).clone()).collect::<Vec<_>>());
    let gram = q_left.adjoint() * &v_mat;
    let (gs, _, _) = svd(&gram);
    let smin = gs.last().cloned().unwrap_or(0.0);
    if smin < PAIRING_TOL {
        return Err(SpectralError::IllConditionedChain { lambda, pairing: smin });
    }
    let inv_adj = gram
        .try_inverse()
        .ok_or(SpectralError::IllConditionedChain { lambda, pairing: smin })?
        .adjoint();
    let w_mat = &q_left * inv_adj;
    let mut col = 0;
    let co_chains = chains
        .iter()
        .map(|c| {
            c.iter()
                .map(|_| {
                    let w = w_mat.column(col).into_owned();
                    col += 1;
                    w
                })
                .collect()
        })
        .collect();

    Ok(Cluster {
        lambda,
        on_unit_circle: (lambda.norm() - 1.0).abs() <= tol_circle,
        members,
        chains,
        co_chains,
    })
}

/// Orthonormal basis of the kernel of `a` under threshold `thr`.
fn kernel(a: &CMatrix, thr: f64) -> CMatrix {
    let n = a.ncols();
    let (s, _, v) = svd(a);
    let rank = s.iter().filter(|&&x| x > thr).count();
    v.columns(rank, n - rank).into_owned()
}

/// Jordan chains of an (approximately) nilpotent `m×m` matrix, in local
/// coordinates. Rank decisions start at `RANK_TOL·scale` and are relaxed
/// until the kernel dimensions form a valid Jordan structure.
fn local_chains(nil: &CMatrix, scale: f64) -> Vec<Vec<CVector>> {
    let m = nil.nrows();
    let mut thr = RANK_TOL * scale;
    while thr < 1e-3 * scale {
        if let Some(chains) = try_chains(nil, thr) {
            return chains;
        }
        thr *= 100.0;
    }
    // treat the block as semisimple
    (0..m)
        .map(|i| vec![CMatrix::identity(m, m).column(i).into_owned()])
        .collect()
}

fn try_chains(nil: &CMatrix, thr: f64) -> Option<Vec<Vec<CVector>>> {
    let m = nil.nrows();
    let mut kernels = vec![CMatrix::zeros(m, 0)];
    let mut power = CMatrix::identity(m, m);
    for _ in 1..=m {
        power = nil * power;
        let k = kernel(&power, thr);
        let d = k.ncols();
        kernels.push(k);
        if d == m {
            break;
        }
    }
    let dims: Vec<usize> = kernels.iter().map(|k| k.ncols()).collect();
    let p = dims.len() - 1;
    if dims[p] != m {
        return None;
    }
    // number of chains of length ≥ j
    let at_least: Vec<isize> = (0..=p + 1)
        .map(|j| {
            if j == 0 || j > p {
                0
            } else {
                dims[j] as isize - dims[j - 1] as isize
            }
        })
        .collect();
    for j in 1..p {
        if at_least[j + 1] > at_least[j] || at_least[j] <= 0 {
            return None;
        }
    }

    let mut tops: Vec<(usize, CVector)> = Vec::new();
    for len in (1..=p).rev() {
        let need = (at_least[len] - at_least[len + 1]) as usize;
        if need == 0 {
            continue;
        }
        let mut span: Vec<CVector> = kernels[len - 1].column_iter().map(|c| c.into_owned()).collect();
        for (l, y) in &tops {
            let mut x = y.clone();
            for _ in 0..(l - len) {
                x = nil * x;
            }
            span.push(x);
        }
        let complement = if span.is_empty() {
            kernels[len].clone()
        } else {
            let s = CMatrix::from_columns(&span);
            let (sv, u, _) = svd(&s);
            let r = sv.iter().filter(|&&x| x > 1e-8 * sv[0].max(1e-300)).count();
            let q = u.columns(0, r);
            &kernels[len] - q * (q.adjoint() * &kernels[len])
        };
        let (sv, u, _) = svd(&complement);
        if sv.len() < need || sv[need - 1] < 1e-6 {
            return None;
        }
        for i in 0..need {
            tops.push((len, u.column(i).into_owned()));
        }
    }

    let mut chains = Vec::with_capacity(tops.len());
    for (len, y) in tops {
        let mut chain = vec![y];
        for _ in 1..len {
            let next = nil * chain.last().expect("nonempty");
            chain.push(next);
        }
        chain.reverse();
        chains.push(chain);
    }
    Some(chains)
}

/// Resonances of `U`: the clusters of the interior block, with `0` listed
/// when it is an eigenvalue of the interior block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Resonance {
    pub lambda: Complex64,
    pub multiplicity: usize,
    /// `|λ| = 1` within `tol_circle`; such resonances are eigenvalues of `U`.
    pub is_eigenvalue: bool,
}

/// Clusters whose centre is within `tol_cluster` of zero are reported as the
/// conventional resonance `0`.
pub fn resonance_set(system: &EigenSystem) -> Vec<Resonance> {
    system
        .clusters
        .iter()
        .map(|c| Resonance {
            lambda: if c.lambda.norm() <= system.tol_cluster.max(1e-300) {
                Complex64::new(0.0, 0.0)
            } else {
                c.lambda
            },
            multiplicity: c.multiplicity(),
            is_eigenvalue: c.on_unit_circle,
        })
        .collect()
}

/// Values of a resonant state and its incoming partner on the boundary arcs.
#[derive(Clone, Debug)]
pub struct ResonantStateBoundary {
    pub lambda: Complex64,
    /// `χ(A₀)φ`.
    pub interior: CVector,
    /// `χ(A₀)φ^⊛`.
    pub co_interior: CVector,
    /// `χ(Ω♯)φ`.
    pub out_data: CVector,
    /// `χ(Ω♭)φ^⊛`.
    pub in_data_co: CVector,
    pub on_unit_circle: bool,
}

/// Boundary values of the chain vectors of a nonzero cluster:
/// `χ(Ω♯)φ_l` for every right chain vector and `χ(Ω♭)φ^⊛_l` for every left one.
///
/// From `(U - λ)φ_l = φ_{l-1}` read on `Ω♯`, where `φ_l` vanishes on `Ω♭`:
/// `λ χ(Ω♯)φ_l = B_out v_l - χ(Ω♯)φ_{l-1}`. From `(U* - λ̄)φ^⊛_l = φ^⊛_{l+1}`
/// read on `Ω♭`, where `φ^⊛_l` vanishes on `Ω♯`:
/// `λ̄ χ(Ω♭)φ^⊛_l = B_in* w_l - χ(Ω♭)φ^⊛_{l+1}`.
pub fn chain_tail_data(
    w: &WalkOperator,
    cluster: &Cluster,
) -> Result<(Vec<Vec<CVector>>, Vec<Vec<CVector>>), SpectralError> {
    let lambda = cluster.lambda;
    if lambda.norm() == 0.0 {
        return Err(SpectralError::ZeroResonance(lambda));
    }
    let n = w.n_tails();
    if cluster.on_unit_circle {
        let zeros = |c: &Vec<Vec<CVector>>| c.iter().map(|ch| vec![CVector::zeros(n); ch.len()]).collect();
        return Ok((zeros(&cluster.chains), zeros(&cluster.co_chains)));
    }
    let (b_in, b_out) = (w.b_in(), w.b_out());
    let b_in_adj = b_in.adjoint();
    let mut outs = Vec::new();
    let mut ins = Vec::new();
    for (chain, co) in cluster.chains.iter().zip(&cluster.co_chains) {
        let mut out_chain: Vec<CVector> = Vec::with_capacity(chain.len());
        for v in chain {
            let mut x = &b_out * v;
            if let Some(prev) = out_chain.last() {
                x -= prev;
            }
            out_chain.push(x / lambda);
        }
        let mut in_chain: Vec<CVector> = vec![CVector::zeros(n); co.len()];
        for l in (0..co.len()).rev() {
            let mut x = &b_in_adj * &co[l];
            if l + 1 < co.len() {
                x -= &in_chain[l + 1];
            }
            in_chain[l] = x / lambda.conj();
        }
        outs.push(out_chain);
        ins.push(in_chain);
    }
    Ok((outs, ins))
}

/// Boundary data of a simple nonzero resonance. On the unit circle both
/// boundary vectors vanish and are returned as exact zeros.
pub fn boundary_data(w: &WalkOperator, cluster: &Cluster) -> Result<ResonantStateBoundary, SpectralError> {
    if !cluster.is_simple() {
        return Err(SpectralError::NotSimple {
            lambda: cluster.lambda,
            multiplicity: cluster.multiplicity(),
        });
    }
    let (outs, ins) = chain_tail_data(w, cluster)?;
    Ok(ResonantStateBoundary {
        lambda: cluster.lambda,
        interior: cluster.chains[0][0].clone(),
        co_interior: cluster.co_chains[0][0].clone(),
        out_data: outs[0][0].clone(),
        in_data_co: ins[0][0].clone(),
        on_unit_circle: cluster.on_unit_circle,
    })
}
