//! Built-in walk families and their closed-form scattering matrices.
//!
//! The closed forms below use nothing but complex arithmetic so they can act
//! as independent references for the numerical pipeline.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::coins::CoinFamily;
use crate::expr::{BinOp, Expr, Func};
use crate::graph::{ArcSpec, GraphWithTails, TailSpec};
use crate::walk::WalkOperator;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("eps = {eps} outside [0, {limit})")]
    EpsOutOfRange { eps: f64, limit: f64 },
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("z = {0} is a pole")]
    PoleHit(Complex64),
}

/// A graph together with an `eps`-dependent coin family.
#[derive(Clone, Debug)]
pub struct WalkFamily {
    pub graph: GraphWithTails,
    pub coins: CoinFamily,
    /// Exclusive upper bound on admissible `eps`.
    pub eps_limit: f64,
}

impl WalkFamily {
    pub fn new(graph: GraphWithTails, coins: CoinFamily) -> Self {
        WalkFamily {
            graph,
            coins,
            eps_limit: f64::INFINITY,
        }
    }

    pub fn check_eps(&self, eps: f64) -> Result<(), ModelError> {
        if !(eps >= 0.0 && eps < self.eps_limit) {
            return Err(ModelError::EpsOutOfRange {
                eps,
                limit: self.eps_limit,
            });
        }
        Ok(())
    }

    pub fn at(&self, eps: f64) -> Result<WalkOperator, crate::Error> {
        self.check_eps(eps)?;
        WalkOperator::from_parts(&self.graph, &self.coins, eps)
    }
}

fn num(x: f64) -> Expr {
    Expr::Num(x)
}

fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
    Expr::Bin(op, Box::new(a), Box::new(b))
}

fn neg(e: Expr) -> Expr {
    Expr::Neg(Box::new(e))
}

/// `c·eps`, or plain `eps` when `c = 1`.
fn scaled_eps(c: f64) -> Expr {
    if c == 1.0 {
        Expr::Eps
    } else {
        bin(BinOp::Mul, num(c), Expr::Eps)
    }
}

/// `sqrt(1 - (c·eps)^2)`.
fn cosine(c: f64) -> Expr {
    let sq = Expr::Pow(Box::new(scaled_eps(c)), 2);
    Expr::Call(Func::Sqrt, Box::new(bin(BinOp::Sub, num(1.0), sq)))
}

fn rotation(c: f64, sign: f64) -> DMatrix<Expr> {
    let s = scaled_eps(c);
    let (upper, lower) = if sign < 0.0 { (neg(s.clone()), s) } else { (s.clone(), neg(s)) };
    DMatrix::from_row_slice(2, 2, &[cosine(c), upper, lower, cosine(c)])
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// The four-vertex model with two tails: `L±`, `R±`, arcs `a1..a6`.
/// Admissible for `0 ≤ eps < 1/√2`.
pub fn matrix_schrodinger() -> WalkFamily {
    let vertices = names(&["Lp", "Rp", "Lm", "Rm"]);
    let arcs = [
        ArcSpec::new("a1", "Lm", "Lp"),
        ArcSpec::new("a2", "Lp", "Rp"),
        ArcSpec::new("a3", "Rp", "Rm"),
        ArcSpec::new("a4", "Rm", "Lm"),
        ArcSpec::new("a5", "Lp", "Lm"),
        ArcSpec::new("a6", "Rm", "Rp"),
    ];
    let ins = [TailSpec::new(1, "Lp"), TailSpec::new(2, "Rm")];
    let outs = [TailSpec::new(1, "Lm"), TailSpec::new(2, "Rp")];
    let graph = GraphWithTails::build(&vertices, &arcs, &ins, &outs).expect("valid built-in graph");

    // slot order per vertex: Lp cols (a1, in1) rows (a2, a5); Rp cols (a2, a6)
    // rows (a3, out2); Lm cols (a4, a5) rows (a1, out1); Rm cols (a3, in2) rows (a4, a6)
    let coins = vec![rotation(1.0, -1.0), rotation(1.0, 1.0), rotation(1.0, 1.0), rotation(1.0, -1.0)];
    let coins = CoinFamily::new(&graph, coins).expect("coin shapes match degrees");
    WalkFamily {
        graph,
        coins,
        eps_limit: std::f64::consts::FRAC_1_SQRT_2,
    }
}

/// The `N`-cycle with one incoming and one outgoing tail at every vertex and
/// coupling constants `c`. Admissible while `c_n·eps < 1` for all `n`.
pub fn cycle(n: usize, c: &[f64]) -> Result<WalkFamily, ModelError> {
    if n < 2 {
        return Err(ModelError::BadParameter(format!("cycle needs N >= 2, got {n}")));
    }
    if c.len() != n {
        return Err(ModelError::BadParameter(format!("{} couplings for N = {n}", c.len())));
    }
    if c.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
        return Err(ModelError::BadParameter("couplings must be finite and non-negative".into()));
    }
    let vertices: Vec<String> = (1..=n).map(|k| format!("v{k}")).collect();
    let arcs: Vec<ArcSpec> = (1..=n)
        .map(|k| {
            let prev = if k == 1 { n } else { k - 1 };
            ArcSpec::new(&format!("a{k}"), &format!("v{prev}"), &format!("v{k}"))
        })
        .collect();
    let ins: Vec<TailSpec> = (1..=n).map(|k| TailSpec::new(k, &format!("v{k}"))).collect();
    let outs = ins.clone();
    let graph = GraphWithTails::build(&vertices, &arcs, &ins, &outs).expect("valid cycle graph");
    // interior arcs precede boundary arcs, so v_n has cols (a_n, in_n) and
    // rows (a_{n+1}, out_n) with a_{N+1} = a_1
    let coins = c.iter().map(|&ck| rotation(ck, 1.0)).collect();
    let coins = CoinFamily::new(&graph, coins).expect("coin shapes match degrees");
    let cmax = c.iter().cloned().fold(0.0, f64::max);
    Ok(WalkFamily {
        graph,
        coins,
        eps_limit: if cmax > 0.0 { 1.0 / cmax } else { f64::INFINITY },
    })
}

/// A random strongly connected balanced graph with Haar-distributed constant
/// coins. The interior contains a directed cycle through every vertex, so
/// generically no state is trapped and every resonance lies inside the disk.
pub fn random_model(seed: u64) -> WalkFamily {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nv = rng.random_range(2..=5usize);
    let extra: Vec<usize> = loop {
        let e: Vec<usize> = (0..nv).map(|_| rng.random_range(0..=2usize)).collect();
        if e.iter().sum::<usize>() >= 1 {
            break e;
        }
    };
    let total_extra: usize = extra.iter().sum();
    let n_tails = rng.random_range(1..=total_extra.min(3));

    let vertices: Vec<String> = (0..nv).map(|k| format!("v{k}")).collect();
    let mut arcs: Vec<ArcSpec> = (0..nv)
        .map(|k| ArcSpec::new(&format!("c{k}"), &vertices[k], &vertices[(k + 1) % nv]))
        .collect();

    let mut out_slots: Vec<usize> = extra
        .iter()
        .enumerate()
        .flat_map(|(v, &e)| std::iter::repeat(v).take(e))
        .collect();
    let mut in_slots = out_slots.clone();
    out_slots.shuffle(&mut rng);
    in_slots.shuffle(&mut rng);
    let ins: Vec<TailSpec> = (0..n_tails)
        .map(|k| TailSpec::new(k + 1, &vertices[in_slots[k]]))
        .collect();
    let outs: Vec<TailSpec> = (0..n_tails)
        .map(|k| TailSpec::new(k + 1, &vertices[out_slots[k]]))
        .collect();
    for (k, (&from, &to)) in out_slots[n_tails..].iter().zip(&in_slots[n_tails..]).enumerate() {
        arcs.push(ArcSpec::new(&format!("e{k}"), &vertices[from], &vertices[to]));
    }
    let graph = GraphWithTails::build(&vertices, &arcs, &ins, &outs).expect("balanced by construction");
    let mats: Vec<DMatrix<Complex64>> = graph
        .vertices()
        .map(|v| haar_unitary(graph.degree(v), &mut rng))
        .collect();
    let coins = CoinFamily::constant(&graph, &mats).expect("coin shapes match degrees");
    WalkFamily::new(graph, coins)
}

/// Haar-random unitary via QR of a complex Ginibre matrix with the phases of
/// `diag(R)` divided out.
pub fn haar_unitary<R: Rng>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) / 2f64.sqrt()
    });
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Closed-form scattering matrix of [`matrix_schrodinger`].
pub fn closed_form_sigma_ms(eps: f64, z: Complex64) -> Result<DMatrix<Complex64>, ModelError> {
    let e2 = eps * eps;
    let z2 = z * z;
    let den = z * (z2 + 1.0 - 2.0 * e2);
    if den.norm() < 1e-14 {
        return Err(ModelError::PoleHit(z));
    }
    let diag = (1.0 - e2) * (z2 + 1.0) / den;
    let off = e2 * (z2 - 1.0) / den;
    Ok(DMatrix::from_row_slice(2, 2, &[diag, off, off, diag]))
}

/// Closed-form scattering matrix of [`cycle`]; entry `(l, n)` is
/// `Σ δ_{ω_n♭}` evaluated at `ω_l♯`.
pub fn closed_form_sigma_cycle(c: &[f64], eps: f64, z: Complex64) -> Result<DMatrix<Complex64>, ModelError> {
    let n = c.len();
    let mut tau = vec![1.0; n + 1];
    for k in 1..=n {
        tau[k] = tau[k - 1] * (1.0 - c[k - 1] * c[k - 1] * eps * eps).sqrt();
    }
    let zn = z.powi(n as i32);
    let den = zn - tau[n];
    if den.norm() < 1e-14 || z.norm() == 0.0 {
        return Err(ModelError::PoleHit(z));
    }
    let mut s = DMatrix::zeros(n, n);
    for col in 1..=n {
        let cn = c[col - 1];
        for l in 1..=n {
            let cl = c[l - 1];
            s[(l - 1, col - 1)] = if l == col {
                let a = 1.0 - cn * cn * eps * eps;
                (a * zn - tau[n]) / (a.sqrt() * den)
            } else if l < col {
                -cn * cl * eps * eps * tau[l - 1] * tau[n] / (tau[col] * den)
                    * z.powi(col as i32 - l as i32)
            } else {
                -cn * cl * eps * eps * tau[l - 1] / (tau[col] * den)
                    * z.powi((n + col) as i32 - l as i32)
            };
        }
    }
    Ok(s)
}

/// Both sides of `Σ_{k<N} μ^{kp}/(z - cμ^k) = N c^{N-p} z^{p-1}/(z^N - c^N)`,
/// `μ = e^{2πi/N}`.
pub fn partial_fraction_identity(
    n: usize,
    p: usize,
    c: f64,
    z: Complex64,
) -> Result<(Complex64, Complex64), ModelError> {
    if n == 0 || p == 0 || p > n || !(c > 0.0) {
        return Err(ModelError::BadParameter(format!("need 1 <= p <= N and c > 0 (N={n}, p={p}, c={c})")));
    }
    let den = z.powi(n as i32) - c.powi(n as i32);
    if den.norm() < 1e-14 {
        return Err(ModelError::PoleHit(z));
    }
    let mut lhs = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let mu_k = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
        let term_den = z - c * mu_k;
        if term_den.norm() < 1e-14 {
            return Err(ModelError::PoleHit(z));
        }
        lhs += mu_k.powi(p as i32) / term_den;
    }
    let rhs = n as f64 * c.powi((n - p) as i32) * z.powi(p as i32 - 1) / den;
    Ok((lhs, rhs))
}
