//! Small-`eps` experiments: resonance paths, the discrepancy
//! `‖Σ(ε,z) - Σ(0,z)‖`, resonant tunneling, peak widths and comfortability.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use thiserror::Error;

use crate::models::WalkFamily;
use crate::par::Execution;
use crate::scattering::{ChannelSplit, Route, Scattering};
use crate::spectral::{eigen_decompose, eigenvalues, svd, CMatrix, CVector, SpectralOptions};
use crate::walk::sigma0;

/// Refinement depth for a grid step during tracking.
pub const MAX_BISECTION_DEPTH: usize = 20;
/// Angular tolerance of the half-height crossings.
pub const WIDTH_TOL: f64 = 1e-12;
/// Peak transmission required before measuring a width.
pub const MIN_PEAK: f64 = 0.9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AsymptoticsError {
    #[error("eps grid must start at 0 and increase strictly")]
    BadGrid,
    #[error("unit-circle eigenvalue {lambda} of U(0) has multiplicity {multiplicity}")]
    SimplicityViolated { lambda: Complex64, multiplicity: usize },
    #[error("resonance tracking ambiguous near eps = {0}")]
    TrackingAmbiguous(f64),
    #[error("no unit-circle eigenvalue of U(0) near {0}")]
    NotTracked(Complex64),
    #[error("resonance {0} lies on the unit circle")]
    ResonanceOnCircle(Complex64),
    #[error("resonant state has no weight on the channel group {0:?}")]
    EmptyChannel(Vec<usize>),
    #[error("peak transmission {0} is below the threshold for width measurement")]
    LowPeak(f64),
    #[error("T stays at or above 1/2 for 0 < {side}θ ≤ π/4")]
    NoCrossing { side: char },
    #[error("slope fit needs two or more positive samples")]
    TooFewPoints,
}

/// Paths of the unit-circle eigenvalues of `U(0)` through an `eps` grid.
#[derive(Clone, Debug)]
pub struct ResonanceTrack {
    pub eps_grid: Vec<f64>,
    /// `paths[k][i]` is `λ_ε` at `eps_grid[i]` for the `k`-th eigenvalue of `U(0)`.
    pub paths: Vec<Vec<Complex64>>,
    /// Per path and grid step, the largest jump divided by half the local
    /// gap (including refined sub-steps). Always below one.
    pub continuity: Vec<Vec<f64>>,
}

impl ResonanceTrack {
    /// The path starting closest to `lambda0`.
    pub fn path_from(&self, lambda0: Complex64) -> Option<&[Complex64]> {
        self.paths
            .iter()
            .min_by(|a, b| (a[0] - lambda0).norm().total_cmp(&(b[0] - lambda0).norm()))
            .map(Vec::as_slice)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TunnelingReport {
    pub lambda: Complex64,
    pub eps: f64,
    pub z_star: Complex64,
    pub split: Vec<usize>,
    /// `|‖χ(Ω_J♭)φ^⊛‖ - ‖χ(Ω_{Jᶜ}♭)φ^⊛‖|`.
    pub symmetry_residual: f64,
    pub t_at_peak: f64,
    /// `|⟨Σ(z*)α_J♭, α_{Jᶜ}♯⟩|`.
    pub overlap: f64,
    /// `θ₊ - θ₋`, when the peak is high enough to measure.
    pub peak_width_measured: Option<f64>,
    pub peak_width_predicted: f64,
    pub comfortability: f64,
    pub comfortability_bound: f64,
}

/// Geometric grid with 25 points per decade on `[1e-3, 1e-1]`, preceded by 0.
pub fn default_eps_grid() -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend(geometric_grid(1e-3, 1e-1, 51));
    g
}

/// `n` points from `a` to `b` inclusive, equally spaced in `log`.
pub fn geometric_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let (la, lb) = (a.ln(), b.ln());
            (0..n)
                .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}

/// Unweighted least-squares slope of `log y` against `log x`; samples with
/// nonpositive coordinates are skipped.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Result<f64, AsymptoticsError> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(AsymptoticsError::TooFewPoints);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(AsymptoticsError::TooFewPoints);
    }
    Ok(sxy / sxx)
}

fn spectrum(family: &WalkFamily, eps: f64) -> crate::Result<Vec<Complex64>> {
    Ok(eigenvalues(&family.at(eps)?.interior())?)
}

/// `(index of nearest, distance)` of `z` in `values`, skipping `skip`.
fn nearest(values: &[Complex64], z: Complex64, skip: Option<usize>) -> Option<(usize, f64)> {
    values
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(i, v)| (i, (v - z).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// Matches each tracked eigenvalue `from[idx[k]]` to `to`. Returns the new
/// indices and the jump ratios, or `None` if some match is ambiguous.
fn match_step(from: &[Complex64], idx: &[usize], to: &[Complex64]) -> Option<(Vec<usize>, Vec<f64>)> {
    let mut next = Vec::with_capacity(idx.len());
    let mut ratios = Vec::with_capacity(idx.len());
    for &i in idx {
        let mu = from[i];
        let gap = nearest(from, mu, Some(i)).map_or(f64::INFINITY, |(_, d)| d);
        let (j, jump) = nearest(to, mu, None)?;
        let ratio = jump / (0.5 * gap);
        if !(ratio < 1.0) || next.contains(&j) {
            return None;
        }
        next.push(j);
        ratios.push(ratio);
    }
    Some((next, ratios))
}

struct Refiner<'a> {
    family: &'a WalkFamily,
}

impl Refiner<'_> {
    /// Advances the indices from `(ea, va)` to `(eb, vb)`, bisecting the step
    /// while matching is ambiguous.
    fn advance(
        &self,
        ea: f64,
        va: &[Complex64],
        idx: &[usize],
        eb: f64,
        vb: &[Complex64],
        depth: usize,
        worst: &mut [f64],
    ) -> crate::Result<Vec<usize>> {
        if let Some((next, ratios)) = match_step(va, idx, vb) {
            for (w, r) in worst.iter_mut().zip(ratios) {
                *w = w.max(r);
            }
            return Ok(next);
        }
        if depth >= MAX_BISECTION_DEPTH {
            return Err(AsymptoticsError::TrackingAmbiguous(eb).into());
        }
        let em = 0.5 * (ea + eb);
        let vm = spectrum(self.family, em)?;
        let mid = self.advance(ea, va, idx, em, &vm, depth + 1, worst)?;
        self.advance(em, &vm, &mid, eb, vb, depth + 1, worst)
    }
}

/// Follows every unit-circle eigenvalue of `U(0)` through `eps_grid`.
pub fn track_resonances(
    family: &WalkFamily,
    eps_grid: &[f64],
    exec: Execution,
) -> crate::Result<ResonanceTrack> {
    if eps_grid.first() != Some(&0.0) || eps_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(AsymptoticsError::BadGrid.into());
    }
    let w0 = family.at(0.0)?;
    let sys = eigen_decompose(&w0.interior(), SpectralOptions::default())?;
    for c in sys.clusters.iter().filter(|c| c.on_unit_circle) {
        if !c.is_simple() {
            return Err(AsymptoticsError::SimplicityViolated {
                lambda: c.lambda,
                multiplicity: c.multiplicity(),
            }
            .into());
        }
    }
    let spectra = exec.try_map(eps_grid, |&e| spectrum(family, e))?;
    let mut idx: Vec<usize> = sys
        .clusters
        .iter()
        .filter(|c| c.on_unit_circle)
        .map(|c| nearest(&spectra[0], c.lambda, None).expect("nonempty spectrum").0)
        .collect();
    let mut paths: Vec<Vec<Complex64>> = idx.iter().map(|&i| vec![spectra[0][i]]).collect();
    let mut continuity = vec![Vec::new(); idx.len()];
    let refiner = Refiner { family };
    for s in 1..eps_grid.len() {
        let mut worst = vec![0.0; idx.len()];
        idx = refiner.advance(
            eps_grid[s - 1],
            &spectra[s - 1],
            &idx,
            eps_grid[s],
            &spectra[s],
            0,
            &mut worst,
        )?;
        for (k, &i) in idx.iter().enumerate() {
            paths[k].push(spectra[s][i]);
            continuity[k].push(worst[k]);
        }
    }
    Ok(ResonanceTrack {
        eps_grid: eps_grid.to_vec(),
        paths,
        continuity,
    })
}

/// `λ_ε` for the unit-circle eigenvalue of `U(0)` nearest to `lambda0`.
pub fn follow(family: &WalkFamily, lambda0: Complex64, eps: f64) -> crate::Result<Complex64> {
    if eps == 0.0 {
        let track = track_resonances(family, &[0.0], Execution::Sequential)?;
        return Ok(track.path_from(lambda0).ok_or(AsymptoticsError::NotTracked(lambda0))?[0]);
    }
    let grid: Vec<f64> = (0..=16).map(|i| eps * i as f64 / 16.0).collect();
    let track = track_resonances(family, &grid, Execution::Sequential)?;
    let path = track.path_from(lambda0).ok_or(AsymptoticsError::NotTracked(lambda0))?;
    if (path[0] - lambda0).norm() > 1e-6 {
        return Err(AsymptoticsError::NotTracked(lambda0).into());
    }
    Ok(*path.last().expect("nonempty path"))
}

fn largest_singular_value(m: &CMatrix) -> f64 {
    svd(m).0.first().cloned().unwrap_or(0.0)
}

/// `Σ(ε, z)` by the resolvent route.
pub fn sigma_at(family: &WalkFamily, eps: f64, z: Complex64) -> crate::Result<CMatrix> {
    let s = Scattering::new(family.at(eps)?, SpectralOptions::default())?;
    Ok(s.sigma(z, Route::Resolvent)?.sigma)
}

/// `Σ(0, z)` from the free routing of `U(0)`.
pub fn sigma_unperturbed(family: &WalkFamily, z: Complex64) -> crate::Result<CMatrix> {
    let routes = family.at(0.0)?.free_routing()?;
    Ok(sigma0(&routes, z))
}

/// `‖Σ(ε, z) - Σ(0, z)‖` (largest singular value).
pub fn discrepancy_norm(family: &WalkFamily, z: Complex64, eps: f64) -> crate::Result<f64> {
    let base = sigma_unperturbed(family, z)?;
    if eps == 0.0 {
        return Ok(0.0);
    }
    Ok(largest_singular_value(&(sigma_at(family, eps, z)? - base)))
}

/// [`discrepancy_norm`] at every point of `eps_grid`.
pub fn discrepancy_sweep(
    family: &WalkFamily,
    z: Complex64,
    eps_grid: &[f64],
    exec: Execution,
) -> crate::Result<Vec<f64>> {
    exec.try_map(eps_grid, |&e| discrepancy_norm(family, z, e))
}

/// `‖Σ(ε, z) - Σ(0, z) - Σ_λ M_{λ,ε}(z)‖`, the sum running over the resonances
/// that emanate from unit-circle eigenvalues of `U(0)` and left the circle.
pub fn discrepancy_remainder(family: &WalkFamily, z: Complex64, eps: f64) -> crate::Result<f64> {
    let base = sigma_unperturbed(family, z)?;
    let s = Scattering::new(family.at(eps)?, SpectralOptions::default())?;
    let mut diff = s.sigma(z, Route::Resolvent)?.sigma - base;
    if eps > 0.0 {
        let grid: Vec<f64> = (0..=16).map(|i| eps * i as f64 / 16.0).collect();
        let track = track_resonances(family, &grid, Execution::Sequential)?;
        for path in &track.paths {
            let lambda = *path.last().expect("nonempty path");
            let k = s.system.nearest(lambda).expect("nonempty spectrum");
            if !s.system.clusters[k].on_unit_circle && !s.is_zero_cluster(k) {
                diff -= s.m_lambda(k, z)?;
            }
        }
    }
    Ok(largest_singular_value(&diff))
}

/// `T(J, α, ε, z)` for `α = δ_{ω_j♭}` with `j` the first member of `J`.
pub fn nonresonant_transmission(
    family: &WalkFamily,
    split: &ChannelSplit,
    z: Complex64,
    eps: f64,
) -> crate::Result<f64> {
    let sigma = if eps == 0.0 {
        sigma_unperturbed(family, z)?
    } else {
        sigma_at(family, eps, z)?
    };
    let mut alpha = CVector::zeros(split.n());
    alpha[split.members()[0] - 1] = Complex64::new(1.0, 0.0);
    Ok(crate::scattering::transmission_reflection(&sigma, split, &alpha)?.0)
}

/// [`nonresonant_transmission`] at every point of `eps_grid`.
pub fn transmission_sweep(
    family: &WalkFamily,
    split: &ChannelSplit,
    z: Complex64,
    eps_grid: &[f64],
    exec: Execution,
) -> crate::Result<Vec<f64>> {
    exec.try_map(eps_grid, |&e| nonresonant_transmission(family, split, z, e))
}

/// The scattering data attached to `λ_ε`.
pub struct PeakContext {
    pub scattering: Scattering,
    pub lambda: Complex64,
    pub z_star: Complex64,
    /// `χ(Ω♯)φ`.
    pub out_data: CVector,
    /// `χ(Ω♭)φ^⊛`.
    pub in_data: CVector,
    /// `χ(A₀)φ` and `χ(A₀)φ^⊛`.
    pub interior: CVector,
    pub co_interior: CVector,
}

impl PeakContext {
    pub fn new(family: &WalkFamily, eps: f64, lambda0: Complex64) -> crate::Result<Self> {
        let lambda = follow(family, lambda0, eps)?;
        let scattering = Scattering::new(family.at(eps)?, SpectralOptions::default())?;
        let k = scattering.system.nearest(lambda).expect("nonempty spectrum");
        let c = &scattering.system.clusters[k];
        if c.on_unit_circle {
            return Err(AsymptoticsError::ResonanceOnCircle(c.lambda).into());
        }
        if !c.is_simple() {
            return Err(AsymptoticsError::SimplicityViolated {
                lambda: c.lambda,
                multiplicity: c.multiplicity(),
            }
            .into());
        }
        let lambda = c.lambda;
        let (interior, co_interior) = (c.chains[0][0].clone(), c.co_chains[0][0].clone());
        let (outs, ins) = scattering.tail_data(k).expect("nonzero cluster");
        let (out_data, in_data) = (outs[0][0].clone(), ins[0][0].clone());
        Ok(PeakContext {
            lambda,
            z_star: lambda / lambda.norm(),
            out_data,
            in_data,
            interior,
            co_interior,
            scattering,
        })
    }

    fn restricted(v: &CVector, split: &ChannelSplit, inside: bool) -> CVector {
        CVector::from_fn(v.len(), |i, _| {
            if split.contains(i + 1) == inside {
                v[i]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// `α_J♭`: the normalized restriction of `χ(Ω♭)φ^⊛` to `Ω_J♭`.
    pub fn alpha_in(&self, split: &ChannelSplit) -> Result<CVector, AsymptoticsError> {
        let a = Self::restricted(&self.in_data, split, true);
        let n = a.norm();
        if n == 0.0 {
            return Err(AsymptoticsError::EmptyChannel(split.members().to_vec()));
        }
        Ok(a / Complex64::new(n, 0.0))
    }

    /// `α_{Jᶜ}♯`: the normalized restriction of `χ(Ω♯)φ` to `Ω_{Jᶜ}♯`.
    pub fn alpha_out(&self, split: &ChannelSplit) -> Result<CVector, AsymptoticsError> {
        let a = Self::restricted(&self.out_data, split, false);
        let n = a.norm();
        if n == 0.0 {
            return Err(AsymptoticsError::EmptyChannel(split.complement()));
        }
        Ok(a / Complex64::new(n, 0.0))
    }

    /// `T(J, α, ε, z)` from a single generalized eigenfunction.
    pub fn transmission(&self, split: &ChannelSplit, alpha: &CVector, z: Complex64) -> crate::Result<f64> {
        let g = self.scattering.generalized_eigenfunction(z, alpha)?;
        Ok((0..split.n())
            .filter(|&i| !split.contains(i + 1))
            .map(|i| g.alpha_out[i].norm_sqr())
            .sum())
    }

    /// `‖M_{λ,ε}(z)‖`.
    pub fn m_norm(&self, z: Complex64) -> crate::Result<f64> {
        let k = self.scattering.system.nearest(self.lambda).expect("nonempty spectrum");
        Ok(largest_singular_value(&self.scattering.m_lambda(k, z)?))
    }

    /// `(1 + |λ|)|λ|² / (1 - |λ|)`.
    pub fn comfortability_bound(&self) -> f64 {
        let r = self.lambda.norm();
        (1.0 + r) * r * r / (1.0 - r)
    }

    /// `E(U(ε), α̃♭, z*)` with `α̃♭ = χ(Ω♭)φ^⊛ / ‖χ(Ω♭)φ^⊛‖`.
    pub fn comfortability(&self) -> crate::Result<f64> {
        let alpha = &self.in_data / Complex64::new(self.in_data.norm(), 0.0);
        Ok(self.scattering.comfortability(self.z_star, &alpha)?)
    }

    /// Half-height crossings `(θ₋, θ₊)` of `θ ↦ T(J, α_J♭, ε, e^{iθ}z*)`.
    pub fn peak_width(&self, split: &ChannelSplit) -> crate::Result<(f64, f64)> {
        let alpha = self.alpha_in(split)?;
        let t = |theta: f64| self.transmission(split, &alpha, self.z_star * Complex64::from_polar(1.0, theta));
        let peak = t(0.0)?;
        if peak < MIN_PEAK {
            return Err(AsymptoticsError::LowPeak(peak).into());
        }
        let w = (1.0 - self.lambda.norm()).max(1e-12);
        let mut sides = [0.0; 2];
        for (s, sign) in [-1.0f64, 1.0].into_iter().enumerate() {
            let mut lo = 0.0;
            let mut hi = None;
            while lo < FRAC_PI_4 {
                let next = (lo + f64::max(w / 8.0, lo / 16.0)).min(FRAC_PI_4);
                if t(sign * next)? < 0.5 {
                    hi = Some(next);
                    break;
                }
                lo = next;
            }
            let Some(mut hi) = hi else {
                return Err(AsymptoticsError::NoCrossing {
                    side: if sign < 0.0 { '-' } else { '+' },
                }
                .into());
            };
            while hi - lo > WIDTH_TOL {
                let mid = 0.5 * (lo + hi);
                if t(sign * mid)? < 0.5 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            sides[s] = sign * 0.5 * (lo + hi);
        }
        Ok((sides[0], sides[1]))
    }
}

pub fn tunneling_check(
    family: &WalkFamily,
    eps: f64,
    lambda0: Complex64,
    split: &ChannelSplit,
) -> crate::Result<TunnelingReport> {
    let ctx = PeakContext::new(family, eps, lambda0)?;
    let in_j = PeakContext::restricted(&ctx.in_data, split, true).norm();
    let in_jc = PeakContext::restricted(&ctx.in_data, split, false).norm();
    let alpha = ctx.alpha_in(split)?;
    let g = ctx.scattering.generalized_eigenfunction(ctx.z_star, &alpha)?;
    let t_at_peak: f64 = (0..split.n())
        .filter(|&i| !split.contains(i + 1))
        .map(|i| g.alpha_out[i].norm_sqr())
        .sum();
    let overlap = ctx.alpha_out(split)?.dotc(&g.alpha_out).norm();
    let peak_width_measured = if t_at_peak >= MIN_PEAK {
        ctx.peak_width(split).ok().map(|(lo, hi)| hi - lo)
    } else {
        None
    };
    Ok(TunnelingReport {
        lambda: ctx.lambda,
        eps,
        z_star: ctx.z_star,
        split: split.members().to_vec(),
        symmetry_residual: (in_j - in_jc).abs(),
        t_at_peak,
        overlap,
        peak_width_measured,
        peak_width_predicted: 2.0 * (1.0 - ctx.lambda.norm()),
        comfortability: ctx.comfortability()?,
        comfortability_bound: ctx.comfortability_bound(),
    })
}

pub fn peak_width(
    family: &WalkFamily,
    eps: f64,
    lambda0: Complex64,
    split: &ChannelSplit,
) -> crate::Result<(f64, f64)> {
    PeakContext::new(family, eps, lambda0)?.peak_width(split)
}

/// `(E, (1 + |λ_ε|)|λ_ε|² / (1 - |λ_ε|))` at `z* = λ_ε/|λ_ε|`.
pub fn comfortability_growth(family: &WalkFamily, eps: f64, lambda0: Complex64) -> crate::Result<(f64, f64)> {
    let ctx = PeakContext::new(family, eps, lambda0)?;
    Ok((ctx.comfortability()?, ctx.comfortability_bound()))
}

/// Largest `| |φ(ω_n♯)|/‖χ(Ω♯)φ‖ - |φ^⊛(ω_n♭)|/‖χ(Ω♭)φ^⊛‖ |` over `n`.
pub fn boundary_profile_gap(family: &WalkFamily, eps: f64, lambda0: Complex64) -> crate::Result<f64> {
    let ctx = PeakContext::new(family, eps, lambda0)?;
    let (o, i) = (ctx.out_data.norm(), ctx.in_data.norm());
    Ok((0..ctx.out_data.len())
        .map(|n| (ctx.out_data[n].norm() / o - ctx.in_data[n].norm() / i).abs())
        .fold(0.0, f64::max))
}

/// Unit-circle eigenvalues of `U(0)` in tracking order.
pub fn unperturbed_circle_eigenvalues(family: &WalkFamily) -> crate::Result<Vec<Complex64>> {
    Ok(track_resonances(family, &[0.0], Execution::Sequential)?
        .paths
        .iter()
        .map(|p| p[0])
        .collect())
}
