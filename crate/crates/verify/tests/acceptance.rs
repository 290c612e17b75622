use std::f64::consts::PI;
use std::process::ExitCode;

use num_complex::Complex64;
use qwres::asymptotics::{
    self, boundary_profile_gap, default_eps_grid, discrepancy_sweep, fit_slope, transmission_sweep, tunneling_check,
    unperturbed_circle_eigenvalues, PeakContext,
};
use qwres::line::{rotation_coin, tunnel_coin, BarrierSpec};
use qwres::par::Execution;
use qwres::models::{self, closed_form_sigma_cycle, closed_form_sigma_ms, partial_fraction_identity};
use qwres::scattering::{unitarity_defect, ChannelSplit, Route, Scattering};
use qwres::spectral::{CMatrix, CVector, SpectralOptions};
use qwres::WalkFamily;
use qwres_verify::{circle, max_gap, multiset_gap, Report};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Res<T> = Result<T, String>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn scattering(family: &WalkFamily, eps: f64) -> Res<Scattering> {
    Scattering::new(family.at(eps).map_err(err)?, SpectralOptions::default()).map_err(err)
}

fn sigma(s: &Scattering, z: Complex64, route: Route) -> Res<CMatrix> {
    Ok(s.sigma(z, route).map_err(err)?.sigma)
}

fn entry_gap(a: &CMatrix, b: &CMatrix) -> f64 {
    max_gap(a.as_slice(), b.as_slice())
}

/// Worst unitarity defect seen on the unit circle, and the worst `|T + R - 1|`.
#[derive(Default)]
struct Unitarity {
    sigma: f64,
    flux: f64,
    samples: usize,
}

impl Unitarity {
    fn sigma(&mut self, s: &CMatrix) {
        self.sigma = self.sigma.max(unitarity_defect(s));
        self.samples += 1;
    }

    fn flux(&mut self, t: f64, r: f64) {
        self.flux = self.flux.max((t + r - 1.0).abs());
    }
}

fn ms_closed_form(u: &mut Unitarity) -> Res<(bool, String)> {
    let family = models::matrix_schrodinger();
    let mut worst = 0.0f64;
    for eps in [0.1, 0.3, 0.5, 0.7] {
        let s = scattering(&family, eps)?;
        for z in circle(64, 0.0) {
            let Ok(exact) = closed_form_sigma_ms(eps, z) else { continue };
            let got = sigma(&s, z, Route::Resolvent)?;
            u.sigma(&got);
            worst = worst.max(entry_gap(&got, &exact));
        }
    }
    Ok((worst <= 1e-10, format!("max entry error {worst:.2e} (tol 1e-10)")))
}

fn ms_tunneling(u: &mut Unitarity) -> Res<(bool, String)> {
    let family = models::matrix_schrodinger();
    let mut worst = 0.0f64;
    for eps in [0.1, 0.3, 0.5] {
        let s = scattering(&family, eps)?;
        for sign in [1.0, -1.0] {
            let z = c(0.0, sign);
            let got = sigma(&s, z, Route::Resolvent)?;
            u.sigma(&got);
            let off = c(0.0, -sign);
            let want = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), off, off, c(0.0, 0.0)]);
            worst = worst.max(entry_gap(&got, &want));
        }
    }
    Ok((worst <= 1e-10, format!("max entry error {worst:.2e} (tol 1e-10)")))
}

fn cycle_closed_form(u: &mut Unitarity) -> Res<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for n in 2..=5 {
        let cs: Vec<f64> = (0..n).map(|_| 1.0 - rng.random::<f64>()).collect();
        let family = models::cycle(n, &cs).map_err(err)?;
        for eps in [0.05, 0.2] {
            let s = scattering(&family, eps)?;
            for z in circle(32, 0.25) {
                let Ok(exact) = closed_form_sigma_cycle(&cs, eps, z) else { continue };
                let got = sigma(&s, z, Route::Resolvent)?;
                u.sigma(&got);
                worst = worst.max(entry_gap(&got, &exact));
            }
        }
    }
    Ok((worst <= 1e-10, format!("max entry error {worst:.2e} (tol 1e-10)")))
}

fn all_eigenvalues(s: &Scattering) -> Vec<Complex64> {
    s.system.clusters.iter().flat_map(|k| std::iter::repeat(k.lambda).take(k.multiplicity())).collect()
}

fn resonances() -> Res<(bool, String)> {
    let ms = scattering(&models::matrix_schrodinger(), 0.5)?;
    let r = 0.5f64.sqrt();
    let want_ms = [c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, r), c(0.0, -r)];
    let gap_ms = multiset_gap(&all_eigenvalues(&ms), &want_ms);
    let cyc = scattering(&models::cycle(4, &[1.0; 4]).map_err(err)?, 0.6)?;
    let want_cyc = [c(0.8, 0.0), c(-0.8, 0.0), c(0.0, 0.8), c(0.0, -0.8)];
    let gap_cyc = multiset_gap(&all_eigenvalues(&cyc), &want_cyc);
    let worst = gap_ms.max(gap_cyc);
    Ok((
        worst <= 1e-10,
        format!("two-tail model {gap_ms:.2e}, 4-cycle {gap_cyc:.2e} (tol 1e-10)"),
    ))
}

/// Worst deviation of `‖χ(Ω♯)φ‖²/‖χ(A₀)φ‖²` and of the incoming analogue
/// from `|λ|^{-2} - 1`, relative to `max(1, |λ|^{-2} - 1)`.
fn width_gap(family: &WalkFamily, eps: f64) -> Res<(f64, usize)> {
    let s = scattering(family, eps)?;
    let mut worst = 0.0f64;
    let mut count = 0;
    for (k, cl) in s.system.clusters.iter().enumerate() {
        if cl.on_unit_circle || !cl.is_simple() || s.is_zero_cluster(k) {
            continue;
        }
        let (outs, ins) = s.tail_data(k).expect("nonzero cluster");
        let want = cl.lambda.norm_sqr().recip() - 1.0;
        let out_ratio = outs[0][0].norm_squared() / cl.chains[0][0].norm_squared();
        let in_ratio = ins[0][0].norm_squared() / cl.co_chains[0][0].norm_squared();
        let scale = want.max(1.0);
        worst = worst.max((out_ratio - want).abs() / scale).max((in_ratio - want).abs() / scale);
        count += 1;
    }
    Ok((worst, count))
}

fn widths() -> Res<(bool, String)> {
    let mut worst = 0.0f64;
    let mut count = 0;
    let mut add = |(w, n): (f64, usize)| {
        worst = worst.max(w);
        count += n;
    };
    let ms = models::matrix_schrodinger();
    for eps in [0.05, 0.3, 0.5, 0.7] {
        add(width_gap(&ms, eps)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 2..=5 {
        let cs: Vec<f64> = (0..n).map(|_| 1.0 - rng.random::<f64>()).collect();
        let cyc = models::cycle(n, &cs).map_err(err)?;
        for eps in [0.05, 0.6] {
            add(width_gap(&cyc, eps)?);
        }
    }
    add(width_gap(&models::cycle(4, &[1.0; 4]).map_err(err)?, 0.6)?);
    for seed in 0..20 {
        add(width_gap(&models::random_model(seed), 0.0)?);
    }
    Ok((
        worst <= 1e-8 && count > 0,
        format!("{count} resonances, max relative deviation {worst:.2e} (tol 1e-8)"),
    ))
}

fn route_equivalence(u: &mut Unitarity) -> Res<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut inside = 0;
    let mut trials = 0;
    while trials < 100 {
        let (family, eps) = match trials % 3 {
            0 => (models::matrix_schrodinger(), rng.random_range(0.0..0.7)),
            1 => {
                let n = rng.random_range(2..=5usize);
                let cs: Vec<f64> = (0..n).map(|_| 1.0 - rng.random::<f64>()).collect();
                (models::cycle(n, &cs).map_err(err)?, rng.random_range(0.0..0.95))
            }
            _ => (models::random_model(rng.random()), 0.0),
        };
        let s = scattering(&family, eps)?;
        let on_circle = trials % 2 == 0;
        let radius = if on_circle { 1.0 } else { rng.random_range(0.2..0.95) };
        let z = Complex64::from_polar(radius, rng.random_range(-PI..PI));
        if s.system.clusters.iter().any(|k| (k.lambda - z).norm() < 0.05) {
            continue;
        }
        let res = sigma(&s, z, Route::Resolvent)?;
        let exp = sigma(&s, z, Route::Expansion)?;
        let n = s.n_tails();
        let mut oracle = CMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = CVector::zeros(n);
            e[j] = c(1.0, 0.0);
            oracle.set_column(j, &s.oracle_direct_solve(z, &e).map_err(err)?.1);
        }
        if on_circle {
            u.sigma(&res);
        } else {
            inside += 1;
        }
        worst = worst.max(entry_gap(&res, &exp)).max(entry_gap(&res, &oracle));
        trials += 1;
    }
    Ok((
        worst <= 1e-8,
        format!("100 triples ({inside} inside the disk), max entry gap {worst:.2e} (tol 1e-8)"),
    ))
}

fn double_barrier(u: &mut Unitarity) -> Res<(bool, String)> {
    let r = rotation_coin(0.8);
    let sym = BarrierSpec::new(vec![0, 1], vec![r, r]).map_err(err)?;
    let mut t_gap = 0.0f64;
    for z in [c(0.0, 1.0), c(0.0, -1.0)] {
        let ls = sym.closed_form(z).map_err(err)?;
        u.flux(ls.transmission, ls.reflection);
        t_gap = t_gap.max((ls.transmission - 1.0).abs());
    }
    let want = [c(0.0, 0.8), c(0.0, -0.8)];
    let closed_gap = multiset_gap(&sym.double_barrier_resonances().map_err(err)?, &want);
    let s = scattering(&sym.to_graph(), 0.0)?;
    let graph_gap = want
        .iter()
        .map(|w| s.system.clusters.iter().map(|k| (k.lambda - w).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);

    let eps = 0.1;
    let asym = BarrierSpec::new(vec![0, 1], vec![tunnel_coin(1.0, eps), tunnel_coin(2.0, eps)]).map_err(err)?;
    let mut t_max = 0.0f64;
    for z in circle(4096, 0.0) {
        let ls = asym.closed_form(z).map_err(err)?;
        u.flux(ls.transmission, ls.reflection);
        t_max = t_max.max(ls.transmission);
    }
    let pass = t_gap <= 1e-10 && closed_gap <= 1e-10 && graph_gap <= 1e-10 && t_max <= 1e-6;
    Ok((
        pass,
        format!(
            "|T(±i)-1| {t_gap:.2e}, resonances {closed_gap:.2e} closed form / {graph_gap:.2e} graph (tol 1e-10); asymmetric max T {t_max:.2e} (tol 1e-6)"
        ),
    ))
}

fn triple_barrier_spec() -> Res<BarrierSpec> {
    BarrierSpec::new(
        vec![0, 2, 3],
        vec![rotation_coin(0.5), rotation_coin(0.4), rotation_coin(0.75)],
    )
    .map_err(err)
}

fn triple_barrier(u: &mut Unitarity) -> Res<(bool, String)> {
    let ls = triple_barrier_spec()?.closed_form(c(0.0, 1.0)).map_err(err)?;
    u.flux(ls.transmission, ls.reflection);
    let gap = (ls.transmission - 1.0).abs();
    Ok((gap <= 1e-10, format!("|T(i)-1| {gap:.2e} (tol 1e-10)")))
}

fn line_graph(u: &mut Unitarity) -> Res<(bool, String)> {
    let r = rotation_coin(0.8);
    let specs = [BarrierSpec::new(vec![0, 1], vec![r, r]).map_err(err)?, triple_barrier_spec()?];
    let split = ChannelSplit::new(&[1], 2).map_err(err)?;
    let mut worst = 0.0f64;
    for spec in &specs {
        let s = scattering(&spec.to_graph(), 0.0)?;
        for z in circle(256, 0.5) {
            let ls = spec.closed_form(z).map_err(err)?;
            u.flux(ls.transmission, ls.reflection);
            let sg = sigma(&s, z, Route::Resolvent)?;
            u.sigma(&sg);
            let mut alpha = CVector::zeros(2);
            alpha[0] = c(1.0, 0.0);
            let (t, rf) = qwres::scattering::transmission_reflection(&sg, &split, &alpha).map_err(err)?;
            u.flux(t, rf);
            worst = worst.max((t - ls.transmission).abs());
        }
    }
    Ok((worst <= 1e-8, format!("max |ΔT| {worst:.2e} over 2×256 points (tol 1e-8)")))
}

fn slopes() -> Res<(bool, String)> {
    let grid: Vec<f64> = default_eps_grid().into_iter().filter(|&e| e > 0.0).collect();
    let split = ChannelSplit::new(&[1], 2).map_err(err)?;
    let cases = [
        ("two-tail model", models::matrix_schrodinger(), Complex64::from_polar(1.0, 0.4), split.clone()),
        (
            "4-cycle",
            models::cycle(4, &[1.0; 4]).map_err(err)?,
            Complex64::from_polar(1.0, PI / 4.0),
            ChannelSplit::new(&[1, 2], 4).map_err(err)?,
        ),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, family, z, split) in cases {
        let circle0 = unperturbed_circle_eigenvalues(&family).map_err(err)?;
        let dist = circle0.iter().map(|l| (l - z).norm()).fold(f64::INFINITY, f64::min);
        if dist < 0.3 {
            return Err(format!("{name}: z at distance {dist:.3} from Res(U(0))"));
        }
        let d = discrepancy_sweep(&family, z, &grid, Execution::Parallel).map_err(err)?;
        let t = transmission_sweep(&family, &split, z, &grid, Execution::Parallel).map_err(err)?;
        let sd = fit_slope(&grid, &d).map_err(err)?;
        let st = fit_slope(&grid, &t).map_err(err)?;
        pass &= (0.9..=1.1).contains(&sd) && (1.8..=2.2).contains(&st);
        parts.push(format!("{name}: Σ slope {sd:.3}, T slope {st:.3}"));
    }
    Ok((pass, format!("{} (want [0.9,1.1] and [1.8,2.2])", parts.join("; "))))
}

fn cycle4() -> Res<WalkFamily> {
    models::cycle(4, &[1.0; 4]).map_err(err)
}

fn peak_norm() -> Res<(bool, String)> {
    let family = cycle4()?;
    let mut pass = true;
    let mut worst_slack = f64::INFINITY;
    let mut smallest = f64::INFINITY;
    for l0 in unperturbed_circle_eigenvalues(&family).map_err(err)? {
        let ctx = PeakContext::new(&family, 0.05, l0).map_err(err)?;
        let m = ctx.m_norm(ctx.z_star).map_err(err)?;
        let slack = m - (1.0 + ctx.lambda.norm());
        pass &= slack >= -1e-8 && m >= 1.99;
        worst_slack = worst_slack.min(slack);
        smallest = smallest.min(m);
    }
    Ok((
        pass,
        format!("min ‖M‖ {smallest:.6}, min ‖M‖-(1+|λ|) {worst_slack:.2e} (slack 1e-8, floor 1.99)"),
    ))
}

fn peak_width() -> Res<(bool, String)> {
    let family = cycle4()?;
    let split = ChannelSplit::new(&[1, 2], 4).map_err(err)?;
    let mut worst = 0.0f64;
    for l0 in unperturbed_circle_eigenvalues(&family).map_err(err)? {
        let rep = tunneling_check(&family, 0.05, l0, &split).map_err(err)?;
        let measured = rep
            .peak_width_measured
            .ok_or_else(|| format!("no half-height crossing at {l0} (T at peak {:.3})", rep.t_at_peak))?;
        worst = worst.max((measured / rep.peak_width_predicted - 1.0).abs());
    }
    Ok((worst <= 0.2, format!("max relative deviation {worst:.3} (tol 0.2)")))
}

fn comfortability() -> Res<(bool, String)> {
    let mut unpert = 0.0f64;
    for family in [models::matrix_schrodinger(), cycle4()?] {
        let s = scattering(&family, 0.0)?;
        let routes = family.at(0.0).map_err(err)?.free_routing().map_err(err)?;
        let n = s.n_tails();
        for z in [Complex64::from_polar(1.0, 0.3), Complex64::from_polar(1.0, 2.2), c(-1.0, 0.0)] {
            let mut mixed = CVector::zeros(n);
            let mut want_mixed = 0.0;
            for (j, route) in routes.iter().enumerate() {
                let mut e = CVector::zeros(n);
                e[j] = c(1.0, 0.0);
                let k = route.steps as f64;
                unpert = unpert.max((s.comfortability(z, &e).map_err(err)? - (k - 1.0)).abs());
                let a = c(1.0 + j as f64, 0.5);
                mixed[j] = a;
                want_mixed += a.norm_sqr() * (k - 1.0);
            }
            unpert = unpert.max((s.comfortability(z, &mixed).map_err(err)? - want_mixed).abs());
        }
    }
    let family = cycle4()?;
    let eps = 0.05;
    let mut worst_ratio = f64::INFINITY;
    let mut smallest = f64::INFINITY;
    for l0 in unperturbed_circle_eigenvalues(&family).map_err(err)? {
        let (e, bound) = asymptotics::comfortability_growth(&family, eps, l0).map_err(err)?;
        worst_ratio = worst_ratio.min(e / bound);
        smallest = smallest.min(e);
    }
    let pass = unpert <= 1e-12 && worst_ratio >= 0.9 && smallest >= 1.0 / eps;
    Ok((
        pass,
        format!(
            "ε=0 deviation from k_n-1 {unpert:.2e} (tol 1e-12); at ε=0.05 min E {smallest:.1}, min E/bound {worst_ratio:.4} (need ≥ 0.9, E ≥ 20)"
        ),
    ))
}

fn partial_fractions() -> Res<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < 200 {
        let n = rng.random_range(1..=8usize);
        let p = rng.random_range(1..=n);
        let cc = 2.0 - rng.random_range(0.0..2.0);
        let z = Complex64::from_polar(rng.random_range(0.1..3.0), rng.random_range(-PI..PI));
        let near_pole = (0..n).any(|k| (z - cc * Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64)).norm() < 1e-2);
        if near_pole {
            continue;
        }
        let (lhs, rhs) = partial_fraction_identity(n, p, cc, z).map_err(err)?;
        worst = worst.max((lhs - rhs).norm() / (1.0 + rhs.norm()));
        done += 1;
    }
    Ok((worst <= 1e-12, format!("max |lhs-rhs|/(1+|rhs|) {worst:.2e} (tol 1e-12)")))
}

fn profile_symmetry() -> Res<(bool, String)> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, family) in [("two-tail model", models::matrix_schrodinger()), ("4-cycle", cycle4()?)] {
        for eps in [0.01, 0.05] {
            let mut worst = 0.0f64;
            let mut count = 0;
            for l0 in unperturbed_circle_eigenvalues(&family).map_err(err)? {
                match boundary_profile_gap(&family, eps, l0) {
                    Ok(g) => {
                        worst = worst.max(g);
                        count += 1;
                    }
                    // eigenvalues of U(0) that stay on the circle carry no resonant state
                    Err(qwres::Error::Asymptotics(asymptotics::AsymptoticsError::ResonanceOnCircle(_))) => {}
                    Err(e) => return Err(e.to_string()),
                }
            }
            pass &= count > 0 && worst <= 10.0 * eps;
            parts.push(format!("{name} ε={eps}: {worst:.2e} over {count}"));
        }
    }
    Ok((pass, format!("{} (tol 10ε)", parts.join("; "))))
}

fn main() -> ExitCode {
    let mut report = Report::default();
    let mut u = Unitarity::default();
    report.record_result(1, "closed-form Σ, two-tail model", ms_closed_form(&mut u));
    report.record_result(2, "resonant tunneling Σ(ε,±i), two-tail model", ms_tunneling(&mut u));
    report.record_result(3, "closed-form Σ, N-cycle", cycle_closed_form(&mut u));
    report.record_result(4, "resonance sets", resonances());
    report.record_result(5, "width identities", widths());
    report.record_result(6, "route equivalence", route_equivalence(&mut u));
    let results: Vec<(u32, &str, Res<(bool, String)>)> = vec![
        (8, "double barrier", double_barrier(&mut u)),
        (9, "triple barrier", triple_barrier(&mut u)),
        (10, "line/graph equivalence", line_graph(&mut u)),
    ];
    let pass7 = u.sigma <= 1e-8 && u.flux <= 1e-8 && u.samples > 0;
    report.record(
        7,
        "unitarity",
        pass7,
        format!(
            "max |Σ*Σ-I| {:.2e} over {} matrices, max |T+R-1| {:.2e} (tol 1e-8)",
            u.sigma, u.samples, u.flux
        ),
    );
    for (id, title, r) in results {
        report.record_result(id, title, r);
    }
    report.record_result(11, "asymptotic slopes", slopes());
    report.record_result(12, "peak norm of M_λ", peak_norm());
    report.record_result(13, "peak width", peak_width());
    report.record_result(14, "comfortability", comfortability());
    report.record_result(15, "partial-fraction identity", partial_fractions());
    report.record_result(16, "incoming/outgoing boundary symmetry", profile_symmetry());
    report.finish()
}
