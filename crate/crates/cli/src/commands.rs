use std::path::{Path, PathBuf};

use num_complex::Complex64;
use qwres::asymptotics::{
    self, discrepancy_norm, discrepancy_remainder, fit_slope, nonresonant_transmission, tunneling_check,
    unperturbed_circle_eigenvalues, AsymptoticsError,
};
use qwres::line::{rotation_coin, tunnel_coin, BarrierSpec, Coin};
use qwres::model_file::{ModelFile, ModelFileError};
use qwres::models::{self, ModelError};
use qwres::par::Execution;
use qwres::scattering::{transmission_reflection, unitarity_defect, ChannelSplit, Route, Scattering};
use qwres::spectral::{eigen_decompose, resonance_set, CMatrix, CVector, SpectralOptions};
use qwres::WalkFamily;
use serde_json::{json, Value};

use crate::output::{complex_json, Cell, Table};
use crate::parse::{self, angle};
use crate::{
    BarrierArgs, ExportArgs, Format, ModelArgs, OutputArgs, Quantity, ResonancesArgs, RouteArg, SmatrixArgs,
    SpectralArgs, SweepArgs, ValidateArgs,
};

/// Largest acceptable `‖Σ*Σ - I‖_max`, `|T + R - 1|` and route gap.
const CHECK_TOL: f64 = 1e-8;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Validation { kind: String, message: String },
    Numerical { kind: String, message: String },
    /// The computation finished and its output was written, but a check failed.
    Breach(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 3,
            Failure::Validation { .. } => 1,
            Failure::Numerical { .. } | Failure::Breach(_) => 2,
        }
    }

    pub fn message(&self) -> String {
        match self {
            Failure::Usage(m) | Failure::Breach(m) => m.clone(),
            Failure::Validation { kind, message } | Failure::Numerical { kind, message } => {
                format!("{kind}: {message}")
            }
        }
    }
}

/// The variant name of the innermost library error, e.g. `NotBalanced`.
fn error_kind(e: &qwres::Error) -> String {
    let debug = format!("{e:?}");
    let inner = debug.split_once('(').map_or(debug.as_str(), |(_, rest)| rest);
    inner.chars().take_while(|c| c.is_alphanumeric() || *c == '_').collect()
}

impl From<qwres::Error> for Failure {
    fn from(e: qwres::Error) -> Self {
        use qwres::Error as E;
        let (kind, message) = (error_kind(&e), e.to_string());
        match e {
            E::ModelFile(ModelFileError::Io { .. }) => Failure::Usage(message),
            E::Model(ModelError::EpsOutOfRange { .. } | ModelError::BadParameter(_)) => Failure::Usage(message),
            E::Graph(_) | E::Syntax(_) | E::Coin(_) | E::Walk(_) | E::Line(_) | E::ModelFile(_) => {
                Failure::Validation { kind, message }
            }
            E::Model(_) | E::Spectral(_) | E::Scattering(_) | E::Asymptotics(_) => Failure::Numerical { kind, message },
        }
    }
}

macro_rules! lib_err {
    ($e:expr) => {
        $e.map_err(|e| Failure::from(qwres::Error::from(e)))
    };
}

fn usage<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

fn write_text(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn render(table: &Table, output: &OutputArgs) -> Result<(), Failure> {
    let text = match output.format {
        Format::Csv => table.to_csv(),
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&table.to_json()).expect("plain values")),
    };
    write_text(&output.out, &text)
}

pub fn load_family(m: &ModelArgs) -> Result<WalkFamily, Failure> {
    match m.model.as_str() {
        "ms" => Ok(models::matrix_schrodinger()),
        "cycle" => {
            let c = if m.c.is_empty() { vec![1.0; m.n] } else { m.c.clone() };
            if c.len() != m.n {
                return usage(format!("--c has {} values, --N is {}", c.len(), m.n));
            }
            lib_err!(models::cycle(m.n, &c))
        }
        "random" => Ok(models::random_model(m.seed)),
        path => Ok(ModelFile::load(Path::new(path)).map_err(qwres::Error::from)?.family()?),
    }
}

fn options(s: &SpectralArgs) -> SpectralOptions {
    SpectralOptions {
        tol_cluster: s.tol_cluster,
        tol_circle: s.tol_circle,
    }
}

fn scattering(family: &WalkFamily, eps: f64, opts: SpectralOptions) -> Result<Scattering, Failure> {
    let walk = family.at(eps)?;
    lib_err!(Scattering::new(walk, opts))
}

/// Points from `--z` and `--z-grid`, ordered by angle, then modulus.
fn z_points(z: &[String], grid: Option<usize>, default_grid: Option<usize>) -> Result<Vec<Complex64>, Failure> {
    let mut zs: Vec<Complex64> = z.iter().map(|s| parse::complex(s)).collect::<Result<_, _>>().map_err(Failure::Usage)?;
    if let Some(n) = grid.or(if zs.is_empty() { default_grid } else { None }) {
        zs.extend(parse::circle_grid(n).map_err(Failure::Usage)?);
    }
    if zs.is_empty() {
        return usage("give --z or --z-grid");
    }
    zs.sort_by(|a, b| angle(*a).total_cmp(&angle(*b)).then(a.norm().total_cmp(&b.norm())));
    Ok(zs)
}

pub fn validate(a: &ValidateArgs) -> Result<(), Failure> {
    let mut checks = Vec::new();
    let mut errors = Vec::new();
    let record = |check: &str, e: qwres::Error, errors: &mut Vec<Value>| {
        errors.push(json!({ "check": check, "kind": error_kind(&e), "message": e.to_string() }));
    };
    let mut shape = Value::Null;
    match load_family(&a.model) {
        Err(Failure::Usage(m)) => return usage(m),
        Err(Failure::Validation { kind, message }) | Err(Failure::Numerical { kind, message }) => {
            errors.push(json!({ "check": "load", "kind": kind, "message": message }));
        }
        Err(f) => return Err(f),
        Ok(family) => {
            let g = &family.graph;
            shape = json!({
                "vertices": g.vertex_count(),
                "interior_arcs": g.interior_arc_count(),
                "tails": g.tail_count(),
            });
            checks.push(json!({ "check": "balance", "ok": true }));
            let mut eps_list = vec![0.0];
            eps_list.extend(a.eps.filter(|&e| e != 0.0));
            for eps in eps_list {
                match family.at(eps) {
                    Ok(w) => checks.push(json!({
                        "check": "unitarity", "eps": eps, "ok": true, "residual": w.isometry_residual(),
                    })),
                    Err(e @ qwres::Error::Model(ModelError::EpsOutOfRange { .. })) => return Err(e.into()),
                    Err(e) => record("unitarity", e, &mut errors),
                }
            }
            if let Ok(w) = family.at(0.0) {
                match w.free_routing() {
                    Ok(routes) => {
                        let r: Vec<Value> = routes
                            .iter()
                            .map(|r| json!({ "tail": r.tail, "steps": r.steps, "phase": complex_json(r.phase) }))
                            .collect();
                        checks.push(json!({ "check": "free_routing", "ok": true, "routes": r }));
                    }
                    Err(e) => record("free_routing", e.into(), &mut errors),
                }
            }
        }
    }
    let ok = errors.is_empty();
    let report = json!({
        "model": a.model.model, "ok": ok, "shape": shape, "checks": checks, "errors": errors,
    });
    write_text(&a.out, &format!("{}\n", serde_json::to_string_pretty(&report).expect("plain values")))?;
    if ok {
        Ok(())
    } else {
        Err(Failure::Validation {
            kind: "ValidationFailed".into(),
            message: format!("{} check(s) failed", errors.len()),
        })
    }
}

pub fn resonances(a: &ResonancesArgs) -> Result<(), Failure> {
    let family = load_family(&a.model)?;
    let grid = match &a.eps_grid {
        Some(g) => parse::eps_grid(g).map_err(Failure::Usage)?,
        None => vec![a.eps.unwrap_or(0.0)],
    };
    let opts = options(&a.spectral);
    let per_eps = Execution::Parallel.try_map(&grid, |&eps| -> Result<_, Failure> {
        let m = family.at(eps)?.interior();
        let mut set = lib_err!(eigen_decompose(&m, opts)).map(|s| resonance_set(&s))?;
        set.sort_by(|x, y| {
            angle(x.lambda)
                .total_cmp(&angle(y.lambda))
                .then(x.lambda.norm().total_cmp(&y.lambda.norm()))
        });
        Ok(set)
    })?;
    let mut table = Table::new(["eps", "re", "im", "multiplicity", "on_circle"]);
    for (eps, set) in grid.iter().zip(per_eps) {
        for r in set {
            table.push(vec![
                (*eps).into(),
                r.lambda.re.into(),
                r.lambda.im.into(),
                r.multiplicity.into(),
                r.is_eigenvalue.into(),
            ]);
        }
    }
    render(&table, &a.output)
}

fn oracle_sigma(s: &Scattering, z: Complex64) -> Result<CMatrix, Failure> {
    let n = s.n_tails();
    let mut out = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = CVector::zeros(n);
        e[j] = Complex64::new(1.0, 0.0);
        out.set_column(j, &lib_err!(s.oracle_direct_solve(z, &e))?.1);
    }
    Ok(out)
}

fn sigma_by(s: &Scattering, z: Complex64, route: RouteArg) -> Result<CMatrix, Failure> {
    match route {
        RouteArg::Resolvent => Ok(lib_err!(s.sigma(z, Route::Resolvent))?.sigma),
        RouteArg::Expansion => Ok(lib_err!(s.sigma(z, Route::Expansion))?.sigma),
        RouteArg::Oracle => oracle_sigma(s, z),
    }
}

fn entry_gap(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn on_circle(z: Complex64) -> bool {
    (z.norm() - 1.0).abs() <= 1e-12
}

pub fn smatrix(a: &SmatrixArgs) -> Result<(), Failure> {
    let family = load_family(&a.model)?;
    let zs = z_points(&a.z, a.z_grid, None)?;
    if let Some(z) = zs.iter().find(|z| z.norm() < qwres::scattering::MIN_ABS_Z) {
        return usage(format!("z = {z} is too close to 0"));
    }
    let s = scattering(&family, a.eps, options(&a.spectral))?;
    let n = s.n_tails();
    let results = Execution::Parallel.try_map(&zs, |&z| -> Result<(CMatrix, Option<f64>), Failure> {
        let sigma = sigma_by(&s, z, a.route)?;
        let gap = if a.check_routes {
            let mut worst = 0.0f64;
            for other in [RouteArg::Resolvent, RouteArg::Expansion, RouteArg::Oracle] {
                if other != a.route {
                    worst = worst.max(entry_gap(&sigma, &sigma_by(&s, z, other)?));
                }
            }
            Some(worst)
        } else {
            None
        };
        Ok((sigma, gap))
    })?;

    let mut columns = vec!["eps".to_string(), "z_re".into(), "z_im".into()];
    for r in 1..=n {
        for c in 1..=n {
            columns.push(format!("s{r}_{c}_re"));
            columns.push(format!("s{r}_{c}_im"));
        }
    }
    columns.push("unitarity_residual".into());
    if a.check_routes {
        columns.push("route_gap".into());
    }
    let mut table = Table::new(columns);
    let mut breaches = Vec::new();
    for (z, (sigma, gap)) in zs.iter().zip(&results) {
        let mut row: Vec<Cell> = vec![a.eps.into(), z.re.into(), z.im.into()];
        for r in 0..n {
            for c in 0..n {
                row.push(sigma[(r, c)].re.into());
                row.push(sigma[(r, c)].im.into());
            }
        }
        let u = unitarity_defect(sigma);
        row.push(u.into());
        if on_circle(*z) && u > CHECK_TOL {
            breaches.push(format!("unitarity residual {u:.3e} at z = {z}"));
        }
        if let Some(g) = gap {
            row.push((*g).into());
            if *g > CHECK_TOL {
                breaches.push(format!("route gap {g:.3e} at z = {z}"));
            }
        }
        table.push(row);
    }
    render(&table, &a.output)?;
    match breaches.first() {
        Some(first) => Err(Failure::Breach(format!("{} point(s) failed; first: {first}", breaches.len()))),
        None => Ok(()),
    }
}

/// Unit-circle eigenvalues of `U(0)` to follow, ordered by angle.
fn starting_points(family: &WalkFamily, lambda0: &Option<String>) -> Result<Vec<Complex64>, Failure> {
    let mut all = unperturbed_circle_eigenvalues(family)?;
    if all.is_empty() {
        return Err(Failure::Numerical {
            kind: "NoCircleEigenvalues".into(),
            message: "U(0) has no unit-circle eigenvalue on the interior".into(),
        });
    }
    all.sort_by(|x, y| angle(*x).total_cmp(&angle(*y)));
    match lambda0 {
        None => Ok(all),
        Some(s) => {
            let want = parse::complex(s).map_err(Failure::Usage)?;
            let best = all
                .iter()
                .min_by(|x, y| (*x - want).norm().total_cmp(&(*y - want).norm()))
                .expect("nonempty");
            Ok(vec![*best])
        }
    }
}

/// Outcome of one (eps, λ0) evaluation in a peak sweep.
enum Point {
    Row(Vec<Cell>),
    Skipped(String),
}

/// Errors that mean "no measurement here" rather than a failed computation.
fn skippable(e: &qwres::Error) -> bool {
    matches!(
        e,
        qwres::Error::Asymptotics(
            AsymptoticsError::ResonanceOnCircle(_)
                | AsymptoticsError::LowPeak(_)
                | AsymptoticsError::NoCrossing { .. }
                | AsymptoticsError::EmptyChannel(_)
        )
    )
}

fn peak_sweep(
    a: &SweepArgs,
    family: &WalkFamily,
    grid: &[f64],
    columns: &[&str],
    eval: impl Fn(f64, Complex64) -> qwres::Result<Vec<Cell>> + Sync + Send,
) -> Result<(Table, Vec<Value>), Failure> {
    let starts = starting_points(family, &a.lambda0)?;
    let pairs: Vec<(f64, Complex64)> = grid.iter().flat_map(|&e| starts.iter().map(move |&l| (e, l))).collect();
    let points = a.execution().try_map(&pairs, |&(eps, l0)| match eval(eps, l0) {
        Ok(cells) => {
            let mut row: Vec<Cell> = vec![eps.into(), l0.re.into(), l0.im.into()];
            row.extend(cells);
            Ok(Point::Row(row))
        }
        Err(e) if skippable(&e) => Ok(Point::Skipped(e.to_string())),
        Err(e) => Err(Failure::from(e)),
    })?;
    let mut cols = vec!["eps", "lambda0_re", "lambda0_im"];
    cols.extend_from_slice(columns);
    let mut table = Table::new(cols);
    let mut skipped = Vec::new();
    for ((eps, l0), p) in pairs.iter().zip(points) {
        match p {
            Point::Row(r) => table.push(r),
            Point::Skipped(reason) => {
                skipped.push(json!({ "eps": eps, "lambda0": complex_json(*l0), "reason": reason }))
            }
        }
    }
    Ok((table, skipped))
}

fn num(c: &Cell) -> f64 {
    match c {
        Cell::Num(x) => *x,
        Cell::Int(n) => *n as f64,
        _ => f64::NAN,
    }
}

fn column(table: &Table, name: &str) -> Vec<f64> {
    let k = table.columns.iter().position(|c| c == name).expect("known column");
    table.rows.iter().map(|r| num(&r[k])).collect()
}

fn split_for(a: &SweepArgs, family: &WalkFamily) -> Result<Option<ChannelSplit>, Failure> {
    let n = family.graph.tail_count();
    if n < 2 {
        return Ok(None);
    }
    ChannelSplit::new(&a.j, n).map(Some).map_err(|e| Failure::Usage(e.to_string()))
}

fn require_split(a: &SweepArgs, family: &WalkFamily) -> Result<ChannelSplit, Failure> {
    split_for(a, family)?.ok_or_else(|| Failure::Usage("this sweep needs a model with two or more tails".into()))
}

fn discrepancy_sweep(a: &SweepArgs, family: &WalkFamily, grid: &[f64]) -> Result<(Table, Value, bool), Failure> {
    let Some(zs) = &a.z else {
        return usage("sweep discrepancy needs --z");
    };
    let z = parse::complex(zs).map_err(Failure::Usage)?;
    let split = split_for(a, family)?;
    let unperturbed = lib_err!(eigen_decompose(&family.at(0.0)?.interior(), SpectralOptions::default()))?;
    let distance = unperturbed
        .clusters
        .iter()
        .map(|c| (c.lambda - z).norm())
        .fold(f64::INFINITY, f64::min);
    let rows = a.execution().try_map(grid, |&eps| -> qwres::Result<Vec<Cell>> {
        let mut row: Vec<Cell> = vec![
            eps.into(),
            discrepancy_norm(family, z, eps)?.into(),
            discrepancy_remainder(family, z, eps)?.into(),
        ];
        if let Some(sp) = &split {
            row.push(nonresonant_transmission(family, sp, z, eps)?.into());
        }
        Ok(row)
    })?;
    let mut cols = vec!["eps", "discrepancy", "remainder"];
    if split.is_some() {
        cols.push("transmission");
    }
    let mut table = Table::new(cols);
    rows.into_iter().for_each(|r| table.push(r));

    let slope_d = fit_slope(grid, &column(&table, "discrepancy")).ok();
    let slope_t = split
        .as_ref()
        .and_then(|_| fit_slope(grid, &column(&table, "transmission")).ok());
    let in_band = |s: Option<f64>, lo: f64, hi: f64| s.is_some_and(|s| (lo..=hi).contains(&s));
    let pass = in_band(slope_d, 0.9, 1.1) && (split.is_none() || in_band(slope_t, 1.8, 2.2));
    let summary = json!({
        "quantity": "discrepancy",
        "z": complex_json(z),
        "distance_to_unperturbed_spectrum": distance,
        "slope_discrepancy": slope_d,
        "band_discrepancy": [0.9, 1.1],
        "slope_transmission": slope_t,
        "band_transmission": [1.8, 2.2],
        "pass": pass,
    });
    Ok((table, summary, pass))
}

fn tunneling_sweep(a: &SweepArgs, family: &WalkFamily, grid: &[f64]) -> Result<(Table, Value, bool), Failure> {
    let split = require_split(a, family)?;
    let columns = ["lambda_re", "lambda_im", "t_at_peak", "symmetry_residual", "overlap"];
    let (table, skipped) = peak_sweep(a, family, grid, &columns, |eps, l0| {
        let r = tunneling_check(family, eps, l0, &split)?;
        Ok(vec![
            r.lambda.re.into(),
            r.lambda.im.into(),
            r.t_at_peak.into(),
            r.symmetry_residual.into(),
            r.overlap.into(),
        ])
    })?;
    let (eps, t, sym) = (column(&table, "eps"), column(&table, "t_at_peak"), column(&table, "symmetry_residual"));
    let mut symmetric = 0;
    let mut worst = 0.0f64;
    let mut pass = true;
    for k in 0..eps.len() {
        if sym[k] <= 10.0 * eps[k] {
            symmetric += 1;
            worst = worst.max((1.0 - t[k]).abs());
            pass &= (1.0 - t[k]).abs() <= 10.0 * eps[k];
        }
    }
    let summary = json!({
        "quantity": "tunneling",
        "J": split.members(),
        "rows": table.rows.len(),
        "symmetric_rows": symmetric,
        "max_peak_deficit_symmetric": worst,
        "band": "|1 - T| <= 10 eps where the symmetry residual is <= 10 eps",
        "skipped": skipped,
        "pass": pass,
    });
    Ok((table, summary, pass))
}

fn width_sweep(a: &SweepArgs, family: &WalkFamily, grid: &[f64]) -> Result<(Table, Value, bool), Failure> {
    let split = require_split(a, family)?;
    let columns = ["lambda_re", "lambda_im", "measured", "predicted", "ratio"];
    let (table, skipped) = peak_sweep(a, family, grid, &columns, |eps, l0| {
        let ctx = asymptotics::PeakContext::new(family, eps, l0)?;
        let (lo, hi) = ctx.peak_width(&split)?;
        let predicted = 2.0 * (1.0 - ctx.lambda.norm());
        Ok(vec![
            ctx.lambda.re.into(),
            ctx.lambda.im.into(),
            (hi - lo).into(),
            predicted.into(),
            ((hi - lo) / predicted).into(),
        ])
    })?;
    let ratios = column(&table, "ratio");
    let worst = ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
    let pass = !ratios.is_empty() && worst <= 0.2;
    let summary = json!({
        "quantity": "width",
        "J": split.members(),
        "rows": table.rows.len(),
        "max_relative_deviation": worst,
        "band": 0.2,
        "skipped": skipped,
        "pass": pass,
    });
    Ok((table, summary, pass))
}

fn comfort_sweep(a: &SweepArgs, family: &WalkFamily, grid: &[f64]) -> Result<(Table, Value, bool), Failure> {
    let columns = ["lambda_re", "lambda_im", "comfortability", "bound", "scaled"];
    let (table, skipped) = peak_sweep(a, family, grid, &columns, |eps, l0| {
        let ctx = asymptotics::PeakContext::new(family, eps, l0)?;
        let e = ctx.comfortability()?;
        Ok(vec![
            ctx.lambda.re.into(),
            ctx.lambda.im.into(),
            e.into(),
            ctx.comfortability_bound().into(),
            (e * (1.0 - ctx.lambda.norm())).into(),
        ])
    })?;
    let (e, bound, scaled) = (column(&table, "comfortability"), column(&table, "bound"), column(&table, "scaled"));
    let min_ratio = e.iter().zip(&bound).map(|(e, b)| e / b).fold(f64::INFINITY, f64::min);
    let max_scaled = scaled.iter().cloned().fold(0.0, f64::max);
    let pass = !e.is_empty() && min_ratio >= 0.9;
    let summary = json!({
        "quantity": "comfort",
        "rows": table.rows.len(),
        "min_ratio_to_bound": if e.is_empty() { Value::Null } else { json!(min_ratio) },
        "band": 0.9,
        "max_scaled": max_scaled,
        "skipped": skipped,
        "pass": pass,
    });
    Ok((table, summary, pass))
}

pub fn sweep(a: &SweepArgs) -> Result<(), Failure> {
    let family = load_family(&a.model)?;
    let grid = parse::eps_grid(&a.eps_grid).map_err(Failure::Usage)?;
    family.check_eps(*grid.last().expect("nonempty grid")).map_err(qwres::Error::from)?;
    let (table, summary, pass) = match a.quantity {
        Quantity::Discrepancy => discrepancy_sweep(a, &family, &grid)?,
        Quantity::Tunneling => tunneling_sweep(a, &family, &grid)?,
        Quantity::Width => width_sweep(a, &family, &grid)?,
        Quantity::Comfort => comfort_sweep(a, &family, &grid)?,
    };
    let pretty = |v: &Value| serde_json::to_string_pretty(v).expect("plain values");
    match a.output.format {
        Format::Json => {
            let doc = json!({ "rows": table.to_json(), "summary": summary });
            write_text(&a.output.out, &format!("{}\n", pretty(&doc)))?;
        }
        Format::Csv => {
            write_text(&a.output.out, &table.to_csv())?;
            match &a.summary {
                Some(p) => write_text(&Some(p.clone()), &format!("{}\n", pretty(&summary)))?,
                None => eprintln!("{}", pretty(&summary)),
            }
        }
    }
    if pass {
        Ok(())
    } else {
        Err(Failure::Breach(format!("sweep {:?} outside its band", a.quantity).to_lowercase()))
    }
}

fn parse_coin(s: &str) -> Result<Coin, Failure> {
    let entries: Vec<Complex64> = s
        .split(',')
        .map(parse::complex)
        .collect::<Result<_, _>>()
        .map_err(Failure::Usage)?;
    let [c11, c12, c21, c22] = entries.as_slice() else {
        return usage(format!("--coin {s:?} needs four entries c11,c12,c21,c22"));
    };
    Ok(Coin::new(*c11, *c12, *c21, *c22))
}

pub fn barrier(a: &BarrierArgs) -> Result<(), Failure> {
    let coins: Vec<Coin> = if !a.r.is_empty() {
        if let Some(r) = a.r.iter().find(|r| !(r.abs() < 1.0)) {
            return usage(format!("rotation parameter {r} must lie in (-1, 1)"));
        }
        a.r.iter().map(|&r| rotation_coin(r)).collect()
    } else if !a.coin.is_empty() {
        a.coin.iter().map(|s| parse_coin(s)).collect::<Result<_, _>>()?
    } else if !a.tunnel.is_empty() {
        let eps = a.eps.expect("clap enforces --eps");
        if !(eps > 0.0) {
            return usage("--tunnel needs eps > 0");
        }
        a.tunnel.iter().map(|&c| tunnel_coin(c, eps)).collect()
    } else {
        return usage("give the barrier coins with --r, --coin or --tunnel");
    };
    let spec = BarrierSpec::new(a.positions.clone(), coins).map_err(qwres::Error::from)?;
    if !(2..=3).contains(&spec.positions().len()) {
        return usage("closed forms exist for two or three barriers; use the graph pipeline otherwise");
    }
    let zs = z_points(&a.z, a.z_grid, Some(256))?;
    let graph = if a.check_graph {
        Some((scattering(&spec.to_graph(), 0.0, SpectralOptions::default())?, ChannelSplit::new(&[1], 2).expect("two tails")))
    } else {
        None
    };
    let rows = Execution::Parallel.try_map(&zs, |&z| -> Result<Vec<f64>, Failure> {
        let ls = spec.closed_form(z).map_err(qwres::Error::from)?;
        let mut row = vec![z.re, z.im, ls.transmission, ls.reflection];
        if let Some((s, split)) = &graph {
            let sigma = lib_err!(s.sigma(z, Route::Resolvent))?.sigma;
            let mut alpha = CVector::zeros(2);
            alpha[0] = Complex64::new(1.0, 0.0);
            row.push(lib_err!(transmission_reflection(&sigma, split, &alpha))?.0);
        }
        Ok(row)
    })?;
    let mut cols = vec!["z_re", "z_im", "transmission", "reflection"];
    if a.check_graph {
        cols.push("transmission_graph");
    }
    let mut table = Table::new(cols);
    let mut breaches = Vec::new();
    for (z, row) in zs.iter().zip(rows) {
        if on_circle(*z) && (row[2] + row[3] - 1.0).abs() > CHECK_TOL {
            breaches.push(format!("|T + R - 1| = {:.3e} at z = {z}", (row[2] + row[3] - 1.0).abs()));
        }
        if let Some(tg) = row.get(4) {
            if (tg - row[2]).abs() > CHECK_TOL {
                breaches.push(format!("graph/closed-form gap {:.3e} at z = {z}", (tg - row[2]).abs()));
            }
        }
        table.push(row.into_iter().map(Cell::from).collect());
    }
    render(&table, &a.output)?;
    match breaches.first() {
        Some(first) => Err(Failure::Breach(format!("{} point(s) failed; first: {first}", breaches.len()))),
        None => Ok(()),
    }
}

pub fn export(a: &ExportArgs) -> Result<(), Failure> {
    let family = load_family(&a.model)?;
    write_text(&a.out, &format!("{}\n", ModelFile::from_family(&family).to_json()))
}
