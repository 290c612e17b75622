//! Parsers for complex numbers and parameter grids given on the command line.

use num_complex::Complex64;
use qwres::asymptotics::geometric_grid;
use qwres::Expr;

/// Accepts `a+bi` forms (`0.921+0.390i`, `-i`, `2`) and, failing that, a
/// constant coin expression such as `exp(0.4*i)`.
pub fn complex(s: &str) -> Result<Complex64, String> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if let Ok(z) = compact.parse::<Complex64>() {
        return Ok(z);
    }
    let e = Expr::parse(s).map_err(|e| format!("cannot read {s:?} as a complex number: {e}"))?;
    if e.depends_on_eps() {
        return Err(format!("{s:?} must not depend on eps"));
    }
    e.eval(0.0).map_err(|e| format!("cannot evaluate {s:?}: {e}"))
}

/// `a:b:n`, `n` points geometrically spaced from `a` to `b` inclusive.
pub fn eps_grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(format!("grid {s:?} is not of the form a:b:n"));
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("bad number {t:?} in grid {s:?}"));
    let (a, b) = (num(a)?, num(b)?);
    let n: usize = n.trim().parse().map_err(|_| format!("bad point count {n:?} in grid {s:?}"))?;
    if n == 0 {
        return Err(format!("grid {s:?} is empty"));
    }
    if !(a > 0.0 && b >= a && b.is_finite()) {
        return Err(format!("grid {s:?} needs 0 < a <= b"));
    }
    if n > 1 && a == b {
        return Err(format!("grid {s:?} repeats a single point"));
    }
    Ok(geometric_grid(a, b, n))
}

/// `n` points `e^{2πik/n}`, angles ascending from 0.
pub fn circle_grid(n: usize) -> Result<Vec<Complex64>, String> {
    if n == 0 {
        return Err("--z-grid needs at least one point".into());
    }
    Ok((0..n)
        .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64))
        .collect())
}

/// Angle in `[0, 2π)`, used to order points on and inside the circle.
/// Angles within 1e-12 of `2π` count as 0, so round-off below the real
/// axis does not move a point to the end of the order.
pub fn angle(z: Complex64) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    let a = z.arg();
    let a = if a < 0.0 { a + tau } else { a };
    if tau - a < 1e-12 {
        0.0
    } else {
        a
    }
}
