//! Bookkeeping for the acceptance run: one PASS/FAIL line per criterion.

use std::process::ExitCode;

use num_complex::Complex64;

#[derive(Default)]
pub struct Report {
    outcomes: Vec<(u32, bool)>,
}

impl Report {
    pub fn record(&mut self, id: u32, title: &str, pass: bool, detail: impl AsRef<str>) {
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("{tag} {id:>2} {title}: {}", detail.as_ref());
        self.outcomes.push((id, pass));
    }

    /// Records a criterion whose computation itself errored.
    pub fn record_result(&mut self, id: u32, title: &str, r: Result<(bool, String), String>) {
        match r {
            Ok((pass, detail)) => self.record(id, title, pass, detail),
            Err(e) => self.record(id, title, false, format!("error: {e}")),
        }
    }

    pub fn failed(&self) -> Vec<u32> {
        self.outcomes.iter().filter(|(_, p)| !p).map(|(id, _)| *id).collect()
    }

    pub fn finish(self) -> ExitCode {
        let failed = self.failed();
        println!(
            "{} of {} criteria passed{}",
            self.outcomes.len() - failed.len(),
            self.outcomes.len(),
            if failed.is_empty() { String::new() } else { format!("; failed: {failed:?}") }
        );
        if failed.is_empty() {
            ExitCode::SUCCESS
        } else {
            ExitCode::FAILURE
        }
    }
}

/// `n` equally spaced points `e^{2πi(k + shift)/n}`.
pub fn circle(n: usize, shift: f64) -> Vec<Complex64> {
    (0..n)
        .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (k as f64 + shift) / n as f64))
        .collect()
}

/// Largest entrywise modulus of `a - b` over equally long slices.
pub fn max_gap(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Greedy matching distance between two multisets of equal size.
pub fn multiset_gap(found: &[Complex64], expected: &[Complex64]) -> f64 {
    if found.len() != expected.len() {
        return f64::INFINITY;
    }
    let mut left: Vec<Complex64> = found.to_vec();
    let mut worst = 0.0f64;
    for e in expected {
        let (i, d) = left
            .iter()
            .enumerate()
            .map(|(i, f)| (i, (f - e).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("sizes match");
        worst = worst.max(d);
        left.swap_remove(i);
    }
    worst
}
