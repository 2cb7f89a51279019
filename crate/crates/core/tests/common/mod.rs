//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

use fpme_core::spectral::{RadialField, RadialGrid};

/// `K₁(r) = ∫₀^∞ e^{-r cosh t} cosh t dt` by the trapezoid rule, which is
/// spectrally accurate for this doubly decaying integrand.
pub fn bessel_k1(r: f64) -> f64 {
    let upper = (750.0 / r).acosh().max(1.0) + 1.0;
    let h = 2e-3;
    let n = (upper / h).ceil() as usize;
    let f = |t: f64| (-r * t.cosh()).exp() * t.cosh();
    let mut sum = 0.5 * f(0.0);
    for i in 1..=n {
        sum += f(i as f64 * h);
    }
    sum * h
}

/// Closed-form `G` for `N = 3`, `s = 1/2`.
pub fn green_h3_half(r: f64) -> f64 {
    (4.0 * PI).powf(-1.5) * (4.0 / PI.sqrt()) * bessel_k1(r) / r.sinh()
}

/// Gaussian centered at `center` with width `width`, scaled to unit
/// grid mass.
pub fn unit_gaussian(grid: RadialGrid, center: f64, width: f64) -> RadialField {
    let u = RadialField::from_fn(grid, |r| (-((r - center) / width).powi(2)).exp());
    let mass = u.integral();
    u.scale(1.0 / mass)
}

/// Log-spaced points in `[a, b]`.
pub fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (a.ln() + (b.ln() - a.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Linear interpolation of a grid field at radius `r`.
pub fn interp(u: &RadialField, r: f64) -> f64 {
    let g = u.grid();
    let x = r / g.spacing() - 1.0;
    let j = (x.floor().max(0.0) as usize).min(g.points - 2);
    let f = x - j as f64;
    u.values()[j] * (1.0 - f) + u.values()[j + 1] * f
}

/// Prints one acceptance line. Writes to the stdout handle directly so the
/// line shows up even when the test harness captures output.
pub fn report(id: u32, name: &str, passed: bool, detail: &str, secs: f64) {
    use std::io::Write;
    let line = format!(
        "criterion {id} [{}] {name}: {detail} ({secs:.1} s)\n",
        if passed { "PASS" } else { "FAIL" }
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
}
