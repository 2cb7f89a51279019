//! Fractional powers of `-Δ`, the heat semigroup, the ground state and the
//! weights built from them, all for radial data on `H³`.
//!
//! Every operator here is a spectral multiplier on the grid's sine modes,
//! evaluated on the [`Symbol::Discrete`] eigenvalue map unless stated
//! otherwise. The subordination path is kept separate on purpose: it
//! reaches `(-Δ)^s` through time quadrature of the heat semigroup and serves
//! as an oracle for the closed-form multiplier.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::spectral::{
    from_spectral, laplacian_symbol, to_spectral, RadialField, RadialGrid, SpectralField, Symbol,
};

/// Spectral tail ratio above which a field counts as under-resolved.
pub const RESOLUTION_LIMIT: f64 = 1e-10;

fn check_order(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("order s must lie in (0,1), got {s}")));
    }
    Ok(())
}

/// `(-Δ)^p u` for any real power `p`.
pub fn frac_power(u: &RadialField, p: f64, symbol: Symbol) -> RadialField {
    let sym = laplacian_symbol(u.grid(), symbol);
    let mult: Vec<f64> = sym.iter().map(|l| l.powf(p)).collect();
    from_spectral(&to_spectral(u).scaled_by(&mult))
}

pub(crate) fn check_resolution(c: &SpectralField, strict: bool) -> Result<()> {
    let ratio = c.tail_ratio();
    if ratio > RESOLUTION_LIMIT {
        if strict {
            return Err(Error::Resolution {
                ratio,
                limit: RESOLUTION_LIMIT,
            });
        }
        log::warn!("field under-resolved: spectral tail ratio {ratio:.3e} exceeds {RESOLUTION_LIMIT:.0e}");
    }
    Ok(())
}

/// `(-Δ)^s u`; logs a warning when `u` is under-resolved.
pub fn frac_laplacian(u: &RadialField, s: f64) -> Result<RadialField> {
    frac_laplacian_checked(u, s, false)
}

/// `(-Δ)^s u`; with `strict`, an under-resolved input is an error.
pub fn frac_laplacian_checked(u: &RadialField, s: f64, strict: bool) -> Result<RadialField> {
    check_order(s)?;
    let c = to_spectral(u);
    check_resolution(&c, strict)?;
    let sym = laplacian_symbol(u.grid(), Symbol::Discrete);
    let mult: Vec<f64> = sym.iter().map(|l| l.powf(s)).collect();
    Ok(from_spectral(&c.scaled_by(&mult)))
}

/// `(-Δ)^{-s} u`, the Green-kernel potential of `u`.
pub fn inv_frac_laplacian(u: &RadialField, s: f64) -> Result<RadialField> {
    check_order(s)?;
    Ok(frac_power(u, -s, Symbol::Discrete))
}

/// `e^{tΔ} u`.
pub fn heat_semigroup(u: &RadialField, t: f64) -> Result<RadialField> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("heat time must be nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(u.clone());
    }
    let sym = laplacian_symbol(u.grid(), Symbol::Discrete);
    let mult: Vec<f64> = sym.iter().map(|l| (-t * l).exp()).collect();
    Ok(from_spectral(&to_spectral(u).scaled_by(&mult)))
}

/// Short-time cutoff of the subordination integral.
pub const SUBORDINATION_EPS: f64 = 1e-4;

/// Upper cutoff `T` with `e^{-T} T^{-s} = 1e-14`.
pub fn subordination_horizon(s: f64) -> f64 {
    let target = 1e-14_f64.ln();
    // Newton on f(T) = -T - s ln T - ln(1e-14).
    let mut t = -target;
    for _ in 0..50 {
        let f = -t - s * t.ln() - target;
        let df = -1.0 - s / t;
        let step = f / df;
        t -= step;
        if step.abs() < 1e-12 * t {
            break;
        }
    }
    t
}

/// `(-Δ)^s u` from the heat-semigroup representation
/// `Γ(-s)^{-1} ∫₀^∞ (e^{tΔ}u - u) t^{-1-s} dt`.
///
/// The range `(0, ε)` uses the second-order expansion of `e^{tΔ}u - u`
/// integrated exactly, `(T, ∞)` keeps the exact `-u` contribution, and the
/// middle range is Gauss-Legendre in `ln t` on unit panels, refined by
/// doubling the node count until two successive estimates agree to
/// `quad_tol` in relative `L²`.
pub fn frac_laplacian_subordination(u: &RadialField, s: f64, quad_tol: f64) -> Result<RadialField> {
    check_order(s)?;
    if !(quad_tol > 0.0) {
        return Err(Error::Domain(format!("quadrature tolerance must be positive, got {quad_tol}")));
    }
    let grid = *u.grid();
    let sym = laplacian_symbol(&grid, Symbol::Discrete);
    let c = to_spectral(u);
    let eps = SUBORDINATION_EPS;
    let horizon = subordination_horizon(s);
    let (a, b) = (eps.ln(), horizon.ln());
    let panels = (b - a).ceil() as usize;
    let width = (b - a) / panels as f64;

    // Heat flow applied at one quadrature node, accumulated in physical space.
    let middle = |nodes: usize| -> Vec<f64> {
        let (x, w) = gauss_legendre(nodes);
        let mut acc = vec![0.0; grid.points];
        for p in 0..panels {
            let lo = a + p as f64 * width;
            for (xi, wi) in x.iter().zip(&w) {
                let lt = lo + 0.5 * width * (xi + 1.0);
                let t = lt.exp();
                let mult: Vec<f64> = sym.iter().map(|l| (-t * l).exp()).collect();
                let heat = from_spectral(&c.scaled_by(&mult));
                let weight = 0.5 * width * wi * (-s * lt).exp();
                for ((acc, h), u) in acc.iter_mut().zip(heat.values()).zip(u.values()) {
                    *acc += weight * (h - u);
                }
            }
        }
        acc
    };

    let mut nodes = 8;
    let mut prev = middle(nodes);
    loop {
        nodes *= 2;
        let next = middle(nodes);
        let diff = next.iter().zip(&prev).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        prev = next;
        if diff <= quad_tol * norm || norm == 0.0 {
            break;
        }
        if nodes >= 128 {
            return Err(Error::QuadratureNonconvergence {
                estimate: diff / norm,
                tolerance: quad_tol,
            });
        }
    }

    // Second-order head: (e^{tΔ}u - u) ≈ -tAu + t²A²u/2 on (0, ε).
    let sym2: Vec<f64> = sym.iter().map(|l| l * l).collect();
    let lap = from_spectral(&c.scaled_by(&sym));
    let lap2 = from_spectral(&c.scaled_by(&sym2));
    let head = eps.powf(1.0 - s) / (1.0 - s);
    let head2 = 0.5 * eps.powf(2.0 - s) / (2.0 - s);
    let tail = horizon.powf(-s) / s;
    let pref = 1.0 / gamma(-s);
    let values = prev
        .iter()
        .zip(lap.values())
        .zip(lap2.values())
        .zip(u.values())
        .map(|(((m, l), l2), u)| pref * (m - head * l + head2 * l2 - tail * u))
        .collect();
    RadialField::new(grid, values)
}

/// Kind of weight used in weighted-L¹ norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Uniform,
    GroundState,
    WClass,
}

/// A positive radial weight sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    pub kind: WeightKind,
    pub profile: RadialField,
    /// The bump `ψ` with `profile = (-Δ)^{-s} ψ` for W-class weights.
    pub source: Option<RadialField>,
    pub s: Option<f64>,
    pub diagnostics: Option<WeightDiagnostics>,
}

/// Fitted constants of a W-class weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightDiagnostics {
    /// Extremes of `Φ(r) / (r^{s-1} e^{-2r})` on the tail window.
    pub tail_lower: f64,
    pub tail_upper: f64,
    pub tail_window: (f64, f64),
    /// Smallest `C` with `Φ ≤ C Φ₁` on the grid.
    pub phi1_constant: f64,
}

impl Weight {
    pub fn uniform(grid: RadialGrid) -> Self {
        Self {
            kind: WeightKind::Uniform,
            profile: RadialField::from_fn(grid, |_| 1.0),
            source: None,
            s: None,
            diagnostics: None,
        }
    }
}

/// `Φ₁(r) = r / sinh r`, normalized so `Φ₁(0⁺) = 1`.
pub fn ground_state_profile(r: f64) -> f64 {
    if r < 1e-8 {
        1.0 - r * r / 6.0
    } else {
        r / r.sinh()
    }
}

pub fn ground_state(grid: RadialGrid) -> Weight {
    Weight {
        kind: WeightKind::GroundState,
        profile: RadialField::from_fn(grid, ground_state_profile),
        source: None,
        s: None,
        diagnostics: None,
    }
}

/// The standard bump `exp(1 - 1/(1 - r²))` on `r < 1`, zero beyond.
pub fn canonical_bump(grid: RadialGrid) -> RadialField {
    RadialField::from_fn(grid, |r| {
        if r < 1.0 {
            (1.0 - 1.0 / (1.0 - r * r)).exp()
        } else {
            0.0
        }
    })
}

/// Largest tail-window condition number accepted by [`make_w_weight`].
pub const WEIGHT_TAIL_CONDITION: f64 = 10.0;

/// Relative size below which negative W-class profile values count as
/// roundoff.
pub const WEIGHT_ROUNDOFF: f64 = 1e-13;

/// Tail window for the W-class profile check on a grid: `[5, 15]`, clipped
/// to three quarters of the truncation radius.
pub fn weight_tail_window(grid: &RadialGrid) -> (f64, f64) {
    (5.0, 15.0_f64.min(0.75 * grid.r_max))
}

/// Builds `Φ = (-Δ)^{-s} ψ` and checks its Green-type tail.
pub fn make_w_weight(grid: RadialGrid, s: f64, psi: &RadialField) -> Result<Weight> {
    check_order(s)?;
    if *psi.grid() != grid {
        return Err(Error::GridMismatch("source bump lives on another grid".into()));
    }
    if psi.min() < 0.0 {
        return Err(Error::Domain("weight source must be nonnegative".into()));
    }
    if psi.max() <= 0.0 {
        return Err(Error::Domain("weight source vanishes identically".into()));
    }
    let support = grid
        .radii()
        .iter()
        .zip(psi.values())
        .filter(|(_, v)| **v > 0.0)
        .map(|(r, _)| *r)
        .fold(0.0, f64::max);
    if support > 1.0 {
        return Err(Error::Domain(format!(
            "weight source must be supported in the unit ball, extends to r = {support:.3}"
        )));
    }
    let window = weight_tail_window(&grid);
    let raw = inv_frac_laplacian(psi, s)?;
    // Beyond the tail window the profile sinks below transform roundoff;
    // there it only has to be nonnegative up to that floor.
    let floor = WEIGHT_ROUNDOFF * raw.max();
    let bad = grid
        .radii()
        .into_iter()
        .zip(raw.values().iter().copied())
        .find(|(r, p)| if *r <= window.1 { *p <= 0.0 } else { *p < -floor });
    if let Some((r, p)) = bad {
        return Err(Error::WeightTail(format!(
            "weight profile not positive at r = {r:.3} (value {p:.3e})"
        )));
    }
    let profile = raw.map(|p| p.max(0.0));
    if window.1 <= window.0 {
        return Err(Error::WeightTail(format!(
            "grid radius {} too small for the tail window",
            grid.r_max
        )));
    }
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for (r, p) in grid.radii().iter().zip(profile.values()) {
        if *r >= window.0 && *r <= window.1 {
            let ratio = p / (r.powf(s - 1.0) * (-2.0 * r).exp());
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
    }
    if !(lo > 0.0) || hi / lo > WEIGHT_TAIL_CONDITION {
        return Err(Error::WeightTail(format!(
            "tail ratio on [{}, {}] spans [{lo:.3e}, {hi:.3e}]",
            window.0, window.1
        )));
    }
    let phi1_constant = grid
        .radii()
        .iter()
        .zip(profile.values())
        .map(|(r, p)| p / ground_state_profile(*r))
        .fold(0.0, f64::max);
    Ok(Weight {
        kind: WeightKind::WClass,
        profile,
        source: Some(psi.clone()),
        s: Some(s),
        diagnostics: Some(WeightDiagnostics {
            tail_lower: lo,
            tail_upper: hi,
            tail_window: window,
            phi1_constant,
        }),
    })
}
