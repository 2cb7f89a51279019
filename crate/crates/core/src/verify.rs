//! Executable checks of the a-priori estimates over computed trajectories.
//!
//! Proven inequalities are checked at every grid node and recorded time
//! with a relative tolerance of `1e-8`. Estimates with existential
//! constants are checked for boundedness and for stability of the fitted
//! constant across a mass family.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::slope;
use crate::operators::{inv_frac_laplacian, WeightKind};
use crate::solver::Trajectory;
use crate::spectral::{hs_norm_sq, RadialField, RadialGrid};

/// Relative tolerance of proven-inequality checks.
pub const INEQUALITY_TOL: f64 = 1e-8;
/// Largest accepted max/min ratio of a fitted constant across a family.
pub const SPREAD_LIMIT: f64 = 3.0;
/// Largest accepted spread of the log-regime ratio over time.
pub const LOG_SPREAD_LIMIT: f64 = 2.0;
/// Relative tolerance on fitted decay exponents.
pub const SLOPE_TOL: f64 = 0.05;
/// Tolerance of the weak dual identity.
pub const IDENTITY_TOL: f64 = 1e-4;
/// Space dimension of the transform path.
const DIM: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub r_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    #[serde(rename = "N")]
    pub n: u32,
    pub s: f64,
    pub m: f64,
    pub grid: GridParams,
}

impl ReportParams {
    fn of(traj: &Trajectory) -> Self {
        let g: RadialGrid = traj.config.grid;
        Self {
            n: 3,
            s: traj.config.s,
            m: traj.config.m,
            grid: GridParams {
                r_max: g.r_max,
                points: g.points,
            },
        }
    }
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub threshold: f64,
    pub observed: BTreeMap<String, f64>,
    pub params: ReportParams,
    pub details: String,
}

impl CheckReport {
    fn new(name: &str, traj: &Trajectory, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            passed: true,
            threshold,
            observed: BTreeMap::new(),
            params: ReportParams::of(traj),
            details: String::new(),
        }
    }

    fn observe(&mut self, key: &str, value: f64) {
        self.observed.insert(key.to_string(), value);
    }

    fn note(&mut self, text: impl AsRef<str>) {
        if !self.details.is_empty() {
            self.details.push_str("; ");
        }
        self.details.push_str(text.as_ref());
    }

    /// Records a violation measure and fails the report if it exceeds `limit`.
    fn gate(&mut self, key: &str, value: f64, limit: f64) {
        self.observe(key, value);
        if !(value <= limit) {
            self.passed = false;
            self.note(format!("{key} = {value:.3e} exceeds {limit:.1e}"));
        }
    }

    /// A failed report standing in for a check that could not run.
    pub fn failed(name: &str, traj: &Trajectory, err: &Error) -> Self {
        let mut r = Self::new(name, traj, f64::NAN);
        r.passed = false;
        r.details = format!("not evaluated: {err}");
        r
    }
}

fn max_or_zero(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, f64::max)
}

fn check_family(family: &[&Trajectory]) -> Result<()> {
    if family.is_empty() {
        return Err(Error::MissingRecords("empty trajectory family".into()));
    }
    for t in family {
        if t.records.len() != t.times.len() || t.snapshots.len() != t.times.len() {
            return Err(Error::MissingRecords("records do not match snapshots".into()));
        }
    }
    Ok(())
}

/// `sup_t Q(t)` over `t` in `window`, with `Q = t^a ‖u(t)‖_∞ / mass^b`.
fn sup_ratio(traj: &Trajectory, window: (f64, f64), a: f64, mass: f64, b: f64) -> f64 {
    if mass == 0.0 {
        return 0.0;
    }
    max_or_zero(
        traj.times
            .iter()
            .zip(&traj.records)
            .filter(|(t, _)| **t > 0.0 && in_window(**t, window))
            .map(|(t, r)| t.powf(a) * r.linf / mass.powf(b)),
    )
}

fn in_window(t: f64, window: (f64, f64)) -> bool {
    t >= window.0 * (1.0 - 1e-12) && t <= window.1 * (1.0 + 1e-12)
}

/// Log-log slope of `‖u(t)‖_∞` over `window`; `None` with fewer than three
/// positive samples.
pub fn linf_slope(traj: &Trajectory, window: (f64, f64)) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = traj
        .times
        .iter()
        .zip(&traj.records)
        .filter(|(t, r)| **t > 0.0 && in_window(**t, window) && r.linf > 0.0)
        .map(|(t, r)| (t.ln(), r.linf.ln()))
        .unzip();
    (x.len() >= 3).then(|| slope(&x, &y))
}

fn spread(values: &[f64]) -> f64 {
    let positive: Vec<f64> = values.iter().copied().filter(|v| *v > 0.0).collect();
    if positive.len() < 2 {
        return 1.0;
    }
    let hi = positive.iter().copied().fold(0.0, f64::max);
    let lo = positive.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}

/// Windows used by the smoothing checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingWindows {
    /// Times over which `sup Q` is taken.
    pub sup: (f64, f64),
    /// Times over which the decay exponent is fitted.
    pub slope: (f64, f64),
}

impl Default for SmoothingWindows {
    fn default() -> Self {
        Self {
            sup: (1e-3, 1.0),
            slope: (1e-3, 1e-1),
        }
    }
}

/// `Q(t) = t^{Nϑ₁} ‖u(t)‖_∞ / ‖u₀‖₁^{2sϑ₁}` over a mass family.
pub fn check_smoothing_l1(family: &[&Trajectory], windows: SmoothingWindows) -> Result<CheckReport> {
    check_family(family)?;
    let cfg = &family[0].config;
    let theta = cfg.theta1();
    let mut rep = CheckReport::new("smoothing_l1", family[0], SPREAD_LIMIT);
    let sups: Vec<f64> = family
        .iter()
        .map(|t| sup_ratio(t, windows.sup, DIM * theta, t.records[0].l1, 2.0 * cfg.s * theta))
        .collect();
    for (i, (t, q)) in family.iter().zip(&sups).enumerate() {
        rep.observe(&format!("sup_Q[{i}]"), *q);
        rep.observe(&format!("mass[{i}]"), t.records[0].l1);
    }
    let sup = sups.iter().copied().fold(0.0, f64::max);
    rep.observe("sup_Q", sup);
    rep.observe("theta1", theta);
    if !sup.is_finite() {
        rep.passed = false;
        rep.note("sup_Q is not finite");
    }
    rep.gate("spread", spread(&sups), SPREAD_LIMIT);
    let expected = -DIM * theta;
    rep.observe("expected_slope", expected);
    let slopes: Vec<f64> = family.iter().filter_map(|t| linf_slope(t, windows.slope)).collect();
    for (i, s) in slopes.iter().enumerate() {
        rep.observe(&format!("slope[{i}]"), *s);
    }
    if let Some(worst) = slopes.iter().map(|s| (s / expected - 1.0).abs()).reduce(f64::max) {
        if family.iter().all(|t| t.records[0].l1 > 0.0) {
            rep.gate("slope_rel_error", worst, SLOPE_TOL);
        }
    }
    rep.note(format!("{} trajectories, sup over t in [{}, {}]", family.len(), windows.sup.0, windows.sup.1));
    Ok(rep)
}

/// Large-time threshold `e^{2(N-1)(m-1)} ‖u₀‖₁^{-(m-1)}` of the log regime.
pub fn log_threshold(mass: f64, m: f64) -> f64 {
    (2.0 * (DIM - 1.0) * (m - 1.0)).exp() * mass.powf(-(m - 1.0))
}

/// `Q_log(t) = t^{1/(m-1)} ‖u(t)‖_∞ / log(t ‖u₀‖₁^{m-1})^{s/(m-1)}` for `t ≥ t*`.
pub fn check_smoothing_log(traj: &Trajectory) -> Result<CheckReport> {
    check_family(&[traj])?;
    let cfg = &traj.config;
    let mass = traj.records[0].l1;
    let mut rep = CheckReport::new("smoothing_log", traj, LOG_SPREAD_LIMIT);
    if mass == 0.0 {
        rep.observe("sup_Q_log", 0.0);
        rep.note("zero datum: vacuous");
        return Ok(rep);
    }
    let t_star = log_threshold(mass, cfg.m);
    let horizon = *traj.times.last().expect("nonempty");
    if horizon < t_star {
        return Err(Error::HorizonTooShort { t_star, horizon });
    }
    let q = q_log(traj, t_star, mass, cfg.m, cfg.s);
    rep.observe("t_star", t_star);
    rep.observe("sup_Q_log", q.iter().copied().fold(0.0, f64::max));
    rep.observe("samples", q.len() as f64);
    if q.iter().any(|v| !v.is_finite()) {
        rep.passed = false;
        rep.note("non-finite Q_log");
    }
    rep.gate("spread", spread(&q), LOG_SPREAD_LIMIT);
    rep.note(format!("t in [{t_star:.3}, {horizon}]"));
    Ok(rep)
}

fn q_log(traj: &Trajectory, t_star: f64, mass: f64, m: f64, s: f64) -> Vec<f64> {
    traj.times
        .iter()
        .zip(&traj.records)
        .filter(|(t, _)| **t >= t_star)
        .map(|(t, r)| t.powf(1.0 / (m - 1.0)) * r.linf / (t * mass.powf(m - 1.0)).ln().powf(s / (m - 1.0)))
        .collect()
}

/// Weighted smoothing: ground state (`t^{Nϑ₁}` law plus the log regime when
/// the horizon allows) or W-class (`t^{1/m}` law and its `H^{-s}` corollary).
pub fn check_smoothing_weighted(
    family: &[&Trajectory],
    kind: WeightKind,
    windows: SmoothingWindows,
) -> Result<CheckReport> {
    check_family(family)?;
    let cfg = &family[0].config;
    let (s, m) = (cfg.s, cfg.m);
    let theta = cfg.theta1();
    let mut rep = CheckReport::new("smoothing_weighted", family[0], SPREAD_LIMIT);
    match kind {
        WeightKind::GroundState => {
            let sups: Vec<f64> = family
                .iter()
                .map(|t| sup_ratio(t, windows.sup, DIM * theta, t.records[0].l1_phi1, 2.0 * s * theta))
                .collect();
            for (i, q) in sups.iter().enumerate() {
                rep.observe(&format!("phi1.sup_Q[{i}]"), *q);
            }
            rep.observe("phi1.sup_Q", sups.iter().copied().fold(0.0, f64::max));
            rep.gate("phi1.spread", spread(&sups), SPREAD_LIMIT);
            for (i, t) in family.iter().enumerate() {
                let mass = t.records[0].l1_phi1;
                if mass == 0.0 {
                    continue;
                }
                let t_star = ((m - 1.0) * (DIM - 1.0)).exp() * mass.powf(-(m - 1.0));
                let horizon = *t.times.last().expect("nonempty");
                if horizon >= t_star {
                    let q = q_log(t, t_star, mass, m, s);
                    rep.observe(&format!("phi1.log_spread[{i}]"), spread(&q));
                } else {
                    rep.note(format!("phi1 log regime of trajectory {i} needs t >= {t_star:.3}"));
                }
            }
        }
        WeightKind::WClass => {
            let c_psi = family[0]
                .phi_w
                .source
                .as_ref()
                .map(|psi| hs_norm_sq(psi, s).sqrt())
                .unwrap_or(f64::NAN);
            let sups: Vec<f64> = family
                .iter()
                .map(|t| sup_ratio(t, windows.sup, 1.0 / m, t.records[0].l1_phi_w, 1.0 / m))
                .collect();
            let sups_hs: Vec<f64> = family
                .iter()
                .map(|t| sup_ratio(t, windows.sup, 1.0 / m, c_psi * t.records[0].hs, 1.0 / m))
                .collect();
            for (i, (q, h)) in sups.iter().zip(&sups_hs).enumerate() {
                rep.observe(&format!("w.sup_Q[{i}]"), *q);
                rep.observe(&format!("w.sup_Q_hs[{i}]"), *h);
            }
            rep.observe("w.sup_Q", sups.iter().copied().fold(0.0, f64::max));
            rep.observe("w.c_psi", c_psi);
            rep.gate("w.spread", spread(&sups), SPREAD_LIMIT);
            let expected = -1.0 / m;
            rep.observe("w.expected_slope", expected);
            let slopes: Vec<f64> = family.iter().filter_map(|t| linf_slope(t, windows.sup)).collect();
            for (i, sl) in slopes.iter().enumerate() {
                rep.observe(&format!("w.slope[{i}]"), *sl);
            }
            if let Some(worst) = slopes.iter().map(|sl| (sl / expected - 1.0).abs()).reduce(f64::max) {
                rep.gate("w.slope_rel_error", worst, SLOPE_TOL);
            }
        }
        WeightKind::Uniform => return check_smoothing_l1(family, windows),
    }
    Ok(rep)
}

/// Both weighted smoothing checks merged into one report.
pub fn check_smoothing_weighted_all(family: &[&Trajectory], windows: SmoothingWindows) -> Result<CheckReport> {
    let mut a = check_smoothing_weighted(family, WeightKind::GroundState, windows)?;
    let b = check_smoothing_weighted(family, WeightKind::WClass, windows)?;
    a.passed &= b.passed;
    a.observed.extend(b.observed);
    if !b.details.is_empty() {
        a.note(b.details);
    }
    Ok(a)
}

/// `t ↦ t^{1/(m-1)} u(t, r_j)` nondecreasing at every node.
pub fn check_time_monotonicity(traj: &Trajectory) -> Result<CheckReport> {
    check_family(&[traj])?;
    let m = traj.config.m;
    let e = 1.0 / (m - 1.0);
    let scale = max_or_zero(traj.records.iter().map(|r| r.linf));
    let mut rep = CheckReport::new("time_monotonicity", traj, INEQUALITY_TOL);
    let n = traj.config.grid.points;
    // Running maximum of t^{1/(m-1)} u over earlier times, node by node.
    let mut best = vec![0.0_f64; n];
    let mut worst = 0.0_f64;
    let mut at = (0.0, 0.0);
    for (t, u) in traj.times.iter().zip(&traj.snapshots) {
        if *t <= 0.0 {
            continue;
        }
        let w = t.powf(e);
        for (b, v) in best.iter_mut().zip(u.values()) {
            let f = w * v;
            let violation = (*b - f) / w;
            if violation > worst {
                worst = violation;
                at = (*t, *v);
            }
            *b = b.max(f);
        }
    }
    let rel = if scale > 0.0 { worst / scale } else { 0.0 };
    rep.observe("max_violation_abs", worst);
    rep.observe("linf_scale", scale);
    rep.gate("max_violation", rel, INEQUALITY_TOL);
    if worst > 0.0 {
        rep.note(format!("largest decrease at t = {:.4e} (u = {:.3e})", at.0, at.1));
    }
    Ok(rep)
}

/// `‖u(t)‖_p` nonincreasing for each `p` (with `∞` allowed), plus
/// dissipation of `E_m`.
pub fn check_lp_stability(traj: &Trajectory, ps: &[f64]) -> Result<CheckReport> {
    check_family(&[traj])?;
    let mut rep = CheckReport::new("lp_stability", traj, INEQUALITY_TOL);
    for &p in ps {
        let norms: Vec<f64> = traj.snapshots.iter().map(|u| u.lp_norm(p)).collect();
        let label = if p.is_infinite() { "inf".to_string() } else { format!("{p}") };
        let worst = increase(&norms);
        rep.gate(&format!("L{label}.max_increase"), worst, INEQUALITY_TOL);
    }
    let energies: Vec<f64> = traj.records.iter().map(|r| r.energy_m).collect();
    rep.gate("energy.max_increase", increase(&energies), INEQUALITY_TOL);
    rep.note(format!("p in {ps:?}; consecutive recorded times"));
    Ok(rep)
}

/// Largest increase between consecutive entries, relative to the first
/// nonzero entry.
fn increase(values: &[f64]) -> f64 {
    let scale = values.iter().copied().fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    max_or_zero(values.windows(2).map(|w| (w[1] - w[0]) / scale))
}

fn check_pair(u: &Trajectory, w: &Trajectory) -> Result<()> {
    check_family(&[u, w])?;
    if u.times != w.times || u.config.grid != w.config.grid {
        return Err(Error::GridMismatch("paired trajectories differ in times or grid".into()));
    }
    Ok(())
}

/// L¹ and `H^{-s}` T-contraction, L¹ contraction, and comparison for
/// ordered data.
pub fn check_contraction_comparison(traj_u: &Trajectory, traj_w: &Trajectory) -> Result<CheckReport> {
    check_pair(traj_u, traj_w)?;
    let s = traj_u.config.s;
    let mut rep = CheckReport::new("contraction_comparison", traj_u, INEQUALITY_TOL);
    let mut pos_l1 = Vec::new();
    let mut abs_l1 = Vec::new();
    let mut pos_hs = Vec::new();
    for (u, w) in traj_u.snapshots.iter().zip(&traj_w.snapshots) {
        let d = u.sub(w)?;
        pos_l1.push(d.positive_part().integral());
        abs_l1.push(d.lp_norm(1.0));
        pos_hs.push(hs_norm_sq(&d.positive_part(), s).max(0.0).sqrt());
    }
    let norm_scale = traj_u.records[0].l1.max(traj_w.records[0].l1);
    let hs_scale = traj_u.records[0].hs.max(traj_w.records[0].hs);
    let rise = |v: &[f64], scale: f64| {
        if scale == 0.0 {
            0.0
        } else {
            max_or_zero(v.windows(2).map(|p| (p[1] - p[0]) / scale))
        }
    };
    // Rounding noise sets a floor under the L¹ quantities on wide grids.
    let noise = traj_u.initial().l1_roundoff().max(traj_w.initial().l1_roundoff());
    if norm_scale > 0.0 {
        rep.observe("l1_roundoff_floor", noise / norm_scale);
    }
    rep.gate("l1_positive.max_increase", rise(&pos_l1, norm_scale), INEQUALITY_TOL);
    rep.gate("l1.max_increase", rise(&abs_l1, norm_scale), INEQUALITY_TOL);
    rep.gate("hs_positive.max_increase", rise(&pos_hs, hs_scale), INEQUALITY_TOL);
    let ordered = traj_u.initial().values().iter().zip(traj_w.initial().values()).all(|(a, b)| a <= b);
    rep.observe("ordered", if ordered { 1.0 } else { 0.0 });
    if ordered {
        let scale = max_or_zero(traj_w.records.iter().map(|r| r.linf));
        let worst = max_or_zero(
            traj_u
                .snapshots
                .iter()
                .zip(&traj_w.snapshots)
                .flat_map(|(u, w)| u.values().iter().zip(w.values()).map(|(a, b)| a - b).collect::<Vec<_>>()),
        );
        let rel = if scale > 0.0 { worst / scale } else { 0.0 };
        rep.gate("order.max_violation", rel, INEQUALITY_TOL);
        rep.note("ordered data: comparison checked pointwise");
    } else {
        rep.note("crossing data: contraction only");
    }
    Ok(rep)
}

fn potentials(traj: &Trajectory, s: f64) -> Result<Vec<RadialField>> {
    traj.snapshots.par_iter().map(|u| inv_frac_laplacian(u, s)).collect()
}

/// `(-Δ)^{-s} u(t)` nonincreasing in `t` at every node.
pub fn check_potential_monotone(traj: &Trajectory, s: f64) -> Result<CheckReport> {
    check_family(&[traj])?;
    let pots = potentials(traj, s)?;
    let mut rep = CheckReport::new("potential_monotone", traj, INEQUALITY_TOL);
    let scale = max_or_zero(pots.iter().map(|p| p.sup_norm()));
    let worst = max_or_zero(pots.windows(2).map(|w| {
        max_or_zero(w[1].values().iter().zip(w[0].values()).map(|(b, a)| b - a))
    }));
    let rel = if scale > 0.0 { worst / scale } else { 0.0 };
    rep.observe("potential_scale", scale);
    rep.gate("max_increase", rel, INEQUALITY_TOL);
    Ok(rep)
}

/// Two-sided pointwise estimate on all ordered triples of `lattice`:
/// `(t₀/t₁)^{m/(m-1)} (t₁-t₀) u^m(t₀) ≤ P(t₀) - P(t₁) ≤ (m-1) t^{m/(m-1)} t₀^{-1/(m-1)} u^m(t)`.
pub fn check_fundamental_pointwise(traj: &Trajectory, s: f64, lattice: &[f64]) -> Result<CheckReport> {
    check_family(&[traj])?;
    let m = traj.config.m;
    let mut rep = CheckReport::new("fundamental_pointwise", traj, INEQUALITY_TOL);
    if lattice.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Domain("lattice times must be positive".into()));
    }
    let idx: Vec<usize> = lattice.iter().map(|t| traj.index_near(*t)).collect();
    let times: Vec<f64> = idx.iter().map(|i| traj.times[*i]).collect();
    let mut used: Vec<usize> = idx.clone();
    used.sort_unstable();
    used.dedup();
    let pots: BTreeMap<usize, RadialField> = used
        .par_iter()
        .map(|i| inv_frac_laplacian(&traj.snapshots[*i], s).map(|p| (*i, p)))
        .collect::<Result<_>>()?;
    let (mut lower, mut upper) = (0.0_f64, 0.0_f64);
    let mut triples = 0;
    for (a, &i0) in idx.iter().enumerate() {
        for (b, &i1) in idx.iter().enumerate() {
            for (c, &it) in idx.iter().enumerate() {
                let (t0, t1, t) = (times[a], times[b], times[c]);
                if !(t0 <= t1 && t1 <= t) {
                    continue;
                }
                triples += 1;
                let u0 = &traj.snapshots[i0];
                let ut = &traj.snapshots[it];
                let (p0, p1) = (&pots[&i0], &pots[&i1]);
                let cl = (t0 / t1).powf(m / (m - 1.0)) * (t1 - t0);
                let cu = (m - 1.0) * t.powf(m / (m - 1.0)) * t0.powf(-1.0 / (m - 1.0));
                let mut scale = 0.0_f64;
                let mut lo = 0.0_f64;
                let mut hi = 0.0_f64;
                for j in 0..u0.len() {
                    let mid = p0.values()[j] - p1.values()[j];
                    let l = cl * u0.values()[j].powf(m);
                    let h = cu * ut.values()[j].powf(m);
                    scale = scale.max(mid.abs()).max(l).max(h);
                    lo = lo.max(l - mid);
                    hi = hi.max(mid - h);
                }
                if scale > 0.0 {
                    lower = lower.max(lo / scale);
                    upper = upper.max(hi / scale);
                }
            }
        }
    }
    rep.observe("triples", triples as f64);
    rep.gate("lower.max_violation", lower, INEQUALITY_TOL);
    rep.gate("upper.max_violation", upper, INEQUALITY_TOL);
    rep.note(format!("lattice {times:?}"));
    Ok(rep)
}

/// `t ↦ ∫ u(t) Φ dμ` nonincreasing for the trajectory's `Φ₁` and W-class
/// weights, and the `Φ₁` decrement rate against `∫ u^m Φ₁ dμ`.
pub fn check_weighted_mass_monotone(traj: &Trajectory) -> Result<CheckReport> {
    check_family(&[traj])?;
    let mut rep = CheckReport::new("weighted_mass_monotone", traj, INEQUALITY_TOL);
    let phi1: Vec<f64> = traj.records.iter().map(|r| r.l1_phi1).collect();
    let phiw: Vec<f64> = traj.records.iter().map(|r| r.l1_phi_w).collect();
    rep.gate("phi1.max_increase", increase(&phi1), INEQUALITY_TOL);
    rep.gate("phiW.max_increase", increase(&phiw), INEQUALITY_TOL);
    let m = traj.config.m;
    let mut worst = 0.0_f64;
    for k in 0..traj.times.len() - 1 {
        let h = traj.times[k + 1] - traj.times[k];
        let rate = (phi1[k] - phi1[k + 1]) / h;
        let um = traj.snapshots[k + 1].signed_pow(m);
        let rhs = um.pairing(&traj.phi1.profile)?;
        if rhs > 0.0 {
            worst = worst.max((rate / rhs - 1.0).abs());
        }
    }
    rep.observe("phi1.rate_rel_deviation", worst);
    rep.note("rate deviation compares the decrement of the Φ₁ mass with ∫u^mΦ₁ (informational)");
    Ok(rep)
}

/// Weak dual identity
/// `∫u(t₀)(-Δ)^{-s}ψ - ∫u(t₁)(-Δ)^{-s}ψ = ∫_{t₀}^{t₁}∫u^m ψ dμ dτ`
/// on the given time pairs. The time integral is evaluated both by the
/// trapezoid rule and by the right-endpoint rule that the implicit scheme
/// satisfies exactly; the latter gates the check.
pub fn check_weak_dual_identity(
    traj: &Trajectory,
    psi: &RadialField,
    s: f64,
    pairs: &[(f64, f64)],
) -> Result<CheckReport> {
    check_family(&[traj])?;
    let m = traj.config.m;
    let mut rep = CheckReport::new("weak_dual_identity", traj, IDENTITY_TOL);
    let phi = inv_frac_laplacian(psi, s)?;
    let paired: Vec<f64> = traj.snapshots.iter().map(|u| u.pairing(&phi)).collect::<Result<_>>()?;
    let flux: Vec<f64> = traj
        .snapshots
        .iter()
        .map(|u| u.signed_pow(m).pairing(psi))
        .collect::<Result<_>>()?;
    let (mut worst_right, mut worst_trap) = (0.0_f64, 0.0_f64);
    for &(a, b) in pairs {
        let (i0, i1) = (traj.index_near(a), traj.index_near(b));
        let lhs = paired[i0] - paired[i1];
        let (mut right, mut trap) = (0.0, 0.0);
        for k in i0..i1 {
            let h = traj.times[k + 1] - traj.times[k];
            right += h * flux[k + 1];
            trap += 0.5 * h * (flux[k] + flux[k + 1]);
        }
        let scale = lhs.abs().max(right.abs());
        if scale > 0.0 {
            worst_right = worst_right.max((lhs - right).abs() / scale);
            worst_trap = worst_trap.max((lhs - trap).abs() / scale);
        }
    }
    rep.observe("pairs", pairs.len() as f64);
    rep.observe("residual_trapezoid", worst_trap);
    rep.gate("residual", worst_right, IDENTITY_TOL);
    rep.note("residual uses the right-endpoint rule; residual_trapezoid is informational");
    Ok(rep)
}

/// Suite selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Smoothing,
    Monotonicity,
    Contraction,
    Fundamental,
    Identity,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "smoothing" => Suite::Smoothing,
            "monotonicity" => Suite::Monotonicity,
            "contraction" => Suite::Contraction,
            "fundamental" => Suite::Fundamental,
            "identity" => Suite::Identity,
            "all" => Suite::All,
            other => return Err(Error::Domain(format!("unknown suite '{other}'"))),
        })
    }
}

impl Suite {
    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

/// Everything the suites read.
pub struct SuiteInputs<'a> {
    /// Reference trajectory for the pointwise and monotonicity checks.
    pub main: &'a Trajectory,
    /// Mass family for the smoothing checks.
    pub family: Vec<&'a Trajectory>,
    /// Long-horizon trajectory for the log regime; falls back to `main`.
    pub long: Option<&'a Trajectory>,
    /// Paired runs for contraction/comparison.
    pub pair: (&'a Trajectory, &'a Trajectory),
    pub psi: RadialField,
    pub lattice: Vec<f64>,
    pub identity_pairs: Vec<(f64, f64)>,
    pub windows: SmoothingWindows,
    pub ps: Vec<f64>,
}

type Job<'a> = Box<dyn Fn() -> (String, Result<CheckReport>) + Send + Sync + 'a>;

/// Runs the selected checks concurrently; errors become failed reports.
pub fn run_suite(suite: Suite, inputs: &SuiteInputs) -> Vec<CheckReport> {
    let s = inputs.main.config.s;
    let mut jobs: Vec<Job> = Vec::new();
    if suite.includes(Suite::Smoothing) {
        jobs.push(Box::new(|| ("smoothing_l1".into(), check_smoothing_l1(&inputs.family, inputs.windows))));
        jobs.push(Box::new(|| {
            ("smoothing_log".into(), check_smoothing_log(inputs.long.unwrap_or(inputs.main)))
        }));
        jobs.push(Box::new(|| {
            ("smoothing_weighted".into(), check_smoothing_weighted_all(&inputs.family, inputs.windows))
        }));
    }
    if suite.includes(Suite::Monotonicity) {
        jobs.push(Box::new(|| ("time_monotonicity".into(), check_time_monotonicity(inputs.main))));
        jobs.push(Box::new(|| ("lp_stability".into(), check_lp_stability(inputs.main, &inputs.ps))));
        jobs.push(Box::new(move || ("potential_monotone".into(), check_potential_monotone(inputs.main, s))));
        jobs.push(Box::new(|| ("weighted_mass_monotone".into(), check_weighted_mass_monotone(inputs.main))));
    }
    if suite.includes(Suite::Contraction) {
        jobs.push(Box::new(|| {
            ("contraction_comparison".into(), check_contraction_comparison(inputs.pair.0, inputs.pair.1))
        }));
    }
    if suite.includes(Suite::Fundamental) {
        jobs.push(Box::new(move || {
            ("fundamental_pointwise".into(), check_fundamental_pointwise(inputs.main, s, &inputs.lattice))
        }));
    }
    if suite.includes(Suite::Identity) {
        jobs.push(Box::new(move || {
            (
                "weak_dual_identity".into(),
                check_weak_dual_identity(inputs.main, &inputs.psi, s, &inputs.identity_pairs),
            )
        }));
    }
    jobs.par_iter()
        .map(|job| {
            let (name, res) = job();
            res.unwrap_or_else(|e| CheckReport::failed(&name, inputs.main, &e))
        })
        .collect()
}

/// Time-reversed copy of a trajectory, used as a negative control.
pub fn reversed(traj: &Trajectory) -> Trajectory {
    let mut t = traj.clone();
    t.snapshots.reverse();
    t.records.reverse();
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{evolve, SolverConfig};

    fn run(height: f64) -> Trajectory {
        let g = RadialGrid::new(8.0, 255).unwrap();
        let u0 = RadialField::from_fn(g, |r| height * (-r * r / 0.3).exp());
        let cfg = SolverConfig::new(2.0, 0.5, 0.4, 40, g).unwrap();
        evolve(&u0, &cfg).unwrap()
    }

    #[test]
    fn zero_data_pass_trivially() {
        let z = run(0.0);
        assert!(check_smoothing_l1(&[&z], SmoothingWindows::default()).unwrap().passed);
        assert!(check_smoothing_log(&z).unwrap().passed);
        assert!(check_time_monotonicity(&z).unwrap().passed);
        assert!(check_lp_stability(&z, &[1.0, f64::INFINITY]).unwrap().passed);
        assert!(check_potential_monotone(&z, 0.5).unwrap().passed);
        assert!(check_weighted_mass_monotone(&z).unwrap().passed);
        let psi = crate::operators::canonical_bump(z.config.grid);
        assert!(check_weak_dual_identity(&z, &psi, 0.5, &[(0.0, 0.4)]).unwrap().passed);
    }

    #[test]
    fn negative_controls_fail() {
        let t = run(1.0);
        let back = reversed(&t);
        assert!(check_time_monotonicity(&t).unwrap().passed);
        assert!(!check_time_monotonicity(&back).unwrap().passed);
        assert!(!check_lp_stability(&back, &[1.0]).unwrap().passed);
        assert!(!check_potential_monotone(&back, 0.5).unwrap().passed);
        assert!(!check_weighted_mass_monotone(&back).unwrap().passed);
    }

    #[test]
    fn corrupted_snapshot_breaks_monotonicity() {
        let mut t = run(1.0);
        let k = t.snapshots.len() / 2;
        let bad = t.snapshots[k].scale(0.5);
        t.snapshots[k] = bad;
        assert!(!check_time_monotonicity(&t).unwrap().passed);
    }

    #[test]
    fn short_horizon_is_reported() {
        let t = run(1.0);
        assert!(matches!(check_smoothing_log(&t), Err(Error::HorizonTooShort { .. })));
        assert!((log_threshold(1.0, 2.0) - 4f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn identical_pair_has_zero_differences() {
        let t = run(1.0);
        let rep = check_contraction_comparison(&t, &t).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.observed["l1.max_increase"], 0.0);
    }

    #[test]
    fn report_serializes_in_schema_order() {
        let t = run(1.0);
        let rep = check_time_monotonicity(&t).unwrap();
        let json = serde_json::to_string(&rep).unwrap();
        let keys = ["\"name\"", "\"passed\"", "\"threshold\"", "\"observed\"", "\"params\"", "\"details\""];
        let pos: Vec<usize> = keys.iter().map(|k| json.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]), "{json}");
        assert!(json.contains("\"N\":3"));
    }

    #[test]
    fn suite_names() {
        assert_eq!("all".parse::<Suite>().unwrap(), Suite::All);
        assert!("bogus".parse::<Suite>().is_err());
    }
}
