//! Implicit time discretization of `∂ₜu + (-Δ)^s u^m = 0`.
//!
//! Each step solves `v + h (-Δ)^s v^m = u_k` for the nonnegative root `v`,
//! which is the minimizer of the strictly convex functional
//! `Ψ(v) = (2h)^{-1} ‖v - u_k‖²_{H^{-s}} + E_m[v]`. The default inner solver
//! is a globalized Newton method on `Ψ` with spectrally preconditioned
//! conjugate gradients; the frozen-coefficient relaxation iteration is kept
//! as an alternative.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{canonical_bump, check_resolution, frac_power, ground_state, make_w_weight, Weight};
use crate::spectral::{
    from_spectral, hs_norm_sq, laplacian_symbol, measure, to_spectral, NormRecord, RadialField,
    RadialGrid, SpectralField, Symbol,
};

/// Inner iteration used for each implicit step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerSolver {
    /// Newton on the proximal functional, line search on `Ψ`, PCG inner
    /// solves preconditioned by `h (-Δ)^s`.
    #[default]
    NewtonCg,
    /// `v ← Π₊(v - (I + h c (-Δ)^s)^{-1} F(v))` with `c = m (max v)^{m-1}`.
    Relaxation,
}

/// A block of equal steps ending at `end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub end: f64,
    pub steps: usize,
}

fn default_inner_tol() -> f64 {
    1e-10
}

fn default_inner_max_iters() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub m: f64,
    pub s: f64,
    /// Final time `T`.
    pub horizon: f64,
    pub n_steps: usize,
    #[serde(default = "default_inner_tol")]
    pub inner_tol: f64,
    #[serde(default = "default_inner_max_iters")]
    pub inner_max_iters: usize,
    pub grid: RadialGrid,
    /// Turn the resolution warning on the initial datum into an error.
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub inner_solver: InnerSolver,
    /// Optional piecewise-uniform schedule replacing the uniform partition
    /// `t_k = kT/n`; window ends must increase and the last must equal `T`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<Window>>,
}

impl SolverConfig {
    pub fn new(m: f64, s: f64, horizon: f64, n_steps: usize, grid: RadialGrid) -> Result<Self> {
        let cfg = Self {
            m,
            s,
            horizon,
            n_steps,
            inner_tol: default_inner_tol(),
            inner_max_iters: default_inner_max_iters(),
            grid,
            strict: false,
            inner_solver: InnerSolver::default(),
            schedule: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Piecewise-uniform partition; `n_steps` and `horizon` follow the windows.
    pub fn with_schedule(mut self, windows: Vec<Window>) -> Result<Self> {
        let last = windows
            .last()
            .ok_or_else(|| Error::Domain("empty step schedule".into()))?;
        self.horizon = last.end;
        self.n_steps = windows.iter().map(|w| w.steps).sum();
        self.schedule = Some(windows);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 1.0 && self.m.is_finite()) {
            return Err(Error::Domain(format!("m must exceed 1, got {}", self.m)));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::Domain(format!("s must lie in (0,1), got {}", self.s)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Domain(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.n_steps == 0 {
            return Err(Error::Domain("n_steps must be at least 1".into()));
        }
        if !(self.inner_tol > 0.0) {
            return Err(Error::Domain(format!("inner_tol must be positive, got {}", self.inner_tol)));
        }
        if self.inner_max_iters == 0 {
            return Err(Error::Domain("inner_max_iters must be at least 1".into()));
        }
        RadialGrid::new(self.grid.r_max, self.grid.points)?;
        if let Some(windows) = &self.schedule {
            let mut start = 0.0;
            for w in windows {
                if !(w.end > start) || w.steps == 0 {
                    return Err(Error::Domain(format!(
                        "schedule window ending at {} must follow {start} and hold at least one step",
                        w.end
                    )));
                }
                start = w.end;
            }
            if (start - self.horizon).abs() > 1e-12 * self.horizon
                || windows.iter().map(|w| w.steps).sum::<usize>() != self.n_steps
            {
                return Err(Error::Domain("schedule disagrees with horizon or n_steps".into()));
            }
        }
        Ok(())
    }

    /// Uniform step `T / n`; with a schedule, the first window's step.
    pub fn step(&self) -> f64 {
        match &self.schedule {
            Some(w) => w[0].end / w[0].steps as f64,
            None => self.horizon / self.n_steps as f64,
        }
    }

    /// The time partition `0 = t_0 < ... < t_n = T`.
    pub fn times(&self) -> Vec<f64> {
        match &self.schedule {
            None => (0..=self.n_steps)
                .map(|k| self.horizon * k as f64 / self.n_steps as f64)
                .collect(),
            Some(windows) => {
                let mut times = vec![0.0];
                let mut start = 0.0;
                for w in windows {
                    for k in 1..=w.steps {
                        times.push(start + (w.end - start) * k as f64 / w.steps as f64);
                    }
                    start = w.end;
                }
                times
            }
        }
    }

    /// `ϑ₁ = 1 / (2s + N(m - 1))` for `N = 3`.
    pub fn theta1(&self) -> f64 {
        1.0 / (2.0 * self.s + 3.0 * (self.m - 1.0))
    }
}

/// Logarithmically graded schedule: windows `[0, t_0]`, `[t_0, 10 t_0]`, ...
/// up to `horizon`, each holding `steps_per_window` equal steps.
pub fn decade_schedule(first_end: f64, horizon: f64, steps_per_window: usize) -> Vec<Window> {
    let mut windows = Vec::new();
    let mut end = first_end;
    while end < horizon * (1.0 - 1e-12) {
        windows.push(Window {
            end,
            steps: steps_per_window,
        });
        end *= 10.0;
    }
    windows.push(Window {
        end: horizon,
        steps: steps_per_window,
    });
    windows
}

/// `χ_{B_n} min(u₀, n)`.
pub fn truncate_datum(u0: &RadialField, n: u32) -> Result<RadialField> {
    if n == 0 {
        return Err(Error::Domain("truncation level must be at least 1".into()));
    }
    let cap = f64::from(n);
    let grid = *u0.grid();
    let values = grid
        .radii()
        .iter()
        .zip(u0.values())
        .map(|(r, u)| if *r < cap { u.min(cap) } else { 0.0 })
        .collect();
    RadialField::new(grid, values)
}

/// Result of one implicit step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub field: RadialField,
    pub iterations: usize,
    pub residual: f64,
    /// Residual tolerance actually applied (see [`roundoff_floor`]).
    pub tolerance: f64,
    /// Smallest value before projection onto the nonnegative cone.
    pub min_before_projection: f64,
}

/// Spectral building blocks shared by the iterations of one step.
struct Ops {
    grid: RadialGrid,
    a: Vec<f64>,
    b: Vec<f64>,
    w: Arc<Vec<f64>>,
}

impl Ops {
    fn new(grid: RadialGrid, s: f64) -> Self {
        let sym = laplacian_symbol(&grid, Symbol::Discrete);
        Self {
            grid,
            a: sym.iter().map(|l| l.powf(s)).collect(),
            b: sym.iter().map(|l| l.powf(-s)).collect(),
            w: grid.volume_weights(),
        }
    }

    fn coeffs(&self, x: &[f64]) -> SpectralField {
        to_spectral(&RadialField::from_raw(self.grid, x.to_vec()))
    }

    fn apply(&self, x: &[f64], sym: &[f64]) -> Vec<f64> {
        from_spectral(&self.coeffs(x).scaled_by(sym)).into_values()
    }

    fn dot(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(y).zip(self.w.iter()).map(|((x, y), w)| x * y * w).sum()
    }

    fn l2(&self, x: &[f64]) -> f64 {
        self.dot(x, x).sqrt()
    }

    /// `‖x‖²_{H^{-s}}` from sine coefficients.
    fn hs_sq(&self, x: &[f64]) -> f64 {
        let c = self.coeffs(x);
        2.0 * PI * self.grid.r_max * c.coeffs().iter().zip(&self.b).map(|(c, b)| b * c * c).sum::<f64>()
    }
}

fn signed_pow(x: f64, m: f64) -> f64 {
    x.abs().powf(m - 1.0) * x
}

/// Smallest norm used to normalize the step residual.
const NORM_FLOOR: f64 = 1e-300;
/// Negativity tolerated before projection, relative to `max u_k`.
const NEGATIVITY_TOL: f64 = 1e-10;

/// Newton iterations without halving the residual before giving up.
const STALL_LIMIT: usize = 6;

struct StepState<'a> {
    ops: &'a Ops,
    u: &'a [f64],
    h: f64,
    m: f64,
}

impl StepState<'_> {
    /// `F(v) = v - u + h (-Δ)^s v^m`.
    fn residual(&self, v: &[f64]) -> Vec<f64> {
        let p: Vec<f64> = v.iter().map(|x| signed_pow(*x, self.m)).collect();
        let ap = self.ops.apply(&p, &self.ops.a);
        v.iter()
            .zip(self.u)
            .zip(&ap)
            .map(|((v, u), a)| v - u + self.h * a)
            .collect()
    }

    fn objective(&self, v: &[f64]) -> f64 {
        let d: Vec<f64> = v.iter().zip(self.u).map(|(v, u)| v - u).collect();
        let m1 = self.m + 1.0;
        let energy: f64 = v
            .iter()
            .zip(self.ops.w.iter())
            .map(|(v, w)| v.abs().powf(m1) * w)
            .sum::<f64>()
            / m1;
        self.ops.hs_sq(&d) / (2.0 * self.h) + energy
    }
}

/// One implicit step from `u_k` with step `h`.
pub fn itd_step(u_k: &RadialField, h: f64, cfg: &SolverConfig) -> Result<StepOutcome> {
    itd_step_at(u_k, h, cfg, 0)
}

fn itd_step_at(u_k: &RadialField, h: f64, cfg: &SolverConfig, step: usize) -> Result<StepOutcome> {
    if *u_k.grid() != cfg.grid {
        return Err(Error::GridMismatch("datum and solver grids differ".into()));
    }
    if !(h > 0.0) {
        return Err(Error::Domain(format!("step must be positive, got {h}")));
    }
    let ops = Ops::new(cfg.grid, cfg.s);
    let state = StepState {
        ops: &ops,
        u: u_k.values(),
        h,
        m: cfg.m,
    };
    let scale = ops.l2(u_k.values()).max(NORM_FLOOR);
    let tol = cfg
        .inner_tol
        .max(ROUNDOFF_SAFETY * roundoff_floor(u_k, h, cfg.s, cfg.m));
    let (v, iterations, residual) = match cfg.inner_solver {
        InnerSolver::NewtonCg => newton(&state, scale, tol, cfg.inner_max_iters, step)?,
        InnerSolver::Relaxation => relaxation(&state, scale, tol, cfg.inner_max_iters, step)?,
    };
    let min = v.iter().copied().fold(f64::INFINITY, f64::min).min(0.0);
    let top = u_k.sup_norm();
    if min < -NEGATIVITY_TOL * top {
        return Err(Error::Negativity { step, min });
    }
    let values = v.into_iter().map(|x| x.max(0.0)).collect();
    Ok(StepOutcome {
        field: RadialField::from_raw(cfg.grid, values),
        iterations,
        residual,
        tolerance: tol,
        min_before_projection: min,
    })
}

/// Multiple of [`roundoff_floor`] accepted as a converged residual.
pub const ROUNDOFF_SAFETY: f64 = 16.0;

/// Relative `L²(dμ)` step residual left by rounding alone. A transform
/// perturbs `v = u sinh r` by about `ε · rms(coefficients)` at every node;
/// in `L²(dμ)` the `sinh` factors cancel, so the floor is of order
/// `ε (‖u‖ + h ‖(-Δ)^s u^m‖) / ‖u‖` whatever the truncation radius.
pub fn roundoff_floor(u: &RadialField, h: f64, s: f64, m: f64) -> f64 {
    let norm = u.lp_norm(2.0);
    if norm == 0.0 {
        return 0.0;
    }
    let flux = frac_power(&u.signed_pow(m), s, Symbol::Discrete).lp_norm(2.0);
    2f64.sqrt() * f64::EPSILON * (norm + h * flux) / norm
}

fn newton(state: &StepState, scale: f64, tol: f64, max_iters: usize, step: usize) -> Result<(Vec<f64>, usize, f64)> {
    let ops = state.ops;
    let h = state.h;
    let m = state.m;
    let mut v = state.u.to_vec();
    let mut f = state.residual(&v);
    let mut res = ops.l2(&f) / scale;
    let mut psi = state.objective(&v);
    let mut best = res;
    let mut stalled = 0;
    for it in 0..max_iters {
        if res <= tol {
            return Ok((v, it, res));
        }
        // Rounding noise sets a floor on the residual; stop once progress stops.
        if res < 0.5 * best {
            best = res;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > STALL_LIMIT {
                return Err(Error::InnerNonconvergence {
                    step,
                    residual: res,
                    iterations: it,
                });
            }
        }
        // Gradient of Ψ in the dμ pairing: (-Δ)^{-s} F / h.
        let g: Vec<f64> = ops.apply(&f, &ops.b).iter().map(|x| x / h).collect();
        let diag: Vec<f64> = v.iter().map(|x| m * x.abs().powf(m - 1.0)).collect();
        let eta = res.sqrt().clamp(1e-8, 0.1);
        let delta = pcg(ops, h, &diag, &g, eta);
        let slope = ops.dot(&g, &delta);

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let trial: Vec<f64> = v.iter().zip(&delta).map(|(v, d)| v + alpha * d).collect();
            let psi_trial = state.objective(&trial);
            let slack = 1e-13 * psi.abs();
            if psi_trial <= psi + 1e-4 * alpha * slope + slack {
                accepted = Some((trial, psi_trial));
                break;
            }
            alpha *= 0.5;
        }
        let Some((next, psi_next)) = accepted else {
            return Err(Error::InnerNonconvergence {
                step,
                residual: res,
                iterations: it,
            });
        };
        v = next;
        psi = psi_next;
        f = state.residual(&v);
        res = ops.l2(&f) / scale;
    }
    if res <= tol {
        return Ok((v, max_iters, res));
    }
    Err(Error::InnerNonconvergence {
        step,
        residual: res,
        iterations: max_iters,
    })
}

/// Solves `((-Δ)^{-s}/h + D) x = -g` by conjugate gradients in the `dμ`
/// inner product, preconditioned by `h (-Δ)^s`.
fn pcg(ops: &Ops, h: f64, diag: &[f64], g: &[f64], eta: f64) -> Vec<f64> {
    let n = g.len();
    let precond = |r: &[f64]| -> Vec<f64> { ops.apply(r, &ops.a).iter().map(|x| h * x).collect() };
    let mut x = vec![0.0; n];
    let mut r: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = ops.dot(&r, &z);
    let rz0 = rz;
    if rz0 <= 0.0 {
        return x;
    }
    for _ in 0..1000 {
        let bp = ops.apply(&p, &ops.b);
        let q: Vec<f64> = bp
            .iter()
            .zip(&p)
            .zip(diag)
            .map(|((b, p), d)| b / h + d * p)
            .collect();
        let pq = ops.dot(&p, &q);
        if pq <= 0.0 {
            break;
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        z = precond(&r);
        let rz_new = ops.dot(&r, &z);
        if rz_new <= eta * eta * rz0 {
            break;
        }
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    x
}

fn relaxation(state: &StepState, scale: f64, tol: f64, max_iters: usize, step: usize) -> Result<(Vec<f64>, usize, f64)> {
    let ops = state.ops;
    let mut v = state.u.to_vec();
    let mut res = f64::INFINITY;
    for it in 0..max_iters {
        let f = state.residual(&v);
        res = ops.l2(&f) / scale;
        if res <= tol {
            return Ok((v, it, res));
        }
        let top = v.iter().copied().fold(0.0_f64, f64::max);
        let c = state.m * top.powf(state.m - 1.0);
        let sym: Vec<f64> = ops.a.iter().map(|a| 1.0 / (1.0 + state.h * c * a)).collect();
        let corr = ops.apply(&f, &sym);
        for (v, c) in v.iter_mut().zip(&corr) {
            *v = (*v - c).max(0.0);
        }
    }
    Err(Error::InnerNonconvergence {
        step,
        residual: res,
        iterations: max_iters,
    })
}

/// Time-stamped snapshots and per-step diagnostics of an evolution.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: SolverConfig,
    pub times: Vec<f64>,
    pub snapshots: Vec<RadialField>,
    pub records: Vec<NormRecord>,
    /// Inner iterations per step (zero for the initial datum).
    pub inner_iterations: Vec<usize>,
    pub boundary_mass_fraction: Vec<f64>,
    pub phi1: Weight,
    pub phi_w: Weight,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn initial(&self) -> &RadialField {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &RadialField {
        self.snapshots.last().expect("trajectory holds the initial datum")
    }

    /// Index of the recorded time closest to `t`.
    pub fn index_near(&self, t: f64) -> usize {
        self.times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// Rebuilds a trajectory from stored snapshots, recomputing records.
    pub fn from_snapshots(config: SolverConfig, times: Vec<f64>, snapshots: Vec<RadialField>) -> Result<Self> {
        if times.len() != snapshots.len() || times.is_empty() {
            return Err(Error::MissingRecords(format!(
                "{} times for {} snapshots",
                times.len(),
                snapshots.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times[0] != 0.0 {
            return Err(Error::MissingRecords("times must start at 0 and increase".into()));
        }
        let (phi1, phi_w) = weights(&config)?;
        let mut records = Vec::with_capacity(snapshots.len());
        let mut boundary = Vec::with_capacity(snapshots.len());
        for u in &snapshots {
            if *u.grid() != config.grid {
                return Err(Error::GridMismatch("snapshot grid differs from config".into()));
            }
            records.push(measure(u, config.m, config.s, &phi1.profile, &phi_w.profile)?);
            boundary.push(u.boundary_mass_fraction());
        }
        let n = snapshots.len();
        Ok(Self {
            config,
            times,
            snapshots,
            records,
            inner_iterations: vec![0; n],
            boundary_mass_fraction: boundary,
            phi1,
            phi_w,
        })
    }
}

/// Ground state and canonical W-class weight for a solver configuration.
pub fn weights(cfg: &SolverConfig) -> Result<(Weight, Weight)> {
    let phi1 = ground_state(cfg.grid);
    let phi_w = make_w_weight(cfg.grid, cfg.s, &canonical_bump(cfg.grid))?;
    Ok((phi1, phi_w))
}

/// Boundary-mass fraction above which the truncation warning fires.
pub const BOUNDARY_MASS_WARN: f64 = 1e-10;

/// Runs the implicit scheme over the configured partition.
pub fn evolve(u0: &RadialField, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if *u0.grid() != cfg.grid {
        return Err(Error::GridMismatch("datum and solver grids differ".into()));
    }
    if u0.min() < 0.0 {
        return Err(Error::Domain("initial datum must be nonnegative".into()));
    }
    check_resolution(&to_spectral(u0), cfg.strict)?;
    let (phi1, phi_w) = weights(cfg)?;
    let times = cfg.times();
    let mut snapshots = Vec::with_capacity(times.len());
    let mut records = Vec::with_capacity(times.len());
    let mut iterations = Vec::with_capacity(times.len());
    let mut boundary = Vec::with_capacity(times.len());
    let mut warned = false;

    let mut push = |u: RadialField, iters: usize| -> Result<RadialField> {
        records.push(measure(&u, cfg.m, cfg.s, &phi1.profile, &phi_w.profile)?);
        let b = u.boundary_mass_fraction();
        if b > BOUNDARY_MASS_WARN && !warned {
            log::warn!("boundary mass fraction {b:.2e} exceeds {BOUNDARY_MASS_WARN:.0e}; truncation radius may be too small");
            warned = true;
        }
        boundary.push(b);
        iterations.push(iters);
        Ok(u)
    };

    let mut u = push(u0.clone(), 0)?;
    for k in 0..cfg.n_steps {
        let h = times[k + 1] - times[k];
        let out = itd_step_at(&u, h, cfg, k + 1)?;
        snapshots.push(u);
        u = push(out.field, out.iterations)?;
    }
    snapshots.push(u);
    Ok(Trajectory {
        config: cfg.clone(),
        times,
        snapshots,
        records,
        inner_iterations: iterations,
        boundary_mass_fraction: boundary,
        phi1,
        phi_w,
    })
}

/// Discrete EVI residual per step against the comparison state `y`:
/// `(‖u_{k+1}-y‖² - ‖u_k-y‖²)/(2h) + E_m[u_{k+1}] - E_m[y]` in `H^{-s}`.
pub fn evi_residual(traj: &Trajectory, y: &RadialField) -> Result<Vec<f64>> {
    let cfg = &traj.config;
    if *y.grid() != cfg.grid {
        return Err(Error::GridMismatch("comparison state lives on another grid".into()));
    }
    let ey = crate::spectral::energy(y, cfg.m);
    let dist: Vec<f64> = traj
        .snapshots
        .iter()
        .map(|u| u.sub(y).map(|d| hs_norm_sq(&d, cfg.s)))
        .collect::<Result<_>>()?;
    Ok((0..traj.snapshots.len() - 1)
        .map(|k| {
            let h = traj.times[k + 1] - traj.times[k];
            (dist[k + 1] - dist[k]) / (2.0 * h) + traj.records[k + 1].energy_m - ey
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::frac_laplacian;

    fn grid() -> RadialGrid {
        RadialGrid::new(10.0, 511).unwrap()
    }

    fn bump(grid: RadialGrid, height: f64) -> RadialField {
        RadialField::from_fn(grid, |r| height * (-r * r / 0.25).exp())
    }

    #[test]
    fn config_validation() {
        let g = grid();
        assert!(SolverConfig::new(1.0, 0.5, 1.0, 10, g).is_err());
        assert!(SolverConfig::new(2.0, 1.0, 1.0, 10, g).is_err());
        assert!(SolverConfig::new(2.0, 0.5, 0.0, 10, g).is_err());
        assert!(SolverConfig::new(2.0, 0.5, 1.0, 0, g).is_err());
        let cfg = SolverConfig::new(2.0, 0.5, 1.0, 10, g).unwrap();
        assert!((cfg.step() - 0.1).abs() < 1e-15);
        assert!((cfg.theta1() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn schedules() {
        let w = decade_schedule(1e-3, 1.0, 10);
        assert_eq!(w.len(), 4);
        let cfg = SolverConfig::new(2.0, 0.5, 1.0, 1, grid()).unwrap().with_schedule(w).unwrap();
        let t = cfg.times();
        assert_eq!(t.len(), 41);
        assert!((t[10] - 1e-3).abs() < 1e-18 && (t[40] - 1.0).abs() < 1e-15);
        assert!(t.windows(2).all(|p| p[1] > p[0]));
        let bad = vec![Window { end: 1.0, steps: 2 }, Window { end: 0.5, steps: 2 }];
        assert!(SolverConfig::new(2.0, 0.5, 1.0, 1, grid()).unwrap().with_schedule(bad).is_err());
    }

    #[test]
    fn truncation() {
        let g = grid();
        let u = bump(g, 5.0);
        let t2 = truncate_datum(&u, 2).unwrap();
        assert!((t2.max() - 2.0).abs() < 1e-15);
        let t9 = truncate_datum(&u, 9).unwrap();
        assert_eq!(t9.values()[..400], u.values()[..400]);
        let t3 = truncate_datum(&u, 3).unwrap();
        for ((a, b), c) in t2.values().iter().zip(t3.values()).zip(u.values()) {
            assert!(a <= b && b <= c);
        }
        assert!(truncate_datum(&u, 0).is_err());
    }

    #[test]
    fn zero_step_is_zero() {
        let g = grid();
        let cfg = SolverConfig::new(2.0, 0.5, 1.0, 10, g).unwrap();
        let out = itd_step(&RadialField::zeros(g), 0.1, &cfg).unwrap();
        assert_eq!(out.field.sup_norm(), 0.0);
    }

    #[test]
    fn step_solves_the_elliptic_problem() {
        let g = grid();
        for solver in [InnerSolver::NewtonCg, InnerSolver::Relaxation] {
            let mut cfg = SolverConfig::new(2.0, 0.5, 1.0, 10, g).unwrap();
            cfg.inner_solver = solver;
            cfg.inner_max_iters = 2000;
            let u = bump(g, 1.0);
            let out = itd_step(&u, 1e-2, &cfg).unwrap();
            let v = &out.field;
            let lhs = v.add(&frac_laplacian(&v.signed_pow(2.0), 0.5).unwrap().scale(1e-2)).unwrap();
            let res = lhs.sub(&u).unwrap().lp_norm(1.0) / u.lp_norm(1.0);
            assert!(res < 1e-9, "{solver:?}: {res}");
        }
    }

    #[test]
    fn step_matches_explicit_predictor_to_second_order() {
        let g = grid();
        let cfg = SolverConfig::new(2.0, 0.5, 1.0, 10, g).unwrap();
        let u = bump(g, 1.0);
        let explicit = |h: f64| u.sub(&frac_laplacian(&u.signed_pow(2.0), 0.5).unwrap().scale(h)).unwrap();
        let err = |h: f64| {
            let v = itd_step(&u, h, &cfg).unwrap().field;
            v.sub(&explicit(h)).unwrap().lp_norm(2.0)
        };
        let ratio = err(1e-4) / err(5e-5);
        assert!((ratio - 4.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn step_preserves_order() {
        let g = grid();
        let cfg = SolverConfig::new(2.0, 0.5, 1.0, 10, g).unwrap();
        let u = bump(g, 1.0);
        let w = bump(g, 1.5);
        let a = itd_step(&u, 0.05, &cfg).unwrap().field;
        let b = itd_step(&w, 0.05, &cfg).unwrap().field;
        let worst = a.values().iter().zip(b.values()).map(|(a, b)| a - b).fold(f64::MIN, f64::max);
        assert!(worst <= 1e-8 * b.sup_norm(), "{worst}");
    }

    #[test]
    fn zero_datum_evolves_to_zero() {
        let g = grid();
        let cfg = SolverConfig::new(2.0, 0.5, 0.1, 5, g).unwrap();
        let traj = evolve(&RadialField::zeros(g), &cfg).unwrap();
        assert_eq!(traj.len(), 6);
        assert!(traj.records.iter().all(|r| *r == NormRecord::default()));
    }

    #[test]
    fn evolution_dissipates() {
        let g = grid();
        let cfg = SolverConfig::new(2.0, 0.5, 0.2, 20, g).unwrap();
        let traj = evolve(&bump(g, 2.0), &cfg).unwrap();
        for w in traj.records.windows(2) {
            assert!(w[1].l1 <= w[0].l1 * (1.0 + 1e-10));
            assert!(w[1].energy_m <= w[0].energy_m);
        }
        let evi = evi_residual(&traj, &bump(g, 1.0)).unwrap();
        assert!(evi.iter().all(|e| *e <= 1e-8), "{evi:?}");
    }

    #[test]
    fn negative_datum_is_rejected() {
        let g = grid();
        let cfg = SolverConfig::new(2.0, 0.5, 0.1, 5, g).unwrap();
        assert!(evolve(&bump(g, -1.0), &cfg).is_err());
    }
}
