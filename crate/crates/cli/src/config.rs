//! Run configuration files.

use std::path::{Path, PathBuf};

use fpme_core::solver::{decade_schedule, SolverConfig};
use fpme_core::spectral::{RadialField, RadialGrid};
use fpme_core::verify::{SmoothingWindows, Suite};
use serde::{Deserialize, Serialize};

use crate::exit::Failure;

/// Gaussian bump `mass · exp(-((r - center)/width)²) / Z`, normalized to
/// the given grid mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    #[serde(default)]
    pub center: f64,
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default = "one")]
    pub mass: f64,
}

fn default_width() -> f64 {
    0.5
}

fn one() -> f64 {
    1.0
}

impl Default for Bump {
    fn default() -> Self {
        Self {
            center: 0.0,
            width: default_width(),
            mass: 1.0,
        }
    }
}

impl Bump {
    fn validate(&self) -> Result<(), String> {
        if !(self.center >= 0.0 && self.center.is_finite()) {
            return Err(format!("datum.center must be nonnegative, got {}", self.center));
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(format!("datum.width must be positive, got {}", self.width));
        }
        if !(self.mass >= 0.0 && self.mass.is_finite()) {
            return Err(format!("datum.mass must be nonnegative, got {}", self.mass));
        }
        Ok(())
    }

    pub fn field(&self, grid: RadialGrid) -> RadialField {
        let shape = RadialField::from_fn(grid, |r| (-((r - self.center) / self.width).powi(2)).exp());
        let z = shape.integral();
        if self.mass == 0.0 || z == 0.0 {
            RadialField::zeros(grid)
        } else {
            shape.scale(self.mass / z)
        }
    }
}

/// Bump family for the smoothing checks, run on a decade-graded schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Family {
    #[serde(default)]
    pub center: f64,
    #[serde(default = "family_width")]
    pub width: f64,
    #[serde(default = "family_masses")]
    pub masses: Vec<f64>,
    /// End of the first schedule window.
    #[serde(default = "family_first")]
    pub first_window: f64,
    #[serde(default = "steps_per_window")]
    pub steps_per_window: usize,
}

fn family_width() -> f64 {
    0.03
}

fn family_masses() -> Vec<f64> {
    vec![0.1, 1.0, 10.0]
}

fn family_first() -> f64 {
    1e-4
}

fn steps_per_window() -> usize {
    50
}

impl Default for Family {
    fn default() -> Self {
        Self {
            center: 0.0,
            width: family_width(),
            masses: family_masses(),
            first_window: family_first(),
            steps_per_window: steps_per_window(),
        }
    }
}

impl Family {
    pub fn bump(&self, mass: f64) -> Bump {
        Bump {
            center: self.center,
            width: self.width,
            mass,
        }
    }

    /// Solver configuration on the graded schedule ending at `horizon`.
    pub fn solver(&self, base: &SolverConfig, horizon: f64) -> Result<SolverConfig, String> {
        if !(self.first_window > 0.0 && self.first_window < horizon) {
            return Err(format!(
                "family.first_window must lie in (0, {horizon}), got {}",
                self.first_window
            ));
        }
        base.clone()
            .with_schedule(decade_schedule(self.first_window, horizon, self.steps_per_window))
            .map_err(|e| e.to_string())
    }
}

/// Settings read by `verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySettings {
    #[serde(default)]
    pub family: Family,
    /// Horizon of an extra run on a graded schedule used for the
    /// large-time log regime; without it that check reports a short horizon.
    #[serde(default)]
    pub long_horizon: Option<f64>,
    #[serde(default = "lattice")]
    pub lattice: Vec<f64>,
    /// Time pairs of the weak dual identity; default `(0, T/2)`, `(T/4, T)`, `(0, T)`.
    #[serde(default)]
    pub identity_pairs: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    pub windows: SmoothingWindows,
    /// Second datum of the contraction pair is this multiple of the first.
    #[serde(default = "two")]
    pub comparison_factor: f64,
    /// Verify a stored `evolve` output instead of recomputing the main run.
    #[serde(default)]
    pub trajectory: Option<PathBuf>,
}

fn lattice() -> Vec<f64> {
    vec![0.1, 0.2, 0.4]
}

fn two() -> f64 {
    2.0
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            family: Family::default(),
            long_horizon: None,
            lattice: lattice(),
            identity_pairs: None,
            windows: SmoothingWindows::default(),
            comparison_factor: two(),
            trajectory: None,
        }
    }
}

/// Cartesian sweep lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSettings {
    pub m: Vec<f64>,
    pub s: Vec<f64>,
    pub mass: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Space dimension; the evolution path supports `N = 3` only.
    #[serde(rename = "N", default = "three")]
    pub dim: u32,
    pub solver: SolverConfig,
    #[serde(default)]
    pub datum: Bump,
    /// Write every `snapshot_stride`-th snapshot (the last one always).
    #[serde(default = "stride")]
    pub snapshot_stride: usize,
    #[serde(default)]
    pub suite: Option<Suite>,
    #[serde(default)]
    pub verify: VerifySettings,
    #[serde(default)]
    pub sweep: Option<SweepSettings>,
}

fn three() -> u32 {
    3
}

fn stride() -> usize {
    10
}

impl RunConfig {
    /// Parses and validates a config file.
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|f| f.context(&path.display().to_string()))
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            Failure::config(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        cfg.validate().map_err(Failure::config)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.dim != 3 {
            return Err(format!("evolution runs need N = 3, got N = {}", self.dim));
        }
        self.solver.validate().map_err(|e| e.to_string())?;
        self.datum.validate()?;
        if self.snapshot_stride == 0 {
            return Err("snapshot_stride must be at least 1".into());
        }
        let v = &self.verify;
        let f = &v.family;
        f.bump(1.0).validate()?;
        if f.masses.is_empty() || f.masses.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
            return Err("verify.family.masses must be a nonempty list of positive masses".into());
        }
        if f.steps_per_window == 0 {
            return Err("verify.family.steps_per_window must be at least 1".into());
        }
        f.solver(&self.solver, self.solver.horizon)?;
        if let Some(t) = v.long_horizon {
            if !(t > self.solver.horizon && t.is_finite()) {
                return Err(format!("verify.long_horizon must exceed the horizon, got {t}"));
            }
        }
        let horizon = self.solver.horizon;
        if v.lattice.is_empty() || v.lattice.iter().any(|t| !(*t > 0.0 && *t <= horizon)) {
            return Err(format!("verify.lattice times must lie in (0, {horizon}]"));
        }
        if let Some(pairs) = &v.identity_pairs {
            if pairs.is_empty() || pairs.iter().any(|(a, b)| !(*a >= 0.0 && a < b && *b <= horizon)) {
                return Err(format!("verify.identity_pairs need 0 <= t0 < t1 <= {horizon}"));
            }
        }
        let w = &v.windows;
        if !(w.sup.0 > 0.0 && w.sup.0 < w.sup.1 && w.slope.0 > 0.0 && w.slope.0 < w.slope.1) {
            return Err("verify.windows must be increasing positive intervals".into());
        }
        if !(v.comparison_factor >= 1.0 && v.comparison_factor.is_finite()) {
            return Err(format!(
                "verify.comparison_factor must be at least 1, got {}",
                v.comparison_factor
            ));
        }
        if let Some(sw) = &self.sweep {
            for (name, list) in [("m", &sw.m), ("s", &sw.s), ("mass", &sw.mass)] {
                if list.is_empty() {
                    return Err(format!("sweep.{name} must not be empty"));
                }
            }
            if sw.m.iter().any(|m| !(*m > 1.0 && m.is_finite())) {
                return Err("sweep.m entries must exceed 1".into());
            }
            if sw.s.iter().any(|s| !(*s > 0.0 && *s < 1.0)) {
                return Err("sweep.s entries must lie in (0,1)".into());
            }
            if sw.mass.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
                return Err("sweep.mass entries must be positive".into());
            }
        }
        Ok(())
    }

    /// Time pairs of the weak dual identity.
    pub fn identity_pairs(&self) -> Vec<(f64, f64)> {
        let t = self.solver.horizon;
        self.verify
            .identity_pairs
            .clone()
            .unwrap_or_else(|| vec![(0.0, 0.5 * t), (0.25 * t, t), (0.0, t)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"solver": {"m": 2, "s": 0.5, "horizon": 1, "n_steps": 10,
        "grid": {"r_max": 12, "points": 255}}}"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.dim, 3);
        assert_eq!(cfg.verify.family.masses, vec![0.1, 1.0, 10.0]);
        assert_eq!(cfg.identity_pairs().len(), 3);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("\"n_steps\"", "\"bogus\": 1, \"n_steps\"");
        let err = RunConfig::parse(&text).unwrap_err();
        assert!(err.message.contains("unknown field"), "{}", err.message);
        assert!(err.message.contains("line 1"), "{}", err.message);
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = RunConfig::parse("{\n  \"solver\": ,\n}").unwrap_err();
        assert!(err.message.contains("line 2, column"), "{}", err.message);
        assert_eq!(err.code, crate::exit::CONFIG);
    }

    #[test]
    fn ranges_are_validated() {
        let bad = MINIMAL.replace("\"s\": 0.5", "\"s\": 1.5");
        assert!(RunConfig::parse(&bad).is_err());
        let empty = MINIMAL.replace("}}}", "}}, \"sweep\": {\"m\": [], \"s\": [0.5], \"mass\": [1]}}");
        let err = RunConfig::parse(&empty).unwrap_err();
        assert!(err.message.contains("sweep.m"), "{}", err.message);
        let dim = MINIMAL.replacen('{', "{\"N\": 4, ", 1);
        assert!(RunConfig::parse(&dim).is_err());
    }

    #[test]
    fn bump_has_requested_mass() {
        let g = RadialGrid::new(10.0, 511).unwrap();
        let u = Bump { center: 1.0, width: 0.4, mass: 2.5 }.field(g);
        assert!((u.integral() - 2.5).abs() < 1e-12);
        assert_eq!(Bump { mass: 0.0, ..Bump::default() }.field(g).max(), 0.0);
    }
}
