//! Python bindings: grids and fields, the fractional operators, the Green
//! function, the implicit evolution and the verification suites.
//!
//! Arrays cross the boundary as Python lists of floats; reports and records
//! come back as plain dicts.

use fpme_core::kernels::{self, GreenTable, KernelParams};
use fpme_core::operators::{self, canonical_bump};
use fpme_core::solver::{self, decade_schedule, InnerSolver};
use fpme_core::spectral;
use fpme_core::verify::{self, SmoothingWindows, Suite, SuiteInputs};
use pyo3::create_exception;
use pyo3::exceptions::{PyIndexError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(fpme, FpmeError, PyRuntimeError, "Numerical failure inside the core.");

fn err(e: fpme_core::Error) -> PyErr {
    match e {
        fpme_core::Error::Domain(_) | fpme_core::Error::WeightTail(_) => PyValueError::new_err(e.to_string()),
        other => FpmeError::new_err(other.to_string()),
    }
}

/// Converts any serializable value into Python objects through JSON.
fn to_py<T: Serialize + ?Sized>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| FpmeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Uniform radial grid `r_j = j Δr`, `Δr = r_max / (points + 1)`.
#[pyclass(name = "RadialGrid", module = "fpme", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGrid(spectral::RadialGrid);

#[pymethods]
impl PyGrid {
    #[new]
    fn new(r_max: f64, points: usize) -> PyResult<Self> {
        spectral::RadialGrid::new(r_max, points).map(Self).map_err(err)
    }

    #[getter]
    fn r_max(&self) -> f64 {
        self.0.r_max
    }

    #[getter]
    fn points(&self) -> usize {
        self.0.points
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.0.spacing()
    }

    fn radii(&self) -> Vec<f64> {
        self.0.radii()
    }

    fn __repr__(&self) -> String {
        format!("RadialGrid(r_max={}, points={})", self.0.r_max, self.0.points)
    }
}

/// Radial function sampled on a grid.
#[pyclass(name = "RadialField", module = "fpme", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyField(spectral::RadialField);

#[pymethods]
impl PyField {
    #[new]
    fn new(grid: &PyGrid, values: Vec<f64>) -> PyResult<Self> {
        spectral::RadialField::new(grid.0, values).map(Self).map_err(err)
    }

    /// Gaussian bump around `center` scaled to the given mass.
    #[staticmethod]
    #[pyo3(signature = (grid, width, mass, center = 0.0))]
    fn bump(grid: &PyGrid, width: f64, mass: f64, center: f64) -> PyResult<Self> {
        if !(width > 0.0 && mass >= 0.0 && center >= 0.0) {
            return Err(PyValueError::new_err("need width > 0, mass >= 0, center >= 0"));
        }
        let shape = spectral::RadialField::from_fn(grid.0, |r| (-((r - center) / width).powi(2)).exp());
        let z = shape.integral();
        Ok(Self(if z > 0.0 { shape.scale(mass / z) } else { shape }))
    }

    /// Smooth compactly supported test function used by the weak identity.
    #[staticmethod]
    fn canonical_bump(grid: &PyGrid) -> Self {
        Self(canonical_bump(grid.0))
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(*self.0.grid())
    }

    fn values(&self) -> Vec<f64> {
        self.0.values().to_vec()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// `∫ u dμ`.
    fn integral(&self) -> f64 {
        self.0.integral()
    }

    fn pairing(&self, other: &PyField) -> PyResult<f64> {
        self.0.pairing(&other.0).map_err(err)
    }

    /// Norm in `L^p(dμ)`; pass `float("inf")` for the sup norm.
    fn lp_norm(&self, p: f64) -> f64 {
        self.0.lp_norm(p)
    }

    /// `(-Δ)^s u`, spectrally or through the heat-semigroup integral.
    #[pyo3(signature = (s, method = "spectral", quad_tol = 1e-10))]
    fn frac_laplacian(&self, py: Python<'_>, s: f64, method: &str, quad_tol: f64) -> PyResult<Self> {
        let u = &self.0;
        let res = match method {
            "spectral" => operators::frac_laplacian(u, s),
            "subordination" => py.detach(|| operators::frac_laplacian_subordination(u, s, quad_tol)),
            other => return Err(PyValueError::new_err(format!("unknown method '{other}'"))),
        };
        res.map(Self).map_err(err)
    }

    /// `(-Δ)^{-s} u`.
    fn inv_frac_laplacian(&self, s: f64) -> PyResult<Self> {
        operators::inv_frac_laplacian(&self.0, s).map(Self).map_err(err)
    }

    /// `e^{tΔ} u`.
    fn heat(&self, t: f64) -> PyResult<Self> {
        operators::heat_semigroup(&self.0, t).map(Self).map_err(err)
    }

    /// Measure-weighted norms and the energy of order `m`.
    fn norms(&self, py: Python<'_>, s: f64, m: f64) -> PyResult<Py<PyAny>> {
        let g = *self.0.grid();
        let phi1 = operators::ground_state(g);
        let psi = canonical_bump(g);
        let w = operators::make_w_weight(g, s, &psi).map_err(err)?;
        let rec = spectral::measure(&self.0, m, s, &phi1.profile, &w.profile).map_err(err)?;
        to_py(py, &rec)
    }
}

/// Solver settings for the implicit time discretization.
#[pyclass(name = "SolverConfig", module = "fpme", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyConfig(solver::SolverConfig);

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (m, s, horizon, n_steps, grid, inner_tol = None, inner_max_iters = None, inner_solver = "newton_cg", strict = false))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        m: f64,
        s: f64,
        horizon: f64,
        n_steps: usize,
        grid: &PyGrid,
        inner_tol: Option<f64>,
        inner_max_iters: Option<usize>,
        inner_solver: &str,
        strict: bool,
    ) -> PyResult<Self> {
        let mut cfg = solver::SolverConfig::new(m, s, horizon, n_steps, grid.0).map_err(err)?;
        if let Some(tol) = inner_tol {
            cfg.inner_tol = tol;
        }
        if let Some(n) = inner_max_iters {
            cfg.inner_max_iters = n;
        }
        cfg.inner_solver = match inner_solver {
            "newton_cg" => InnerSolver::NewtonCg,
            "relaxation" => InnerSolver::Relaxation,
            other => return Err(PyValueError::new_err(format!("unknown inner solver '{other}'"))),
        };
        cfg.strict = strict;
        cfg.validate().map_err(err)?;
        Ok(Self(cfg))
    }

    /// Parses the `solver` section of a run config.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let cfg: solver::SolverConfig = serde_json::from_str(text)
            .map_err(|e| PyValueError::new_err(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        cfg.validate().map_err(err)?;
        Ok(Self(cfg))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(|e| FpmeError::new_err(e.to_string()))
    }

    /// Copy on a schedule with `steps_per_window` equal steps in each decade
    /// `(0, first_end]`, `(first_end, 10 first_end]`, ... up to the horizon.
    fn with_decade_schedule(&self, first_end: f64, steps_per_window: usize) -> PyResult<Self> {
        let windows = decade_schedule(first_end, self.0.horizon, steps_per_window);
        self.0.clone().with_schedule(windows).map(Self).map_err(err)
    }

    fn times(&self) -> Vec<f64> {
        self.0.times()
    }

    #[getter]
    fn m(&self) -> f64 {
        self.0.m
    }

    #[getter]
    fn s(&self) -> f64 {
        self.0.s
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.0.horizon
    }

    #[getter]
    fn n_steps(&self) -> usize {
        self.0.n_steps
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(self.0.grid)
    }

    fn __repr__(&self) -> String {
        format!(
            "SolverConfig(m={}, s={}, horizon={}, n_steps={})",
            self.0.m, self.0.s, self.0.horizon, self.0.n_steps
        )
    }
}

/// Snapshots and per-step diagnostics of an evolution.
#[pyclass(name = "Trajectory", module = "fpme", frozen)]
struct PyTrajectory(solver::Trajectory);

#[pymethods]
impl PyTrajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.0.times.clone()
    }

    #[getter]
    fn config(&self) -> PyConfig {
        PyConfig(self.0.config.clone())
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn snapshot(&self, k: usize) -> PyResult<PyField> {
        self.0
            .snapshots
            .get(k)
            .cloned()
            .map(PyField)
            .ok_or_else(|| PyIndexError::new_err(format!("snapshot {k} out of range")))
    }

    /// All snapshot values, one list per recorded time.
    fn values(&self) -> Vec<Vec<f64>> {
        self.0.snapshots.iter().map(|u| u.values().to_vec()).collect()
    }

    /// Per-step rows with the same columns as `trajectory.csv`.
    fn records(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &fpme_core::io::trajectory_rows(&self.0))
    }

    fn phi1(&self) -> PyField {
        PyField(self.0.phi1.profile.clone())
    }

    fn phi_w(&self) -> PyField {
        PyField(self.0.phi_w.profile.clone())
    }

    /// Writes the trajectory directory read back by `load`.
    #[pyo3(signature = (dir, stride = 10))]
    fn save(&self, dir: std::path::PathBuf, stride: usize) -> PyResult<()> {
        std::fs::create_dir_all(&dir).map_err(|e| FpmeError::new_err(format!("{}: {e}", dir.display())))?;
        fpme_core::io::write_trajectory_dir(&dir, &self.0, stride).map_err(err)
    }

    #[staticmethod]
    fn load(dir: std::path::PathBuf) -> PyResult<Self> {
        fpme_core::io::read_trajectory_dir(&dir).map(Self).map_err(err)
    }
}

/// Runs the implicit scheme from `u0`.
#[pyfunction]
fn evolve(py: Python<'_>, u0: &PyField, config: &PyConfig) -> PyResult<PyTrajectory> {
    let (u, c) = (&u0.0, &config.0);
    py.detach(|| solver::evolve(u, c)).map(PyTrajectory).map_err(err)
}

/// Green function of `(-Δ)^s` on `H^dim` at radius `r`.
///
/// Returns `(value, quadrature_error, mode)` with `mode` either `"exact"`
/// or `"envelope"`.
#[pyfunction]
#[pyo3(signature = (r, dim = 3, s = 0.5))]
fn green_value(r: f64, dim: u32, s: f64) -> PyResult<(f64, f64, String)> {
    let params = KernelParams::new(dim, s).map_err(err)?;
    let g = kernels::green_value(r, &params).map_err(err)?;
    let mode = match g.mode {
        kernels::GreenMode::Exact => "exact",
        kernels::GreenMode::Envelope => "envelope",
    };
    Ok((g.value, g.quad_error, mode.to_string()))
}

/// Log-spaced Green table as a dict with `radii`, `values`, `quad_errors`.
#[pyfunction]
#[pyo3(signature = (r_min, r_max, points, dim = 3, s = 0.5))]
fn green_table(py: Python<'_>, r_min: f64, r_max: f64, points: usize, dim: u32, s: f64) -> PyResult<Py<PyAny>> {
    let params = KernelParams::new(dim, s).map_err(err)?;
    let table = py
        .detach(|| GreenTable::log_spaced(&params, r_min, r_max, points))
        .map_err(err)?;
    to_py(py, &table)
}

/// Fitted near- and far-field constants of the Green function.
#[pyfunction]
#[pyo3(signature = (dim = 3, s = 0.5))]
fn green_asymptotics(py: Python<'_>, dim: u32, s: f64) -> PyResult<Py<PyAny>> {
    let params = KernelParams::new(dim, s).map_err(err)?;
    let fit = py.detach(|| kernels::green_asymptotics(&params)).map_err(err)?;
    to_py(py, &fit)
}

/// `(4πt)^{-3/2} e^{-t} (r / sinh r) e^{-r²/4t}`.
#[pyfunction]
fn heat_kernel_h3(t: f64, r: f64) -> PyResult<f64> {
    kernels::heat_kernel_h3(t, r).map_err(err)
}

/// Runs a verification suite and returns one report dict per check.
///
/// `family` defaults to `[main]`, `partner` to `main`, `long` to `main`.
#[pyfunction]
#[pyo3(signature = (suite, main, family = None, long = None, partner = None, lattice = None, identity_pairs = None))]
#[allow(clippy::too_many_arguments)]
fn run_suite(
    py: Python<'_>,
    suite: &str,
    main: PyRef<'_, PyTrajectory>,
    family: Option<Vec<PyRef<'_, PyTrajectory>>>,
    long: Option<PyRef<'_, PyTrajectory>>,
    partner: Option<PyRef<'_, PyTrajectory>>,
    lattice: Option<Vec<f64>>,
    identity_pairs: Option<Vec<(f64, f64)>>,
) -> PyResult<Py<PyAny>> {
    let suite: Suite = suite.parse().map_err(err)?;
    let main = &main.0;
    let t = main.config.horizon;
    let family: Vec<&solver::Trajectory> = match &family {
        Some(list) if !list.is_empty() => list.iter().map(|r| &r.0).collect(),
        _ => vec![main],
    };
    let inputs = SuiteInputs {
        main,
        family,
        long: long.as_ref().map(|r| &r.0),
        pair: (main, partner.as_ref().map_or(main, |r| &r.0)),
        psi: canonical_bump(main.config.grid),
        lattice: lattice.unwrap_or_else(|| vec![0.25 * t, 0.5 * t, t]),
        identity_pairs: identity_pairs.unwrap_or_else(|| vec![(0.0, 0.5 * t), (0.25 * t, t), (0.0, t)]),
        windows: SmoothingWindows::default(),
        ps: vec![1.0, 2.0, 4.0, f64::INFINITY],
    };
    let reports = verify::run_suite(suite, &inputs);
    to_py(py, &reports)
}

#[pymodule]
pub fn fpme(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FpmeError", m.py().get_type::<FpmeError>())?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(green_value, m)?)?;
    m.add_function(wrap_pyfunction!(green_table, m)?)?;
    m.add_function(wrap_pyfunction!(green_asymptotics, m)?)?;
    m.add_function(wrap_pyfunction!(heat_kernel_h3, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    Ok(())
}
