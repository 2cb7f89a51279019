//! Radial fields on `H³` and the sinh-conjugated sine transform.
//!
//! A radial function `u` is stored at interior nodes `r_j = jΔr`,
//! `j = 1..M`, with `Δr = r_max / (M + 1)`. Writing `v = u · sinh r` turns
//! the radial Laplace-Beltrami operator into `v'' - v`, so on the truncated
//! interval with Dirichlet ends the sine modes `sin(λ_k r)`,
//! `λ_k = kπ / r_max`, diagonalize `-Δ` with eigenvalues `λ_k² + 1`.
//! Any spectral multiplier `φ(-Δ)` is then exact up to rounding.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform radial grid on `(0, r_max)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub r_max: f64,
    pub points: usize,
}

impl RadialGrid {
    pub const MIN_POINTS: usize = 16;

    pub fn new(r_max: f64, points: usize) -> Result<Self> {
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::Domain(format!("r_max must be positive and finite, got {r_max}")));
        }
        if points < Self::MIN_POINTS {
            return Err(Error::Domain(format!(
                "grid needs at least {} points, got {points}",
                Self::MIN_POINTS
            )));
        }
        Ok(Self { r_max, points })
    }

    pub fn spacing(&self) -> f64 {
        self.r_max / (self.points + 1) as f64
    }

    /// Radius of the `j`-th stored node (zero based), `(j + 1) Δr`.
    pub fn radius(&self, j: usize) -> f64 {
        (j + 1) as f64 * self.spacing()
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.radius(j)).collect()
    }

    /// Sine-mode frequencies `λ_k = kπ / r_max`, `k = 1..M`.
    pub fn frequencies(&self) -> Vec<f64> {
        (1..=self.points).map(|k| k as f64 * PI / self.r_max).collect()
    }

    /// Volume weights `4π Δr sinh² r_j` of the composite trapezoid rule.
    pub fn volume_weights(&self) -> Arc<Vec<f64>> {
        self.tables().weights.clone()
    }

    fn key(&self) -> (u64, usize) {
        (self.r_max.to_bits(), self.points)
    }

    pub(crate) fn tables(&self) -> Arc<GridTables> {
        type Cache = Mutex<HashMap<(u64, usize), Arc<GridTables>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("grid table cache poisoned");
        guard
            .entry(self.key())
            .or_insert_with(|| Arc::new(GridTables::new(self)))
            .clone()
    }
}

pub(crate) struct GridTables {
    pub sinh: Vec<f64>,
    pub weights: Arc<Vec<f64>>,
    pub discrete: Arc<Vec<f64>>,
    pub continuum: Arc<Vec<f64>>,
    fft: Arc<dyn Fft<f64>>,
}

impl GridTables {
    fn new(grid: &RadialGrid) -> Self {
        let dr = grid.spacing();
        let sinh: Vec<f64> = grid.radii().iter().map(|r| r.sinh()).collect();
        let weights = sinh.iter().map(|s| 4.0 * PI * dr * s * s).collect();
        let fft = FftPlanner::new().plan_fft_forward(2 * (grid.points + 1));
        let kappa = 2.0 * (dr.cosh() - 1.0) / (dr * dr);
        let freqs = grid.frequencies();
        let discrete = freqs
            .iter()
            .map(|l| 4.0 / (dr * dr) * (0.5 * l * dr).sin().powi(2) + kappa)
            .collect();
        let continuum = freqs.iter().map(|l| l * l + 1.0).collect();
        Self {
            sinh,
            weights: Arc::new(weights),
            discrete: Arc::new(discrete),
            continuum: Arc::new(continuum),
            fft,
        }
    }

    /// Unnormalized DST-I: `S_k = Σ_j x_j sin(π j k / (M + 1))`.
    fn dst(&self, x: &[f64]) -> Vec<f64> {
        let m = x.len();
        let n = 2 * (m + 1);
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for (j, &v) in x.iter().enumerate() {
            buf[j + 1].re = v;
            buf[n - 1 - j].re = -v;
        }
        self.fft.process(&mut buf);
        buf[1..=m].iter().map(|c| -0.5 * c.im).collect()
    }
}

/// Eigenvalue map used for `-Δ` on the sine modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symbol {
    /// `(4/Δr²) sin²(λΔr/2) + κ` with `κ = 2(cosh Δr - 1)/Δr²`: the exact
    /// spectrum of the three-point Laplace-Beltrami stencil in `v = u sinh r`.
    /// Constants are annihilated in the interior and every fractional power
    /// has nonpositive off-diagonal entries, so the discrete semigroups are
    /// positivity preserving and L¹ accretive.
    #[default]
    Discrete,
    /// `λ² + 1`, the continuum eigenvalue map.
    Continuum,
}

/// Eigenvalues of `-Δ` on the grid's sine modes.
pub fn laplacian_symbol(grid: &RadialGrid, kind: Symbol) -> Arc<Vec<f64>> {
    let tab = grid.tables();
    match kind {
        Symbol::Discrete => tab.discrete.clone(),
        Symbol::Continuum => tab.continuum.clone(),
    }
}

/// A radial function sampled on the interior nodes of a [`RadialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    grid: RadialGrid,
    values: Vec<f64>,
}

impl RadialField {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.points {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}-point grid",
                values.len(),
                grid.points
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("field value at node {j}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: RadialGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.points],
        }
    }

    pub fn from_fn(grid: RadialGrid, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid,
            values: grid.radii().into_iter().map(f).collect(),
        }
    }

    pub(crate) fn from_raw(grid: RadialGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.points);
        Self { grid, values }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self::from_raw(
            self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn positive_part(&self) -> Self {
        self.map(|v| v.max(0.0))
    }

    /// `|u|^{m-1} u`.
    pub fn signed_pow(&self, m: f64) -> Self {
        self.map(|v| v.abs().powf(m - 1.0) * v)
    }

    pub fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "({}, {}) vs ({}, {})",
                self.grid.r_max, self.grid.points, other.grid.r_max, other.grid.points
            )));
        }
        Ok(())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// `∫ u dμ` by the trapezoid rule (the `r = 0` and `r_max` end nodes
    /// carry zero weight and zero value respectively).
    pub fn integral(&self) -> f64 {
        let w = self.grid.volume_weights();
        self.values.iter().zip(w.iter()).map(|(u, w)| u * w).sum()
    }

    /// `∫ u g dμ`.
    pub fn pairing(&self, other: &Self) -> Result<f64> {
        self.check_grid(other)?;
        let w = self.grid.volume_weights();
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(w.iter())
            .map(|((a, b), w)| a * b * w)
            .sum())
    }

    /// `‖u‖_{L^p(dμ)}`; `p = ∞` gives the sup norm.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.sup_norm();
        }
        let w = self.grid.volume_weights();
        let sum: f64 = self
            .values
            .iter()
            .zip(w.iter())
            .map(|(u, w)| u.abs().powf(p) * w)
            .sum();
        sum.powf(1.0 / p)
    }

    /// Fraction of `∫|u| dμ` carried by the outer 10% of the grid.
    pub fn boundary_mass_fraction(&self) -> f64 {
        let w = self.grid.volume_weights();
        let start = self.len() - self.len() / 10;
        let total: f64 = self.values.iter().zip(w.iter()).map(|(u, w)| u.abs() * w).sum();
        if total == 0.0 {
            return 0.0;
        }
        let outer: f64 = self.values[start..]
            .iter()
            .zip(w[start..].iter())
            .map(|(u, w)| u.abs() * w)
            .sum();
        outer / total
    }

    /// `L¹(dμ)` size of the rounding noise one transform leaves on `u`.
    /// Each node of `u · sinh r` moves by about `ε · rms(coefficients)`;
    /// the volume weight turns that into a contribution growing like
    /// `cosh r_max`.
    pub fn l1_roundoff(&self) -> f64 {
        let tab = self.grid.tables();
        let v2: f64 = self.values.iter().zip(&tab.sinh).map(|(u, s)| (u * s).powi(2)).sum();
        let rms = (2.0 * v2 / (self.grid.points + 1) as f64).sqrt();
        let reach: f64 = tab.weights.iter().zip(&tab.sinh).map(|(w, s)| w / s).sum();
        f64::EPSILON * rms * reach
    }
}

/// Sine-expansion coefficients of `u · sinh r`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: RadialGrid,
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn new(grid: RadialGrid, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != grid.points {
            return Err(Error::GridMismatch(format!(
                "{} coefficients for a {}-point grid",
                coeffs.len(),
                grid.points
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("spectral coefficient".into()));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `∫₀^{r_max} v² dr` recovered from the coefficients.
    pub fn energy(&self) -> f64 {
        0.5 * self.grid.r_max * self.coeffs.iter().map(|c| c * c).sum::<f64>()
    }

    /// Largest coefficient magnitude at `k >= M/2` relative to the largest
    /// overall; a resolved field has this below roughly `1e-10`.
    pub fn tail_ratio(&self) -> f64 {
        let peak = self.coeffs.iter().fold(0.0_f64, |a, c| a.max(c.abs()));
        if peak == 0.0 {
            return 0.0;
        }
        let half = self.coeffs.len() / 2;
        self.coeffs[half..].iter().fold(0.0_f64, |a, c| a.max(c.abs())) / peak
    }

    /// Coefficient-wise product with precomputed symbol values.
    pub fn scaled_by(&self, symbol: &[f64]) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().zip(symbol).map(|(c, m)| c * m).collect(),
        }
    }
}

pub fn to_spectral(u: &RadialField) -> SpectralField {
    let grid = u.grid;
    let tab = grid.tables();
    let v: Vec<f64> = u.values.iter().zip(&tab.sinh).map(|(u, s)| u * s).collect();
    let norm = 2.0 / (grid.points + 1) as f64;
    let coeffs = tab.dst(&v).into_iter().map(|c| c * norm).collect();
    SpectralField { grid, coeffs }
}

pub fn from_spectral(c: &SpectralField) -> RadialField {
    let grid = c.grid;
    let tab = grid.tables();
    let v = tab.dst(&c.coeffs);
    let values = v.iter().zip(&tab.sinh).map(|(v, s)| v / s).collect();
    RadialField { grid, values }
}

/// Evaluates a frequency symbol on the grid's sine frequencies.
pub fn symbol(grid: &RadialGrid, phi: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    let values: Vec<f64> = grid.frequencies().into_iter().map(phi).collect();
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("multiplier at mode {}", k + 1)));
    }
    Ok(values)
}

/// `φ(√(-Δ - 1))` applied to `u`: each sine coefficient at frequency `λ`
/// is scaled by `φ(λ)`.
pub fn apply_multiplier(u: &RadialField, phi: impl Fn(f64) -> f64) -> Result<RadialField> {
    let sym = symbol(&u.grid, phi)?;
    Ok(apply_symbol(u, &sym))
}

/// Same as [`apply_multiplier`] with precomputed symbol values.
pub fn apply_symbol(u: &RadialField, sym: &[f64]) -> RadialField {
    from_spectral(&to_spectral(u).scaled_by(sym))
}

/// Measure-weighted norms and energies of a field.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NormRecord {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub l1_phi1: f64,
    #[serde(rename = "l1_phiW")]
    pub l1_phi_w: f64,
    pub hs: f64,
    pub energy_m: f64,
}

/// `‖u‖²_{H^{-s}} = ∫ u (-Δ)^{-s} u dμ`, evaluated in sine coefficients.
pub fn hs_norm_sq(u: &RadialField, s: f64) -> f64 {
    let c = to_spectral(u);
    hs_norm_sq_spectral(&c, s)
}

pub(crate) fn hs_norm_sq_spectral(c: &SpectralField, s: f64) -> f64 {
    let r_max = c.grid.r_max;
    let sum: f64 = c
        .grid
        .frequencies()
        .iter()
        .zip(&c.coeffs)
        .map(|(l, c)| (l * l + 1.0).powf(-s) * c * c)
        .sum();
    2.0 * PI * r_max * sum
}

/// `E_m[u] = (m + 1)^{-1} ∫ |u|^{m+1} dμ`.
pub fn energy(u: &RadialField, m: f64) -> f64 {
    u.lp_norm(m + 1.0).powf(m + 1.0) / (m + 1.0)
}

pub fn measure(
    u: &RadialField,
    m: f64,
    s: f64,
    phi1: &RadialField,
    phi_w: &RadialField,
) -> Result<NormRecord> {
    u.check_grid(phi1)?;
    u.check_grid(phi_w)?;
    if !(m > 1.0) {
        return Err(Error::Domain(format!("m must exceed 1, got {m}")));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("s must lie in (0,1), got {s}")));
    }
    let abs = u.map(f64::abs);
    Ok(NormRecord {
        l1: abs.integral(),
        l2: u.lp_norm(2.0),
        linf: u.sup_norm(),
        l1_phi1: abs.pairing(phi1)?,
        l1_phi_w: abs.pairing(phi_w)?,
        hs: hs_norm_sq(u, s).max(0.0).sqrt(),
        energy_m: energy(u, m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn round_trip_on_random_fields(values in prop::collection::vec(-1e3_f64..1e3, 64)) {
            let g = RadialGrid::new(5.0, 64).unwrap();
            let u = RadialField::new(g, values).unwrap();
            let back = from_spectral(&to_spectral(&u));
            let scale = u.values().iter().zip(g.tables().sinh.iter()).fold(0.0_f64, |a, (u, s)| a.max((u * s).abs()));
            for ((a, b), s) in back.values().iter().zip(u.values()).zip(g.tables().sinh.iter()) {
                prop_assert!(((a - b) * s).abs() <= 1e-12 * scale.max(1e-300));
            }
        }

        #[test]
        fn multipliers_compose(a in 0.05_f64..0.95, b in -1.0_f64..1.0) {
            let g = RadialGrid::new(10.0, 128).unwrap();
            let u = RadialField::from_fn(g, |r| (-(r - 2.0) * (r - 2.0)).exp());
            let p1 = |l: f64| (l * l + 1.0).powf(a);
            let p2 = |l: f64| (l * l + 1.0).powf(b);
            let two = apply_multiplier(&apply_multiplier(&u, p1).unwrap(), p2).unwrap();
            let one = apply_multiplier(&u, |l| p1(l) * p2(l)).unwrap();
            let err = two.sub(&one).unwrap().lp_norm(2.0) / one.lp_norm(2.0);
            prop_assert!(err < 1e-12, "{}", err);
        }
    }

    fn grid() -> RadialGrid {
        RadialGrid::new(20.0, 512).unwrap()
    }

    fn bump(grid: RadialGrid) -> RadialField {
        RadialField::from_fn(grid, |r| (-(r - 1.0) * (r - 1.0) / 0.3).exp())
    }

    #[test]
    fn grid_validation() {
        assert!(RadialGrid::new(0.0, 64).is_err());
        assert!(RadialGrid::new(10.0, 8).is_err());
        let g = RadialGrid::new(10.0, 99).unwrap();
        assert!((g.spacing() - 0.1).abs() < 1e-15);
        assert!(g.radius(g.points - 1) < g.r_max);
    }

    #[test]
    fn zero_field_has_zero_coefficients() {
        let c = to_spectral(&RadialField::zeros(grid()));
        assert!(c.coeffs().iter().all(|c| *c == 0.0));
        let u = from_spectral(&c);
        assert!(u.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn round_trip_is_exact() {
        let u = bump(grid());
        let back = from_spectral(&to_spectral(&u));
        let err = back.sub(&u).unwrap().sup_norm() / u.sup_norm();
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn single_mode_has_single_coefficient() {
        let g = grid();
        let l1 = PI / g.r_max;
        let u = RadialField::from_fn(g, |r| (l1 * r).sin() / r.sinh());
        let c = to_spectral(&u);
        assert!((c.coeffs()[0] - 1.0).abs() < 1e-12);
        let rest = c.coeffs()[1..].iter().fold(0.0_f64, |a, c| a.max(c.abs()));
        assert!(rest < 1e-12, "{rest}");
        let back = from_spectral(&SpectralField::new(g, c.coeffs().to_vec()).unwrap());
        assert!(back.sub(&u).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn unit_multipliers_are_identity() {
        let u = bump(grid());
        let w = apply_multiplier(&u, |_| 1.0).unwrap();
        assert!(w.sub(&u).unwrap().sup_norm() < 1e-12 * u.sup_norm());
        // zeroth fractional power of the shifted Laplacian
        let w = apply_multiplier(&u, |l| (l * l + 1.0).powf(0.0)).unwrap();
        assert!(w.sub(&u).unwrap().sup_norm() < 1e-12 * u.sup_norm());
    }

    #[test]
    fn non_finite_multiplier_is_rejected() {
        let u = bump(grid());
        assert!(matches!(apply_multiplier(&u, |_| f64::NAN), Err(Error::NonFinite(_))));
    }

    #[test]
    fn parseval_identity() {
        let g = grid();
        let u = bump(g);
        let c = to_spectral(&u);
        let tab = g.tables();
        let direct: f64 = u
            .values()
            .iter()
            .zip(&tab.sinh)
            .map(|(u, s)| (u * s).powi(2))
            .sum::<f64>()
            * g.spacing();
        assert!((direct - c.energy()).abs() < 1e-12 * direct);
    }

    #[test]
    fn measure_of_zero_field() {
        let g = grid();
        let z = RadialField::zeros(g);
        let one = RadialField::from_fn(g, |_| 1.0);
        let rec = measure(&z, 2.0, 0.5, &one, &one).unwrap();
        assert_eq!(rec, NormRecord::default());
    }

    #[test]
    fn measure_rejects_mismatched_grids() {
        let u = bump(grid());
        let other = RadialField::zeros(RadialGrid::new(10.0, 512).unwrap());
        assert!(matches!(measure(&u, 2.0, 0.5, &other, &u), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn hs_norm_matches_physical_pairing() {
        let g = grid();
        let u = bump(g);
        let s = 0.4;
        let inv = apply_multiplier(&u, |l| (l * l + 1.0).powf(-s)).unwrap();
        let physical = u.pairing(&inv).unwrap();
        assert!((hs_norm_sq(&u, s) - physical).abs() < 1e-12 * physical);
    }

    fn fd_laplacian(u: &RadialField) -> Vec<f64> {
        let g = u.grid();
        let dr = g.spacing();
        let r = g.radii();
        let v = u.values();
        let at = |j: isize| if j < 0 || j as usize >= v.len() { 0.0 } else { v[j as usize] };
        (0..v.len())
            .map(|j| {
                let (rm, rp) = (r[j] - 0.5 * dr, r[j] + 0.5 * dr);
                let flux_p = rp.sinh().powi(2) * (at(j as isize + 1) - v[j]) / dr;
                let flux_m = rm.sinh().powi(2) * (v[j] - at(j as isize - 1)) / dr;
                -(flux_p - flux_m) / (dr * r[j].sinh().powi(2))
            })
            .collect()
    }

    #[test]
    fn continuum_laplacian_matches_finite_differences_to_second_order() {
        let mut errs = Vec::new();
        for points in [255, 511, 1023] {
            let g = RadialGrid::new(10.0, points).unwrap();
            let u = RadialField::from_fn(g, |r| (-(r - 3.0) * (r - 3.0) / 0.5).exp());
            let spec = apply_multiplier(&u, |l| l * l + 1.0).unwrap();
            let fd = fd_laplacian(&u);
            let err = spec
                .values()
                .iter()
                .zip(&fd)
                .fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
            errs.push(err);
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 2.0).abs() < 0.15, "order {order}, errors {errs:?}");
        }
    }

    #[test]
    fn discrete_symbol_is_the_three_point_stencil() {
        let g = RadialGrid::new(8.0, 127).unwrap();
        let u = RadialField::from_fn(g, |r| (-(r - 2.0) * (r - 2.0)).exp() * (1.0 + r));
        let sym = laplacian_symbol(&g, Symbol::Discrete);
        let spec = apply_symbol(&u, &sym);
        let dr = g.spacing();
        let kappa = 2.0 * (dr.cosh() - 1.0) / (dr * dr);
        let tab = g.tables();
        let v: Vec<f64> = u.values().iter().zip(&tab.sinh).map(|(u, s)| u * s).collect();
        let at = |j: isize| if j < 0 || j as usize >= v.len() { 0.0 } else { v[j as usize] };
        for j in 0..v.len() {
            let jj = j as isize;
            let stencil = ((2.0 * v[j] - at(jj - 1) - at(jj + 1)) / (dr * dr) + kappa * v[j]) / tab.sinh[j];
            assert!((stencil - spec.values()[j]).abs() < 1e-9 * (1.0 + stencil.abs()));
        }
    }

    #[test]
    fn discrete_symbol_annihilates_constants_in_the_interior() {
        let g = RadialGrid::new(6.0, 255).unwrap();
        let dr = g.spacing();
        let sym = laplacian_symbol(&g, Symbol::Discrete);
        // the lowest eigenvalue sits just above the continuum bottom 1
        let kappa = 2.0 * (dr.cosh() - 1.0) / (dr * dr);
        assert!(sym[0] > kappa && kappa > 1.0);
    }

    #[test]
    fn field_rejects_non_finite_values() {
        let g = grid();
        let mut v = vec![0.0; g.points];
        v[3] = f64::INFINITY;
        assert!(RadialField::new(g, v).is_err());
    }
}
