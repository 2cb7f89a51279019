//! CSV and JSON artifacts.
//!
//! Numbers are written in shortest round-trip decimal form, so identical
//! inputs give byte-identical files.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::GreenTable;
use crate::solver::{SolverConfig, Trajectory};
use crate::spectral::{RadialField, RadialGrid};

pub const GREEN_HEADER: [&str; 3] = ["r", "G", "quad_err"];
pub const TRAJECTORY_HEADER: [&str; 10] = [
    "t",
    "l1",
    "l2",
    "linf",
    "l1_phi1",
    "l1_phiW",
    "hs",
    "energy_m",
    "inner_iters",
    "boundary_mass",
];
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const CONFIG_FILE: &str = "config.json";
pub const SNAPSHOT_DIR: &str = "snapshots";

/// Relative tolerance when stored records are compared with recomputed ones.
const RECORD_TOL: f64 = 1e-8;

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        if let csv::ErrorKind::Io(source) = e.into_kind() {
            return io_err(path, source);
        }
        unreachable!("checked above");
    }
    Error::Data(format!("{}: {e}", path.display()))
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        }
    }
    csv::Writer::from_path(path).map_err(|e| csv_err(path, e))
}

fn reader(path: &Path, expected: &[&str]) -> Result<csv::Reader<File>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = rdr.headers().map_err(|e| csv_err(path, e))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::Data(format!(
            "{}: header {:?}, expected {}",
            path.display(),
            header.iter().collect::<Vec<_>>(),
            expected.join(",")
        )));
    }
    Ok(rdr)
}

fn finite(path: &Path, row: usize, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Data(format!("{}: non-finite value in row {}", path.display(), row + 1)))
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Data(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

/// `r,G,quad_err`, one row per radius.
pub fn write_green_csv(path: &Path, table: &GreenTable) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(GREEN_HEADER).map_err(|e| csv_err(path, e))?;
    for ((r, g), q) in table.radii.iter().zip(&table.values).zip(&table.quad_errors) {
        w.serialize((r, g, q)).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// `r,<column>`, one row per grid node.
pub fn write_field_csv(path: &Path, u: &RadialField, column: &str) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["r", column]).map_err(|e| csv_err(path, e))?;
    for (r, v) in u.grid().radii().iter().zip(u.values()) {
        w.serialize((r, v)).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Reads an `r,<column>` file written on `grid`.
pub fn read_field_csv(path: &Path, column: &str, grid: RadialGrid) -> Result<RadialField> {
    let mut rdr = reader(path, &["r", column])?;
    let h = grid.spacing();
    let mut values = Vec::with_capacity(grid.points);
    for (j, row) in rdr.deserialize::<(f64, f64)>().enumerate() {
        let (r, v) = row.map_err(|e| csv_err(path, e))?;
        finite(path, j, &[r, v])?;
        if (r - grid.radius(j)).abs() > 1e-9 * h.max(r) {
            return Err(Error::Data(format!(
                "{}: row {} at r = {r}, expected {}",
                path.display(),
                j + 1,
                grid.radius(j)
            )));
        }
        values.push(v);
    }
    if values.len() != grid.points {
        return Err(Error::Data(format!(
            "{}: {} rows for a grid of {} points",
            path.display(),
            values.len(),
            grid.points
        )));
    }
    RadialField::new(grid, values)
}

/// One row of `trajectory.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub l1_phi1: f64,
    #[serde(rename = "l1_phiW")]
    pub l1_phi_w: f64,
    pub hs: f64,
    pub energy_m: f64,
    pub inner_iters: usize,
    pub boundary_mass: f64,
}

pub fn trajectory_rows(traj: &Trajectory) -> Vec<TrajectoryRow> {
    traj.times
        .iter()
        .zip(&traj.records)
        .zip(traj.inner_iterations.iter().zip(&traj.boundary_mass_fraction))
        .map(|((t, r), (it, b))| TrajectoryRow {
            t: *t,
            l1: r.l1,
            l2: r.l2,
            linf: r.linf,
            l1_phi1: r.l1_phi1,
            l1_phi_w: r.l1_phi_w,
            hs: r.hs,
            energy_m: r.energy_m,
            inner_iters: *it,
            boundary_mass: *b,
        })
        .collect()
}

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = writer(path)?;
    for row in trajectory_rows(traj) {
        w.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_trajectory_csv(path: &Path) -> Result<Vec<TrajectoryRow>> {
    let mut rdr = reader(path, &TRAJECTORY_HEADER)?;
    let mut rows = Vec::new();
    for (i, row) in rdr.deserialize::<TrajectoryRow>().enumerate() {
        let row = row.map_err(|e| csv_err(path, e))?;
        finite(
            path,
            i,
            &[row.t, row.l1, row.l2, row.linf, row.l1_phi1, row.l1_phi_w, row.hs, row.energy_m, row.boundary_mass],
        )?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{}: no rows", path.display())));
    }
    Ok(rows)
}

/// Snapshot file name for step `k`.
pub fn snapshot_name(k: usize) -> String {
    format!("u_{k:06}.csv")
}

/// Writes `trajectory.csv`, `config.json` and the snapshots of steps
/// `0, stride, 2·stride, ...` and the last step.
pub fn write_trajectory_dir(dir: &Path, traj: &Trajectory, stride: usize) -> Result<()> {
    if stride == 0 {
        return Err(Error::Domain("snapshot stride must be at least 1".into()));
    }
    let snaps = dir.join(SNAPSHOT_DIR);
    fs::create_dir_all(&snaps).map_err(|e| io_err(&snaps, e))?;
    write_trajectory_csv(&dir.join(TRAJECTORY_FILE), traj)?;
    write_json(&dir.join(CONFIG_FILE), &traj.config)?;
    let last = traj.len() - 1;
    for (k, u) in traj.snapshots.iter().enumerate() {
        if k % stride == 0 || k == last {
            write_field_csv(&snaps.join(snapshot_name(k)), u, "u")?;
        }
    }
    Ok(())
}

fn snapshot_index(path: &Path) -> Option<usize> {
    let name = path.file_name()?.to_str()?;
    name.strip_prefix("u_")?.strip_suffix(".csv")?.parse().ok()
}

/// Loads a directory written by [`write_trajectory_dir`]. The trajectory
/// holds the stored snapshots only; their records are recomputed and must
/// agree with `trajectory.csv`.
pub fn read_trajectory_dir(dir: &Path) -> Result<Trajectory> {
    let config: SolverConfig = read_json(&dir.join(CONFIG_FILE))?;
    config.validate()?;
    let rows = read_trajectory_csv(&dir.join(TRAJECTORY_FILE))?;
    if rows.len() != config.n_steps + 1 {
        return Err(Error::Data(format!(
            "{} rows for {} steps",
            rows.len(),
            config.n_steps
        )));
    }
    let snaps = dir.join(SNAPSHOT_DIR);
    let mut files: Vec<(usize, PathBuf)> = fs::read_dir(&snaps)
        .map_err(|e| io_err(&snaps, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter_map(|p| snapshot_index(&p).map(|k| (k, p)))
        .collect();
    files.sort();
    if files.first().map(|f| f.0) != Some(0) {
        return Err(Error::Data(format!("{}: initial snapshot missing", snaps.display())));
    }
    let mut times = Vec::with_capacity(files.len());
    let mut fields = Vec::with_capacity(files.len());
    let mut steps = Vec::with_capacity(files.len());
    for (k, path) in &files {
        let row = rows
            .get(*k)
            .ok_or_else(|| Error::Data(format!("{}: step beyond the trajectory", path.display())))?;
        let u = read_field_csv(path, "u", config.grid)?;
        if u.min() < 0.0 {
            return Err(Error::Data(format!("{}: negative values", path.display())));
        }
        times.push(row.t);
        fields.push(u);
        steps.push(*k);
    }
    let mut traj = Trajectory::from_snapshots(config, times, fields)?;
    for (i, k) in steps.iter().enumerate() {
        let (row, rec) = (&rows[*k], &traj.records[i]);
        for (name, a, b) in [("l1", row.l1, rec.l1), ("l2", row.l2, rec.l2), ("linf", row.linf, rec.linf)] {
            if (a - b).abs() > RECORD_TOL * a.abs().max(b.abs()).max(f64::MIN_POSITIVE) {
                return Err(Error::Data(format!(
                    "snapshot {k}: stored {name} = {a} disagrees with recomputed {b}"
                )));
            }
        }
        traj.inner_iterations[i] = row.inner_iters;
    }
    Ok(traj)
}
