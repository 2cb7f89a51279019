//! The four verbs.

use std::path::{Path, PathBuf};

use fpme_core::io::{
    read_trajectory_dir, write_field_csv, write_green_csv, write_json, write_trajectory_dir,
};
use fpme_core::kernels::{green_asymptotics, GreenTable, KernelParams};
use fpme_core::operators::{canonical_bump, WeightKind};
use fpme_core::solver::{decade_schedule, evolve, SolverConfig, Trajectory};
use fpme_core::verify::{
    check_smoothing_l1, check_smoothing_weighted, run_suite, CheckReport, Suite, SuiteInputs,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Bump, RunConfig};
use crate::exit::{self, Failure};

/// Arguments of `green`.
#[derive(Debug, Clone)]
pub struct GreenRequest {
    pub dim: u32,
    pub s: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
    pub asymptotics: bool,
}

pub fn run_green(req: &GreenRequest, out: &Path) -> Result<u8, Failure> {
    let params = KernelParams::new(req.dim, req.s).map_err(|e| Failure::config(e.to_string()))?;
    if !(req.r_min > 0.0 && req.r_max > req.r_min && req.r_max.is_finite()) {
        return Err(Failure::config(format!(
            "need 0 < rmin < rmax, got [{}, {}]",
            req.r_min, req.r_max
        )));
    }
    if req.points < 2 {
        return Err(Failure::config(format!("points must be at least 2, got {}", req.points)));
    }
    if req.asymptotics && req.dim < 3 {
        return Err(Failure::config(format!(
            "Green asymptotics require N >= 3, got N = {} (pass --no-asymptotics for the table alone)",
            req.dim
        )));
    }
    let table = GreenTable::log_spaced(&params, req.r_min, req.r_max, req.points)?;
    create_dir(out)?;
    write_green_csv(&out.join("green.csv"), &table)?;
    if req.asymptotics {
        let fit = green_asymptotics(&params)?;
        write_json(&out.join("green_asymptotics.json"), &fit)?;
    }
    Ok(exit::OK)
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::data(format!("cannot create {}: {e}", dir.display())))
}

fn run(datum: &Bump, cfg: &SolverConfig) -> Result<Trajectory, Failure> {
    Ok(evolve(&datum.field(cfg.grid), cfg)?)
}

pub fn run_evolve(cfg: &RunConfig, out: &Path) -> Result<u8, Failure> {
    let traj = run(&cfg.datum, &cfg.solver)?;
    create_dir(out)?;
    write_trajectory_dir(out, &traj, cfg.snapshot_stride)?;
    write_json(&out.join("run_config.json"), cfg)?;
    write_field_csv(&out.join("phi1.csv"), &traj.phi1.profile, "phi")?;
    write_field_csv(&out.join("phiW.csv"), &traj.phi_w.profile, "phi")?;
    Ok(exit::OK)
}

/// Keeps the snapshots of `traj` recorded at `times`.
fn restrict(traj: Trajectory, times: &[f64]) -> Result<Trajectory, Failure> {
    if traj.times == times {
        return Ok(traj);
    }
    let mut kept_times = Vec::with_capacity(times.len());
    let mut kept = Vec::with_capacity(times.len());
    for t in times {
        let i = traj.index_near(*t);
        if (traj.times[i] - t).abs() > 1e-12 * t.max(1.0) {
            return Err(Failure::data(format!("stored time {t} is not on the configured partition")));
        }
        kept_times.push(traj.times[i]);
        kept.push(traj.snapshots[i].clone());
    }
    Ok(Trajectory::from_snapshots(traj.config, kept_times, kept)?)
}

pub fn run_verify(cfg: &RunConfig, suite: Suite, out: &Path) -> Result<u8, Failure> {
    let v = &cfg.verify;
    let smoothing = matches!(suite, Suite::Smoothing | Suite::All);
    let contraction = matches!(suite, Suite::Contraction | Suite::All);

    let main = match &v.trajectory {
        Some(dir) => read_trajectory_dir(dir).map_err(|e| Failure::from(e).context(&dir.display().to_string()))?,
        None => run(&cfg.datum, &cfg.solver)?,
    };
    let solver = main.config.clone();

    // Independent evolutions run concurrently.
    let family_cfg = v.family.solver(&solver, solver.horizon).map_err(Failure::config)?;
    let mut jobs: Vec<(&str, Bump, SolverConfig)> = Vec::new();
    if smoothing {
        for m in &v.family.masses {
            jobs.push(("family", v.family.bump(*m), family_cfg.clone()));
        }
        if let Some(t) = v.long_horizon {
            let long = solver
                .clone()
                .with_schedule(decade_schedule(v.family.first_window, t, v.family.steps_per_window))?;
            jobs.push(("long", cfg.datum, long));
        }
    }
    if contraction {
        let partner = Bump {
            mass: cfg.datum.mass * v.comparison_factor,
            ..cfg.datum
        };
        jobs.push(("partner", partner, solver.clone()));
    }
    let runs: Vec<(&str, Trajectory)> = jobs
        .into_par_iter()
        .map(|(tag, datum, c)| run(&datum, &c).map(|t| (tag, t)))
        .collect::<Result<_, _>>()?;

    let family: Vec<&Trajectory> = runs.iter().filter(|r| r.0 == "family").map(|r| &r.1).collect();
    let long = runs.iter().find(|r| r.0 == "long").map(|r| &r.1);
    let partner = match runs.iter().find(|r| r.0 == "partner") {
        Some((_, t)) => Some(restrict(t.clone(), &main.times)?),
        None => None,
    };
    let inputs = SuiteInputs {
        main: &main,
        family: if family.is_empty() { vec![&main] } else { family },
        long,
        pair: (&main, partner.as_ref().unwrap_or(&main)),
        psi: canonical_bump(solver.grid),
        lattice: v.lattice.clone(),
        identity_pairs: cfg.identity_pairs(),
        windows: v.windows,
        ps: vec![1.0, 2.0, 4.0, f64::INFINITY],
    };
    let reports = run_suite(suite, &inputs);
    create_dir(out)?;
    write_json(&out.join("report.json"), &reports)?;
    for r in &reports {
        println!("{} {}", if r.passed { "PASS" } else { "FAIL" }, r.name);
    }
    Ok(if reports.iter().all(|r| r.passed) {
        exit::OK
    } else {
        exit::CHECK
    })
}

#[allow(non_snake_case)]
#[derive(Debug, Serialize)]
struct SummaryRow {
    m: f64,
    s: f64,
    mass: f64,
    sup_Q_l1: f64,
    sup_Q_phi1: f64,
    sup_Q_w: f64,
    passed: bool,
}

/// Directory name of one sweep combination.
pub fn combination_dir(m: f64, s: f64, mass: f64) -> String {
    format!("m{m}_s{s}_mass{mass}")
}

fn sweep_one(cfg: &RunConfig, m: f64, s: f64, mass: f64, dir: &Path) -> Result<(SummaryRow, Vec<CheckReport>), Failure> {
    let mut base = cfg.solver.clone();
    base.m = m;
    base.s = s;
    let family = &cfg.verify.family;
    let solver = family.solver(&base, base.horizon).map_err(Failure::config)?;
    let traj = run(&family.bump(mass), &solver)?;
    create_dir(dir)?;
    write_trajectory_dir(dir, &traj, cfg.snapshot_stride)?;
    let windows = cfg.verify.windows;
    let l1 = check_smoothing_l1(&[&traj], windows)?;
    let phi1 = check_smoothing_weighted(&[&traj], WeightKind::GroundState, windows)?;
    let w = check_smoothing_weighted(&[&traj], WeightKind::WClass, windows)?;
    let row = SummaryRow {
        m,
        s,
        mass,
        sup_Q_l1: l1.observed["sup_Q"],
        sup_Q_phi1: phi1.observed["phi1.sup_Q"],
        sup_Q_w: w.observed["w.sup_Q"],
        passed: l1.passed,
    };
    let reports = vec![l1, phi1, w];
    write_json(&dir.join("report.json"), &reports)?;
    Ok((row, reports))
}

pub fn run_sweep(cfg: &RunConfig, out: &Path) -> Result<u8, Failure> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Failure::config("sweep verb needs a \"sweep\" section with m, s and mass lists"))?;
    let mut combos = Vec::new();
    for m in &sweep.m {
        for s in &sweep.s {
            for mass in &sweep.mass {
                combos.push((*m, *s, *mass));
            }
        }
    }
    create_dir(out)?;
    let results: Vec<(SummaryRow, Option<Failure>)> = combos
        .par_iter()
        .map(|&(m, s, mass)| {
            let dir: PathBuf = out.join(combination_dir(m, s, mass));
            match sweep_one(cfg, m, s, mass, &dir) {
                Ok((row, _)) => (row, None),
                Err(f) => {
                    let f = f.context(&combination_dir(m, s, mass));
                    let _ = create_dir(&dir).and_then(|_| {
                        std::fs::write(dir.join("error.txt"), format!("{}\n", f.message))
                            .map_err(|e| Failure::data(e.to_string()))
                    });
                    let row = SummaryRow {
                        m,
                        s,
                        mass,
                        sup_Q_l1: f64::NAN,
                        sup_Q_phi1: f64::NAN,
                        sup_Q_w: f64::NAN,
                        passed: false,
                    };
                    (row, Some(f))
                }
            }
        })
        .collect();
    let path = out.join("sweep_summary.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    for (row, _) in &results {
        w.serialize(row).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    if let Some(f) = results.into_iter().find_map(|r| r.1) {
        return Err(f);
    }
    Ok(exit::OK)
}

/// Provenance written next to the data files.
#[derive(Debug, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub verb: String,
    pub config: Option<PathBuf>,
    pub unix_time: u64,
    pub elapsed_seconds: f64,
    pub threads: usize,
    pub exit_code: u8,
    pub message: Option<String>,
}

pub fn write_meta(out: &Path, meta: &Meta) {
    if out.is_dir() {
        if let Err(e) = write_json(&out.join("meta.json"), meta) {
            log::warn!("could not write meta.json: {e}");
        }
    }
}
