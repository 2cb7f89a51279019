//! `fpme`: batch runner for Green tables, evolutions, estimate checks and
//! parameter sweeps.

mod commands;
mod config;
mod exit;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use fpme_core::verify::Suite;

use commands::{GreenRequest, Meta};
use config::RunConfig;
use exit::Failure;

#[derive(Debug, Parser)]
#[command(name = "fpme", version, about = "Fractional porous medium flow on hyperbolic space")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// Output directory.
    #[arg(long, global = true, env = "FPME_OUT_DIR", default_value = "fpme_out")]
    out: PathBuf,
    /// Worker threads for concurrent runs (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Escalate resolution warnings to errors.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Debug, Subcommand)]
enum Verb {
    /// Tabulate the Green function and fit its asymptotics.
    Green(GreenArgs),
    /// Run the implicit scheme and store the trajectory.
    Evolve(ConfigArg),
    /// Run estimate checks and write report.json.
    Verify(VerifyArgs),
    /// Cartesian sweep over (m, s, mass).
    Sweep(ConfigArg),
}

#[derive(Debug, Args)]
struct GreenArgs {
    #[arg(long, default_value_t = 3)]
    dim: u32,
    #[arg(long)]
    s: f64,
    #[arg(long, default_value_t = 1e-3)]
    rmin: f64,
    #[arg(long, default_value_t = 20.0)]
    rmax: f64,
    #[arg(long, default_value_t = 512)]
    points: usize,
    /// Skip the asymptotic fit (needed for N = 2).
    #[arg(long)]
    no_asymptotics: bool,
}

#[derive(Debug, Args)]
struct ConfigArg {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    config: PathBuf,
    /// smoothing, monotonicity, contraction, fundamental, identity or all.
    #[arg(long)]
    suite: Option<String>,
}

fn load(path: &Path, strict: bool) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::load(path)?;
    cfg.solver.strict |= strict;
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Result<u8, Failure> {
    match &cli.verb {
        Verb::Green(a) => commands::run_green(
            &GreenRequest {
                dim: a.dim,
                s: a.s,
                r_min: a.rmin,
                r_max: a.rmax,
                points: a.points,
                asymptotics: !a.no_asymptotics,
            },
            &cli.out,
        ),
        Verb::Evolve(a) => commands::run_evolve(&load(&a.config, cli.strict)?, &cli.out),
        Verb::Verify(a) => {
            let cfg = load(&a.config, cli.strict)?;
            let suite = match &a.suite {
                Some(name) => name.parse().map_err(|e: fpme_core::Error| Failure::config(e.to_string()))?,
                None => cfg.suite.unwrap_or(Suite::All),
            };
            commands::run_verify(&cfg, suite, &cli.out)
        }
        Verb::Sweep(a) => commands::run_sweep(&load(&a.config, cli.strict)?, &cli.out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("config error: --jobs must be at least 1");
            return ExitCode::from(exit::CONFIG);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .expect("thread pool is configured once");
    }
    let start = Instant::now();
    let outcome = dispatch(&cli);
    let (code, message) = match &outcome {
        Ok(code) => (*code, None),
        Err(f) => {
            eprintln!("{}: {}", f.kind(), f.message);
            (f.code, Some(f.message.clone()))
        }
    };
    let (verb, config) = match &cli.verb {
        Verb::Green(_) => ("green", None),
        Verb::Evolve(a) => ("evolve", Some(a.config.clone())),
        Verb::Verify(a) => ("verify", Some(a.config.clone())),
        Verb::Sweep(a) => ("sweep", Some(a.config.clone())),
    };
    commands::write_meta(
        &cli.out,
        &Meta {
            tool: "fpme",
            version: env!("CARGO_PKG_VERSION"),
            verb: verb.to_string(),
            config,
            unix_time: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            elapsed_seconds: start.elapsed().as_secs_f64(),
            threads: rayon::current_num_threads(),
            exit_code: code,
            message,
        },
    );
    ExitCode::from(code)
}
