//! Command-line runner: parses scenarios, dispatches to `bcg-core` and
//! writes CSV rows plus a JSON manifest.
//!
//! Exit codes: 0 when every check passes, 2 when a check fails, 1 on error.

pub mod experiments;
pub mod report;
pub mod scenario;

use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use bcg_core::Field;
use clap::{Args, Parser, Subcommand};

use crate::report::{write_csv, write_outputs, Outcome};
use crate::scenario::{load_scenario, Experiment, Scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "bcg", version, about = "Convex geometry over R, C and H: Monte Carlo experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Scenario file (JSON); a built-in scenario is used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Monte Carlo sample budget (overrides the scenario).
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// CSV output path; the manifest is written next to it as `.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Field of the scenario: R, C or H.
    #[arg(long)]
    pub field: Option<Field>,
}

#[derive(Debug, Clone, Args)]
pub struct CounterexampleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Aspect `a` of the ellipsoid `|z1|^2 / a^2 + a^2 |z2|^2 <= 1`.
    #[arg(long)]
    pub aspect: Option<f64>,
    /// Exponent of the weight `t^r`.
    #[arg(long)]
    pub r: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scalar and determinant identities on random matrices.
    Selftest(CommonArgs),
    /// Gap between B(K_1..K_n) and the equal-volume balls.
    Brs(CommonArgs),
    /// Both sides of the linear Blaschke-Petkantchin formula.
    BpCheck(CommonArgs),
    /// Steiner and F-hyperplane symmetrization, with iterated rounding.
    Symmetrize(CommonArgs),
    /// Affine or dual affine quermassintegral, optionally its SL invariance.
    Quermass(CommonArgs),
    /// The intersection inequality for sections through the origin.
    Intersection(CommonArgs),
    /// The Santalo case of the projection conjecture.
    Santalo(CommonArgs),
    /// Steiner symmetrization raising B for a complex ellipsoid.
    Counterexample(CounterexampleArgs),
    /// Exploration of the projection conjecture (never gated).
    Conjecture(CommonArgs),
}

impl Command {
    pub fn experiment(&self) -> Experiment {
        match self {
            Command::Selftest(_) => Experiment::Selftest,
            Command::Brs(_) => Experiment::Brs,
            Command::BpCheck(_) => Experiment::BpCheck,
            Command::Symmetrize(_) => Experiment::Symmetrize,
            Command::Quermass(_) => Experiment::Quermass,
            Command::Intersection(_) => Experiment::Intersection,
            Command::Santalo(_) => Experiment::Santalo,
            Command::Counterexample(_) => Experiment::Counterexample,
            Command::Conjecture(_) => Experiment::Conjecture,
        }
    }

    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Selftest(c)
            | Command::Brs(c)
            | Command::BpCheck(c)
            | Command::Symmetrize(c)
            | Command::Quermass(c)
            | Command::Intersection(c)
            | Command::Santalo(c)
            | Command::Conjecture(c) => c,
            Command::Counterexample(c) => &c.common,
        }
    }
}

fn default_samples(exp: Experiment) -> u64 {
    match exp {
        Experiment::Selftest => 1_000,
        Experiment::Counterexample => 10_000_000,
        Experiment::Symmetrize => 200_000,
        _ => 100_000,
    }
}

/// The scenario after applying command-line overrides; every budget and
/// the seed are explicit in the result.
pub fn resolve_scenario(cmd: &Command) -> Result<Scenario> {
    let exp = cmd.experiment();
    let c = cmd.common();
    let mut sc = match &c.config {
        Some(path) => load_scenario(path)?,
        None => experiments::default_scenario(
            exp,
            c.field.unwrap_or(Field::Complex),
            c.samples.unwrap_or(default_samples(exp)),
            c.seed.unwrap_or(42),
            c.workers.unwrap_or(1),
        ),
    };
    if let Some(f) = c.field {
        sc.field = f;
    }
    if let Some(s) = c.samples {
        sc.samples = s;
    }
    if let Some(s) = c.seed {
        sc.seed = s;
    }
    if let Some(w) = c.workers {
        sc.workers = w;
    }
    if let Command::Counterexample(args) = cmd {
        if let Some(a) = args.aspect {
            sc.aspect = Some(a);
        }
        if let Some(r) = args.r {
            sc.r = Some(r);
        }
    }
    sc.validate()?;
    Ok(sc)
}

/// Runs a command on a dedicated pool of `workers` threads.
pub fn execute(cmd: &Command) -> Result<Outcome> {
    let sc = resolve_scenario(cmd)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(sc.workers).build().context("building the worker pool")?;
    let out = pool.install(|| experiments::run(cmd.experiment(), &sc))?;
    match &cmd.common().out {
        Some(path) => write_outputs(path, cmd.experiment().name(), &out)?,
        None => write_csv(std::io::stdout().lock(), &out.rows)?,
    }
    Ok(out)
}

/// Runs the CLI and returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    match execute(&cli.command) {
        Ok(out) => {
            let mut err = std::io::stderr().lock();
            for line in &out.checks {
                let _ = writeln!(err, "{line}");
            }
            if out.passed {
                EXIT_OK
            } else {
                EXIT_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}
