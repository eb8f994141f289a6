//! `lab` — run and validate orbit-statistics experiments, and replay the
//! brute-force oracles behind their expected values.
//!
//! Exit codes: 0 pass (or no acceptance band declared), 1 acceptance fail,
//! 2 config or usage error.

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use lab_core::config;
use lab_core::diophantine::AlphaValue;
use lab_core::oracles;
use lab_core::runner;
use lab_core::systems::{Point, SystemKind};
use lab_core::targets::TargetSequence;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config; rows go to the configured output (or
    /// stdout), the summary JSON to stdout (or stderr when rows use stdout).
    Run {
        config: PathBuf,
        /// Worker threads (overrides LAB_WORKERS; 0 = one per core).
        #[arg(long)]
        workers: Option<usize>,
        /// Override the output path from the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check a config without running any dynamics; prints diagnostics.
    Validate { config: PathBuf },
    /// Replay a brute-force oracle.
    #[command(subcommand)]
    Oracle(OracleOp),
}

#[derive(Subcommand)]
enum OracleOp {
    /// First entry of the orbit of x into B(y, r) by plain iteration.
    WaitingNaive(WaitingNaiveArgs),
    /// Continued fraction quotients and convergents of an exact input.
    Cf {
        #[arg(long)]
        alpha: String,
        #[arg(long, default_value_t = 10)]
        depth: usize,
    },
    /// Discontinuity-set gaps of an interval exchange, recomputed from
    /// scratch at a single n.
    GapsNaive {
        /// System fragment; must be an iet.
        #[arg(long)]
        system: String,
        #[arg(long)]
        n: u64,
    },
    /// Distinct circle gaps of {j·alpha : j = 0..n} (the three-distance
    /// structure).
    ThreeDistance {
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        n: u64,
    },
    /// Direct summation of the measure series of a target schedule.
    Series {
        #[arg(long)]
        system: String,
        #[arg(long)]
        schedule: String,
        #[arg(long, default_value = "0.5")]
        center: String,
        #[arg(long)]
        n: u64,
    },
}

#[derive(Args)]
struct WaitingNaiveArgs {
    /// System fragment, e.g. "expanding k=2".
    #[arg(long)]
    system: String,
    /// Start point coordinates, comma separated.
    #[arg(long)]
    x: String,
    /// Target centre coordinates.
    #[arg(long)]
    y: String,
    #[arg(long)]
    r: f64,
    #[arg(long, default_value_t = 1_000_000)]
    horizon: u64,
}

fn parse_point(s: &str) -> anyhow::Result<Point> {
    let coords: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().context("bad coordinate"))
        .collect::<anyhow::Result<_>>()?;
    Ok(Point::new(coords)?)
}

fn main() -> ExitCode {
    match run() {
        Ok(pass) => {
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run() -> anyhow::Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            workers,
            output,
        } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let base = config.parent().map(|p| p.to_path_buf());
            let mut cfg = config::parse_experiment(&text, base.as_deref())?;
            if let Some(out) = output {
                cfg.output = Some(out);
            }
            let outcome = runner::run(&cfg, workers)?;
            let summary = serde_json::to_string_pretty(&outcome.summary)?;
            if outcome.rows_path.is_some() {
                println!("{summary}");
            } else {
                eprintln!("{summary}");
            }
            Ok(outcome.passed())
        }
        Command::Validate { config } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let base = config.parent().map(|p| p.to_path_buf());
            let diagnostics = runner::validate_text(&text, base.as_deref());
            if diagnostics.is_empty() {
                println!("ok");
                Ok(true)
            } else {
                for d in &diagnostics {
                    println!("{d}");
                }
                bail!("{} diagnostic(s)", diagnostics.len())
            }
        }
        Command::Oracle(op) => {
            oracle(op)?;
            Ok(true)
        }
    }
}

fn oracle(op: OracleOp) -> anyhow::Result<()> {
    match op {
        OracleOp::WaitingNaive(args) => {
            let system = config::parse_system_fragment(&args.system)?;
            let x = parse_point(&args.x)?;
            let y = parse_point(&args.y)?;
            let tau = oracles::naive_first_entry(&system, &x, &y, args.r, args.horizon)?;
            println!("{tau}");
        }
        OracleOp::Cf { alpha, depth } => {
            let value = AlphaValue::parse(&alpha)?;
            let cf = lab_core::diophantine::cf_expand(&value, depth)?;
            println!("a0 = {}", cf.a0);
            println!(
                "quotients = {}",
                cf.quotients
                    .iter()
                    .map(|a| a.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            );
            for (i, (p, q)) in cf.convergents.iter().enumerate() {
                println!("p{i}/q{i} = {p}/{q}");
            }
        }
        OracleOp::GapsNaive { system, n } => {
            let system = config::parse_system_fragment(&system)?;
            let SystemKind::IntervalExchange(spec) = system.kind() else {
                bail!("gaps-naive needs an iet system");
            };
            let gaps = oracles::naive_gap_enumeration(spec, n)?;
            println!("points = {}", gaps.points.len() - 2);
            println!(
                "min_gap = {}",
                gaps.min_gap as f64 / lab_core::lattice::MODULUS as f64
            );
            println!("distinct_gap_count = {}", gaps.distinct.len());
        }
        OracleOp::ThreeDistance { alpha, n } => {
            let value = AlphaValue::parse(&alpha)?;
            let step = value.lattice_step()?;
            let gaps = oracles::rotation_orbit_gaps(step, n);
            println!("distinct_gap_count = {}", gaps.len());
            for g in &gaps {
                println!("{}", *g as f64 / lab_core::lattice::MODULUS as f64);
            }
        }
        OracleOp::Series {
            system,
            schedule,
            center,
            n,
        } => {
            let system = config::parse_system_fragment(&system)?;
            let schedule = config::parse_schedule_fragment(&schedule, None)?;
            let center = parse_point(&center)?;
            let target = TargetSequence::new(center, schedule);
            let sum = oracles::naive_measure_sum(&system, &target, n)?;
            println!("{sum}");
        }
    }
    Ok(())
}
