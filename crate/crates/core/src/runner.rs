//! Experiment runner: seeded trial generation, parallel execution and
//! machine-readable result emission.
//!
//! Reproducibility contract: a run is fully determined by its config. Each
//! trial draws from `ChaCha8` keyed by the master seed with the trial index
//! as the stream (a counter-based splittable scheme), trials are merged in
//! index order, and the row stream is byte-identical for any worker count.
//! Wall-clock time appears only in the summary, never in rows.

use crate::config;
use crate::diophantine::{self, AlphaValue};
use crate::error::{Error, Result};
use crate::estimators::{self, DimensionMethod};
use crate::hitstats::{self, quantiles, Quantiles};
use crate::iet::{self, IetSpec};
use crate::systems::{Point, SystemKind, SystemSpec};
use crate::targets::{RadiusSchedule, TargetSequence};
use crate::waiting;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

/// The per-trial generator: `ChaCha8` keyed by the master seed, stream =
/// trial index. Streams are independent, so trial `i`'s draws do not depend
/// on how many trials run or in what order.
pub fn trial_rng(master_seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial_index);
    rng
}

/// Worker count: explicit override, else `LAB_WORKERS`, else rayon default.
pub fn resolve_workers(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| {
            std::env::var("LAB_WORKERS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    JsonLines,
    Csv,
}

#[derive(Clone, Debug)]
pub enum CenterSpec {
    Random,
    Fixed(Point),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    WaitingExponent,
    SbcRatio,
    BcProxy,
    StallCompare,
    Dimension,
    Recurrence,
    DiophantineScan,
    IetGaps,
    IetBound,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Result<ExperimentKind> {
        Ok(match s {
            "waiting-exponent" => ExperimentKind::WaitingExponent,
            "sbc-ratio" => ExperimentKind::SbcRatio,
            "bc-proxy" => ExperimentKind::BcProxy,
            "stall-compare" => ExperimentKind::StallCompare,
            "dimension" => ExperimentKind::Dimension,
            "recurrence" => ExperimentKind::Recurrence,
            "diophantine-scan" => ExperimentKind::DiophantineScan,
            "iet-gaps" => ExperimentKind::IetGaps,
            "iet-bound" => ExperimentKind::IetBound,
            other => return Err(Error::config(format!("unknown experiment kind {other:?}"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::WaitingExponent => "waiting-exponent",
            ExperimentKind::SbcRatio => "sbc-ratio",
            ExperimentKind::BcProxy => "bc-proxy",
            ExperimentKind::StallCompare => "stall-compare",
            ExperimentKind::Dimension => "dimension",
            ExperimentKind::Recurrence => "recurrence",
            ExperimentKind::DiophantineScan => "diophantine-scan",
            ExperimentKind::IetGaps => "iet-gaps",
            ExperimentKind::IetBound => "iet-bound",
        }
    }
}

/// Experiment-specific knobs with sane defaults.
#[derive(Clone, Debug)]
pub struct Params {
    pub epsilon: f64,
    pub beta: f64,
    pub q_max: u64,
    pub n_max: u64,
    pub tail_fraction: f64,
    pub burn_in_k0: u32,
    pub bound_c: Option<f64>,
    pub scales: usize,
    pub method: DimensionMethod,
    pub self_recurrence: bool,
    pub alpha: Option<Vec<AlphaValue>>,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            epsilon: 1.0,
            beta: 1.0,
            q_max: 100_000,
            n_max: 10_000,
            tail_fraction: 0.25,
            burn_in_k0: 4,
            bound_c: None,
            scales: 3,
            method: DimensionMethod::WaitingTime,
            self_recurrence: false,
            alpha: None,
        }
    }
}

/// Declared acceptance bands; echoed in the summary and controlling the
/// process exit status. `median_*` constrain the headline statistic,
/// `band_*` the per-trial statistics, `value_*` run-level scalars.
#[derive(Clone, Debug, Default, Serialize)]
pub struct AcceptanceBand {
    pub median_min: Option<f64>,
    pub median_max: Option<f64>,
    pub band_lo: Option<f64>,
    pub band_hi: Option<f64>,
    pub band_frac_min: Option<f64>,
    pub value_min: Option<f64>,
    pub value_max: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub trials: u32,
    pub master_seed: u64,
    pub horizon: u64,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    pub system: Option<SystemSpec>,
    pub system_b: Option<SystemSpec>,
    pub schedule: Option<RadiusSchedule>,
    pub center: CenterSpec,
    pub radii: Option<Vec<f64>>,
    pub params: Params,
    pub acceptance: Option<AcceptanceBand>,
}

impl ExperimentConfig {
    fn system(&self) -> Result<&SystemSpec> {
        self.system
            .as_ref()
            .ok_or_else(|| Error::config("this experiment needs a [system] section"))
    }

    fn schedule(&self) -> Result<&RadiusSchedule> {
        self.schedule
            .as_ref()
            .ok_or_else(|| Error::config("this experiment needs [target] schedule = …"))
    }

    fn iet(&self) -> Result<&IetSpec> {
        match self.system()?.kind() {
            SystemKind::IntervalExchange(spec) => Ok(spec),
            _ => Err(Error::config(
                "this experiment needs an interval-exchange system (iet …)",
            )),
        }
    }

    /// Cross-field checks performed at parse time, before any dynamics run.
    pub fn validate_cross_fields(&self) -> Result<()> {
        let p = &self.params;
        if !(0.0 < p.tail_fraction && p.tail_fraction < 1.0) {
            return Err(Error::config("tail_fraction must be in (0,1)"));
        }
        if p.epsilon <= 0.0 {
            return Err(Error::config("epsilon must be positive"));
        }
        if p.beta <= 0.0 {
            return Err(Error::config("beta must be positive"));
        }
        if p.scales == 0 {
            return Err(Error::config("scales must be >= 1"));
        }
        if let (CenterSpec::Fixed(c), Some(sys)) = (&self.center, &self.system) {
            if c.dim() != sys.dimension() {
                return Err(Error::config(format!(
                    "dimension mismatch: target center has dimension {}, system has {}",
                    c.dim(),
                    sys.dimension()
                )));
            }
        }
        match self.kind {
            ExperimentKind::WaitingExponent => {
                self.system()?;
                let radii = self
                    .radii
                    .as_ref()
                    .ok_or_else(|| Error::config("waiting-exponent needs a [radii] section"))?;
                check_decreasing(radii)?;
            }
            ExperimentKind::SbcRatio | ExperimentKind::BcProxy => {
                self.system()?;
                let sched = self.schedule()?;
                if sched.max_index() < self.horizon {
                    return Err(Error::config(format!(
                        "explicit schedule has {} radii but horizon is {}",
                        sched.max_index(),
                        self.horizon
                    )));
                }
            }
            ExperimentKind::StallCompare => {
                let a = self.system()?;
                let b = self
                    .system_b
                    .as_ref()
                    .ok_or_else(|| Error::config("stall-compare needs a [system_b] section"))?;
                if a.dimension() != b.dimension()
                    || a.uses_interval_metric() != b.uses_interval_metric()
                {
                    return Err(Error::config(
                        "dimension mismatch: stall-compare systems must share a space",
                    ));
                }
                self.schedule()?;
            }
            ExperimentKind::Dimension => {
                self.system()?;
                let radii = self
                    .radii
                    .as_ref()
                    .ok_or_else(|| Error::config("dimension needs a [radii] section"))?;
                check_decreasing(radii)?;
            }
            ExperimentKind::Recurrence => {
                self.system()?;
            }
            ExperimentKind::DiophantineScan => {
                if p.alpha.is_none() {
                    return Err(Error::config("diophantine-scan needs [params] alpha = …"));
                }
                if p.q_max < 1 {
                    return Err(Error::config("q_max must be >= 1"));
                }
            }
            ExperimentKind::IetGaps => {
                self.iet()?;
                if p.n_max < 10 {
                    return Err(Error::config("n_max must be >= 10"));
                }
            }
            ExperimentKind::IetBound => {
                self.iet()?;
                if let Some(c) = p.bound_c {
                    if c <= 0.0 {
                        return Err(Error::config("c must be positive"));
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_decreasing(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::config("radii list is empty"));
    }
    for w in radii.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::config("radii must be strictly decreasing"));
        }
    }
    if radii[radii.len() - 1] <= 0.0 {
        return Err(Error::config("radii must be positive"));
    }
    Ok(())
}

/// One output row. JSON-lines is the canonical format; the CSV view keeps
/// each experiment's primary row type only.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Row {
    Waiting {
        system: String,
        trial: u64,
        x: Vec<f64>,
        y: Vec<f64>,
        r: f64,
        tau: String,
        mu_ball: f64,
        exponent: Option<f64>,
    },
    Hit {
        system: String,
        trial: u64,
        n: u64,
        s_n: u64,
        sum_mu: f64,
        ratio: f64,
        last_hit: u64,
        max_gap: u64,
    },
    Proxy {
        system: String,
        trial: u64,
        windows_ok: bool,
        last_hit: u64,
        max_gap_ratio: f64,
    },
    Dimension {
        system: String,
        trial: u64,
        method: String,
        y: Vec<f64>,
        r: f64,
        statistic: f64,
        censored: u64,
    },
    Recurrence {
        system: String,
        trial: u64,
        beta: f64,
        n: u64,
        running_min: f64,
    },
    Scan {
        alpha: String,
        q_max: u64,
        c_min: f64,
        argmin_q: u64,
    },
    Gap {
        system: String,
        n: u64,
        delta: f64,
        n_delta: f64,
        distinct_gaps: u64,
    },
    Bound {
        system: String,
        trial: u64,
        rho: f64,
        tau: String,
        bound: f64,
        ok: bool,
    },
}

fn join_coords(c: &[f64]) -> String {
    c.iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(";")
}

impl Row {
    pub fn csv_header(kind: ExperimentKind) -> &'static str {
        match kind {
            ExperimentKind::WaitingExponent => "system,trial,x,y,r,tau,mu_ball,exponent",
            ExperimentKind::SbcRatio => "system,trial,n,s_n,sum_mu,ratio,last_hit,max_gap",
            ExperimentKind::BcProxy | ExperimentKind::StallCompare => {
                "system,trial,windows_ok,last_hit,max_gap_ratio"
            }
            ExperimentKind::Dimension => "system,trial,method,y,r,statistic,censored",
            ExperimentKind::Recurrence => "system,trial,beta,n,running_min",
            ExperimentKind::DiophantineScan => "alpha,q_max,c_min,argmin_q",
            ExperimentKind::IetGaps => "system,n,delta_n,n_delta,distinct_gaps",
            ExperimentKind::IetBound => "system,trial,rho,tau,bound,ok",
        }
    }

    /// The CSV projection, `None` when the row is not part of the primary
    /// view for this experiment kind.
    pub fn csv_line(&self, kind: ExperimentKind) -> Option<String> {
        match (kind, self) {
            (
                ExperimentKind::WaitingExponent,
                Row::Waiting {
                    system,
                    trial,
                    x,
                    y,
                    r,
                    tau,
                    mu_ball,
                    exponent,
                },
            ) => Some(format!(
                "{system},{trial},{},{},{r},{tau},{mu_ball},{}",
                join_coords(x),
                join_coords(y),
                exponent.map(|e| e.to_string()).unwrap_or_default()
            )),
            (
                ExperimentKind::SbcRatio,
                Row::Hit {
                    system,
                    trial,
                    n,
                    s_n,
                    sum_mu,
                    ratio,
                    last_hit,
                    max_gap,
                },
            ) => Some(format!(
                "{system},{trial},{n},{s_n},{sum_mu},{ratio},{last_hit},{max_gap}"
            )),
            (
                ExperimentKind::BcProxy | ExperimentKind::StallCompare,
                Row::Proxy {
                    system,
                    trial,
                    windows_ok,
                    last_hit,
                    max_gap_ratio,
                },
            ) => Some(format!(
                "{system},{trial},{windows_ok},{last_hit},{max_gap_ratio}"
            )),
            (
                ExperimentKind::Dimension,
                Row::Dimension {
                    system,
                    trial,
                    method,
                    y,
                    r,
                    statistic,
                    censored,
                },
            ) => Some(format!(
                "{system},{trial},{method},{},{r},{statistic},{censored}",
                join_coords(y)
            )),
            (
                ExperimentKind::Recurrence,
                Row::Recurrence {
                    system,
                    trial,
                    beta,
                    n,
                    running_min,
                },
            ) => Some(format!("{system},{trial},{beta},{n},{running_min}")),
            (
                ExperimentKind::DiophantineScan,
                Row::Scan {
                    alpha,
                    q_max,
                    c_min,
                    argmin_q,
                },
            ) => Some(format!("{alpha},{q_max},{c_min},{argmin_q}")),
            (
                ExperimentKind::IetGaps,
                Row::Gap {
                    system,
                    n,
                    delta,
                    n_delta,
                    distinct_gaps,
                },
            ) => Some(format!("{system},{n},{delta},{n_delta},{distinct_gaps}")),
            (
                ExperimentKind::IetBound,
                Row::Bound {
                    system,
                    trial,
                    rho,
                    tau,
                    bound,
                    ok,
                },
            ) => Some(format!("{system},{trial},{rho},{tau},{bound},{ok}")),
            _ => None,
        }
    }
}

struct TrialOutput {
    rows: Vec<Row>,
    /// The per-trial headline statistic; `None` marks a censored trial.
    stat: Option<f64>,
    /// (mgr_a, mgr_b, win_a, win_b) for paired stall comparisons.
    pair: Option<(f64, f64, bool, bool)>,
    censored_entries: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AcceptanceOutcome {
    pub declared: AcceptanceBand,
    pub band_fraction: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentSummary {
    pub kind: String,
    pub system: Option<String>,
    pub system_b: Option<String>,
    pub trials: u32,
    pub master_seed: u64,
    pub headline: f64,
    pub headline_desc: String,
    pub quantiles: Option<Quantiles>,
    pub censored_trials: u32,
    pub censored_entries: u64,
    pub acceptance: Option<AcceptanceOutcome>,
    pub wall_ms: u128,
    pub extra: serde_json::Value,
}

pub struct RunOutcome {
    pub summary: ExperimentSummary,
    /// Where rows were written (`None` means stdout).
    pub rows_path: Option<PathBuf>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.summary
            .acceptance
            .as_ref()
            .map(|a| a.pass)
            .unwrap_or(true)
    }
}

/// Execute a config: run all trials (in parallel, merged by trial index),
/// write the row stream, and compute the summary.
pub fn run(config: &ExperimentConfig, workers: Option<usize>) -> Result<RunOutcome> {
    config.validate_cross_fields()?;
    let start = Instant::now();
    let workers = resolve_workers(workers);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config(format!("worker pool: {e}")))?;

    // deterministic single-shot kinds run once regardless of `trials`
    let effective_trials = match config.kind {
        ExperimentKind::DiophantineScan | ExperimentKind::IetGaps => 1,
        _ => config.trials,
    };

    // precompute shared deterministic inputs for the bound check
    let bound_setup = if config.kind == ExperimentKind::IetBound {
        Some(prepare_bound_setup(config)?)
    } else {
        None
    };

    let outputs: Vec<TrialOutput> = pool.install(|| {
        (0..effective_trials as u64)
            .into_par_iter()
            .map(|i| run_trial(config, i, bound_setup.as_ref()))
            .collect::<Result<Vec<_>>>()
    })?;

    // merge rows in trial order
    let mut rows = Vec::new();
    let mut stats = Vec::new();
    let mut pairs = Vec::new();
    let mut censored_trials = 0u32;
    let mut censored_entries = 0u64;
    for out in &outputs {
        rows.extend(out.rows.iter().cloned());
        match out.stat {
            Some(s) => stats.push(s),
            None => censored_trials += 1,
        }
        if let Some(p) = out.pair {
            pairs.push(p);
        }
        censored_entries += out.censored_entries;
    }

    let (headline, headline_desc, extra) = aggregate(config, &stats, &pairs, &outputs)?;
    let q = if stats.is_empty() {
        None
    } else {
        Some(quantiles(&stats))
    };
    let acceptance = config.acceptance.as_ref().map(|band| {
        let median = q.map(|qq| qq.p50).unwrap_or(f64::NAN);
        let band_fraction = match (band.band_lo, band.band_hi) {
            (None, None) => None,
            (lo, hi) => {
                let lo = lo.unwrap_or(f64::NEG_INFINITY);
                let hi = hi.unwrap_or(f64::INFINITY);
                let inside = stats.iter().filter(|s| **s >= lo && **s <= hi).count();
                Some(if stats.is_empty() {
                    0.0
                } else {
                    inside as f64 / stats.len() as f64
                })
            }
        };
        let mut pass = true;
        if let Some(m) = band.median_min {
            pass &= median >= m;
        }
        if let Some(m) = band.median_max {
            pass &= median <= m;
        }
        if let Some(f) = band.band_frac_min {
            pass &= band_fraction.map(|bf| bf >= f).unwrap_or(false);
        }
        if let Some(v) = band.value_min {
            pass &= headline >= v;
        }
        if let Some(v) = band.value_max {
            pass &= headline <= v;
        }
        AcceptanceOutcome {
            declared: band.clone(),
            band_fraction,
            pass,
        }
    });

    let summary = ExperimentSummary {
        kind: config.kind.name().to_string(),
        system: config.system.as_ref().map(|s| s.id()),
        system_b: config.system_b.as_ref().map(|s| s.id()),
        trials: effective_trials,
        master_seed: config.master_seed,
        headline,
        headline_desc,
        quantiles: q,
        censored_trials,
        censored_entries,
        acceptance,
        wall_ms: start.elapsed().as_millis(),
        extra,
    };

    write_rows(config, &rows)?;
    Ok(RunOutcome {
        summary,
        rows_path: config.output.clone(),
    })
}

fn write_rows(config: &ExperimentConfig, rows: &[Row]) -> Result<()> {
    let mut sink: Box<dyn Write> = match &config.output {
        Some(path) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(path).map_err(|e| Error::Io {
                path: path.display().to_string(),
                source: e,
            })?,
        )),
        None => Box::new(std::io::BufWriter::new(std::io::stdout())),
    };
    let io_err = |e: std::io::Error| Error::Io {
        path: config
            .output
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "<stdout>".into()),
        source: e,
    };
    match config.format {
        OutputFormat::JsonLines => {
            for row in rows {
                let line = serde_json::to_string(row)
                    .map_err(|e| Error::config(format!("serialising row: {e}")))?;
                sink.write_all(line.as_bytes()).map_err(io_err)?;
                sink.write_all(b"\n").map_err(io_err)?;
            }
        }
        OutputFormat::Csv => {
            sink.write_all(Row::csv_header(config.kind).as_bytes())
                .map_err(io_err)?;
            sink.write_all(b"\n").map_err(io_err)?;
            for row in rows {
                if let Some(line) = row.csv_line(config.kind) {
                    sink.write_all(line.as_bytes()).map_err(io_err)?;
                    sink.write_all(b"\n").map_err(io_err)?;
                }
            }
        }
    }
    sink.flush().map_err(io_err)?;
    Ok(())
}

struct BoundSetup {
    c: f64,
    rhos: Vec<f64>,
}

fn prepare_bound_setup(config: &ExperimentConfig) -> Result<BoundSetup> {
    let spec = config.iet()?;
    let scan = iet::p_tilde_scan(spec, config.params.n_max)?;
    let c = config.params.bound_c.unwrap_or(scan.tail_best);
    if c <= 0.0 {
        return Err(Error::config("derived bound constant C is not positive"));
    }
    // scales matched to the achieving indices: ρ = δ(n) = (n·δ(n))/n
    let mut rhos: Vec<f64> = scan
        .achievers
        .iter()
        .map(|(n, nd)| nd / *n as f64)
        .collect();
    rhos.sort_by(|a, b| b.total_cmp(a));
    rhos.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    rhos.truncate(config.params.scales);
    if rhos.is_empty() {
        return Err(Error::config("no achieving scales found"));
    }
    Ok(BoundSetup { c, rhos })
}

fn center_point(config: &ExperimentConfig, rng: &mut ChaCha8Rng, dim: usize) -> Point {
    match &config.center {
        CenterSpec::Fixed(p) => p.clone(),
        CenterSpec::Random => hitstats::random_point(rng, dim),
    }
}

fn run_trial(
    config: &ExperimentConfig,
    index: u64,
    bound_setup: Option<&BoundSetup>,
) -> Result<TrialOutput> {
    let mut rng = trial_rng(config.master_seed, index);
    match config.kind {
        ExperimentKind::WaitingExponent => {
            let system = config.system()?;
            let dim = system.dimension();
            let x = hitstats::random_point(&mut rng, dim);
            let y = center_point(config, &mut rng, dim);
            let radii = config.radii.as_ref().unwrap();
            let scan = waiting::exponent_scan(system, &x, &y, radii, config.horizon)?;
            let rows = scan
                .entries
                .iter()
                .map(|e| Row::Waiting {
                    system: system.id(),
                    trial: index,
                    x: x.coords().to_vec(),
                    y: y.coords().to_vec(),
                    r: e.r,
                    tau: e.tau.to_string(),
                    mu_ball: e.mu_ball,
                    exponent: e.exponent,
                })
                .collect();
            let stat = scan.tail_pooled_exponent(config.params.tail_fraction).ok();
            Ok(TrialOutput {
                rows,
                stat,
                pair: None,
                censored_entries: scan.censored_count() as u64,
            })
        }
        ExperimentKind::SbcRatio | ExperimentKind::BcProxy => {
            let system = config.system()?;
            let dim = system.dimension();
            let x = hitstats::random_point(&mut rng, dim);
            let y = center_point(config, &mut rng, dim);
            let target = TargetSequence::new(y, config.schedule()?.clone());
            let series = hitstats::hit_stats(system, &x, &target, config.horizon)?;
            let mut rows: Vec<Row> = series
                .checkpoints
                .iter()
                .map(|cp| Row::Hit {
                    system: system.id(),
                    trial: index,
                    n: cp.n,
                    s_n: cp.s_n,
                    sum_mu: cp.sum_mu,
                    ratio: cp.ratio,
                    last_hit: cp.last_hit,
                    max_gap: cp.max_gap,
                })
                .collect();
            let stat = if config.kind == ExperimentKind::BcProxy {
                let proxy = hitstats::bc_proxy(&series, config.params.burn_in_k0);
                rows.push(Row::Proxy {
                    system: system.id(),
                    trial: index,
                    windows_ok: proxy.hits_in_every_dyadic_window,
                    last_hit: proxy.last_hit,
                    max_gap_ratio: proxy.max_gap_ratio,
                });
                Some(if proxy.hits_in_every_dyadic_window {
                    1.0
                } else {
                    0.0
                })
            } else {
                Some(series.final_stats.ratio)
            };
            Ok(TrialOutput {
                rows,
                stat,
                pair: None,
                censored_entries: 0,
            })
        }
        ExperimentKind::StallCompare => {
            let system_a = config.system()?;
            let system_b = config.system_b.as_ref().unwrap();
            let dim = system_a.dimension();
            let x = hitstats::random_point(&mut rng, dim);
            let y = center_point(config, &mut rng, dim);
            let schedule = config.schedule()?;
            let mut rows = Vec::new();
            let mut arm = |sys: &SystemSpec| -> Result<(f64, bool)> {
                let target = TargetSequence::new(y.clone(), schedule.clone());
                let series = hitstats::hit_stats(sys, &x, &target, config.horizon)?;
                let proxy = hitstats::bc_proxy(&series, config.params.burn_in_k0);
                rows.push(Row::Proxy {
                    system: sys.id(),
                    trial: index,
                    windows_ok: proxy.hits_in_every_dyadic_window,
                    last_hit: proxy.last_hit,
                    max_gap_ratio: proxy.max_gap_ratio,
                });
                Ok((proxy.max_gap_ratio, proxy.hits_in_every_dyadic_window))
            };
            let (mgr_a, win_a) = arm(system_a)?;
            let (mgr_b, win_b) = arm(system_b)?;
            Ok(TrialOutput {
                rows,
                stat: None,
                pair: Some((mgr_a, mgr_b, win_a, win_b)),
                censored_entries: 0,
            })
        }
        ExperimentKind::Dimension => {
            let system = config.system()?;
            let dim = system.dimension();
            let x = hitstats::random_point(&mut rng, dim);
            let y = center_point(config, &mut rng, dim);
            let radii = config.radii.as_ref().unwrap();
            let est = match config.params.method {
                DimensionMethod::MeasureSlope => {
                    estimators::dimension_from_measure(system, &y, radii)?
                }
                DimensionMethod::WaitingTime => {
                    estimators::dimension_from_waiting(system, &x, &y, radii, config.horizon)?
                }
            };
            let method = match est.method {
                DimensionMethod::MeasureSlope => "measure",
                DimensionMethod::WaitingTime => "waiting",
            };
            let rows = est
                .samples
                .iter()
                .map(|(r, stat)| Row::Dimension {
                    system: system.id(),
                    trial: index,
                    method: method.to_string(),
                    y: y.coords().to_vec(),
                    r: *r,
                    statistic: *stat,
                    censored: est.censored as u64,
                })
                .collect();
            Ok(TrialOutput {
                rows,
                stat: Some(0.5 * (est.d_lower_proxy + est.d_upper_proxy)),
                pair: None,
                censored_entries: est.censored as u64,
            })
        }
        ExperimentKind::Recurrence => {
            let system = config.system()?;
            let dim = system.dimension();
            let x = hitstats::random_point(&mut rng, dim);
            let target = if config.params.self_recurrence {
                None
            } else {
                Some(center_point(config, &mut rng, dim))
            };
            let q = estimators::recurrence_liminf(
                system,
                &x,
                config.params.beta,
                config.horizon,
                target.as_ref(),
            )?;
            let rows = q
                .running_min
                .iter()
                .map(|(n, v)| Row::Recurrence {
                    system: system.id(),
                    trial: index,
                    beta: config.params.beta,
                    n: *n,
                    running_min: *v,
                })
                .collect();
            Ok(TrialOutput {
                rows,
                stat: Some(q.final_min),
                pair: None,
                censored_entries: 0,
            })
        }
        ExperimentKind::DiophantineScan => {
            let alpha = config.params.alpha.as_ref().unwrap();
            let report = diophantine::constant_type_scan(alpha, config.params.q_max)?;
            let rows = report
                .decade_minima
                .iter()
                .map(|(q, c)| Row::Scan {
                    alpha: report.alpha.clone(),
                    q_max: *q,
                    c_min: *c,
                    argmin_q: report.argmin_q,
                })
                .collect();
            Ok(TrialOutput {
                rows,
                stat: Some(report.c_min),
                pair: None,
                censored_entries: 0,
            })
        }
        ExperimentKind::IetGaps => {
            let spec = config.iet()?;
            let system_id = config.system()?.id();
            let profile = iet::gap_profile(spec, config.params.n_max)?;
            let scan = iet::p_tilde_scan(spec, config.params.n_max)?;
            let rows = profile
                .entries
                .iter()
                .map(|e| Row::Gap {
                    system: system_id.clone(),
                    n: e.n,
                    delta: e.delta,
                    n_delta: e.n_delta,
                    distinct_gaps: e.distinct_gaps as u64,
                })
                .collect();
            Ok(TrialOutput {
                rows,
                stat: Some(scan.tail_best),
                pair: None,
                censored_entries: 0,
            })
        }
        ExperimentKind::IetBound => {
            let system = config.system()?;
            let setup = bound_setup.expect("prepared for iet-bound");
            let dim = system.dimension();
            let x = hitstats::random_point(&mut rng, dim);
            let y = center_point(config, &mut rng, dim);
            let mut rows = Vec::new();
            let mut ok_count = 0usize;
            let mut exceeded = 0u64;
            for &rho in &setup.rhos {
                let bound = 4.0 / (setup.c * rho);
                let tau = waiting::waiting_time(system, &x, &y, rho, config.horizon)?;
                let ok = tau.hit().map(|t| t as f64 <= bound).unwrap_or(false);
                if tau.is_exceeded() {
                    exceeded += 1;
                }
                if ok {
                    ok_count += 1;
                }
                rows.push(Row::Bound {
                    system: system.id(),
                    trial: index,
                    rho,
                    tau: tau.to_string(),
                    bound,
                    ok,
                });
            }
            Ok(TrialOutput {
                rows,
                stat: Some(ok_count as f64 / setup.rhos.len() as f64),
                pair: None,
                censored_entries: exceeded,
            })
        }
    }
}

fn aggregate(
    config: &ExperimentConfig,
    stats: &[f64],
    pairs: &[(f64, f64, bool, bool)],
    _outputs: &[TrialOutput],
) -> Result<(f64, String, serde_json::Value)> {
    let median = |v: &[f64]| -> f64 {
        if v.is_empty() {
            f64::NAN
        } else {
            quantiles(v).p50
        }
    };
    Ok(match config.kind {
        ExperimentKind::WaitingExponent => (
            median(stats),
            "median per-trial pooled tail exponent".into(),
            serde_json::Value::Null,
        ),
        ExperimentKind::SbcRatio => (
            median(stats),
            "median final ratio S_N / sum mu".into(),
            serde_json::Value::Null,
        ),
        ExperimentKind::BcProxy => {
            let frac = if stats.is_empty() {
                f64::NAN
            } else {
                stats.iter().sum::<f64>() / stats.len() as f64
            };
            (
                frac,
                "fraction of trials with hits in every dyadic window".into(),
                serde_json::Value::Null,
            )
        }
        ExperimentKind::StallCompare => {
            let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let med_a = median(&a);
            let med_b = median(&b);
            let ratio = if med_a == 0.0 {
                if med_b == 0.0 {
                    1.0
                } else {
                    f64::INFINITY
                }
            } else {
                med_b / med_a
            };
            let win_a = pairs.iter().filter(|p| p.2).count() as f64 / pairs.len().max(1) as f64;
            let win_b = pairs.iter().filter(|p| p.3).count() as f64 / pairs.len().max(1) as f64;
            let extra = serde_json::json!({
                "a": {
                    "system": config.system.as_ref().map(|s| s.id()),
                    "max_gap_ratio": quantiles(&a),
                    "window_pass_fraction": win_a,
                },
                "b": {
                    "system": config.system_b.as_ref().map(|s| s.id()),
                    "max_gap_ratio": quantiles(&b),
                    "window_pass_fraction": win_b,
                },
            });
            (
                ratio,
                "median max_gap_ratio of system_b over system_a".into(),
                extra,
            )
        }
        ExperimentKind::Dimension => (
            median(stats),
            "median per-trial dimension estimate (midpoint of proxies)".into(),
            serde_json::Value::Null,
        ),
        ExperimentKind::Recurrence => (
            median(stats),
            format!(
                "median final running min of n^beta*d, beta={}",
                config.params.beta
            ),
            serde_json::Value::Null,
        ),
        ExperimentKind::DiophantineScan => (
            stats.first().copied().unwrap_or(f64::NAN),
            "c_min over the scanned range".into(),
            serde_json::Value::Null,
        ),
        ExperimentKind::IetGaps => {
            let spec = config.iet()?;
            let scan = iet::p_tilde_scan(spec, config.params.n_max)?;
            let extra = serde_json::to_value(&scan)
                .map_err(|e| Error::config(format!("serialising scan: {e}")))?;
            (
                stats.first().copied().unwrap_or(f64::NAN),
                "tail_best of n*delta(n) over the top decade".into(),
                extra,
            )
        }
        ExperimentKind::IetBound => {
            let frac = if stats.is_empty() {
                f64::NAN
            } else {
                stats.iter().sum::<f64>() / stats.len() as f64
            };
            (
                frac,
                "fraction of (trial, scale) pairs with tau <= 4/(C*rho)".into(),
                serde_json::Value::Null,
            )
        }
    })
}

/// Re-parse and fully validate a config text (used by `lab validate`).
pub fn validate_text(text: &str, base: Option<&std::path::Path>) -> Vec<String> {
    config::validate_experiment(text, base)
}
