//! Shrinking-target sequences `B(y, r_n)`: radius schedules, measure partial
//! sums and the radius-decay condition of the controlled-schedule theory.

use crate::error::{Error, Result};
use crate::systems::{Point, SystemSpec};

/// How many leading indices of a data-driven schedule are checked for
/// monotonicity at construction.
const PROBE: u64 = 10_000;

/// The catalog of inverse-f schedules: declarative handles, no user code.
#[derive(Clone, Debug, PartialEq)]
pub enum InverseF {
    /// `r_n = c · n^(−1/a)`, the inverse of `f(ρ) = (c/ρ)^a`.
    Power { c: f64, a: f64 },
    /// `r_n = c · n^(−1/a) / ln(e + n)^b` — a log-corrected power decay.
    LogPower { c: f64, a: f64, b: f64 },
}

impl InverseF {
    fn eval(&self, n: u64) -> f64 {
        let nf = n as f64;
        match *self {
            InverseF::Power { c, a } => c * nf.powf(-1.0 / a),
            InverseF::LogPower { c, a, b } => {
                c * nf.powf(-1.0 / a) / (std::f64::consts::E + nf).ln().powf(b)
            }
        }
    }
}

/// A non-increasing, positive radius schedule `r_1, r_2, …`.
#[derive(Clone, Debug, PartialEq)]
pub enum RadiusSchedule {
    /// `r_n = K · n^(−β)`.
    PowerLaw {
        coeff: f64,
        beta: f64,
    },
    /// `r_n = r0 · λ^n`.
    Geometric {
        r0: f64,
        lambda: f64,
    },
    Explicit(Vec<f64>),
    InverseF(InverseF),
}

impl RadiusSchedule {
    pub fn power_law(coeff: f64, beta: f64) -> Result<RadiusSchedule> {
        if coeff <= 0.0 {
            return Err(Error::config("power law K must be positive"));
        }
        if beta <= 0.0 {
            return Err(Error::config("power law beta must be positive"));
        }
        Ok(RadiusSchedule::PowerLaw { coeff, beta })
    }

    pub fn geometric(r0: f64, lambda: f64) -> Result<RadiusSchedule> {
        if r0 <= 0.0 {
            return Err(Error::config("geometric r0 must be positive"));
        }
        if !(0.0 < lambda && lambda < 1.0) {
            return Err(Error::config("lambda must be in (0,1)"));
        }
        Ok(RadiusSchedule::Geometric { r0, lambda })
    }

    pub fn explicit(values: Vec<f64>) -> Result<RadiusSchedule> {
        if values.is_empty() {
            return Err(Error::config("explicit schedule must be nonempty"));
        }
        for (i, w) in values.windows(2).enumerate() {
            if w[1] > w[0] {
                return Err(Error::config(format!(
                    "explicit schedule increases at index {}",
                    i + 2
                )));
            }
        }
        if values.iter().any(|&r| r <= 0.0 || !r.is_finite()) {
            return Err(Error::config("explicit radii must be positive and finite"));
        }
        Ok(RadiusSchedule::Explicit(values))
    }

    pub fn inverse_f(f: InverseF) -> Result<RadiusSchedule> {
        let (c, a) = match f {
            InverseF::Power { c, a } => (c, a),
            InverseF::LogPower { c, a, .. } => (c, a),
        };
        if c <= 0.0 || a <= 0.0 {
            return Err(Error::config("inverse-f parameters must be positive"));
        }
        let sched = RadiusSchedule::InverseF(f);
        let mut prev = f64::INFINITY;
        for n in 1..=PROBE {
            let r = sched.radius_at(n)?;
            if r <= 0.0 || r > prev {
                return Err(Error::config(format!(
                    "inverse-f schedule not positive non-increasing at n={n}"
                )));
            }
            prev = r;
        }
        Ok(sched)
    }

    /// The scheduled radius `r_n`, `n ≥ 1`.
    pub fn radius_at(&self, n: u64) -> Result<f64> {
        if n < 1 {
            return Err(Error::contract("schedule index starts at 1"));
        }
        match self {
            RadiusSchedule::PowerLaw { coeff, beta } => {
                // sqrt and reciprocal cover the common exponents cheaply
                let nf = n as f64;
                Ok(if *beta == 1.0 {
                    coeff / nf
                } else if *beta == 0.5 {
                    coeff / nf.sqrt()
                } else {
                    coeff * nf.powf(-beta)
                })
            }
            RadiusSchedule::Geometric { r0, lambda } => {
                // clamp away from f64 underflow so r_n stays positive
                Ok((r0 * lambda.powi(n.min(i32::MAX as u64) as i32)).max(f64::MIN_POSITIVE))
            }
            RadiusSchedule::Explicit(values) => {
                values
                    .get((n - 1) as usize)
                    .copied()
                    .ok_or(Error::ScheduleRange {
                        index: n,
                        len: values.len(),
                    })
            }
            RadiusSchedule::InverseF(f) => Ok(f.eval(n)),
        }
    }

    /// Largest index usable with this schedule (`u64::MAX` when unbounded).
    pub fn max_index(&self) -> u64 {
        match self {
            RadiusSchedule::Explicit(values) => values.len() as u64,
            _ => u64::MAX,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            RadiusSchedule::PowerLaw { coeff, beta } => format!("powerlaw K={coeff} beta={beta}"),
            RadiusSchedule::Geometric { r0, lambda } => {
                format!("geometric r0={r0} lambda={lambda}")
            }
            RadiusSchedule::Explicit(v) => format!("explicit ({} radii)", v.len()),
            RadiusSchedule::InverseF(InverseF::Power { c, a }) => {
                format!("inverse-f power c={c} a={a}")
            }
            RadiusSchedule::InverseF(InverseF::LogPower { c, a, b }) => {
                format!("inverse-f logpower c={c} a={a} b={b}")
            }
        }
    }
}

/// A shrinking target: a fixed centre with a radius schedule. The induced
/// ball sequence is decreasing by inclusion because the schedule is
/// non-increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetSequence {
    pub center: Point,
    pub schedule: RadiusSchedule,
}

impl TargetSequence {
    pub fn new(center: Point, schedule: RadiusSchedule) -> TargetSequence {
        TargetSequence { center, schedule }
    }
}

/// Growth class of the measure partial sums — the divergence diagnostic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthClass {
    Bounded,
    Logarithmic,
    Power,
}

/// Partial sums `Σ_{n≤N} μ(B(y, r_n))` at dyadic checkpoints.
#[derive(Clone, Debug)]
pub struct MeasureSeries {
    /// `(n, S_n)` at `n = 2, 4, 8, …` and at `N`.
    pub checkpoints: Vec<(u64, f64)>,
    pub final_sum: f64,
    pub growth: GrowthClass,
}

/// Exact partial sums of `ball_measure` along the schedule, with a fitted
/// growth class from the last dyadic increments. The class boundaries
/// (increment ratio 0.75 and 1.25) are a reporting convention.
pub fn measure_series(
    system: &SystemSpec,
    target: &TargetSequence,
    n_max: u64,
) -> Result<MeasureSeries> {
    if n_max < 1 {
        return Err(Error::contract("measure_series requires N >= 1"));
    }
    let mut sum = 0.0;
    let mut checkpoints = Vec::new();
    let mut next_cp = 2u64;
    for n in 1..=n_max {
        let r = target.schedule.radius_at(n)?;
        sum += system.ball_measure(&target.center, r)?;
        if n == next_cp {
            checkpoints.push((n, sum));
            next_cp *= 2;
        }
    }
    if checkpoints.last().map(|c| c.0) != Some(n_max) {
        checkpoints.push((n_max, sum));
    }
    let growth = classify_growth(&checkpoints);
    Ok(MeasureSeries {
        checkpoints,
        final_sum: sum,
        growth,
    })
}

fn classify_growth(checkpoints: &[(u64, f64)]) -> GrowthClass {
    // dyadic increments of the last few windows
    let mut increments = Vec::new();
    for w in checkpoints.windows(2) {
        if w[1].0 == w[0].0 * 2 {
            increments.push(w[1].1 - w[0].1);
        }
    }
    let tail: Vec<f64> = increments.iter().rev().take(4).copied().collect();
    if tail.len() < 2 {
        return GrowthClass::Logarithmic;
    }
    let mut ratios: Vec<f64> = tail
        .windows(2)
        .map(|w| if w[1] > 0.0 { w[0] / w[1] } else { 0.0 })
        .collect();
    ratios.sort_by(f64::total_cmp);
    let med = ratios[ratios.len() / 2];
    if med < 0.75 {
        GrowthClass::Bounded
    } else if med > 1.25 {
        GrowthClass::Power
    } else {
        GrowthClass::Logarithmic
    }
}

/// The radius-decay condition: estimate of `limsup_n log r_n / (−log n)`
/// (top-decade max) and its comparison against `1/d_lower`.
#[derive(Clone, Debug, serde::Serialize)]
pub struct MstCondition {
    pub estimate: f64,
    pub threshold: f64,
    pub satisfied: bool,
    /// Radii ≥ 1 appeared in the probe window: the condition is vacuous.
    pub trivially_satisfied: bool,
}

pub fn mst_condition(
    schedule: &RadiusSchedule,
    d_lower: f64,
    n_probe: u64,
) -> Result<MstCondition> {
    if d_lower <= 0.0 {
        return Err(Error::contract("d_lower must be positive"));
    }
    if n_probe < 100 {
        return Err(Error::contract("mst_condition requires n_probe >= 100"));
    }
    let n_probe = n_probe.min(schedule.max_index());
    let from = (n_probe / 10).max(2);
    let threshold = 1.0 / d_lower;
    let mut estimate = f64::NEG_INFINITY;
    let mut trivially = false;
    for n in from..=n_probe {
        let r = schedule.radius_at(n)?;
        if r >= 1.0 {
            trivially = true;
            continue;
        }
        estimate = estimate.max(r.ln() / -(n as f64).ln());
    }
    if estimate == f64::NEG_INFINITY {
        // every probed radius was ≥ 1
        return Ok(MstCondition {
            estimate: 0.0,
            threshold,
            satisfied: true,
            trivially_satisfied: true,
        });
    }
    Ok(MstCondition {
        estimate,
        threshold,
        satisfied: estimate < threshold,
        trivially_satisfied: trivially,
    })
}
