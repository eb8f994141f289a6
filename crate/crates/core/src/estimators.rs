//! Local dimension estimation and the running minimum of `n^β · d(T^n x, y)`.
//!
//! Two routes to the local dimension at `y`: the measure slope
//! `log μ(B(y,r)) / log r` (analytic for Haar–Lebesgue systems) and the
//! waiting-time statistic `log τ_{B(y,r)}(x) / (−log r)`, whose tail scaling
//! upper-bounds the dimension for general systems.

use crate::error::{Error, Result};
use crate::lattice;
use crate::systems::{Point, SystemSpec};
use crate::waiting::{self, Tau};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DimensionMethod {
    MeasureSlope,
    WaitingTime,
}

/// A per-radius statistic list with tail liminf/limsup proxies.
#[derive(Clone, Debug, Serialize)]
pub struct DimensionEstimate {
    pub y: Point,
    pub method: DimensionMethod,
    pub d_lower_proxy: f64,
    pub d_upper_proxy: f64,
    /// `(r, statistic)` in scan order (decreasing radius).
    pub samples: Vec<(f64, f64)>,
    /// Censored waiting-time entries (always 0 for the measure route).
    pub censored: usize,
}

/// Tail window over the smallest 25% of radii — the same convention as the
/// waiting-time proxies.
const TAIL_FRACTION: f64 = 0.25;

fn tail_min_max(samples: &[(f64, f64)]) -> (f64, f64) {
    let take = ((samples.len() as f64 * TAIL_FRACTION).ceil() as usize).clamp(2, samples.len());
    let tail = &samples[samples.len() - take..];
    let lo = tail.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let hi = tail.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.len() < 4 {
        return Err(Error::contract("dimension estimation needs >= 4 radii"));
    }
    for w in radii.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::contract("radii must be strictly decreasing"));
        }
    }
    if radii[0] >= 0.5 || radii[radii.len() - 1] <= 0.0 {
        return Err(Error::contract("radii must lie in (0, 1/2)"));
    }
    Ok(())
}

/// Dimension from the measure slope `log μ(B(y,r)) / log r` per radius.
pub fn dimension_from_measure(
    system: &SystemSpec,
    y: &Point,
    radii: &[f64],
) -> Result<DimensionEstimate> {
    check_radii(radii)?;
    let samples = radii
        .iter()
        .map(|&r| {
            let mu = system.ball_measure(y, r)?;
            Ok((r, mu.ln() / r.ln()))
        })
        .collect::<Result<Vec<_>>>()?;
    let (lo, hi) = tail_min_max(&samples);
    Ok(DimensionEstimate {
        y: y.clone(),
        method: DimensionMethod::MeasureSlope,
        d_lower_proxy: lo,
        d_upper_proxy: hi,
        samples,
        censored: 0,
    })
}

/// Dimension from waiting times: `log τ / (−log r)` per resolved radius;
/// censored entries are excluded and counted.
pub fn dimension_from_waiting(
    system: &SystemSpec,
    x: &Point,
    y: &Point,
    radii: &[f64],
    horizon: u64,
) -> Result<DimensionEstimate> {
    check_radii(radii)?;
    let scan = waiting::exponent_scan(system, x, y, radii, horizon)?;
    let mut samples = Vec::new();
    let mut censored = 0usize;
    for e in &scan.entries {
        match e.tau {
            Tau::Hit(n) => samples.push((e.r, (n as f64).ln() / -(e.r.ln()))),
            Tau::Exceeded(_) => censored += 1,
        }
    }
    if samples.is_empty() {
        return Err(Error::NoData(
            "all waiting times censored; no dimension statistic".into(),
        ));
    }
    let (lo, hi) = tail_min_max(&samples);
    Ok(DimensionEstimate {
        y: y.clone(),
        method: DimensionMethod::WaitingTime,
        d_lower_proxy: lo,
        d_upper_proxy: hi,
        samples,
        censored,
    })
}

/// The running minimum of `n^β · d(T^n x, target)` up to a horizon, with
/// dyadic checkpoints. When `target` is `None` the distance is to the
/// starting point itself (self-recurrence).
#[derive(Clone, Debug, Serialize)]
pub struct RecurrenceQuantity {
    pub x: Point,
    pub target: Option<Point>,
    pub beta: f64,
    /// `(N, min_{n ≤ N} n^β · d)` at `N = 1, 2, 4, …` and the horizon.
    pub running_min: Vec<(u64, f64)>,
    pub final_min: f64,
}

pub fn recurrence_liminf(
    system: &SystemSpec,
    x: &Point,
    beta: f64,
    n_max: u64,
    target: Option<&Point>,
) -> Result<RecurrenceQuantity> {
    if beta <= 0.0 {
        return Err(Error::contract("beta must be positive"));
    }
    if n_max < 1 {
        return Err(Error::contract("recurrence horizon must be >= 1"));
    }
    if x.dim() != system.dimension() {
        return Err(Error::DimensionMismatch {
            expected: system.dimension(),
            got: x.dim(),
        });
    }
    let target_point = target.cloned();
    let tlat = target_point
        .as_ref()
        .map(|t| t.to_lattice())
        .unwrap_or_else(|| x.to_lattice());
    let mut cells = x.to_lattice();
    let map = system.lattice_map();
    let inv_m = 1.0 / lattice::MODULUS as f64;

    let mut best = f64::INFINITY;
    // Lattice trigger: distances at or above this cannot improve the minimum.
    // n^β grows, so a stale (larger) threshold only causes false positives,
    // which re-evaluate exactly.
    let mut trigger = u64::MAX;
    let mut running = Vec::new();
    let mut next_cp = 1u64;
    for n in 1..=n_max {
        map.step(&mut cells);
        let d = system.lattice_dist(&cells, &tlat);
        if d < trigger {
            let val = (n as f64).powf(beta) * (d as f64 * inv_m);
            if val < best {
                best = val;
            }
            trigger = ((best / (n as f64).powf(beta)) * lattice::MODULUS as f64) as u64;
        }
        if n == next_cp {
            running.push((n, best));
            next_cp *= 2;
        }
    }
    if running.last().map(|c| c.0) != Some(n_max) {
        running.push((n_max, best));
    }
    Ok(RecurrenceQuantity {
        x: x.clone(),
        target: target_point,
        beta,
        running_min: running,
        final_min: best,
    })
}
