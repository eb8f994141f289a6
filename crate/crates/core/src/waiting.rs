//! First-entry (waiting) times into balls and their scaling exponents.
//!
//! `τ_B(x)` is the least `n ≥ 1` with `T^n(x) ∈ B`; the index starts at 1 so
//! it lines up with the hit-count sum of [`crate::hitstats`]. A censored
//! observation is a value ([`Tau::Exceeded`]), never an error — downstream
//! statistics count censoring explicitly.

use crate::error::{Error, Result};
use crate::lattice;
use crate::systems::{Point, SystemSpec};
use serde::Serialize;

/// A waiting time, or the horizon it exceeded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Tau {
    Hit(u64),
    Exceeded(u64),
}

impl Tau {
    pub fn hit(&self) -> Option<u64> {
        match self {
            Tau::Hit(n) => Some(*n),
            Tau::Exceeded(_) => None,
        }
    }

    pub fn is_exceeded(&self) -> bool {
        matches!(self, Tau::Exceeded(_))
    }
}

impl std::fmt::Display for Tau {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tau::Hit(n) => write!(f, "{n}"),
            Tau::Exceeded(h) => write!(f, "exceeded:{h}"),
        }
    }
}

/// One `(x, y, r)` waiting-time trial.
#[derive(Clone, Debug, Serialize)]
pub struct WaitingTimeRecord {
    pub x: Point,
    pub y: Point,
    pub r: f64,
    pub tau: Tau,
    pub mu_ball: f64,
    /// `log τ / (−log μ(B))`; 0 when the ball has full measure (degenerate,
    /// excluded from tail proxies), `None` when censored.
    pub exponent: Option<f64>,
}

fn exponent_of(tau: &Tau, mu: f64) -> Option<f64> {
    match tau {
        Tau::Hit(n) => {
            if mu >= 1.0 {
                Some(0.0)
            } else {
                Some((*n as f64).ln() / -mu.ln())
            }
        }
        Tau::Exceeded(_) => None,
    }
}

/// Least `n ∈ [1, horizon]` with `d(T^n x, y) ≤ r`, else `Exceeded(horizon)`.
/// `n = 0` is never consulted: the waiting time is a first-entry time under
/// iteration, not a containment check.
pub fn waiting_time(
    system: &SystemSpec,
    x: &Point,
    y: &Point,
    r: f64,
    horizon: u64,
) -> Result<Tau> {
    if r <= 0.0 {
        return Err(Error::contract("waiting_time requires r > 0"));
    }
    if horizon < 1 {
        return Err(Error::contract("waiting_time requires horizon >= 1"));
    }
    // delegate to the single-pass scan with one radius
    let scan = exponent_scan(system, x, y, &[r], horizon)?;
    Ok(scan.entries[0].tau)
}

/// [`waiting_time`] packaged with the ball measure and exponent.
pub fn waiting_record(
    system: &SystemSpec,
    x: &Point,
    y: &Point,
    r: f64,
    horizon: u64,
) -> Result<WaitingTimeRecord> {
    let tau = waiting_time(system, x, y, r, horizon)?;
    let mu = system.ball_measure(y, r)?;
    Ok(WaitingTimeRecord {
        x: x.clone(),
        y: y.clone(),
        r,
        tau,
        mu_ball: mu,
        exponent: exponent_of(&tau, mu),
    })
}

/// One radius of an [`ExponentScan`].
#[derive(Clone, Debug, Serialize)]
pub struct ScanEntry {
    pub r: f64,
    pub tau: Tau,
    pub mu_ball: f64,
    pub exponent: Option<f64>,
}

impl ScanEntry {
    /// Resolved and carrying scaling information (τ finite, μ < 1).
    pub fn informative(&self) -> bool {
        !self.tau.is_exceeded() && self.mu_ball < 1.0
    }
}

/// Waiting times for a strictly decreasing radius list, resolved in a single
/// orbit pass: once the orbit has entered the smallest remaining ball every
/// larger radius is already resolved, so horizons near 10^8 cost one sweep.
#[derive(Clone, Debug)]
pub struct ExponentScan {
    pub x: Point,
    pub y: Point,
    pub horizon: u64,
    pub entries: Vec<ScanEntry>,
}

pub fn exponent_scan(
    system: &SystemSpec,
    x: &Point,
    y: &Point,
    radii: &[f64],
    horizon: u64,
) -> Result<ExponentScan> {
    if radii.is_empty() {
        return Err(Error::contract("exponent_scan requires a radius list"));
    }
    for w in radii.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::contract("radii must be strictly decreasing"));
        }
    }
    if radii[radii.len() - 1] <= 0.0 {
        return Err(Error::contract("radii must be positive"));
    }
    if horizon < 1 {
        return Err(Error::contract("horizon must be >= 1"));
    }
    if x.dim() != system.dimension() || y.dim() != system.dimension() {
        return Err(Error::DimensionMismatch {
            expected: system.dimension(),
            got: x.dim().max(y.dim()),
        });
    }

    let lat_r: Vec<u64> = radii.iter().map(|&r| lattice::lift_radius(r)).collect();
    let ylat = y.to_lattice();
    let mut cells = x.to_lattice();
    let map = system.lattice_map();
    let mut taus: Vec<Tau> = vec![Tau::Exceeded(horizon); radii.len()];
    let mut idx = 0usize;
    for n in 1..=horizon {
        map.step(&mut cells);
        let d = system.lattice_dist(&cells, &ylat);
        while idx < lat_r.len() && d <= lat_r[idx] {
            taus[idx] = Tau::Hit(n);
            idx += 1;
        }
        if idx == lat_r.len() {
            break;
        }
    }
    let entries = radii
        .iter()
        .zip(taus)
        .map(|(&r, tau)| {
            let mu = system.ball_measure(y, r)?;
            Ok(ScanEntry {
                r,
                tau,
                mu_ball: mu,
                exponent: exponent_of(&tau, mu),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExponentScan {
        x: x.clone(),
        y: y.clone(),
        horizon,
        entries,
    })
}

impl ExponentScan {
    /// Informative resolved exponents, in scan order (decreasing radius).
    pub fn resolved_exponents(&self) -> Vec<f64> {
        self.entries
            .iter()
            .filter(|e| e.informative())
            .filter_map(|e| e.exponent)
            .collect()
    }

    pub fn censored_count(&self) -> usize {
        self.entries.iter().filter(|e| e.tau.is_exceeded()).count()
    }

    fn tail_slice(&self, tail_fraction: f64) -> Result<Vec<f64>> {
        if !(0.0 < tail_fraction && tail_fraction < 1.0) {
            return Err(Error::contract("tail_fraction must be in (0,1)"));
        }
        let resolved = self.resolved_exponents();
        if resolved.is_empty() {
            return Err(Error::NoData("every scan entry was censored".into()));
        }
        if resolved.len() < 4 {
            return Err(Error::contract(format!(
                "tail proxies need >= 4 resolved entries, got {}",
                resolved.len()
            )));
        }
        let take =
            ((resolved.len() as f64 * tail_fraction).ceil() as usize).clamp(2, resolved.len());
        Ok(resolved[resolved.len() - take..].to_vec())
    }

    /// (liminf, limsup) proxies: min and max exponent over the final
    /// `tail_fraction` of resolved entries.
    pub fn tail_liminf_limsup(&self, tail_fraction: f64) -> Result<(f64, f64)> {
        let tail = self.tail_slice(tail_fraction)?;
        let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok((lo, hi))
    }

    /// Midpoint of the two tail proxies — the per-trial point estimate of the
    /// limiting exponent (liminf and limsup agree in the limit this measures).
    pub fn tail_midpoint(&self, tail_fraction: f64) -> Result<f64> {
        let (lo, hi) = self.tail_liminf_limsup(tail_fraction)?;
        Ok(0.5 * (lo + hi))
    }

    /// Pooled tail exponent `Σ log τ / Σ (−log μ)` over the tail window.
    ///
    /// By the mediant inequality this always lies between the tail liminf
    /// and limsup proxies, and pooling damps the per-radius first-entry
    /// noise, so it is the preferred per-trial point estimate.
    pub fn tail_pooled_exponent(&self, tail_fraction: f64) -> Result<f64> {
        if !(0.0 < tail_fraction && tail_fraction < 1.0) {
            return Err(Error::contract("tail_fraction must be in (0,1)"));
        }
        let informative: Vec<&ScanEntry> =
            self.entries.iter().filter(|e| e.informative()).collect();
        if informative.is_empty() {
            return Err(Error::NoData("every scan entry was censored".into()));
        }
        if informative.len() < 4 {
            return Err(Error::contract(format!(
                "tail proxies need >= 4 resolved entries, got {}",
                informative.len()
            )));
        }
        let take = ((informative.len() as f64 * tail_fraction).ceil() as usize)
            .clamp(2, informative.len());
        let tail = &informative[informative.len() - take..];
        let num: f64 = tail
            .iter()
            .map(|e| (e.tau.hit().unwrap() as f64).ln())
            .sum();
        let den: f64 = tail.iter().map(|e| -e.mu_ball.ln()).sum();
        Ok(num / den)
    }
}

/// Free-function form of [`ExponentScan::tail_liminf_limsup`].
pub fn tail_liminf_limsup(scan: &ExponentScan, tail_fraction: f64) -> Result<(f64, f64)> {
    scan.tail_liminf_limsup(tail_fraction)
}

/// The finite-`n` lower bound `1 − (1+ε)·log n / (−log μ(B_n))` that a
/// typical exponent eventually dominates.
pub fn prop1_bound(n: u64, mu_ball: f64, epsilon: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::contract("prop1_bound requires n >= 1"));
    }
    if !(0.0 < mu_ball && mu_ball < 1.0) {
        return Err(Error::contract("prop1_bound requires 0 < mu < 1"));
    }
    if epsilon <= 0.0 {
        return Err(Error::contract("epsilon must be positive"));
    }
    Ok(1.0 - (1.0 + epsilon) * (n as f64).ln() / -mu_ball.ln())
}
