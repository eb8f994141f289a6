//! The hit-count functional `S_N(x) = #{n ≤ N : T^n x ∈ B(y, r_n)}`, its
//! ratio to `Σ μ(A_n)`, and the gap signatures that separate systems where
//! every decreasing centred schedule keeps hitting from systems that stall.

use crate::error::{Error, Result};
use crate::lattice;
use crate::runner::trial_rng;
use crate::systems::{Point, SystemSpec};
use crate::targets::{RadiusSchedule, TargetSequence};
use rand::Rng;
use serde::Serialize;

/// Cap on the stored hit-time list; later hits are only counted.
pub const HIT_CAP: usize = 100_000;

/// Aggregates at one checkpoint `n`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HitCheckpoint {
    pub n: u64,
    pub s_n: u64,
    pub sum_mu: f64,
    pub ratio: f64,
    pub last_hit: u64,
    /// Largest gap between consecutive hit times, with 0 and `n` as
    /// sentinels.
    pub max_gap: u64,
}

/// Full statistics at the final horizon.
#[derive(Clone, Debug, Serialize)]
pub struct HitStats {
    pub n: u64,
    pub s_n: u64,
    pub sum_mu: f64,
    pub ratio: f64,
    pub hit_times: Vec<u64>,
    /// Hits beyond [`HIT_CAP`] (counted, not stored).
    pub overflow: u64,
    pub last_hit: u64,
    pub max_gap: u64,
}

/// A hit-count run: snapshots at `n = 2, 4, 8, …` plus the final horizon.
#[derive(Clone, Debug)]
pub struct HitSeries {
    pub checkpoints: Vec<HitCheckpoint>,
    pub final_stats: HitStats,
}

/// Single-pass hit counting along the orbit of `x`: at each `n` the test is
/// `d(T^n x, y) ≤ r_n` against the closed ball, accumulating `S_N` and
/// `Σ μ(A_n)`.
pub fn hit_stats(
    system: &SystemSpec,
    x: &Point,
    target: &TargetSequence,
    n_max: u64,
) -> Result<HitSeries> {
    if n_max < 1 {
        return Err(Error::contract("hit_stats requires N >= 1"));
    }
    if x.dim() != system.dimension() || target.center.dim() != system.dimension() {
        return Err(Error::DimensionMismatch {
            expected: system.dimension(),
            got: x.dim().max(target.center.dim()),
        });
    }
    let dim = system.dimension() as i32;
    let ylat = target.center.to_lattice();
    let mut cells = x.to_lattice();
    let map = system.lattice_map();

    let mut s = 0u64;
    let mut sum_mu = 0.0f64;
    let mut hit_times = Vec::new();
    let mut overflow = 0u64;
    let mut last_hit = 0u64;
    let mut max_gap = 0u64;
    let mut checkpoints = Vec::new();
    let mut next_cp = 2u64;

    for n in 1..=n_max {
        map.step(&mut cells);
        let r = target.schedule.radius_at(n)?;
        sum_mu += (r.min(0.5) * 2.0).powi(dim);
        let rl = lattice::lift_radius(r);
        if system.lattice_dist(&cells, &ylat) <= rl {
            s += 1;
            max_gap = max_gap.max(n - last_hit);
            last_hit = n;
            if hit_times.len() < HIT_CAP {
                hit_times.push(n);
            } else {
                overflow += 1;
            }
        }
        if n == next_cp {
            checkpoints.push(HitCheckpoint {
                n,
                s_n: s,
                sum_mu,
                ratio: s as f64 / sum_mu,
                last_hit,
                max_gap: max_gap.max(n - last_hit),
            });
            next_cp *= 2;
        }
    }
    if checkpoints.last().map(|c| c.n) != Some(n_max) {
        checkpoints.push(HitCheckpoint {
            n: n_max,
            s_n: s,
            sum_mu,
            ratio: s as f64 / sum_mu,
            last_hit,
            max_gap: max_gap.max(n_max - last_hit),
        });
    }
    let final_stats = HitStats {
        n: n_max,
        s_n: s,
        sum_mu,
        ratio: s as f64 / sum_mu,
        hit_times,
        overflow,
        last_hit,
        max_gap: max_gap.max(n_max - last_hit),
    };
    Ok(HitSeries {
        checkpoints,
        final_stats,
    })
}

/// Finite-horizon proxy for "hits infinitely often": every dyadic window
/// `(2^k, 2^{k+1}]` after the burn-in contains a hit.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BcProxy {
    pub hits_in_every_dyadic_window: bool,
    pub last_hit: u64,
    pub max_gap_ratio: f64,
}

/// Evaluate the proxy from a run's checkpoints. Windows are the spans
/// between consecutive checkpoints at and above `2^burn_in_k0`; with the
/// default burn-in 4 the first window is `(16, 32]`.
pub fn bc_proxy(series: &HitSeries, burn_in_k0: u32) -> BcProxy {
    let floor = 1u64 << burn_in_k0;
    let mut all = true;
    for w in series.checkpoints.windows(2) {
        if w[0].n >= floor && w[1].s_n == w[0].s_n {
            all = false;
            break;
        }
    }
    let f = &series.final_stats;
    BcProxy {
        hits_in_every_dyadic_window: all,
        last_hit: f.last_hit,
        max_gap_ratio: f.max_gap as f64 / f.n as f64,
    }
}

/// Order statistics of a sample (nearest-rank on the sorted copy).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Quantiles {
    pub p5: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
}

pub fn quantiles(values: &[f64]) -> Quantiles {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(f64::total_cmp);
    let at = |p: f64| -> f64 {
        if v.is_empty() {
            return f64::NAN;
        }
        let idx = ((v.len() - 1) as f64 * p).round() as usize;
        v[idx]
    };
    Quantiles {
        p5: at(0.05),
        p25: at(0.25),
        p50: at(0.50),
        p75: at(0.75),
        p95: at(0.95),
    }
}

/// One system's stall summary across seeds.
#[derive(Clone, Debug, Serialize)]
pub struct StallArm {
    pub system_id: String,
    pub max_gap_ratio: Quantiles,
    pub window_pass_fraction: f64,
}

/// Side-by-side stall comparison of two systems under the same schedule and
/// the same seeded `(x, y)` pairs.
#[derive(Clone, Debug, Serialize)]
pub struct StallSignature {
    pub a: StallArm,
    pub b: StallArm,
    /// median max_gap_ratio of `b` over that of `a`.
    pub median_ratio_b_over_a: f64,
}

pub fn stall_signature(
    system_a: &SystemSpec,
    system_b: &SystemSpec,
    schedule: &RadiusSchedule,
    n_max: u64,
    seeds: u32,
    master_seed: u64,
    burn_in_k0: u32,
) -> Result<StallSignature> {
    if system_a.dimension() != system_b.dimension()
        || system_a.uses_interval_metric() != system_b.uses_interval_metric()
    {
        return Err(Error::contract(
            "stall_signature requires systems on the same space",
        ));
    }
    if seeds == 0 {
        return Err(Error::contract("stall_signature requires seeds >= 1"));
    }
    let dim = system_a.dimension();
    let mut arms = [Vec::new(), Vec::new()];
    let mut wins = [0u32, 0u32];
    for i in 0..seeds {
        let mut rng = trial_rng(master_seed, i as u64);
        let x = random_point(&mut rng, dim);
        let y = random_point(&mut rng, dim);
        for (j, sys) in [system_a, system_b].into_iter().enumerate() {
            let target = TargetSequence::new(y.clone(), schedule.clone());
            let series = hit_stats(sys, &x, &target, n_max)?;
            let proxy = bc_proxy(&series, burn_in_k0);
            arms[j].push(proxy.max_gap_ratio);
            if proxy.hits_in_every_dyadic_window {
                wins[j] += 1;
            }
        }
    }
    let qa = quantiles(&arms[0]);
    let qb = quantiles(&arms[1]);
    let ratio = if qa.p50 == 0.0 {
        if qb.p50 == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        qb.p50 / qa.p50
    };
    Ok(StallSignature {
        a: StallArm {
            system_id: system_a.id(),
            max_gap_ratio: qa,
            window_pass_fraction: wins[0] as f64 / seeds as f64,
        },
        b: StallArm {
            system_id: system_b.id(),
            max_gap_ratio: qb,
            window_pass_fraction: wins[1] as f64 / seeds as f64,
        },
        median_ratio_b_over_a: ratio,
    })
}

pub(crate) fn random_point<R: Rng>(rng: &mut R, dim: usize) -> Point {
    let coords: Vec<f64> = (0..dim)
        .map(|_| lattice::unlift(rng.gen_range(0..lattice::MODULUS)))
        .collect();
    Point::new(coords).expect("lattice coordinates lie in [0,1)")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diophantine::AlphaValue;
    use crate::waiting;

    fn rotation(a: &str) -> SystemSpec {
        SystemSpec::circle_rotation(AlphaValue::parse(a).unwrap()).unwrap()
    }

    #[test]
    fn full_measure_targets_hit_every_step() {
        let sys = rotation("0.37");
        let target = TargetSequence::new(
            Point::scalar(0.5).unwrap(),
            RadiusSchedule::explicit(vec![0.5; 100]).unwrap(),
        );
        let series = hit_stats(&sys, &Point::scalar(0.1).unwrap(), &target, 100).unwrap();
        let f = &series.final_stats;
        assert_eq!(f.s_n, 100);
        assert_eq!(f.sum_mu, 100.0);
        assert_eq!(f.ratio, 1.0);
        for cp in &series.checkpoints {
            assert_eq!(cp.ratio, 1.0);
        }
        let proxy = bc_proxy(&series, 4);
        assert!(proxy.hits_in_every_dyadic_window);
        assert_eq!(proxy.last_hit, 100);
        assert!((proxy.max_gap_ratio - 0.01).abs() < 1e-15);
    }

    #[test]
    fn period_two_orbit_never_hits() {
        let sys = rotation("1/2");
        let target = TargetSequence::new(
            Point::scalar(0.25).unwrap(),
            RadiusSchedule::power_law(0.1, 1.0).unwrap(),
        );
        let series = hit_stats(&sys, &Point::scalar(0.0).unwrap(), &target, 1000).unwrap();
        assert_eq!(series.final_stats.s_n, 0);
        assert_eq!(series.final_stats.ratio, 0.0);
        let proxy = bc_proxy(&series, 4);
        assert!(!proxy.hits_in_every_dyadic_window);
        assert_eq!(proxy.last_hit, 0);
        assert_eq!(proxy.max_gap_ratio, 1.0);
    }

    #[test]
    fn checkpoints_are_prefix_consistent() {
        let sys = SystemSpec::expanding(2).unwrap();
        let target = TargetSequence::new(
            Point::scalar(0.613).unwrap(),
            RadiusSchedule::power_law(0.25, 0.5).unwrap(),
        );
        let x = Point::scalar(0.2718281828).unwrap();
        let long = hit_stats(&sys, &x, &target, 1024).unwrap();
        let short = hit_stats(&sys, &x, &target, 256).unwrap();
        let cp_long = long.checkpoints.iter().find(|c| c.n == 256).unwrap();
        let f = &short.final_stats;
        assert_eq!(cp_long.s_n, f.s_n);
        assert_eq!(cp_long.last_hit, f.last_hit);
        assert_eq!(cp_long.max_gap, f.max_gap);
        assert!((cp_long.sum_mu - f.sum_mu).abs() < 1e-12);
    }

    #[test]
    fn first_hit_agrees_with_waiting_time() {
        let sys = SystemSpec::expanding(2).unwrap();
        for i in 0..20u64 {
            let mut rng = trial_rng(99, i);
            let x = random_point(&mut rng, 1);
            let y = random_point(&mut rng, 1);
            let r = 0.01;
            let target = TargetSequence::new(
                y.clone(),
                RadiusSchedule::explicit(vec![r; 10_000]).unwrap(),
            );
            let series = hit_stats(&sys, &x, &target, 10_000).unwrap();
            let first = series.final_stats.hit_times.first().copied();
            let tau = waiting::waiting_time(&sys, &x, &y, r, 10_000).unwrap();
            assert_eq!(first, tau.hit(), "trial {i}");
        }
    }

    #[test]
    fn s_n_monotone_in_n() {
        let sys = SystemSpec::expanding(2).unwrap();
        let target = TargetSequence::new(
            Point::scalar(0.37).unwrap(),
            RadiusSchedule::power_law(0.25, 0.5).unwrap(),
        );
        let series = hit_stats(&sys, &Point::scalar(0.11).unwrap(), &target, 4096).unwrap();
        for w in series.checkpoints.windows(2) {
            assert!(w[1].s_n >= w[0].s_n);
            assert!(w[1].sum_mu > w[0].sum_mu);
        }
        // hit times are strictly increasing, within [1, N], and consistent
        // with the count and the ratio
        let f = &series.final_stats;
        assert_eq!(f.hit_times.len() as u64 + f.overflow, f.s_n);
        for w in f.hit_times.windows(2) {
            assert!(w[0] < w[1]);
        }
        if let (Some(first), Some(last)) = (f.hit_times.first(), f.hit_times.last()) {
            assert!(*first >= 1 && *last <= f.n);
            assert_eq!(*last, f.last_hit);
        }
        assert!((f.ratio - f.s_n as f64 / f.sum_mu).abs() < 1e-15);
    }

    #[test]
    fn identical_systems_have_unit_ratio() {
        let a = rotation("golden");
        let sig = stall_signature(
            &a,
            &a.clone(),
            &RadiusSchedule::power_law(0.25, 1.0).unwrap(),
            10_000,
            10,
            7,
            4,
        )
        .unwrap();
        assert!((sig.median_ratio_b_over_a - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quantiles_of_known_sample() {
        let q = quantiles(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(q.p50, 3.0);
        assert_eq!(q.p5, 1.0);
        assert_eq!(q.p95, 5.0);
    }
}
