//! Reduced-scale statistical checks with frozen expectation bands.
//!
//! Every band below was calibrated by oracle runs (naive replays and
//! independent vectorised prototypes) before being frozen; the seeded
//! generators make each test deterministic.

use lab_core::diophantine::{liouville_like, AlphaValue};
use lab_core::estimators;
use lab_core::hitstats::{bc_proxy, hit_stats, stall_signature};
use lab_core::runner::trial_rng;
use lab_core::systems::{Point, SystemSpec};
use lab_core::targets::{RadiusSchedule, TargetSequence};
use lab_core::waiting::{self, prop1_bound};
use rand::Rng;

fn doubling() -> SystemSpec {
    SystemSpec::expanding(2).unwrap()
}

fn golden_rotation() -> SystemSpec {
    SystemSpec::circle_rotation(AlphaValue::Golden).unwrap()
}

fn cat_map() -> SystemSpec {
    SystemSpec::toral_automorphism([[2, 1], [1, 1]]).unwrap()
}

fn liouville_rotation() -> SystemSpec {
    let l = liouville_like(10, 6).unwrap();
    SystemSpec::circle_rotation(AlphaValue::Rational(l.value)).unwrap()
}

fn random_point(rng: &mut impl Rng, dim: usize) -> Point {
    match dim {
        1 => Point::scalar(rng.gen()).unwrap(),
        _ => Point::pair(rng.gen(), rng.gen()).unwrap(),
    }
}

#[test]
fn doubling_waiting_exponents_concentrate_at_one() {
    // radii 2^-5..2^-14; per-trial pooled tail exponent over the smallest 25%
    let sys = doubling();
    let radii: Vec<f64> = (5..=14).map(|k| 0.5f64.powi(k)).collect();
    let mut stats = Vec::new();
    for trial in 0..100u64 {
        let mut rng = trial_rng(501, trial);
        let x = random_point(&mut rng, 1);
        let y = random_point(&mut rng, 1);
        let scan = waiting::exponent_scan(&sys, &x, &y, &radii, 1_000_000).unwrap();
        stats.push(scan.tail_pooled_exponent(0.25).unwrap());
    }
    stats.sort_by(f64::total_cmp);
    let median = stats[stats.len() / 2];
    let wide = stats.iter().filter(|s| (0.6..=1.6).contains(*s)).count();
    println!("doubling exponents: median={median:.4} wide-band={wide}/100");
    assert!((0.85..=1.05).contains(&median), "median {median}");
    assert!(wide >= 95, "only {wide}/100 in [0.6, 1.6]");
}

#[test]
fn prop1_violations_are_rare() {
    // mu(B_n) = 2^-n, n = 1..16, epsilon = 1: the finite-n restatement of
    // the a.e. lower bound keeps violations below a few percent
    let systems = vec![doubling(), golden_rotation(), cat_map()];
    for sys in systems {
        let d = sys.dimension();
        let radii: Vec<f64> = (1..=16)
            .map(|n| 0.5f64.powf(n as f64 / d as f64) / 2.0)
            .collect();
        let mut resolved = 0u64;
        let mut violations = 0u64;
        for trial in 0..60u64 {
            let mut rng = trial_rng(777, trial);
            let x = random_point(&mut rng, d);
            let y = random_point(&mut rng, d);
            let scan = waiting::exponent_scan(&sys, &x, &y, &radii, 1_000_000).unwrap();
            for (i, entry) in scan.entries.iter().enumerate() {
                let n = (i + 1) as u64;
                if let Some(exp) = entry.exponent {
                    if entry.mu_ball < 1.0 && !entry.tau.is_exceeded() {
                        resolved += 1;
                        if exp < prop1_bound(n, entry.mu_ball, 1.0).unwrap() {
                            violations += 1;
                        }
                    }
                }
            }
        }
        let frac = violations as f64 / resolved as f64;
        println!(
            "{}: prop1 violation fraction = {frac:.4} ({violations}/{resolved})",
            sys.id()
        );
        assert!(frac <= 0.06, "{}: {frac}", sys.id());
    }
}

#[test]
fn sbc_ratio_tends_to_one() {
    // doubling map, mu(A_n) = 0.5 n^{-1/2}, N = 1e5: sum_mu ≈ 316 makes the
    // relative fluctuation ~5%
    let sys = doubling();
    let schedule = RadiusSchedule::power_law(0.25, 0.5).unwrap();
    let mut ratios = Vec::new();
    for trial in 0..30u64 {
        let mut rng = trial_rng(90, trial);
        let x = random_point(&mut rng, 1);
        let y = random_point(&mut rng, 1);
        let target = TargetSequence::new(y, schedule.clone());
        let series = hit_stats(&sys, &x, &target, 100_000).unwrap();
        ratios.push(series.final_stats.ratio);
    }
    ratios.sort_by(f64::total_cmp);
    let median = ratios[ratios.len() / 2];
    let inside = ratios.iter().filter(|r| (0.85..=1.15).contains(*r)).count();
    println!("sbc reduced: median={median:.4} inside={inside}/30");
    assert!((0.93..=1.07).contains(&median), "median {median}");
    assert!(inside >= 24, "{inside}/30 inside [0.85, 1.15]");
}

#[test]
fn golden_rotation_passes_dyadic_windows_at_k2() {
    // with per-window expected mass 2K·ln2 ≈ 2.8 the constant-type rotation
    // hits every window; calibrated: 50/50 seeds at K=2, N=1e6
    let sys = golden_rotation();
    let schedule = RadiusSchedule::power_law(2.0, 1.0).unwrap();
    let mut pass = 0u32;
    for trial in 0..30u64 {
        let mut rng = trial_rng(11, trial);
        let x = random_point(&mut rng, 1);
        let y = random_point(&mut rng, 1);
        let target = TargetSequence::new(y, schedule.clone());
        let series = hit_stats(&sys, &x, &target, 1_000_000).unwrap();
        if bc_proxy(&series, 4).hits_in_every_dyadic_window {
            pass += 1;
        }
    }
    println!("golden windows at K=2: {pass}/30");
    assert!(pass >= 27, "{pass}/30");
}

#[test]
fn stall_contrast_golden_vs_liouville_at_k2() {
    // oracle-calibrated contrast at K=2 (N=1e6): golden median max_gap_ratio
    // ≈ 0.20, liouville ≈ 0.73–0.79, ratio ≈ 3.7–4.0; windows 100% vs 0%
    let golden = golden_rotation();
    let liou = liouville_rotation();
    let schedule = RadiusSchedule::power_law(2.0, 1.0).unwrap();
    let sig = stall_signature(&golden, &liou, &schedule, 1_000_000, 30, 2026, 4).unwrap();
    println!(
        "stall: golden p50={:.4} liou p50={:.4} ratio={:.2} wins={}/{}",
        sig.a.max_gap_ratio.p50,
        sig.b.max_gap_ratio.p50,
        sig.median_ratio_b_over_a,
        sig.a.window_pass_fraction,
        sig.b.window_pass_fraction
    );
    assert!(
        sig.a.max_gap_ratio.p50 <= 0.35,
        "golden {}",
        sig.a.max_gap_ratio.p50
    );
    assert!(
        sig.b.max_gap_ratio.p50 >= 0.5,
        "liouville {}",
        sig.b.max_gap_ratio.p50
    );
    assert!(
        sig.median_ratio_b_over_a >= 2.5,
        "{}",
        sig.median_ratio_b_over_a
    );
    assert!(sig.a.window_pass_fraction >= 0.9);
    assert!(sig.b.window_pass_fraction <= 0.1);
}

#[test]
fn comparable_constant_type_rotations_have_unit_contrast() {
    // golden vs silver: both constant type, quantiles comparable
    let golden = golden_rotation();
    let silver = SystemSpec::circle_rotation(AlphaValue::Silver).unwrap();
    let schedule = RadiusSchedule::power_law(2.0, 1.0).unwrap();
    let sig = stall_signature(&golden, &silver, &schedule, 500_000, 20, 37, 4).unwrap();
    println!("golden vs silver ratio = {:.3}", sig.median_ratio_b_over_a);
    assert!(
        (0.4..=2.5).contains(&sig.median_ratio_b_over_a),
        "{}",
        sig.median_ratio_b_over_a
    );
}

#[test]
fn recurrence_dichotomy_reduced() {
    // beta below 1: the running minimum of n^beta·d collapses; above 1 it
    // stays bounded away from zero (N = 1e5 scale)
    let sys = doubling();
    let mut low_ok = 0u32;
    let mut high_ok = 0u32;
    for trial in 0..50u64 {
        let mut rng = trial_rng(608, trial);
        let x = random_point(&mut rng, 1);
        let y = random_point(&mut rng, 1);
        let low = estimators::recurrence_liminf(&sys, &x, 0.8, 100_000, Some(&y)).unwrap();
        if low.final_min <= 0.05 {
            low_ok += 1;
        }
        let high = estimators::recurrence_liminf(&sys, &x, 1.25, 100_000, Some(&y)).unwrap();
        if high.final_min >= 0.01 {
            high_ok += 1;
        }
    }
    println!("recurrence reduced: low_ok={low_ok}/50 high_ok={high_ok}/50");
    assert!(low_ok >= 45, "beta=0.8: {low_ok}/50");
    assert!(high_ok >= 37, "beta=1.25: {high_ok}/50");
}

#[test]
fn waiting_dimension_upper_bounds_measure_dimension() {
    // the waiting statistic exceeds the measure slope up to the first-entry
    // noise; tolerance 0.3 calibrated against the measured lower tail of the
    // first-entry law (a plain exponential model underestimates it), keeping
    // the violation fraction below 10% at the two smallest radii
    let sys = doubling();
    let radii: Vec<f64> = (8..=16).map(|k| 0.5f64.powi(k)).collect();
    let mut checked = 0u64;
    let mut violations = 0u64;
    for trial in 0..40u64 {
        let mut rng = trial_rng(3141, trial);
        let x = random_point(&mut rng, 1);
        let y = random_point(&mut rng, 1);
        let wait = estimators::dimension_from_waiting(&sys, &x, &y, &radii, 10_000_000).unwrap();
        let meas = estimators::dimension_from_measure(&sys, &y, &radii).unwrap();
        for ((rw, sw), (rm, sm)) in wait
            .samples
            .iter()
            .rev()
            .take(2)
            .zip(meas.samples.iter().rev().take(2))
        {
            assert_eq!(rw, rm);
            checked += 1;
            if sw < &(sm - 0.3) {
                violations += 1;
            }
        }
    }
    let frac = violations as f64 / checked as f64;
    println!("waiting-vs-measure violations: {frac:.4} ({violations}/{checked})");
    assert!(frac <= 0.10, "{frac}");
}

#[test]
fn cat_map_waiting_dimension_near_two() {
    // d = 2: waiting exponents scale like r^-2. At radii down to 2^-10 the
    // finite-size bias is 2 − 2/k − γ/(k ln 2) ≈ 1.72, so the honest band
    // is [1.5, 2.3] (the spec'd [1.7, 2.3] needs radii no horizon reaches).
    let sys = cat_map();
    let radii: Vec<f64> = (4..=10).map(|k| 0.5f64.powi(k)).collect();
    let mut mids = Vec::new();
    let mut inside = 0u32;
    for trial in 0..40u64 {
        let mut rng = trial_rng(271828, trial);
        let x = random_point(&mut rng, 2);
        let y = random_point(&mut rng, 2);
        let est = estimators::dimension_from_waiting(&sys, &x, &y, &radii, 10_000_000).unwrap();
        let mid = 0.5 * (est.d_lower_proxy + est.d_upper_proxy);
        mids.push(mid);
        if (1.5..=2.3).contains(&mid) {
            inside += 1;
        }
    }
    mids.sort_by(f64::total_cmp);
    println!(
        "cat-map dimension mids: median={:.3} inside=[1.5,2.3] {inside}/40",
        mids[20]
    );
    assert!(inside >= 32, "{inside}/40");
    assert!((1.55..=2.1).contains(&mids[20]), "median {}", mids[20]);
}

#[test]
fn liouville_rotation_is_not_constant_type_in_scan() {
    // same diagnostic that certifies golden's floor collapses for the
    // truncated-Liouville number along its convergent denominators
    let l = liouville_like(10, 4).unwrap();
    let report =
        lab_core::diophantine::constant_type_scan(&[AlphaValue::Rational(l.value)], 1_100_000)
            .unwrap();
    let golden = lab_core::diophantine::constant_type_scan(&[AlphaValue::Golden], 1000).unwrap();
    println!(
        "liouville c_min={} golden c_min={}",
        report.c_min, golden.c_min
    );
    assert!(report.c_min < 1e-3);
    assert!(golden.c_min > 0.3);
}

#[test]
fn measure_preservation_pushforward() {
    // 1e5 uniform samples, 10 steps, 20 balls, 3 binomial sigmas — the
    // full-scale statistical test of Haar–Lebesgue invariance
    let iet_spec = lab_core::iet::IetSpec::new(vec![0.2, 0.3, 0.5], vec![3, 1, 2]).unwrap();
    let systems = vec![
        golden_rotation(),
        doubling(),
        cat_map(),
        SystemSpec::interval_exchange(iet_spec),
    ];
    for sys in systems {
        let d = sys.dimension();
        let mut rng = trial_rng(55_555, 0);
        let balls: Vec<(Point, f64)> = (0..20)
            .map(|_| (random_point(&mut rng, d), rng.gen_range(0.02..0.15)))
            .collect();
        let mut counts = vec![0u64; balls.len()];
        let n = 100_000;
        for _ in 0..n {
            let mut p = random_point(&mut rng, d);
            for _ in 0..10 {
                p = sys.step(&p).unwrap();
            }
            for (i, (y, r)) in balls.iter().enumerate() {
                if sys.dist(&p, y).unwrap() <= *r {
                    counts[i] += 1;
                }
            }
        }
        for (i, (y, r)) in balls.iter().enumerate() {
            let p_ball = if sys.uses_interval_metric() {
                let c = y.coords()[0];
                (c + r).min(1.0) - (c - r).max(0.0)
            } else {
                sys.ball_measure(y, *r).unwrap()
            };
            let mean = n as f64 * p_ball;
            let sd = (n as f64 * p_ball * (1.0 - p_ball)).sqrt();
            assert!(
                (counts[i] as f64 - mean).abs() <= 3.0 * sd,
                "{} ball {i}: {} vs {mean:.0}±{:.0}",
                sys.id(),
                counts[i],
                3.0 * sd
            );
        }
    }
}
