//! Property tests for the structural invariants.

use lab_core::diophantine::{cf_expand, nearest_int_norm, AlphaValue};
use lab_core::iet::IetSpec;
use lab_core::systems::{Point, SystemSpec};
use lab_core::targets::RadiusSchedule;
use lab_core::waiting;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use proptest::prelude::*;

fn unit_interval() -> impl Strategy<Value = f64> {
    (0u64..u64::MAX).prop_map(|v| v as f64 / (u64::MAX as f64 + 2.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn torus_metric_properties(
        ax in unit_interval(), ay in unit_interval(),
        bx in unit_interval(), by in unit_interval(),
        cx in unit_interval(), cy in unit_interval(),
    ) {
        let sys = SystemSpec::toral_automorphism([[2, 1], [1, 1]]).unwrap();
        let a = Point::pair(ax, ay).unwrap();
        let b = Point::pair(bx, by).unwrap();
        let c = Point::pair(cx, cy).unwrap();
        let ab = sys.dist(&a, &b).unwrap();
        prop_assert_eq!(ab, sys.dist(&b, &a).unwrap());
        prop_assert!(ab <= 0.5 + 1e-15);
        prop_assert!(ab <= sys.dist(&a, &c).unwrap() + sys.dist(&c, &b).unwrap() + 1e-15);
        prop_assert_eq!(sys.dist(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn ball_measure_independent_of_center(
        y1 in unit_interval(), y2 in unit_interval(), r in 1e-6f64..2.0,
    ) {
        let sys = SystemSpec::expanding(2).unwrap();
        let m1 = sys.ball_measure(&Point::scalar(y1).unwrap(), r).unwrap();
        let m2 = sys.ball_measure(&Point::scalar(y2).unwrap(), r).unwrap();
        prop_assert_eq!(m1, m2);
        prop_assert!(m1 > 0.0 && m1 <= 1.0);
    }

    #[test]
    fn power_law_schedule_non_increasing(k in 1e-3f64..10.0, beta in 1e-3f64..3.0, n in 1u64..100_000) {
        let s = RadiusSchedule::power_law(k, beta).unwrap();
        prop_assert!(s.radius_at(n + 1).unwrap() <= s.radius_at(n).unwrap());
        prop_assert!(s.radius_at(n).unwrap() > 0.0);
    }

    #[test]
    fn convergent_determinant_identity(p in 1i64..5000, q in 1i64..5000) {
        prop_assume!(p != q);
        let alpha = AlphaValue::Rational(BigRational::new(BigInt::from(p), BigInt::from(q)));
        if let Ok(cf) = cf_expand(&alpha, 64) {
            prop_assert!(cf.determinant_identity_holds());
            // q_i strictly increasing from index 1 on
            for w in cf.convergents.windows(2).skip(1) {
                prop_assert!(w[1].1 > w[0].1);
            }
        }
    }

    #[test]
    fn norm_symmetric_in_q(alpha in unit_interval(), q in 1i64..100_000) {
        let plus = nearest_int_norm(&[alpha], q).unwrap();
        let minus = nearest_int_norm(&[alpha], -q).unwrap();
        prop_assert_eq!(plus, minus);
        prop_assert!((0.0..=0.5 + 1e-12).contains(&plus));
    }

    #[test]
    fn iet_images_tile_and_invert(
        a in 0.05f64..0.9, b in 0.05f64..0.9, c in 0.05f64..0.9, x in unit_interval(),
    ) {
        let total = a + b + c;
        let lengths = vec![a / total, b / total, c / total];
        let spec = IetSpec::new(lengths, vec![3, 1, 2]);
        prop_assume!(spec.is_ok());
        let spec = spec.unwrap();
        let sys = SystemSpec::interval_exchange(spec.clone());
        let inv = SystemSpec::interval_exchange(spec.inverse());
        let p = Point::scalar(x).unwrap();
        let fwd = sys.step(&p).unwrap();
        prop_assert!((0.0..1.0).contains(&fwd.coords()[0]));
        let back = inv.step(&fwd).unwrap();
        let d = (back.coords()[0] - x).abs();
        prop_assert!(d.min(1.0 - d) < 1e-12);
    }

    #[test]
    fn waiting_monotone_in_radius_prop(x in unit_interval(), y in unit_interval(), r in 0.02f64..0.2) {
        let sys = SystemSpec::expanding(2).unwrap();
        let xp = Point::scalar(x).unwrap();
        let yp = Point::scalar(y).unwrap();
        let t_big = waiting::waiting_time(&sys, &xp, &yp, r, 100_000).unwrap();
        let t_small = waiting::waiting_time(&sys, &xp, &yp, r / 2.0, 100_000).unwrap();
        match (t_big.hit(), t_small.hit()) {
            (Some(big), Some(small)) => prop_assert!(small >= big),
            (None, Some(_)) => prop_assert!(false, "small ball hit but large missed"),
            _ => {}
        }
    }

    #[test]
    fn prop1_bound_at_one_is_one(mu in 1e-12f64..0.999_999) {
        let b = waiting::prop1_bound(1, mu, 1.0).unwrap();
        prop_assert_eq!(b, 1.0);
    }
}

#[test]
fn best_approximation_property_exact() {
    // ‖q_i α‖ < 1/q_{i+1} ≤ ‖Qα‖ for non-convergent-denominator Q < q_{i+1};
    // strict on the left for the quadratic presets, with equality allowed at
    // the terminal convergent for rationals.
    for alpha in [AlphaValue::Golden, AlphaValue::Silver] {
        let cf = cf_expand(&alpha, 14).unwrap();
        let a = alpha.to_f64();
        let dens: Vec<i64> = cf
            .convergents
            .iter()
            .map(|(_, q)| q.to_string().parse().unwrap())
            .collect();
        for i in 1..dens.len() - 1 {
            let (qi, qnext) = (dens[i], dens[i + 1]);
            let norm_qi = nearest_int_norm(&[a], qi).unwrap();
            assert!(
                norm_qi < 1.0 / qnext as f64 + 1e-12,
                "{alpha:?} i={i}: {norm_qi} vs 1/{qnext}"
            );
            for q in 1..qnext {
                if dens.contains(&q) {
                    continue;
                }
                let norm = nearest_int_norm(&[a], q).unwrap();
                assert!(
                    norm >= 1.0 / qnext as f64 - 1e-9,
                    "{alpha:?} Q={q}: {norm} < 1/{qnext}"
                );
            }
        }
    }

    // rational case in exact arithmetic
    let alpha = BigRational::new(BigInt::from(113), BigInt::from(355));
    let cf = cf_expand(&AlphaValue::Rational(alpha.clone()), 64).unwrap();
    let dens: Vec<BigInt> = cf.convergents.iter().map(|(_, q)| q.clone()).collect();
    let norm = |q: &BigInt| -> BigRational {
        let v = &alpha * BigRational::from(q.clone());
        let fl = &v - v.floor();
        let one = BigRational::one();
        if fl.clone() * BigInt::from(2) <= one {
            fl
        } else {
            one - fl
        }
    };
    for i in 1..dens.len() - 1 {
        let inv_next = BigRational::new(BigInt::one(), dens[i + 1].clone());
        assert!(norm(&dens[i]) <= inv_next);
        let qnext: i64 = dens[i + 1].to_string().parse().unwrap();
        for q in 1..qnext {
            let qb = BigInt::from(q);
            if dens.contains(&qb) {
                continue;
            }
            assert!(norm(&qb) >= inv_next, "Q={q} below 1/q_(i+1) at i={i}");
        }
    }
}

#[test]
fn constant_type_floor_across_decades() {
    // golden stays bounded below across decades; the silver preset too
    for (alpha, floor) in [(AlphaValue::Golden, 0.3), (AlphaValue::Silver, 0.2)] {
        let mut prev = f64::INFINITY;
        for q_max in [1000u64, 10_000, 100_000] {
            let rep =
                lab_core::diophantine::constant_type_scan(std::slice::from_ref(&alpha), q_max)
                    .unwrap();
            assert!(rep.c_min >= floor, "{alpha:?} at {q_max}: {}", rep.c_min);
            assert!(rep.c_min <= prev + 1e-15);
            prev = rep.c_min;
        }
    }
}

#[test]
fn exceeded_is_a_value_not_an_error() {
    let sys = SystemSpec::circle_rotation(AlphaValue::parse("1/2").unwrap()).unwrap();
    let rec = waiting::waiting_record(
        &sys,
        &Point::scalar(0.0).unwrap(),
        &Point::scalar(0.25).unwrap(),
        0.05,
        100,
    )
    .unwrap();
    assert!(rec.tau.is_exceeded());
    assert_eq!(rec.exponent, None);
    assert!((rec.mu_ball - 0.1).abs() < 1e-15);
}
