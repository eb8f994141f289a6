//! Brute-force reference implementations, kept independent of the main code
//! paths they check.
//!
//! These back the frozen expected values in the test suite and are exposed on
//! the command line (`lab oracle …`) so any reported statistic can be
//! replayed the slow way. Stepping, interval lookup and gap enumeration are
//! re-derived here rather than shared with the optimised paths.

use crate::error::{Error, Result};
use crate::iet::IetSpec;
use crate::lattice::{self, LatticeMap, MODULUS};
use crate::systems::{Point, SystemSpec};
use crate::targets::TargetSequence;
use crate::waiting::Tau;

/// One naive lattice step: same arithmetic as the production map, written
/// the pedestrian way (u128 everywhere, linear interval search).
fn naive_step(map: &LatticeMap, x: &mut [u64]) {
    match map {
        LatticeMap::Translate(steps) => {
            for (c, a) in x.iter_mut().zip(steps) {
                *c = ((*c as u128 + *a as u128) % MODULUS as u128) as u64;
            }
        }
        LatticeMap::MulMod(k) => {
            x[0] = ((*k as u128 * x[0] as u128) % MODULUS as u128) as u64;
        }
        LatticeMap::Affine2(m) => {
            let old = [x[0] as i128, x[1] as i128];
            for (row, out) in m.iter().zip(x.iter_mut()) {
                let mut acc = 0i128;
                for (coef, val) in row.iter().zip(old) {
                    acc += *coef as i128 * val;
                }
                *out = acc.rem_euclid(MODULUS as i128) as u64;
            }
        }
        LatticeMap::Exchange { left, image_start } => {
            let p = x[0];
            let mut j = 0;
            for (i, l) in left.iter().enumerate() {
                if p >= *l {
                    j = i;
                }
            }
            x[0] = image_start[j] + (p - left[j]);
        }
    }
}

fn naive_dist(system: &SystemSpec, a: &[u64], b: &[u64]) -> u64 {
    if system.uses_interval_metric() {
        a[0].abs_diff(b[0])
    } else {
        let mut worst = 0u64;
        for (x, y) in a.iter().zip(b) {
            let d = x.abs_diff(*y);
            let d = d.min(MODULUS - d);
            if d > worst {
                worst = d;
            }
        }
        worst
    }
}

/// First entry of the orbit of `x` into the closed ball `B(y, r)` by plain
/// step-and-compare iteration.
pub fn naive_first_entry(
    system: &SystemSpec,
    x: &Point,
    y: &Point,
    r: f64,
    horizon: u64,
) -> Result<Tau> {
    if r <= 0.0 || horizon < 1 {
        return Err(Error::contract("need r > 0 and horizon >= 1"));
    }
    let map = system.lattice_map().clone();
    let ylat = y.to_lattice();
    let rl = lattice::lift_radius(r);
    let mut cells = x.to_lattice();
    for n in 1..=horizon {
        naive_step(&map, &mut cells);
        if naive_dist(system, &cells, &ylat) <= rl {
            return Ok(Tau::Hit(n));
        }
    }
    Ok(Tau::Exceeded(horizon))
}

/// Confirm an `Exceeded(h)` verdict: no `n ≤ h` lands in the ball.
pub fn confirm_no_entry(
    system: &SystemSpec,
    x: &Point,
    y: &Point,
    r: f64,
    horizon: u64,
) -> Result<bool> {
    Ok(matches!(
        naive_first_entry(system, x, y, r, horizon)?,
        Tau::Exceeded(_)
    ))
}

/// Gap enumeration for `D_n ∪ {0, 1}` from scratch: pull the breakpoints
/// back through pointwise preimages of the forward map (search the image
/// interval containing the point), sort everything, and measure gaps.
pub struct NaiveGaps {
    pub points: Vec<u64>,
    pub min_gap: u64,
    /// Distinct gap lengths (exact lattice integers).
    pub distinct: Vec<u64>,
}

pub fn naive_gap_enumeration(spec: &IetSpec, n: u64) -> Result<NaiveGaps> {
    if n < 1 {
        return Err(Error::contract("n >= 1 required"));
    }
    let map = spec.lattice_map();
    let LatticeMap::Exchange { left, image_start } = &map else {
        return Err(Error::contract("not an exchange"));
    };
    let m = left.len();
    let lengths: Vec<u64> = (0..m)
        .map(|j| {
            let right = if j + 1 < m { left[j + 1] } else { MODULUS };
            right - left[j]
        })
        .collect();
    // preimage of p under T: find interval whose image contains p
    let preimage = |p: u64| -> u64 {
        for j in 0..m {
            if p >= image_start[j] && p - image_start[j] < lengths[j] {
                return left[j] + (p - image_start[j]);
            }
        }
        unreachable!("images tile [0, M)")
    };
    let mut pts: Vec<u64> = vec![0, MODULUS];
    let mut generation: Vec<u64> = left[1..].to_vec();
    for _ in 0..n {
        pts.extend_from_slice(&generation);
        for g in generation.iter_mut() {
            *g = preimage(*g);
        }
    }
    pts.sort_unstable();
    pts.dedup();
    let mut min_gap = u64::MAX;
    let mut distinct = Vec::new();
    for w in pts.windows(2) {
        let g = w[1] - w[0];
        min_gap = min_gap.min(g);
        distinct.push(g);
    }
    distinct.sort_unstable();
    distinct.dedup();
    Ok(NaiveGaps {
        points: pts,
        min_gap,
        distinct,
    })
}

/// Circle gaps of the rotation orbit `{j·step mod M : j = 0..n}` — the
/// three-distance structure, enumerated directly.
pub fn rotation_orbit_gaps(step: u64, n: u64) -> Vec<u64> {
    let mut pts: Vec<u64> = (0..=n)
        .map(|j| ((j as u128 * step as u128) % MODULUS as u128) as u64)
        .collect();
    pts.sort_unstable();
    pts.dedup();
    let mut gaps: Vec<u64> = pts.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.push(MODULUS - pts.last().unwrap() + pts[0]);
    gaps.sort_unstable();
    gaps.dedup();
    gaps
}

/// `(a0, quotients, convergents)` of a continued fraction.
pub type CfParts = (i128, Vec<i128>, Vec<(i128, i128)>);

/// Continued fraction of `p/q` by the Euclidean algorithm in `i128`.
pub fn naive_cf(p: i128, q: i128) -> Result<CfParts> {
    if q <= 0 || p < 0 {
        return Err(Error::contract("naive_cf expects p >= 0, q > 0"));
    }
    let a0 = p / q;
    let mut quotients = Vec::new();
    let (mut x, mut y) = (p % q, q);
    while x != 0 {
        let a = y / x;
        quotients.push(a);
        let r = y - a * x;
        y = x;
        x = r;
    }
    let mut convergents = vec![(a0, 1i128)];
    let (mut p_prev, mut q_prev) = (1i128, 0i128);
    let (mut pp, mut qq) = (a0, 1i128);
    for a in &quotients {
        let pn = a * pp + p_prev;
        let qn = a * qq + q_prev;
        p_prev = pp;
        q_prev = qq;
        pp = pn;
        qq = qn;
        convergents.push((pp, qq));
    }
    Ok((a0, quotients, convergents))
}

/// Direct summation of `Σ_{n≤N} μ(B(y, r_n))`, no checkpointing machinery.
pub fn naive_measure_sum(system: &SystemSpec, target: &TargetSequence, n_max: u64) -> Result<f64> {
    let mut sum = 0.0;
    for n in 1..=n_max {
        let r = target.schedule.radius_at(n)?;
        sum += system.ball_measure(&target.center, r)?;
    }
    Ok(sum)
}
