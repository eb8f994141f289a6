//! Interval exchange transformations, their iterated discontinuity sets and
//! the minimum-gap profile `δ(n)`.
//!
//! All breakpoint arithmetic is exact: subinterval lengths are lattice
//! integers summing to the modulus, so images tile `[0, M)` with no rounding
//! and pullbacks of breakpoints are exact preimages. Gap statistics are
//! integer differences; in particular the three-distance structure of
//! rotation-induced exchanges holds exactly, not up to a dedup tolerance.

use crate::diophantine::AlphaValue;
use crate::error::{Error, Result};
use crate::lattice::{self, LatticeMap, MODULUS};
use crate::systems::{Point, SystemSpec};
use crate::waiting::{self, Tau};
use std::collections::{BTreeMap, BTreeSet};

/// Hard cap on accumulated discontinuity points (`n·m` guard).
const MAX_POINTS: u64 = 10_000_000;

/// Gaps at or below this many lattice units (~2.2e-16) mean breakpoints have
/// effectively coincided: rational data whose exact collision is smeared by
/// the lattice rounding of the rotation number.
const GAP_COLLAPSE_FLOOR: u64 = 1024;

/// An interval exchange: `m` subintervals rearranged by a permutation.
///
/// `permutation[j] = s` means the `j`-th domain subinterval (0-based `j`,
/// 1-based slot `s`) is placed at image slot `s`, counted from the left.
#[derive(Clone, Debug, PartialEq)]
pub struct IetSpec {
    lengths: Vec<f64>,
    permutation: Vec<usize>,
    lat_lengths: Vec<u64>,
}

impl IetSpec {
    /// Build from real lengths (must sum to 1 within 1e-12, then renormalised
    /// exactly on the lattice) and a 1-based permutation.
    pub fn new(lengths: Vec<f64>, permutation: Vec<usize>) -> Result<IetSpec> {
        let m = lengths.len();
        if m == 0 {
            return Err(Error::contract("IET needs at least one interval"));
        }
        if permutation.len() != m {
            return Err(Error::contract(format!(
                "permutation length {} != interval count {m}",
                permutation.len()
            )));
        }
        let mut seen = vec![false; m];
        for &p in &permutation {
            if p < 1 || p > m || seen[p - 1] {
                return Err(Error::contract(format!(
                    "permutation must be a bijection of 1..{m}"
                )));
            }
            seen[p - 1] = true;
        }
        if lengths.iter().any(|&l| l <= 0.0) {
            return Err(Error::contract("IET lengths must be positive"));
        }
        let total: f64 = lengths.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::contract(format!(
                "lengths must sum to 1 (got {total})"
            )));
        }
        // lattice lengths: lift each, then push the remainder into the largest
        // interval so they tile [0, M) exactly
        let mut lat: Vec<u64> = lengths
            .iter()
            .map(|&l| if l >= 1.0 { MODULUS } else { lattice::lift(l) })
            .collect();
        if m == 1 {
            lat[0] = MODULUS;
        } else {
            let sum: u64 = lat.iter().sum();
            let largest = (0..m).max_by_key(|&i| lat[i]).unwrap();
            if sum <= MODULUS {
                lat[largest] += MODULUS - sum;
            } else {
                let excess = sum - MODULUS;
                if lat[largest] <= excess {
                    return Err(Error::contract("lengths too distorted to renormalise"));
                }
                lat[largest] -= excess;
            }
            if lat.contains(&0) {
                return Err(Error::contract(
                    "an interval length is below lattice resolution",
                ));
            }
        }
        Ok(IetSpec::from_lattice(lat, permutation))
    }

    fn from_lattice(lat_lengths: Vec<u64>, permutation: Vec<usize>) -> IetSpec {
        let lengths = lat_lengths.iter().map(|&l| lattice::unlift(l)).collect();
        IetSpec {
            lengths,
            permutation,
            lat_lengths,
        }
    }

    /// The rotation by α as the 2-interval exchange with lengths
    /// `(1−α, α)` and the swap permutation, lattice-exact so it agrees
    /// pointwise with [`SystemSpec::circle_rotation`] on the same α.
    pub fn rotation(alpha: &AlphaValue) -> Result<IetSpec> {
        let a = alpha.lattice_step()?;
        if a == 0 || a >= MODULUS {
            return Err(Error::contract("rotation number out of range"));
        }
        Ok(IetSpec::from_lattice(vec![MODULUS - a, a], vec![2, 1]))
    }

    pub fn order(&self) -> usize {
        self.lat_lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// Left endpoints of the domain subintervals (length `m`, first is 0).
    fn domain_left(&self) -> Vec<u64> {
        let mut acc = 0u64;
        self.lat_lengths
            .iter()
            .map(|&l| {
                let left = acc;
                acc += l;
                left
            })
            .collect()
    }

    /// Left endpoint of each domain interval's image.
    fn image_left(&self) -> Vec<u64> {
        let m = self.order();
        // slot s (1-based) is occupied by domain interval inv[s-1]
        let mut inv = vec![0usize; m];
        for (j, &s) in self.permutation.iter().enumerate() {
            inv[s - 1] = j;
        }
        let mut start = vec![0u64; m];
        let mut acc = 0u64;
        for &j in &inv {
            start[j] = acc;
            acc += self.lat_lengths[j];
        }
        start
    }

    pub(crate) fn lattice_map(&self) -> LatticeMap {
        LatticeMap::Exchange {
            left: self.domain_left(),
            image_start: self.image_left(),
        }
    }

    /// The inverse exchange (image intervals become the domain, in order).
    pub fn inverse(&self) -> IetSpec {
        let m = self.order();
        let mut inv = vec![0usize; m];
        for (j, &s) in self.permutation.iter().enumerate() {
            inv[s - 1] = j;
        }
        let lat: Vec<u64> = inv.iter().map(|&j| self.lat_lengths[j]).collect();
        let perm: Vec<usize> = inv.iter().map(|&j| j + 1).collect();
        IetSpec::from_lattice(lat, perm)
    }

    pub fn id(&self) -> String {
        format!(
            "iet(lengths={};perm={})",
            self.lengths
                .iter()
                .map(|l| format!("{l:.6}"))
                .collect::<Vec<_>>()
                .join(","),
            self.permutation
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(",")
        )
    }
}

/// Apply the exchange once. Half-open subintervals `[left, right)` resolve
/// breakpoints.
pub fn iet_apply(spec: &IetSpec, x: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::contract(format!("IET input {x} outside [0,1)")));
    }
    let map = spec.lattice_map();
    let mut cell = [lattice::lift(x)];
    map.step(&mut cell);
    Ok(lattice::unlift(cell[0]))
}

/// Discontinuity points of `T^n`: `D_n = ∪_{k=0}^{n−1} T^{−k}(D_1)` with
/// `D_1` the `m−1` interior breakpoints.
#[derive(Clone, Debug)]
pub struct DiscontinuitySet {
    pub points: Vec<f64>,
    /// False when the `n·m ≤ 10^7` size guard truncated the accumulation.
    pub complete: bool,
    /// True when pullbacks coincided exactly or gaps collapsed to the
    /// lattice floor (rational data).
    pub collisions: bool,
}

pub fn discontinuity_set(spec: &IetSpec, n: u64) -> Result<DiscontinuitySet> {
    if n < 1 {
        return Err(Error::contract("discontinuity_set requires n >= 1"));
    }
    let mut acc = Accumulator::new(spec);
    let mut complete = true;
    for _ in 1..=n {
        if acc.points.len() as u64 + acc.seeds.len() as u64 > MAX_POINTS {
            complete = false;
            break;
        }
        acc.advance();
    }
    let points = acc
        .points
        .iter()
        .copied()
        .filter(|&p| p != 0 && p != MODULUS)
        .map(lattice::unlift)
        .collect();
    Ok(DiscontinuitySet {
        points,
        complete,
        collisions: acc.degenerate(),
    })
}

/// Incremental pullback of `D_1` with sentinels `{0, 1}`, a gap multiset and
/// a running minimum gap.
struct Accumulator {
    inverse_map: LatticeMap,
    seeds: Vec<u64>,
    points: BTreeSet<u64>,
    gaps: BTreeMap<u64, usize>,
    min_gap: u64,
    min_pair: (u64, u64),
    collisions: bool,
    step: u64,
}

impl Accumulator {
    fn new(spec: &IetSpec) -> Accumulator {
        let left = spec.domain_left();
        let seeds: Vec<u64> = left[1..].to_vec();
        let mut points = BTreeSet::new();
        points.insert(0);
        points.insert(MODULUS);
        let mut gaps = BTreeMap::new();
        gaps.insert(MODULUS, 1usize);
        Accumulator {
            inverse_map: spec.inverse().lattice_map(),
            seeds,
            points,
            gaps,
            min_gap: MODULUS,
            min_pair: (0, MODULUS),
            collisions: false,
            step: 0,
        }
    }

    /// Insert the current pullback generation, then pull the seeds back once.
    fn advance(&mut self) {
        if self.step > 0 {
            for s in self.seeds.iter_mut() {
                let mut cell = [*s];
                self.inverse_map.step(&mut cell);
                *s = cell[0];
            }
        }
        self.step += 1;
        let seeds = self.seeds.clone();
        for p in seeds {
            self.insert(p);
        }
    }

    fn insert(&mut self, p: u64) {
        if !self.points.insert(p) {
            self.collisions = true;
            return;
        }
        let prev = *self.points.range(..p).next_back().expect("0 sentinel");
        let next = *self.points.range(p + 1..).next().expect("M sentinel");
        let old = next - prev;
        let (a, b) = (p - prev, next - p);
        remove_gap(&mut self.gaps, old);
        *self.gaps.entry(a).or_insert(0) += 1;
        *self.gaps.entry(b).or_insert(0) += 1;
        if a < self.min_gap {
            self.min_gap = a;
            self.min_pair = (prev, p);
        }
        if b < self.min_gap {
            self.min_gap = b;
            self.min_pair = (p, next);
        }
    }

    fn distinct_gaps(&self) -> usize {
        self.gaps.len()
    }

    /// Exact coincidence, or gaps collapsed to the lattice floor.
    fn degenerate(&self) -> bool {
        self.collisions || self.min_gap <= GAP_COLLAPSE_FLOOR
    }
}

fn remove_gap(gaps: &mut BTreeMap<u64, usize>, g: u64) {
    if let Some(c) = gaps.get_mut(&g) {
        *c -= 1;
        if *c == 0 {
            gaps.remove(&g);
        }
    }
}

/// One row of the minimum-gap profile.
#[derive(Clone, Debug, serde::Serialize)]
pub struct GapEntry {
    pub n: u64,
    /// `δ(n)` — minimum distance between consecutive points of
    /// `D_n ∪ {0, 1}` on the interval (endpoints included as boundary
    /// points, the conservative reading).
    pub delta: f64,
    pub n_delta: f64,
    /// Number of distinct gap lengths at this `n` (exact integer lengths).
    pub distinct_gaps: usize,
    /// The adjacent pair achieving `δ(n)`.
    pub pair: (f64, f64),
}

#[derive(Clone, Debug)]
pub struct GapProfile {
    pub entries: Vec<GapEntry>,
    pub collisions: bool,
}

/// `δ(n)` for all `n ≤ n_max` in one incremental sweep.
pub fn gap_profile(spec: &IetSpec, n_max: u64) -> Result<GapProfile> {
    if n_max < 1 {
        return Err(Error::contract("gap_profile requires n_max >= 1"));
    }
    if n_max.saturating_mul(spec.order() as u64) > MAX_POINTS {
        return Err(Error::contract(format!(
            "gap profile would accumulate more than {MAX_POINTS} points"
        )));
    }
    let mut acc = Accumulator::new(spec);
    let mut entries = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        acc.advance();
        let delta = lattice::unlift(acc.min_gap);
        entries.push(GapEntry {
            n,
            delta,
            n_delta: n as f64 * acc.min_gap as f64 / MODULUS as f64,
            distinct_gaps: acc.distinct_gaps(),
            pair: (
                lattice::unlift(acc.min_pair.0),
                lattice::unlift(acc.min_pair.1),
            ),
        });
    }
    Ok(GapProfile {
        entries,
        collisions: acc.degenerate(),
    })
}

/// `δ(n)` alone.
pub fn min_gap(spec: &IetSpec, n: u64) -> Result<f64> {
    if spec.order() == 1 {
        return Ok(1.0);
    }
    Ok(gap_profile(spec, n)?.entries.last().unwrap().delta)
}

/// Finite-horizon evidence for the gap condition `δ(n_k) ≥ C/n_k`:
/// the profile's `n·δ(n)` maxima, overall and over the top decade.
#[derive(Clone, Debug, serde::Serialize)]
pub struct PTildeScan {
    pub n_max: u64,
    /// max of `n·δ(n)` over all `n ≤ n_max`.
    pub best: f64,
    pub best_n: u64,
    /// Top ten `(n, n·δ(n))`, best first.
    pub achievers: Vec<(u64, f64)>,
    /// max over the top decade `[n_max/10, n_max]`; staying bounded away
    /// from 0 across decades is the evidence, with `C ≈ tail_best`.
    pub tail_best: f64,
    pub tail_best_n: u64,
    pub collisions: bool,
}

pub fn p_tilde_scan(spec: &IetSpec, n_max: u64) -> Result<PTildeScan> {
    if n_max < 10 {
        return Err(Error::contract("p_tilde_scan requires n_max >= 10"));
    }
    let profile = gap_profile(spec, n_max)?;
    let mut ranked: Vec<(u64, f64)> = profile.entries.iter().map(|e| (e.n, e.n_delta)).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let (best_n, best) = ranked[0];
    let tail_from = (n_max / 10).max(1);
    let (tail_best_n, tail_best) = profile
        .entries
        .iter()
        .filter(|e| e.n >= tail_from)
        .map(|e| (e.n, e.n_delta))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("tail nonempty");
    ranked.truncate(10);
    Ok(PTildeScan {
        n_max,
        best,
        best_n,
        achievers: ranked,
        tail_best,
        tail_best_n,
        collisions: profile.collisions,
    })
}

/// Outcome of checking the first-entry bound `τ_{B(y,ρ)}(x) ≤ 4/(C·ρ)` over
/// seeded trials at the given scales.
#[derive(Clone, Debug, serde::Serialize)]
pub struct BoundCheck {
    pub c: f64,
    pub fraction: f64,
    pub successes: u64,
    pub total: u64,
    pub exceeded: u64,
    /// Per-scale `(ρ, success fraction)`.
    pub per_scale: Vec<(f64, f64)>,
}

/// Check `τ ≤ 4/(C·ρ)` for each trial pair `(x, y)` and each scale in
/// `rho_list`. The bound is only guaranteed on positive-measure sets of `x`
/// and `y`, so callers assert a positive fraction, never 100%.
pub fn iet_waiting_bound_check(
    spec: &IetSpec,
    c: f64,
    trials: &[(Point, Point)],
    rho_list: &[f64],
    horizon: u64,
) -> Result<BoundCheck> {
    if c <= 0.0 {
        return Err(Error::contract("bound constant C must be positive"));
    }
    if rho_list.iter().any(|&r| r <= 0.0) {
        return Err(Error::contract("scales must be positive"));
    }
    let system = SystemSpec::interval_exchange(spec.clone());
    let mut successes = 0u64;
    let mut exceeded = 0u64;
    let mut total = 0u64;
    let mut per_scale = Vec::with_capacity(rho_list.len());
    for &rho in rho_list {
        let bound = 4.0 / (c * rho);
        let mut scale_succ = 0u64;
        for (x, y) in trials {
            total += 1;
            match waiting::waiting_time(&system, x, y, rho, horizon)? {
                Tau::Hit(t) => {
                    if (t as f64) <= bound {
                        scale_succ += 1;
                    }
                }
                Tau::Exceeded(_) => exceeded += 1,
            }
        }
        successes += scale_succ;
        per_scale.push((rho, scale_succ as f64 / trials.len() as f64));
    }
    Ok(BoundCheck {
        c,
        fraction: successes as f64 / total as f64,
        successes,
        total,
        exceeded,
        per_scale,
    })
}
