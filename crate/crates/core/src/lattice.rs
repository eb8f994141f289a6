//! Exact fixed-point coordinates for orbit iteration.
//!
//! Every state space coordinate is carried as an integer `X` in `[0, M)`
//! representing the real `X / M`, with a single modulus for the whole crate.
//! All five map families act on this lattice exactly:
//!
//! * rotations add a constant mod `M`,
//! * expanding maps multiply by `k` mod `M`,
//! * toral automorphisms act by the integer matrix mod `M`,
//! * interval exchanges translate integer subintervals that tile `[0, M)`.
//!
//! Iterating in `f64` instead is not an option for the non-invertible and
//! hyperbolic families: doubling a 53-bit mantissa mod 1 reaches exactly 0
//! within 53 steps, and a hyperbolic matrix amplifies the initial rounding
//! error past unity within ~40 steps. On the lattice the orbit of a generic
//! point is exact forever and its period exceeds 10^18 (see [`MODULUS`]).
//!
//! Conversions to and from `f64` happen once per trial at the API boundary;
//! `1/M ≈ 2.2e-19` is far below every tolerance used by the statistics.

/// The lattice modulus.
///
/// `M = 4611686018427376319` is a safe prime (`M = 2q + 1` with
/// `q = 2305843009213688159` prime). Consequences used throughout:
///
/// * `M ≡ 7 (mod 8)`, so 2 is a quadratic residue and every base
///   `k ∈ {2, .., M−2}` has multiplicative order `q` or `2q` — expanding-map
///   orbits have period ≥ 1.15e18;
/// * `M ≡ 4 (mod 5)`, so the cat-map eigenvalue `(3+√5)/2` lies in `F_M` and
///   its order is again ≥ `q`;
/// * rotations by any nonzero lattice step have period `M`.
pub const MODULUS: u64 = 4611686018427376319;

const M128: u128 = MODULUS as u128;

/// Exact `round(x · M)` for `x ∈ [0, 1)`, reading the binary mantissa of `x`
/// directly so no floating-point product is formed.
pub fn lift(x: f64) -> u64 {
    debug_assert!((0.0..1.0).contains(&x), "lift expects x in [0,1), got {x}");
    if x == 0.0 {
        return 0;
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 {
        (frac, -1074i64)
    } else {
        (frac | (1 << 52), exp - 1075)
    };
    // x = mant * 2^e with e <= -53 for x < 1.
    let prod = (mant as u128) * M128; // < 2^115
    let shift = -e as u32;
    if shift > 127 {
        return 0;
    }
    let floor = (prod >> shift) as u64;
    if shift == 0 {
        return floor;
    }
    let rem = prod & ((1u128 << shift) - 1);
    if rem >= (1u128 << (shift - 1)) {
        floor + 1
    } else {
        floor
    }
}

/// `X / M` as the nearest `f64`.
pub fn unlift(x: u64) -> f64 {
    x as f64 / MODULUS as f64
}

/// Lattice radius for a real radius: `round(r · M)`, clamped to `M` for
/// radii covering the whole space.
pub fn lift_radius(r: f64) -> u64 {
    debug_assert!(r > 0.0);
    if r >= 1.0 {
        MODULUS
    } else {
        lift(r)
    }
}

/// Exact `round(p · M / q)` for `0 <= p <= q`, `q > 0` (u128 arithmetic).
pub fn lift_ratio_u128(p: u128, q: u128) -> u64 {
    debug_assert!(p <= q && q > 0);
    // round(pM/q) = floor((2pM + q) / 2q); pM < 2^66 * 2^62 only if p large —
    // p <= q and the callers keep q < 2^64, so pM < 2^126.
    let num = 2 * p * M128 + q;
    (num / (2 * q)) as u64 % MODULUS
}

/// Exact `round(M · (√d − sub) / den)` for a quadratic surd in `[0, 1)`.
///
/// Used for the golden `(√5 − 1)/2` and silver `√2 − 1` rotation numbers so
/// the lattice step inherits the surd directly instead of an `f64` image.
pub fn lift_quadratic(d: u64, sub: u64, den: u64) -> u64 {
    // round((s − B)/den) with s = √(d·M²), B = sub·M:
    //   = floor((2s − 2B + den) / (2·den)).
    // 4dM² overflows u128, so floor(2s) comes from t = isqrt(dM²) and its
    // remainder: floor(2s) = 2t + [dM² − t² > t] (s is irrational here).
    let dm2 = (d as u128) * M128 * M128;
    let t = isqrt_u128(dm2);
    let rem = dm2 - t * t;
    let floor_2s = 2 * t + u128::from(rem > t);
    let b = (sub as u128) * M128;
    let num = floor_2s + den as u128 - 2 * b;
    (num / (2 * den as u128)) as u64
}

/// Integer square root, `floor(√n)`.
pub fn isqrt_u128(n: u128) -> u128 {
    if n == 0 {
        return 0;
    }
    // f64 seed then Newton; converges in a few steps at 128 bits.
    let mut x = (n as f64).sqrt() as u128 + 1;
    loop {
        let y = (x + n / x) / 2;
        if y >= x {
            break;
        }
        x = y;
    }
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

/// Distance on the lattice circle: `min(|a−b|, M−|a−b|)`.
#[inline(always)]
pub fn circ_dist(a: u64, b: u64) -> u64 {
    let d = a.abs_diff(b);
    d.min(MODULUS - d)
}

/// Distance on the lattice interval: `|a − b|`.
#[inline(always)]
pub fn interval_dist(a: u64, b: u64) -> u64 {
    a.abs_diff(b)
}

/// One exact map step on lattice coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum LatticeMap {
    /// Rotation: add `step[i]` to coordinate `i` mod `M`.
    Translate(Vec<u64>),
    /// Expanding circle map: multiply by `k` mod `M`.
    MulMod(u64),
    /// 2×2 integer matrix mod `M`.
    Affine2([[i64; 2]; 2]),
    /// Interval exchange: `left` are the subinterval left endpoints
    /// (`left[0] = 0`), `image_start[j]` the left endpoint of the image of
    /// subinterval `j`. The images tile `[0, M)` exactly.
    Exchange {
        left: Vec<u64>,
        image_start: Vec<u64>,
    },
}

impl LatticeMap {
    #[inline(always)]
    pub(crate) fn step(&self, x: &mut [u64]) {
        match self {
            LatticeMap::Translate(steps) => {
                for (c, a) in x.iter_mut().zip(steps) {
                    let s = *c + *a;
                    *c = if s >= MODULUS { s - MODULUS } else { s };
                }
            }
            LatticeMap::MulMod(k) => {
                if *k == 2 {
                    let s = x[0] + x[0];
                    x[0] = if s >= MODULUS { s - MODULUS } else { s };
                } else {
                    x[0] = ((*k as u128 * x[0] as u128) % M128) as u64;
                }
            }
            LatticeMap::Affine2(m) => {
                let (a, b) = (x[0] as i128, x[1] as i128);
                let u = (m[0][0] as i128 * a + m[0][1] as i128 * b).rem_euclid(M128 as i128);
                let v = (m[1][0] as i128 * a + m[1][1] as i128 * b).rem_euclid(M128 as i128);
                x[0] = u as u64;
                x[1] = v as u64;
            }
            LatticeMap::Exchange { left, image_start } => {
                let j = left.partition_point(|l| *l <= x[0]) - 1;
                x[0] = image_start[j] + (x[0] - left[j]);
            }
        }
    }
}
