//! Continued fractions, `‖Qα‖` norms and constant-type diagnostics.
//!
//! Convergents are computed in exact integer arithmetic: near a convergent
//! denominator `‖qα‖` is of order `1/q`, and the products `q·‖qα‖` that the
//! constant-type scan minimises would otherwise drown in `f64` rounding
//! exactly where they matter. Floats appear only at the reporting boundary.

use crate::error::{Error, Result};
use crate::lattice;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A rotation number (or scan input) in exact or float form.
///
/// Exact variants keep their arithmetic all the way into the lattice step and
/// the constant-type scan; `Float` is for plain decimal inputs where no exact
/// structure is claimed.
#[derive(Clone, Debug, PartialEq)]
pub enum AlphaValue {
    Float(f64),
    Rational(BigRational),
    /// (√5 − 1)/2, partial quotients all 1.
    Golden,
    /// √2 − 1, partial quotients all 2.
    Silver,
}

impl AlphaValue {
    /// Parse `golden`, `silver`, an exact fraction `p/q`, or a decimal string
    /// (decimals are kept exact as `digits/10^k`).
    pub fn parse(s: &str) -> Result<AlphaValue> {
        let s = s.trim();
        match s {
            "golden" => return Ok(AlphaValue::Golden),
            "silver" => return Ok(AlphaValue::Silver),
            _ => {}
        }
        if let Some((p, q)) = s.split_once('/') {
            let p: BigInt = p
                .trim()
                .parse()
                .map_err(|_| Error::config(format!("bad fraction numerator in {s:?}")))?;
            let q: BigInt = q
                .trim()
                .parse()
                .map_err(|_| Error::config(format!("bad fraction denominator in {s:?}")))?;
            if q.is_zero() {
                return Err(Error::config("fraction denominator must be nonzero"));
            }
            return Ok(AlphaValue::Rational(BigRational::new(p, q)));
        }
        // decimal: keep exact
        if let Some((int, frac)) = s.split_once('.') {
            if int.chars().all(|c| c.is_ascii_digit() || c == '-')
                && frac.chars().all(|c| c.is_ascii_digit())
                && !frac.is_empty()
            {
                let digits: BigInt = format!("{int}{frac}")
                    .parse()
                    .map_err(|_| Error::config(format!("bad decimal {s:?}")))?;
                let den = BigInt::from(10u32).pow(frac.len() as u32);
                return Ok(AlphaValue::Rational(BigRational::new(digits, den)));
            }
        }
        if let Ok(v) = s.parse::<i64>() {
            return Ok(AlphaValue::Rational(BigRational::from(BigInt::from(v))));
        }
        s.parse::<f64>()
            .map(AlphaValue::Float)
            .map_err(|_| Error::config(format!("cannot parse rotation number {s:?}")))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            AlphaValue::Float(x) => *x,
            AlphaValue::Rational(r) => r.to_f64().unwrap_or(f64::NAN),
            AlphaValue::Golden => (5f64.sqrt() - 1.0) / 2.0,
            AlphaValue::Silver => 2f64.sqrt() - 1.0,
        }
    }

    /// Exact lattice image `round(α · M)`, requiring `α ∈ (0, 1)`.
    pub fn lattice_step(&self) -> Result<u64> {
        let f = self.to_f64();
        if !(0.0..1.0).contains(&f) || f == 0.0 {
            return Err(Error::contract(format!(
                "rotation number must lie in (0,1), got {f}"
            )));
        }
        Ok(match self {
            AlphaValue::Float(x) => lattice::lift(*x),
            AlphaValue::Rational(r) => {
                let m = BigInt::from(lattice::MODULUS);
                let num = r.numer() * &m * 2u32 + r.denom();
                let x = (num / (r.denom() * 2u32)).to_u64().unwrap_or(0);
                x % lattice::MODULUS
            }
            AlphaValue::Golden => lattice::lift_quadratic(5, 1, 2),
            AlphaValue::Silver => lattice::lift_quadratic(2, 1, 1),
        })
    }

    pub fn describe(&self) -> String {
        match self {
            AlphaValue::Float(x) => format!("{x}"),
            AlphaValue::Rational(r) => format!("{}/{}", r.numer(), r.denom()),
            AlphaValue::Golden => "golden".into(),
            AlphaValue::Silver => "silver".into(),
        }
    }
}

/// A continued fraction expansion `a0 + 1/(a1 + 1/(a2 + …))` with its
/// convergents `(p_i, q_i)`, index 0 being `(a0, 1)`.
#[derive(Clone, Debug)]
pub struct ContinuedFraction {
    pub a0: BigInt,
    pub quotients: Vec<BigInt>,
    pub convergents: Vec<(BigInt, BigInt)>,
}

impl ContinuedFraction {
    fn from_quotients(a0: BigInt, quotients: Vec<BigInt>) -> ContinuedFraction {
        let mut convergents = Vec::with_capacity(quotients.len() + 1);
        let (mut p_prev, mut q_prev) = (BigInt::one(), BigInt::zero());
        let (mut p, mut q) = (a0.clone(), BigInt::one());
        convergents.push((p.clone(), q.clone()));
        for a in &quotients {
            let p_next = a * &p + &p_prev;
            let q_next = a * &q + &q_prev;
            p_prev = std::mem::replace(&mut p, p_next);
            q_prev = std::mem::replace(&mut q, q_next);
            convergents.push((p.clone(), q.clone()));
        }
        ContinuedFraction {
            a0,
            quotients,
            convergents,
        }
    }

    /// `p_i·q_{i−1} − p_{i−1}·q_i = ±1` for consecutive convergents;
    /// exact integer identity, used as a self-check and by tests.
    pub fn determinant_identity_holds(&self) -> bool {
        self.convergents.windows(2).all(|w| {
            let ((p0, q0), (p1, q1)) = (&w[0], &w[1]);
            let det = p1 * q0 - p0 * q1;
            det.abs().is_one()
        })
    }
}

/// Expand a continued fraction to `depth` partial quotients.
///
/// Rational inputs use the Euclidean algorithm in exact arithmetic and may
/// terminate earlier than `depth`; the presets use their periodic streams.
/// Float inputs are rejected: an `f64` has no trustworthy deep expansion.
pub fn cf_expand(alpha: &AlphaValue, depth: usize) -> Result<ContinuedFraction> {
    if depth == 0 {
        return Err(Error::contract("cf_expand depth must be >= 1"));
    }
    match alpha {
        AlphaValue::Golden => Ok(ContinuedFraction::from_quotients(
            BigInt::zero(),
            vec![BigInt::one(); depth],
        )),
        AlphaValue::Silver => Ok(ContinuedFraction::from_quotients(
            BigInt::zero(),
            vec![BigInt::from(2); depth],
        )),
        AlphaValue::Rational(r) => {
            if r.is_integer() {
                return Err(Error::contract(format!(
                    "continued fraction of the integer {} is degenerate",
                    r
                )));
            }
            if r.numer().is_negative() || r.denom().is_negative() {
                return Err(Error::contract("cf_expand expects a positive rational"));
            }
            let a0 = r.numer() / r.denom();
            let mut x = r.numer() % r.denom();
            let mut y = r.denom().clone();
            let mut quotients = Vec::new();
            while !x.is_zero() && quotients.len() < depth {
                let a = &y / &x;
                quotients.push(a.clone());
                let rem = &y - &a * &x;
                y = std::mem::replace(&mut x, rem);
            }
            Ok(ContinuedFraction::from_quotients(a0, quotients))
        }
        AlphaValue::Float(_) => Err(Error::contract(
            "cf_expand requires an exact rational or a preset",
        )),
    }
}

/// `sup_i ‖Q·α_i‖` — the distance from `Q·α` to the nearest integer lattice
/// point, in the sup norm over coordinates.
pub fn nearest_int_norm(alpha: &[f64], q: i64) -> Result<f64> {
    if q == 0 {
        return Err(Error::contract("nearest_int_norm requires Q != 0"));
    }
    Ok(alpha
        .iter()
        .map(|a| {
            let v = q as f64 * a;
            (v - v.round()).abs()
        })
        .fold(0.0, f64::max))
}

/// Result of an exhaustive `1 ≤ Q ≤ Q_max` scan of `‖Qα‖·|Q|^{1/d}`.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ConstantTypeReport {
    pub alpha: String,
    pub dim: usize,
    pub q_max: u64,
    /// `min_Q ‖Qα‖·Q^{1/d}`; exactly 0 when α is rational and `Q_max ≥ q`.
    pub c_min: f64,
    pub argmin_q: u64,
    /// Running minima at `Q = 10, 100, …` and at `Q_max` (non-increasing).
    pub decade_minima: Vec<(u64, f64)>,
}

/// Exhaustive constant-type scan. Negative `Q` are redundant
/// (`‖−Qα‖ = ‖Qα‖`), so only positive `Q` are visited.
///
/// For one-dimensional exact inputs (rational, golden, silver) the minimum is
/// located in exact arithmetic; for float input (any dimension) the scan is
/// straight `f64`.
pub fn constant_type_scan(alpha: &[AlphaValue], q_max: u64) -> Result<ConstantTypeReport> {
    if alpha.is_empty() {
        return Err(Error::contract("constant_type_scan needs >= 1 coordinate"));
    }
    if q_max < 1 {
        return Err(Error::contract("constant_type_scan requires Q_max >= 1"));
    }
    let dim = alpha.len();
    let desc = alpha
        .iter()
        .map(AlphaValue::describe)
        .collect::<Vec<_>>()
        .join(",");

    if dim == 1 {
        match &alpha[0] {
            AlphaValue::Rational(r) => return scan_rational(r, q_max, desc),
            AlphaValue::Golden => return scan_quadratic(5, 1, 2, q_max, desc),
            AlphaValue::Silver => return scan_quadratic(2, 1, 1, q_max, desc),
            AlphaValue::Float(_) => {}
        }
    }
    let floats: Vec<f64> = alpha.iter().map(AlphaValue::to_f64).collect();
    let exponent = 1.0 / dim as f64;
    let mut best = f64::INFINITY;
    let mut argmin = 1u64;
    let mut decades = Vec::new();
    let mut next_decade = 10u64;
    for q in 1..=q_max {
        let norm = nearest_int_norm(&floats, q as i64)?;
        let val = norm * (q as f64).powf(exponent);
        if val < best {
            best = val;
            argmin = q;
        }
        if q == next_decade {
            decades.push((q, best));
            next_decade = next_decade.saturating_mul(10);
        }
    }
    if decades.last().map(|d| d.0) != Some(q_max) {
        decades.push((q_max, best));
    }
    Ok(ConstantTypeReport {
        alpha: desc,
        dim,
        q_max,
        c_min: best,
        argmin_q: argmin,
        decade_minima: decades,
    })
}

/// Exact scan for rational α = p/q: `Q·‖Q·p/q‖ = Q·min(QP mod q, q − QP mod q)/q`,
/// all integers with a common denominator.
fn scan_rational(r: &BigRational, q_max: u64, desc: String) -> Result<ConstantTypeReport> {
    let den = r.denom().clone();
    let num = r.numer().mod_floor_big(&den);
    let mut best_num = BigInt::from(-1); // numerator of Q·‖Qα‖ over denominator den
    let mut argmin = 1u64;
    let mut decades = Vec::new();
    let mut next_decade = 10u64;
    let mut acc = BigInt::zero(); // Q·num mod den, updated incrementally
    for q in 1..=q_max {
        acc += &num;
        if acc >= den {
            acc -= &den;
        }
        let r1 = acc.clone();
        let r2 = &den - &acc;
        let rem = r1.min(r2);
        let val = rem * q;
        if best_num.is_negative() || val < best_num {
            best_num = val;
            argmin = q;
            if best_num.is_zero() {
                // cannot improve below zero; finish decades and stop
                while next_decade <= q_max {
                    decades.push((next_decade.min(q_max), 0.0));
                    next_decade = next_decade.saturating_mul(10);
                }
                decades.push((q_max, 0.0));
                decades.dedup();
                return Ok(ConstantTypeReport {
                    alpha: desc,
                    dim: 1,
                    q_max,
                    c_min: 0.0,
                    argmin_q: argmin,
                    decade_minima: decades,
                });
            }
        }
        if q == next_decade {
            decades.push((q, big_ratio_f64(&best_num, &den)));
            next_decade = next_decade.saturating_mul(10);
        }
    }
    let c_min = big_ratio_f64(&best_num, &den);
    if decades.last().map(|d| d.0) != Some(q_max) {
        decades.push((q_max, c_min));
    }
    Ok(ConstantTypeReport {
        alpha: desc,
        dim: 1,
        q_max,
        c_min,
        argmin_q: argmin,
        decade_minima: decades,
    })
}

fn big_ratio_f64(n: &BigInt, d: &BigInt) -> f64 {
    BigRational::new(n.clone(), d.clone())
        .to_f64()
        .unwrap_or(f64::NAN)
}

trait ModFloorBig {
    fn mod_floor_big(&self, m: &BigInt) -> BigInt;
}
impl ModFloorBig for BigInt {
    fn mod_floor_big(&self, m: &BigInt) -> BigInt {
        let r = self % m;
        if r.is_negative() {
            r + m
        } else {
            r
        }
    }
}

/// `Q·‖Qα‖` for α = (√d − b)/c, held exactly as `|u√d − v| / c` with
/// `u = Q²`, `v = Q·m`.
#[derive(Clone, Debug)]
struct SurdCandidate {
    u: BigInt,
    v: BigInt,
}

impl SurdCandidate {
    fn to_f64(&self, d: u64, c: u64) -> f64 {
        let u = self.u.to_f64().unwrap_or(f64::NAN);
        let v = self.v.to_f64().unwrap_or(f64::NAN);
        (u * (d as f64).sqrt() - v).abs() / c as f64
    }
}

/// `|u√d − v| < |u'√d − v'|` exactly.
fn surd_abs_lt(a: &SurdCandidate, b: &SurdCandidate, d: u64) -> bool {
    // compare squares: (u²d + v²) − (u'²d + v'²) < 2(uv − u'v')√d
    let d_big = BigInt::from(d);
    let p = (&a.u * &a.u - &b.u * &b.u) * &d_big + (&a.v * &a.v - &b.v * &b.v);
    let r: BigInt = (&a.u * &a.v - &b.u * &b.v) * 2;
    // decide p < r√d
    match (p.is_negative(), r.is_negative() || r.is_zero()) {
        (true, false) => true,                      // p<0 ≤ r√d
        (false, true) => false,                     // p≥0 > r√d (r ≤ 0, not both zero-valued)
        (true, true) => &p * &p > &r * &r * &d_big, // both negative: |p| > |r|√d
        (false, false) => &p * &p < &r * &r * &d_big,
    }
}

/// Exact scan for α = (√d − b)/c (golden: d=5,b=1,c=2; silver: d=2,b=1,c=1).
fn scan_quadratic(d: u64, b: u64, c: u64, q_max: u64, desc: String) -> Result<ConstantTypeReport> {
    let mut best: Option<SurdCandidate> = None;
    let mut argmin = 1u64;
    let mut decades = Vec::new();
    let mut next_decade = 10u64;
    for q in 1..=q_max {
        let cand = quadratic_norm_times_q(d, b, c, q);
        let better = match &best {
            None => true,
            Some(cur) => surd_abs_lt(&cand, cur, d),
        };
        if better {
            best = Some(cand);
            argmin = q;
        }
        if q == next_decade {
            decades.push((q, best.as_ref().unwrap().to_f64(d, c)));
            next_decade = next_decade.saturating_mul(10);
        }
    }
    let c_min = best.as_ref().unwrap().to_f64(d, c);
    if decades.last().map(|e| e.0) != Some(q_max) {
        decades.push((q_max, c_min));
    }
    Ok(ConstantTypeReport {
        alpha: desc,
        dim: 1,
        q_max,
        c_min,
        argmin_q: argmin,
        decade_minima: decades,
    })
}

/// The exact value `Q·‖Q·(√d−b)/c‖` as a [`SurdCandidate`].
///
/// `‖Qα‖ = min_m |Q√d − m| / c` over integers `m ≡ Q·b (mod c)`; candidates
/// sit next to `floor(Q√d)`, located by integer square root.
fn quadratic_norm_times_q(d: u64, b: u64, c: u64, q: u64) -> SurdCandidate {
    let s = lattice::isqrt_u128(d as u128 * q as u128 * q as u128) as i128;
    let want = (q as i128 * b as i128) % c as i128;
    let mut best: Option<(SurdCandidate, bool)> = None; // (candidate, below)
    for m in [s - 1, s, s + 1, s + 2] {
        if m <= 0 || (m % c as i128) != want {
            continue;
        }
        let cand = SurdCandidate {
            u: BigInt::from(q) * q,
            v: BigInt::from(m) * q,
        };
        let better = match &best {
            None => true,
            Some((cur, _)) => surd_abs_lt(&cand, cur, d),
        };
        if better {
            best = Some((cand, false));
        }
    }
    best.expect("at least one residue candidate exists").0
}

/// A Liouville-flavoured rotation number: the exact value of the continued
/// fraction `[0; g, g², …, g^depth]`.
#[derive(Clone, Debug)]
pub struct LiouvilleNumber {
    pub growth: u64,
    pub depth: usize,
    pub quotients: Vec<BigInt>,
    pub value: BigRational,
    /// `None` when the convergent denominator exceeds `f64` range.
    pub float_image: Option<f64>,
}

/// Construct the truncated-Liouville rotation number with partial quotients
/// `a_k = growth^k`, `k = 1..=depth`, in exact arithmetic.
pub fn liouville_like(growth: u64, depth: usize) -> Result<LiouvilleNumber> {
    if growth < 2 {
        return Err(Error::contract("liouville growth must be >= 2"));
    }
    if depth < 1 {
        return Err(Error::contract("liouville depth must be >= 1"));
    }
    let quotients: Vec<BigInt> = (1..=depth as u32)
        .map(|k| BigInt::from(growth).pow(k))
        .collect();
    let cf = ContinuedFraction::from_quotients(BigInt::zero(), quotients.clone());
    let (p, q) = cf.convergents.last().unwrap().clone();
    let value = BigRational::new(p, q);
    let float_image = value.to_f64().filter(|f| f.is_finite() && *f > 0.0);
    Ok(LiouvilleNumber {
        growth,
        depth,
        quotients,
        value,
        float_image,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(p: i64, q: i64) -> AlphaValue {
        AlphaValue::Rational(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    #[test]
    fn cf_of_22_over_7() {
        let cf = cf_expand(&rat(22, 7), 10).unwrap();
        assert_eq!(cf.a0, BigInt::from(3));
        assert_eq!(cf.quotients, vec![BigInt::from(7)]);
        assert!(cf.determinant_identity_holds());
    }

    #[test]
    fn cf_of_one_half() {
        let cf = cf_expand(&rat(1, 2), 10).unwrap();
        assert_eq!(cf.a0, BigInt::zero());
        assert_eq!(cf.quotients, vec![BigInt::from(2)]);
    }

    #[test]
    fn cf_degenerate_inputs_error() {
        assert!(cf_expand(&rat(0, 1), 5).is_err());
        assert!(cf_expand(&rat(1, 1), 5).is_err());
        assert!(cf_expand(&AlphaValue::Float(0.5), 5).is_err());
    }

    #[test]
    fn golden_convergents_are_fibonacci() {
        let cf = cf_expand(&AlphaValue::Golden, 5).unwrap();
        assert_eq!(cf.quotients, vec![BigInt::one(); 5]);
        let qs: Vec<i64> = cf.convergents[1..]
            .iter()
            .map(|(_, q)| q.to_i64().unwrap())
            .collect();
        assert_eq!(qs, vec![1, 2, 3, 5, 8]);
        assert!(cf.determinant_identity_holds());
    }

    #[test]
    fn norm_examples() {
        assert!((nearest_int_norm(&[0.5], 1).unwrap() - 0.5).abs() < 1e-15);
        assert!((nearest_int_norm(&[0.25], 2).unwrap() - 0.5).abs() < 1e-15);
        assert!(nearest_int_norm(&[0.3], 0).is_err());
        // symmetry in Q
        for q in [1i64, 3, 17, 1000] {
            let a = nearest_int_norm(&[0.618033988749895, 0.3], q).unwrap();
            let b = nearest_int_norm(&[0.618033988749895, 0.3], -q).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn golden_fibonacci_norms_approach_inv_sqrt5() {
        let alpha = AlphaValue::Golden.to_f64();
        // q_k · ‖q_k α‖ → 1/√5 along Fibonacci denominators
        let target = 1.0 / 5f64.sqrt();
        for q in [89i64, 233, 610] {
            let prod = q as f64 * nearest_int_norm(&[alpha], q).unwrap();
            assert!((prod - target).abs() < 2e-3, "q={q}: {prod} vs {target}");
        }
    }

    #[test]
    fn golden_scan_exact() {
        let report = constant_type_scan(&[AlphaValue::Golden], 100_000).unwrap();
        // minimum over all Q is attained at Q=1: 1·‖α‖ = 1 − α = (3−√5)/2
        let expected = (3.0 - 5f64.sqrt()) / 2.0; // 0.3819660…
        assert_eq!(report.argmin_q, 1);
        assert!((report.c_min - expected).abs() < 1e-12);
        assert!(report.c_min >= 0.3);
        // non-increasing across decades
        for w in report.decade_minima.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-15);
        }
    }

    #[test]
    fn rational_scan_hits_zero_at_denominator() {
        let report = constant_type_scan(&[rat(355, 113)], 200).unwrap();
        assert_eq!(report.c_min, 0.0);
        assert_eq!(report.argmin_q, 113);
    }

    #[test]
    fn scan_min_over_superset_is_smaller() {
        let r10 = constant_type_scan(&[AlphaValue::Silver], 10).unwrap();
        let r100 = constant_type_scan(&[AlphaValue::Silver], 100).unwrap();
        assert!(r100.c_min <= r10.c_min);
    }

    #[test]
    fn liouville_recurrence_exact() {
        let l = liouville_like(10, 3).unwrap();
        assert_eq!(
            l.quotients,
            vec![BigInt::from(10), BigInt::from(100), BigInt::from(1000)]
        );
        // q_3 = 1000·(100·10 + 1) + 10
        assert_eq!(l.value.denom(), &BigInt::from(1000 * (100 * 10 + 1) + 10));
        let f = l.float_image.unwrap();
        assert!((f - 0.0999000999).abs() < 1e-6);
    }

    #[test]
    fn liouville_convergent_inequality() {
        // ‖q_2·α‖·q_2 ≤ q_2/q_3 — the convergent bound driving non-constant type
        let l = liouville_like(10, 3).unwrap();
        let cf = ContinuedFraction::from_quotients(BigInt::zero(), l.quotients.clone());
        let q2 = cf.convergents[2].1.to_i64().unwrap();
        let q3 = cf.convergents[3].1.to_f64().unwrap();
        let alpha = l.float_image.unwrap();
        let prod = q2 as f64 * nearest_int_norm(&[alpha], q2).unwrap();
        assert!(prod <= q2 as f64 / q3 + 1e-12, "{prod}");
    }

    #[test]
    fn liouville_growth_two_depth_one_is_half() {
        let l = liouville_like(2, 1).unwrap();
        assert_eq!(l.value, BigRational::new(BigInt::one(), BigInt::from(2)));
    }

    #[test]
    fn liouville_scan_collapses_along_convergents() {
        let l = liouville_like(10, 4).unwrap();
        let alpha = AlphaValue::Rational(l.value.clone());
        let report = constant_type_scan(&[alpha], 1_100_000).unwrap();
        // c_min far below any constant-type floor well before Q_max
        assert!(report.c_min < 1e-3, "c_min = {}", report.c_min);
    }

    #[test]
    fn parse_variants() {
        assert_eq!(AlphaValue::parse("golden").unwrap(), AlphaValue::Golden);
        assert!(matches!(
            AlphaValue::parse("0.25").unwrap(),
            AlphaValue::Rational(_)
        ));
        let v = AlphaValue::parse("1/3").unwrap();
        assert!((v.to_f64() - 1.0 / 3.0).abs() < 1e-15);
        assert!(AlphaValue::parse("x").is_err());
    }
}
