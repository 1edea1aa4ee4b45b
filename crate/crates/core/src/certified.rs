//! Certified real arithmetic.
//!
//! [`Interval`] is a closed interval with MPFR endpoints; every operation
//! rounds the lower endpoint down and the upper endpoint up, so the true
//! value always lies inside. When all inputs are exact and MPFR reports an
//! exact result, the interval stays a single point, which is how boundary
//! equalities are recognised.
//!
//! [`LogExponent`] represents exponents of the form `s * log_b(M) + t` with
//! rational `s, t`. Raising an exact power of `b` to such an exponent is
//! evaluated symbolically (`b^(j(s log_b M + t)) = M^(js) b^(jt)`), which is
//! the only way an equality like `|A|^(log2 6) = 6^j` for `|A| = 2^j` can be
//! decided.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer as _;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rug::float::Round;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::Serialize;

/// Working precisions tried in order before a comparison is declared
/// inconclusive.
pub const PRECISION_SCHEDULE: [u32; 8] = [64, 128, 256, 512, 1024, 2048, 4096, 8192];

pub(crate) fn to_rug_integer(x: &BigInt) -> Integer {
    Integer::from_str_radix(&x.to_str_radix(32), 32).expect("radix-32 digits parse")
}

pub(crate) fn to_rug_rational(x: &BigRational) -> Rational {
    Rational::from((to_rug_integer(x.numer()), to_rug_integer(x.denom())))
}

fn from_rug_integer(x: &Integer) -> BigInt {
    BigInt::parse_bytes(x.to_string_radix(32).as_bytes(), 32).expect("radix-32 digits parse")
}

fn from_rug_rational(x: &Rational) -> BigRational {
    BigRational::new(from_rug_integer(x.numer()), from_rug_integer(x.denom()))
}

fn down<T>(prec: u32, src: T) -> Float
where
    Float: rug::ops::AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(prec, src, Round::Down).0
}

fn up<T>(prec: u32, src: T) -> Float
where
    Float: rug::ops::AssignRound<T, Round = Round, Ordering = Ordering>,
{
    Float::with_val_round(prec, src, Round::Up).0
}

/// A closed real interval `[lo, hi]` with outward-rounded MPFR endpoints.
#[derive(Clone, PartialEq)]
pub struct Interval {
    lo: Float,
    hi: Float,
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_point() {
            write!(f, "[{}]", self.lo.to_f64())
        } else {
            write!(f, "[{:e}, {:e}]", self.lo.to_f64(), self.hi.to_f64())
        }
    }
}

impl Interval {
    fn from_bounds(lo: Float, hi: Float) -> Self {
        debug_assert!(lo <= hi, "inverted interval");
        Interval { lo, hi }
    }

    pub fn prec(&self) -> u32 {
        self.lo.prec().max(self.hi.prec())
    }

    /// The exact value of a double (`prec >= 53` keeps it a point).
    pub fn from_f64(prec: u32, x: f64) -> Self {
        assert!(x.is_finite(), "interval endpoints must be finite");
        let prec = prec.max(53);
        let v = Float::with_val(prec, x);
        Interval {
            lo: v.clone(),
            hi: v,
        }
    }

    pub fn from_i64(prec: u32, x: i64) -> Self {
        Self::from_integer(prec, &BigInt::from(x))
    }

    pub fn from_integer(prec: u32, x: &BigInt) -> Self {
        let x = to_rug_integer(x);
        Interval::from_bounds(down(prec, &x), up(prec, &x))
    }

    pub fn from_rational(prec: u32, x: &BigRational) -> Self {
        let x = to_rug_rational(x);
        Interval::from_bounds(down(prec, &x), up(prec, &x))
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    /// Exact value when the interval is a single point.
    pub fn exact_value(&self) -> Option<BigRational> {
        if !self.is_point() {
            return None;
        }
        self.lo.to_rational().map(|r| from_rug_rational(&r))
    }

    pub fn mid_f64(&self) -> f64 {
        let p = self.prec();
        let mid = Float::with_val(p + 1, &self.lo + &self.hi) / 2u32;
        mid.to_f64()
    }

    pub fn lo_f64(&self) -> f64 {
        self.lo.to_f64_round(Round::Down)
    }

    pub fn hi_f64(&self) -> f64 {
        self.hi.to_f64_round(Round::Up)
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0 && self.hi >= 0
    }

    /// `true` when every point of `self` is strictly below every point of
    /// `other`.
    pub fn certainly_lt(&self, other: &Interval) -> bool {
        self.hi < other.lo
    }

    pub fn certainly_gt(&self, other: &Interval) -> bool {
        self.lo > other.hi
    }

    pub fn add(&self, other: &Interval) -> Interval {
        let p = self.prec().max(other.prec());
        Interval::from_bounds(down(p, &self.lo + &other.lo), up(p, &self.hi + &other.hi))
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        let p = self.prec().max(other.prec());
        Interval::from_bounds(down(p, &self.lo - &other.hi), up(p, &self.hi - &other.lo))
    }

    pub fn neg(&self) -> Interval {
        Interval::from_bounds(
            Float::with_val(self.hi.prec(), -&self.hi),
            Float::with_val(self.lo.prec(), -&self.lo),
        )
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        let p = self.prec().max(other.prec());
        let corners = [
            (&self.lo, &other.lo),
            (&self.lo, &other.hi),
            (&self.hi, &other.lo),
            (&self.hi, &other.hi),
        ];
        let lo = corners
            .iter()
            .map(|(a, b)| down(p, *a * *b))
            .min_by(|a, b| a.partial_cmp(b).unwrap())
            .unwrap();
        let hi = corners
            .iter()
            .map(|(a, b)| up(p, *a * *b))
            .max_by(|a, b| a.partial_cmp(b).unwrap())
            .unwrap();
        Interval::from_bounds(lo, hi)
    }

    pub fn mul_rational(&self, r: &BigRational) -> Interval {
        self.mul(&Interval::from_rational(self.prec(), r))
    }

    /// Division by an interval that does not contain zero.
    pub fn div(&self, other: &Interval) -> Interval {
        assert!(
            !other.contains_zero(),
            "interval division by a range containing zero"
        );
        let p = self.prec().max(other.prec());
        let corners = [
            (&self.lo, &other.lo),
            (&self.lo, &other.hi),
            (&self.hi, &other.lo),
            (&self.hi, &other.hi),
        ];
        let lo = corners
            .iter()
            .map(|(a, b)| down(p, *a / *b))
            .min_by(|a, b| a.partial_cmp(b).unwrap())
            .unwrap();
        let hi = corners
            .iter()
            .map(|(a, b)| up(p, *a / *b))
            .max_by(|a, b| a.partial_cmp(b).unwrap())
            .unwrap();
        Interval::from_bounds(lo, hi)
    }

    /// Natural logarithm of a strictly positive interval.
    pub fn ln(&self) -> Interval {
        assert!(self.lo > 0, "logarithm of a nonpositive interval");
        let p = self.prec();
        Interval::from_bounds(down(p, self.lo.ln_ref()), up(p, self.hi.ln_ref()))
    }

    pub fn log2(&self) -> Interval {
        assert!(self.lo > 0, "logarithm of a nonpositive interval");
        let p = self.prec();
        Interval::from_bounds(down(p, self.lo.log2_ref()), up(p, self.hi.log2_ref()))
    }

    pub fn exp(&self) -> Interval {
        let p = self.prec();
        Interval::from_bounds(down(p, self.lo.exp_ref()), up(p, self.hi.exp_ref()))
    }

    /// Integer power of a nonnegative interval.
    pub fn powi(&self, n: u32) -> Interval {
        assert!(self.lo >= 0, "powi expects a nonnegative base");
        let p = self.prec();
        Interval::from_bounds(down(p, (&self.lo).pow(n)), up(p, (&self.hi).pow(n)))
    }

    /// `self^e` for a nonnegative base. The exponent must be positive when
    /// the base interval reaches zero.
    pub fn pow(&self, e: &Interval) -> Interval {
        assert!(self.lo >= 0, "real power of a negative base");
        assert!(
            self.lo > 0 || e.lo > 0,
            "0^e is only defined here for positive e"
        );
        let p = self.prec().max(e.prec());
        let corners = [
            (&self.lo, &e.lo),
            (&self.lo, &e.hi),
            (&self.hi, &e.lo),
            (&self.hi, &e.hi),
        ];
        // x^y is monotone in each argument on (0, inf) x R, so the extremes
        // sit at the corners
        let lo = corners
            .iter()
            .map(|(a, b)| down(p, (*a).pow(*b)))
            .min_by(|a, b| a.partial_cmp(b).unwrap())
            .unwrap();
        let hi = corners
            .iter()
            .map(|(a, b)| up(p, (*a).pow(*b)))
            .max_by(|a, b| a.partial_cmp(b).unwrap())
            .unwrap();
        Interval::from_bounds(lo, hi)
    }

    /// `self^e` with a symbolic exponent; exact when `self` is an exact
    /// power of the exponent's logarithm base and the powers come out whole.
    pub fn pow_log(&self, e: &LogExponent) -> Interval {
        let p = self.prec();
        if let Some(x) = self.exact_value() {
            if let Some(v) = e.exact_power(&x) {
                return Interval::from_rational(p, &v);
            }
        }
        self.pow(&e.interval(p))
    }

    /// Intersection with `[0, inf)`; for quantities known to be nonnegative
    /// whose enclosure dips below zero through rounding.
    pub fn clamp_nonneg(&self) -> Interval {
        if self.lo >= 0 {
            return self.clone();
        }
        assert!(
            self.hi >= 0,
            "clamping an interval that is entirely negative"
        );
        Interval::from_bounds(Float::with_val(self.lo.prec(), 0), self.hi.clone())
    }

    /// Interval hull.
    pub fn hull(&self, other: &Interval) -> Interval {
        let lo = if self.lo <= other.lo {
            self.lo.clone()
        } else {
            other.lo.clone()
        };
        let hi = if self.hi >= other.hi {
            self.hi.clone()
        } else {
            other.hi.clone()
        };
        Interval::from_bounds(lo, hi)
    }
}

/// An exponent `scale * log_base(arg) + offset`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LogExponent {
    #[serde(serialize_with = "crate::report::decimal")]
    pub base: BigInt,
    #[serde(serialize_with = "crate::report::decimal")]
    pub arg: BigInt,
    #[serde(serialize_with = "ser_rational")]
    pub scale: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub offset: BigRational,
}

fn ser_rational<S: serde::Serializer>(x: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

impl LogExponent {
    /// `log_base(arg)`.
    pub fn log(base: impl Into<BigInt>, arg: impl Into<BigInt>) -> Self {
        let base = base.into();
        let arg = arg.into();
        assert!(base > BigInt::one(), "logarithm base must exceed 1");
        assert!(arg.is_positive(), "logarithm argument must be positive");
        LogExponent {
            base,
            arg,
            scale: BigRational::one(),
            offset: BigRational::zero(),
        }
    }

    /// `log2(arg)`.
    pub fn log2(arg: impl Into<BigInt>) -> Self {
        Self::log(2, arg)
    }

    pub fn scaled(mut self, factor: BigRational) -> Self {
        self.scale *= &factor;
        self.offset *= factor;
        self
    }

    pub fn shifted(mut self, by: BigRational) -> Self {
        self.offset += by;
        self
    }

    /// Enclosure of the exponent's value.
    pub fn interval(&self, prec: u32) -> Interval {
        let guard = prec + 16;
        let log_arg = Interval::from_integer(guard, &self.arg).log2();
        let log_base = Interval::from_integer(guard, &self.base).log2();
        let v = log_arg
            .div(&log_base)
            .mul_rational(&self.scale)
            .add(&Interval::from_rational(guard, &self.offset));
        Interval::from_bounds(down(prec, &v.lo), up(prec, &v.hi))
    }

    pub fn to_f64(&self) -> f64 {
        self.interval(64).mid_f64()
    }

    /// `x^self` exactly, when that is a rational number this type can see.
    pub fn exact_power(&self, x: &BigRational) -> Option<BigRational> {
        if x.is_one() {
            return Some(BigRational::one());
        }
        if x.is_zero() {
            // 0^e = 0 for e > 0
            return (self.interval(64).lo > 0).then(BigRational::zero);
        }
        if x.is_negative() {
            return None;
        }
        let j = exact_log(&self.base, x)?;
        let j = BigRational::from_integer(BigInt::from(j));
        let arg_pow = &j * &self.scale;
        let base_pow = &j * &self.offset;
        if !arg_pow.is_integer() || !base_pow.is_integer() {
            return None;
        }
        let a = int_pow(&self.arg, &arg_pow.to_integer())?;
        let b = int_pow(&self.base, &base_pow.to_integer())?;
        Some(a * b)
    }
}

/// `base^n` as a rational, for `|n|` small enough to materialise.
fn int_pow(base: &BigInt, n: &BigInt) -> Option<BigRational> {
    let e = n.abs().to_u32()?;
    if e > 1 << 20 {
        return None;
    }
    let v = BigRational::from_integer(num_traits::pow(base.clone(), e as usize));
    Some(if n.is_negative() { v.recip() } else { v })
}

/// `j` with `x = base^j`, if one exists.
fn exact_log(base: &BigInt, x: &BigRational) -> Option<i64> {
    let (n, d) = (x.numer(), x.denom());
    if d.is_one() {
        integer_log(base, n).map(|j| j as i64)
    } else if n.is_one() {
        integer_log(base, d).map(|j| -(j as i64))
    } else {
        None
    }
}

fn integer_log(base: &BigInt, n: &BigInt) -> Option<u64> {
    let mut rest = n.clone();
    let mut j = 0u64;
    while !rest.is_one() {
        let (q, r) = rest.div_rem(base);
        if !r.is_zero() || q.is_zero() {
            return None;
        }
        rest = q;
        j += 1;
    }
    Some(j)
}

/// Outcome of a certified comparison `lhs <= rhs`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// `lhs < rhs`, certified by disjoint enclosures.
    Holds,
    /// `lhs = rhs`, both sides evaluated exactly.
    Equality,
    /// `lhs > rhs`, certified by disjoint enclosures.
    Fails,
    /// Enclosures still overlap at the largest precision.
    Inconclusive,
}

impl Verdict {
    /// `lhs <= rhs` is established.
    pub fn is_ok(self) -> bool {
        matches!(self, Verdict::Holds | Verdict::Equality)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Certified {
    pub verdict: Verdict,
    /// Precision (bits) at which the verdict was reached.
    pub precision: u32,
}

/// Decides `lhs <= rhs` by evaluating both sides at increasing precision
/// until the enclosures separate or both collapse to the same point.
pub fn certify_le(mut eval: impl FnMut(u32) -> (Interval, Interval)) -> Certified {
    certify_le_up_to(*PRECISION_SCHEDULE.last().unwrap(), &mut eval)
}

pub fn certify_le_up_to(
    max_precision: u32,
    mut eval: impl FnMut(u32) -> (Interval, Interval),
) -> Certified {
    let mut last = PRECISION_SCHEDULE[0];
    for &prec in PRECISION_SCHEDULE.iter().filter(|&&p| p <= max_precision) {
        last = prec;
        let (lhs, rhs) = eval(prec);
        let verdict = if lhs.certainly_lt(&rhs) {
            Verdict::Holds
        } else if lhs.certainly_gt(&rhs) {
            Verdict::Fails
        } else if lhs.is_point() && rhs.is_point() && lhs.lo == rhs.lo {
            Verdict::Equality
        } else {
            continue;
        };
        return Certified {
            verdict,
            precision: prec,
        };
    }
    Certified {
        verdict: Verdict::Inconclusive,
        precision: last,
    }
}

/// Decides `value <= base^e` for an exact integer `value` and exact
/// nonnegative rational `base`.
pub fn integer_le_power(value: &BigInt, base: &BigRational, e: &Exponent) -> Certified {
    certify_le(|prec| {
        let lhs = Interval::from_integer(prec, value);
        let rhs = e.pow_of(prec, base);
        (lhs, rhs)
    })
}

/// An exponent that is either symbolic or an exact rational number.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Exponent {
    Log(LogExponent),
    Rational {
        #[serde(serialize_with = "ser_rational")]
        value: BigRational,
    },
}

impl Exponent {
    /// The exact rational value of a double, for user-supplied exponents.
    pub fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x).map(|value| Exponent::Rational { value })
    }

    pub fn interval(&self, prec: u32) -> Interval {
        match self {
            Exponent::Log(e) => e.interval(prec),
            Exponent::Rational { value } => Interval::from_rational(prec, value),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Exponent::Log(e) => e.to_f64(),
            Exponent::Rational { value } => value.to_f64().unwrap_or(f64::NAN),
        }
    }

    /// Enclosure of `base^self` for an exact base.
    pub fn pow_of(&self, prec: u32, base: &BigRational) -> Interval {
        let b = Interval::from_rational(prec, base);
        match self {
            Exponent::Log(e) => b.pow_log(e),
            Exponent::Rational { value } => {
                if base.is_one() || base.is_zero() && value.is_positive() {
                    return b;
                }
                if value.is_integer() && !value.is_negative() {
                    if let Some(n) = value.to_integer().to_u32() {
                        let exact = num_traits::pow(base.clone(), n as usize);
                        return Interval::from_rational(prec, &exact);
                    }
                }
                b.pow(&Interval::from_rational(prec, value))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ratio;

    #[test]
    fn exact_operations_stay_points() {
        let a = Interval::from_f64(64, 0.25);
        let b = Interval::from_f64(64, 0.75);
        assert!(a.add(&b).is_point());
        assert_eq!(a.add(&b).exact_value(), Some(ratio(1, 1)));
        let third = Interval::from_rational(64, &ratio(1, 3));
        assert!(!third.is_point());
        assert!(third.lo() < third.hi());
    }

    #[test]
    fn enclosures_contain_true_values() {
        let ln6 = Interval::from_i64(64, 6).ln();
        assert!(ln6.lo_f64() <= 6f64.ln() && 6f64.ln() <= ln6.hi_f64());
        let p = LogExponent::log2(6).interval(128);
        assert!(p.lo_f64() <= 6f64.log2() && 6f64.log2() <= p.hi_f64());
        let w = Interval::from_f64(64, 3.0).pow(&Interval::from_f64(64, 0.5));
        assert!(w.lo_f64() <= 3f64.sqrt() && 3f64.sqrt() <= w.hi_f64());
    }

    #[test]
    fn power_of_base_is_exact() {
        let p2 = LogExponent::log2(6);
        assert_eq!(p2.exact_power(&ratio(8, 1)), Some(ratio(216, 1)));
        assert_eq!(p2.exact_power(&ratio(1, 4)), Some(ratio(1, 36)));
        assert_eq!(p2.exact_power(&ratio(3, 1)), None);
        assert_eq!(
            LogExponent::log(3, 19).exact_power(&ratio(9, 1)),
            Some(ratio(361, 1))
        );
        // (q - k) with q = log2(2^k + 2), evaluated at base 2
        let e = LogExponent::log2(18).shifted(ratio(-4, 1));
        assert_eq!(e.exact_power(&ratio(2, 1)), Some(ratio(18, 16)));
        // half-integer multiples need an even power of the base
        let half = LogExponent::log2(6).scaled(ratio(1, 2));
        assert_eq!(half.exact_power(&ratio(4, 1)), Some(ratio(6, 1)));
        assert_eq!(half.exact_power(&ratio(2, 1)), None);
    }

    #[test]
    fn certify_detects_equality_and_strictness() {
        let e = Exponent::Log(LogExponent::log2(6));
        let eq = integer_le_power(&BigInt::from(36), &ratio(4, 1), &e);
        assert_eq!(eq.verdict, Verdict::Equality);
        let over = integer_le_power(&BigInt::from(37), &ratio(4, 1), &e);
        assert_eq!(over.verdict, Verdict::Fails);
        // 3^log2(6) ~ 17.1
        let below = integer_le_power(&BigInt::from(17), &ratio(3, 1), &e);
        assert_eq!(below.verdict, Verdict::Holds);
        let above = integer_le_power(&BigInt::from(18), &ratio(3, 1), &e);
        assert_eq!(above.verdict, Verdict::Fails);
    }

    #[test]
    fn rational_exponent_powers() {
        let e = Exponent::from_f64(2.0).unwrap();
        assert_eq!(e.pow_of(64, &ratio(5, 1)).exact_value(), Some(ratio(25, 1)));
        let e = Exponent::from_f64(6f64.log2() - 0.01).unwrap();
        // 36 > 4^(p_2 - 0.01)
        assert_eq!(
            integer_le_power(&BigInt::from(36), &ratio(4, 1), &e).verdict,
            Verdict::Fails
        );
    }

    #[test]
    fn escalation_resolves_tight_gaps() {
        // 2^(1/2) vs 1.41421356237309504880168872420969807: differs past 2^-110
        let target = "141421356237309504880168872420969808/100000000000000000000000000000000000"
            .parse::<BigRational>()
            .unwrap();
        let c = certify_le(|prec| {
            (
                Interval::from_i64(prec, 2).pow(&Interval::from_f64(prec, 0.5)),
                Interval::from_rational(prec, &target),
            )
        });
        assert_eq!(c.verdict, Verdict::Holds);
        assert!(c.precision > 64);
    }

    #[test]
    fn rug_integer_conversion_round_trips() {
        let x: BigInt = "-123456789012345678901234567890".parse().unwrap();
        assert_eq!(from_rug_integer(&to_rug_integer(&x)), x);
    }
}
