//! Exact sign certification for the coefficients `C_i = a·α + b`,
//! `α = k / log2 binom(2k,k)`, and certified grid checks of the scalar
//! inequalities behind the energy bounds.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::{binomial, Integer as _};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::certified::{certify_le, Certified, Interval, LogExponent, Verdict, PRECISION_SCHEDULE};
use crate::error::{Error, Result};
use crate::exponent::{p_k, q_k};

/// Largest power (in bits) materialised by the exact route of
/// [`compare_alpha`].
const EXACT_POWER_BITS: u64 = 1 << 18;

/// `α = k / log2 M` with `M = binom(2k, k)`, kept symbolic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactAlpha {
    k: u32,
    m: BigInt,
}

impl ExactAlpha {
    pub fn new(k: u32) -> Result<Self> {
        if k < 2 {
            return Err(Error::out_of_range(
                "k",
                format!("{k} (alpha needs k >= 2)"),
            ));
        }
        let m = binomial(BigInt::from(2 * k), BigInt::from(k));
        // irrational: M is never a power of two
        debug_assert!(m
            .trailing_zeros()
            .is_none_or(|z| (&m >> z) != BigInt::one()));
        // 1/2 < α < 1  <=>  2^k < M < 4^k
        debug_assert!(BigInt::one() << k < m && m < BigInt::one() << (2 * k));
        Ok(ExactAlpha { k, m })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn m(&self) -> &BigInt {
        &self.m
    }

    pub fn interval(&self, prec: u32) -> Interval {
        Interval::from_i64(prec, self.k as i64).div(&p_k(self.k).interval(prec))
    }

    pub fn to_f64(&self) -> f64 {
        self.k as f64 / self.m.to_f64().unwrap().log2()
    }
}

/// Exact order of `α` against `p / q` (`q > 0`). Never `Equal`: `α` is
/// irrational.
pub fn compare_alpha(alpha: &ExactAlpha, p: &BigInt, q: &BigInt) -> Ordering {
    assert!(q.is_positive(), "denominator must be positive");
    if !p.is_positive() {
        return Ordering::Greater;
    }
    let g = p.gcd(q);
    let (p, q) = (p / &g, q / &g);
    let kq = BigInt::from(alpha.k) * &q;
    // α > p/q  <=>  k q > p log2 M  <=>  2^(kq) > M^p
    let m_bits = alpha.m.bits();
    if let (Some(kq_u), Some(p_u)) = (kq.to_u64(), p.to_u64()) {
        if kq_u <= EXACT_POWER_BITS && p_u.saturating_mul(m_bits) <= EXACT_POWER_BITS {
            let lhs = BigInt::one() << kq_u;
            let rhs = num_traits::pow(alpha.m.clone(), p_u as usize);
            return lhs.cmp(&rhs);
        }
    }
    let mut prec = PRECISION_SCHEDULE[0];
    loop {
        let lhs = Interval::from_integer(prec, &kq);
        let rhs = Interval::from_integer(prec, &p).mul(&p_k(alpha.k).interval(prec));
        if lhs.certainly_gt(&rhs) {
            return Ordering::Greater;
        }
        if lhs.certainly_lt(&rhs) {
            return Ordering::Less;
        }
        // terminates: p log2 M = kq would make M a power of two
        prec *= 2;
    }
}

/// `C_i = a·α + b`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoeffLinearForm {
    pub k: u32,
    pub i: u32,
    #[serde(serialize_with = "crate::report::decimal")]
    pub a: BigInt,
    #[serde(serialize_with = "crate::report::decimal")]
    pub b: BigInt,
}

impl CoeffLinearForm {
    pub fn interval(&self, alpha: &ExactAlpha, prec: u32) -> Interval {
        alpha
            .interval(prec)
            .mul(&Interval::from_integer(prec, &self.a))
            .add(&Interval::from_integer(prec, &self.b))
    }
}

fn squared_binomials(k: u32) -> Vec<BigInt> {
    let mut row = Vec::with_capacity(k as usize + 1);
    let mut c = BigInt::one();
    for j in 0..=k {
        row.push(&c * &c);
        c = c * (k - j) / (j + 1);
    }
    row
}

/// `a = sum_{j+l=i} binom(k,j)^2 binom(k,l)^2 j(k-l)`,
/// `b = sum_{j+l=i} binom(k,j)^2 binom(k,l)^2 j(k-l)(l-j)`.
pub fn coefficient_form(k: u32, i: u32) -> Result<CoeffLinearForm> {
    if k < 2 {
        return Err(Error::out_of_range("k", format!("{k} (need k >= 2)")));
    }
    if i > 2 * k {
        return Err(Error::out_of_range(
            "i",
            format!("{i} not in [0, {}]", 2 * k),
        ));
    }
    Ok(form_with(&squared_binomials(k), k, i))
}

fn form_with(sq: &[BigInt], k: u32, i: u32) -> CoeffLinearForm {
    let mut a = BigInt::zero();
    let mut b = BigInt::zero();
    let lo = i.saturating_sub(k);
    for j in lo..=i.min(k) {
        let l = i - j;
        let w = &sq[j as usize] * &sq[l as usize] * (j as i64 * (k - l) as i64);
        b += &w * (l as i64 - j as i64);
        a += w;
    }
    CoeffLinearForm { k, i, a, b }
}

/// Every form `C_0..C_{2k}`.
pub fn coefficient_forms(k: u32) -> Result<Vec<CoeffLinearForm>> {
    if k < 2 {
        return Err(Error::out_of_range("k", format!("{k} (need k >= 2)")));
    }
    let sq = squared_binomials(k);
    Ok((0..=2 * k).map(|i| form_with(&sq, k, i)).collect())
}

fn sign_of_form(alpha: &ExactAlpha, f: &CoeffLinearForm) -> i8 {
    if f.a.is_zero() {
        return f.b.signum().to_i8().unwrap();
    }
    // a > 0: sign(aα + b) = sign(α - (-b/a))
    match compare_alpha(alpha, &-&f.b, &f.a) {
        Ordering::Greater => 1,
        Ordering::Less => -1,
        Ordering::Equal => unreachable!("alpha is irrational"),
    }
}

/// Exact sign of `C_i`.
pub fn sign_of_coefficient(k: u32, i: u32) -> Result<i8> {
    let alpha = ExactAlpha::new(k)?;
    Ok(sign_of_form(&alpha, &coefficient_form(k, i)?))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SignPattern {
    pub k: u32,
    /// `sign(C_i)` for `i = 1..=k`.
    pub signs: Vec<i8>,
    pub sign_changes: usize,
    pub palindromic: bool,
    /// At most one sign change and palindromic.
    pub certified: bool,
}

/// Sign changes between consecutive nonzero entries.
pub fn count_sign_changes(signs: &[i8]) -> usize {
    let nonzero: Vec<i8> = signs.iter().copied().filter(|&s| s != 0).collect();
    nonzero.windows(2).filter(|w| w[0] != w[1]).count()
}

pub fn certify_sign_pattern(k: u32) -> Result<SignPattern> {
    let alpha = ExactAlpha::new(k)?;
    let forms = coefficient_forms(k)?;
    let palindromic = (0..=2 * k as usize).all(|i| {
        let (x, y) = (&forms[i], &forms[2 * k as usize - i]);
        x.a == y.a && x.b == y.b
    });
    let signs: Vec<i8> = forms[1..=k as usize]
        .par_iter()
        .map(|f| sign_of_form(&alpha, f))
        .collect();
    let sign_changes = count_sign_changes(&signs);
    Ok(SignPattern {
        k,
        certified: palindromic && sign_changes <= 1,
        signs,
        sign_changes,
        palindromic,
    })
}

/// Patterns for `k = 2..=k_max`, in order.
pub fn certify_sign_patterns(k_max: u32) -> Result<Vec<SignPattern>> {
    (2..=k_max)
        .into_par_iter()
        .map(certify_sign_pattern)
        .collect()
}

/// The sign table as CSV: header `k,C1*,...,C{k_max}*`, blank cells past `C_k`.
pub fn sign_table_csv(patterns: &[SignPattern]) -> String {
    let width = patterns.iter().map(|p| p.k).max().unwrap_or(0);
    let mut out = String::from("k");
    for i in 1..=width {
        out.push_str(&format!(",C{i}*"));
    }
    out.push('\n');
    for p in patterns {
        out.push_str(&p.k.to_string());
        for i in 0..width as usize {
            out.push(',');
            if let Some(s) = p.signs.get(i) {
                out.push_str(&s.to_string());
            }
        }
        out.push('\n');
    }
    out
}

/// `Q_k(t) = 2^-k sum_j binom(k,j)^2 (t-1)^(k-j) (t+1)^j`, exactly.
pub fn legendre_q_exact(k: u32, t: &BigRational) -> BigRational {
    let one = BigRational::one();
    let (tm, tp) = (t - &one, t + &one);
    let sq = squared_binomials(k);
    let sum: BigRational = (0..=k as usize)
        .map(|j| {
            BigRational::from_integer(sq[j].clone())
                * num_traits::pow(tm.clone(), k as usize - j)
                * num_traits::pow(tp.clone(), j)
        })
        .sum();
    sum / BigRational::from_integer(BigInt::one() << k)
}

pub fn legendre_q(k: u32, t: f64) -> f64 {
    let t = BigRational::from_float(t).expect("finite t");
    legendre_q_exact(k, &t).to_f64().unwrap_or(f64::NAN)
}

/// Outcome of one inequality over a grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridCheck {
    pub name: String,
    pub k: u32,
    pub points: usize,
    pub holds: usize,
    pub equalities: usize,
    pub fails: usize,
    pub inconclusive: usize,
    #[serde(serialize_with = "crate::report::sig17_vec")]
    pub equality_at: Vec<f64>,
    #[serde(serialize_with = "crate::report::sig17_vec")]
    pub failures_at: Vec<f64>,
    #[serde(serialize_with = "crate::report::sig17_vec")]
    pub inconclusive_at: Vec<f64>,
    pub max_precision: u32,
}

impl GridCheck {
    pub fn passed(&self) -> bool {
        self.fails == 0 && self.inconclusive == 0
    }
}

fn run_grid<F>(name: &str, k: u32, grid: &[f64], eval: F) -> GridCheck
where
    F: Fn(f64, u32) -> (Interval, Interval) + Sync,
{
    let verdicts: Vec<Certified> = grid
        .par_iter()
        .map(|&x| certify_le(|prec| eval(x, prec)))
        .collect();
    let mut g = GridCheck {
        name: name.to_string(),
        k,
        points: grid.len(),
        holds: 0,
        equalities: 0,
        fails: 0,
        inconclusive: 0,
        equality_at: vec![],
        failures_at: vec![],
        inconclusive_at: vec![],
        max_precision: 0,
    };
    for (&x, c) in grid.iter().zip(&verdicts) {
        g.max_precision = g.max_precision.max(c.precision);
        match c.verdict {
            Verdict::Holds => g.holds += 1,
            Verdict::Equality => {
                g.equalities += 1;
                g.equality_at.push(x);
            }
            Verdict::Fails => {
                g.fails += 1;
                g.failures_at.push(x);
            }
            Verdict::Inconclusive => {
                g.inconclusive += 1;
                g.inconclusive_at.push(x);
            }
        }
    }
    g
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup();
    v
}

/// `points` log-spaced values in `[1, t_max]` plus `1 + 10^-j`, `j = 1..=12`.
pub fn half_line_grid(points: usize, t_max: f64) -> Vec<f64> {
    let span = t_max.log10();
    let mut v: Vec<f64> = (0..points)
        .map(|i| {
            if i == 0 {
                1.0
            } else if i + 1 == points {
                t_max
            } else {
                10f64.powf(span * i as f64 / (points - 1) as f64)
            }
        })
        .collect();
    v.extend((1..=12).map(|j| 1.0 + 10f64.powi(-j)));
    sorted_unique(v)
}

/// `points` uniform values in `[0, 1]` plus `10^-j`, `1 - 10^-j` and
/// `1/2 ± 10^-j`.
pub fn unit_grid(points: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..points)
        .map(|i| i as f64 / (points - 1) as f64)
        .collect();
    for j in 1..=12 {
        let e = 10f64.powi(-j);
        v.push(e);
        v.push(1.0 - e);
    }
    v.push(0.5);
    for j in 2..=8 {
        let e = 10f64.powi(-j);
        v.push(0.5 - e);
        v.push(0.5 + e);
    }
    sorted_unique(v)
}

fn pt(prec: u32, x: f64) -> Interval {
    Interval::from_f64(prec, x)
}

/// `Q_k(t) <= (((t-1)/2)^α + ((t+1)/2)^α)^(p_k)` for `t >= 1`.
pub fn check_legendre_inequality(k: u32, grid: &[f64]) -> Result<GridCheck> {
    let alpha = ExactAlpha::new(k)?;
    if grid.iter().any(|&t| !t.is_finite() || t < 1.0) {
        return Err(Error::out_of_range(
            "t",
            "grid points must be finite and >= 1",
        ));
    }
    let p = p_k(k);
    Ok(run_grid("legendre", k, grid, |t, prec| {
        let tr = BigRational::from_float(t).unwrap();
        let lhs = Interval::from_rational(prec, &legendre_q_exact(k, &tr));
        let half = BigRational::new(1.into(), 2.into());
        let lo = Interval::from_rational(prec, &((&tr - BigRational::one()) * &half));
        let hi = Interval::from_rational(prec, &((&tr + BigRational::one()) * &half));
        let a = alpha.interval(prec);
        let inner = lo.pow(&a).add(&hi.pow(&a));
        (lhs, inner.pow_log(&p))
    }))
}

/// `sum_i binom(k,i)^2 x^(i p_k / k) <= (1 + x)^(p_k)` for `x >= 1`.
pub fn check_key_inequality(k: u32, grid: &[f64]) -> Result<GridCheck> {
    ExactAlpha::new(k)?;
    if grid.iter().any(|&x| !x.is_finite() || x < 1.0) {
        return Err(Error::out_of_range(
            "x",
            "grid points must be finite and >= 1",
        ));
    }
    let sq = squared_binomials(k);
    let p = p_k(k);
    Ok(run_grid("key", k, grid, |x, prec| {
        let xi = pt(prec, x);
        let mut lhs = Interval::from_i64(prec, 0);
        for (i, c) in sq.iter().enumerate() {
            let e = p.clone().scaled(BigRational::new(i.into(), k.into()));
            let term = if i == 0 {
                Interval::from_i64(prec, 1)
            } else {
                xi.pow_log(&e)
            };
            lhs = lhs.add(&term.mul(&Interval::from_integer(prec, c)));
        }
        let rhs = xi.add(&Interval::from_i64(prec, 1)).pow_log(&p);
        (lhs, rhs)
    }))
}

fn q_scaled(k: u32, num: i64, den: i64) -> LogExponent {
    q_k(k).scaled(BigRational::new(num.into(), den.into()))
}

/// Left side of `(a^(q/k) + (1-a)^(q/k))^k + 2 a^(q/2) (1-a)^(q/2) <= 1`.
pub fn goal_lhs(k: u32, a: f64, prec: u32) -> Interval {
    let q = q_k(k);
    let ai = pt(prec, a);
    let bi = Interval::from_i64(prec, 1).sub(&ai);
    if a == 0.5 {
        // symmetric point: 2^k a^q + 2 a^q, exact since a^q = 1/(2^k + 2)
        let half = BigRational::new(1.into(), 2.into());
        let aq = q.exact_power(&half).expect("1/2 is a power of the base");
        let v = aq * BigRational::from_integer((BigInt::one() << k) + 2);
        return Interval::from_rational(prec, &v);
    }
    let s = ai
        .pow_log(&q_scaled(k, 1, k as i64))
        .add(&zero_safe_pow(&bi, &q_scaled(k, 1, k as i64)));
    let first = s.powi(k);
    let half = q_scaled(k, 1, 2);
    let cross = ai
        .pow_log(&half)
        .mul(&zero_safe_pow(&bi, &half))
        .mul(&Interval::from_i64(prec, 2));
    first.add(&cross)
}

/// `x^e` for a nonnegative quantity whose enclosure may dip below zero.
fn zero_safe_pow(x: &Interval, e: &LogExponent) -> Interval {
    x.clamp_nonneg().pow_log(e)
}

/// CFIL instance at `p = q_k / k`: left side of
/// `(a^p + (1-a)^p) (1 + (2 a^(p/2) (1-a)^(p/2) / (a^p + (1-a)^p))^(2/p))^(p-1) <= 1`.
pub fn cfil_lhs(k: u32, a: f64, prec: u32) -> Interval {
    if a == 0.5 {
        // (2^(1-p)) (1 + 1)^(p-1) = 1
        return Interval::from_i64(prec, 1);
    }
    let p = q_scaled(k, 1, k as i64);
    let ai = pt(prec, a);
    let bi = Interval::from_i64(prec, 1).sub(&ai);
    let s = ai.pow_log(&p).add(&zero_safe_pow(&bi, &p));
    let half = q_scaled(k, 1, 2 * k as i64);
    let num = ai
        .pow_log(&half)
        .mul(&zero_safe_pow(&bi, &half))
        .mul(&Interval::from_i64(prec, 2));
    let mu = num.div(&s);
    let pi = p.interval(prec);
    let two_over_p = Interval::from_i64(prec, 2).div(&pi);
    let inner = if mu.hi() <= &0 {
        Interval::from_i64(prec, 1)
    } else {
        Interval::from_i64(prec, 1).add(&mu.clamp_nonneg().pow(&two_over_p))
    };
    let p_minus_1 = p.clone().shifted(-BigRational::one());
    s.mul(&inner.pow_log(&p_minus_1))
}

/// Both sides of `1 + z^(q/2) / 2^(k-1) <= (1+z)^(q-k)`.
pub fn convex_concave_sides(k: u32, z: f64, prec: u32) -> (Interval, Interval) {
    let zi = pt(prec, z);
    let one = Interval::from_i64(prec, 1);
    let lhs = one.add(
        &zi.pow_log(&q_scaled(k, 1, 2))
            .div(&Interval::from_integer(prec, &(BigInt::one() << (k - 1)))),
    );
    let rhs = zi
        .add(&one)
        .pow_log(&q_k(k).shifted(BigRational::from_integer(-BigInt::from(k))));
    (lhs, rhs)
}

/// Grid-level convexity (`sign = 1`) or concavity (`sign = -1`) of a
/// sampled function, via certified second differences on a uniform grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureCheck {
    pub name: String,
    pub k: u32,
    /// `convex` or `concave`.
    pub claim: String,
    pub differences: usize,
    pub agreeing: usize,
    pub violating: usize,
    pub inconclusive: usize,
    #[serde(serialize_with = "crate::report::sig17_vec")]
    pub violations_at: Vec<f64>,
}

impl CurvatureCheck {
    pub fn passed(&self) -> bool {
        self.violating == 0 && self.inconclusive == 0
    }
}

fn second_differences<F>(name: &str, k: u32, convex: bool, points: usize, f: F) -> CurvatureCheck
where
    F: Fn(f64, u32) -> Interval + Sync,
{
    let xs: Vec<f64> = (0..points)
        .map(|i| i as f64 / (points - 1) as f64)
        .collect();
    let verdicts: Vec<Verdict> = (1..points - 1)
        .into_par_iter()
        .map(|i| {
            certify_le(|prec| {
                let d2 = f(xs[i - 1], prec)
                    .sub(&f(xs[i], prec).mul(&Interval::from_i64(prec, 2)))
                    .add(&f(xs[i + 1], prec));
                let zero = Interval::from_i64(prec, 0);
                if convex {
                    (zero, d2)
                } else {
                    (d2, zero)
                }
            })
            .verdict
        })
        .collect();
    let mut c = CurvatureCheck {
        name: name.to_string(),
        k,
        claim: if convex { "convex" } else { "concave" }.into(),
        differences: verdicts.len(),
        agreeing: 0,
        violating: 0,
        inconclusive: 0,
        violations_at: vec![],
    };
    for (i, v) in verdicts.iter().enumerate() {
        match v {
            Verdict::Holds | Verdict::Equality => c.agreeing += 1,
            Verdict::Fails => {
                c.violating += 1;
                c.violations_at.push(xs[i + 1]);
            }
            Verdict::Inconclusive => c.inconclusive += 1,
        }
    }
    c
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HigherEnergyInequalities {
    pub k: u32,
    /// `2x^(q/2)y^(q/2) + (x^(q/k) + y^(q/k))^k <= (x+y)^q` at `(x, y) = (a, 1)`.
    pub two_variable: GridCheck,
    /// The one-variable goal inequality in `a`.
    pub goal: GridCheck,
    /// CFIL instance at `p = q_k / k`.
    pub cfil: GridCheck,
    /// `1 + z^(q/2)/2^(k-1) <= (1+z)^(q-k)` on `z`.
    pub convex_concave: GridCheck,
    pub lhs_convex: CurvatureCheck,
    pub rhs_concave: CurvatureCheck,
    /// Equalities certified at both `z = 0` and `z = 1`.
    pub endpoint_equalities: bool,
}

impl HigherEnergyInequalities {
    pub fn passed(&self) -> bool {
        self.two_variable.passed()
            && self.goal.passed()
            && self.cfil.passed()
            && self.convex_concave.passed()
            && self.lhs_convex.passed()
            && self.rhs_concave.passed()
            && self.endpoint_equalities
    }
}

pub fn check_higher_energy_inequalities(
    k: u32,
    a_grid: &[f64],
    z_grid: &[f64],
    curvature_points: usize,
) -> Result<HigherEnergyInequalities> {
    if k < 2 {
        return Err(Error::out_of_range("k", format!("{k} (need k >= 2)")));
    }
    for (name, g) in [("a", a_grid), ("z", z_grid)] {
        if g.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::out_of_range(
                "grid",
                format!("{name} values must lie in [0, 1]"),
            ));
        }
    }
    if curvature_points < 3 {
        return Err(Error::out_of_range(
            "curvature_points",
            "need at least 3 points",
        ));
    }
    let q = q_k(k);
    let two_variable = run_grid("two_variable", k, a_grid, |a, prec| {
        let x = pt(prec, a);
        let one = Interval::from_i64(prec, 1);
        let cross = x
            .pow_log(&q_scaled(k, 1, 2))
            .mul(&Interval::from_i64(prec, 2));
        let sum = x.pow_log(&q_scaled(k, 1, k as i64)).add(&one).powi(k);
        (cross.add(&sum), x.add(&one).pow_log(&q))
    });
    let goal = run_grid("goal", k, a_grid, |a, prec| {
        (goal_lhs(k, a, prec), Interval::from_i64(prec, 1))
    });
    let cfil = run_grid("cfil", k, a_grid, |a, prec| {
        (cfil_lhs(k, a, prec), Interval::from_i64(prec, 1))
    });
    let convex_concave = run_grid("convex_concave", k, z_grid, |z, prec| {
        convex_concave_sides(k, z, prec)
    });
    let endpoint_equalities = [0.0, 1.0]
        .iter()
        .all(|&z| certify_le(|prec| convex_concave_sides(k, z, prec)).verdict == Verdict::Equality);
    let lhs_convex = second_differences(
        "convex_concave_lhs",
        k,
        true,
        curvature_points,
        |z, prec| convex_concave_sides(k, z, prec).0,
    );
    let rhs_concave = second_differences(
        "convex_concave_rhs",
        k,
        false,
        curvature_points,
        |z, prec| convex_concave_sides(k, z, prec).1,
    );
    Ok(HigherEnergyInequalities {
        k,
        two_variable,
        goal,
        cfil,
        convex_concave,
        lhs_convex,
        rhs_concave,
        endpoint_equalities,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Curve {
    Phi,
    Psi,
    GoalQ,
}

impl std::str::FromStr for Curve {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phi" => Ok(Curve::Phi),
            "psi" => Ok(Curve::Psi),
            "goal_q" | "goal-q" | "q" => Ok(Curve::GoalQ),
            other => Err(Error::out_of_range(
                "curve",
                format!("{other:?} (expected phi, psi or goal_q)"),
            )),
        }
    }
}

/// `φ_k(x) = sum_i binom(k,i)^2 x^(p(k-i)/k) / (1+x)^p`.
pub fn phi(k: u32, x: f64, prec: u32) -> Interval {
    let p = p_k(k);
    let xi = pt(prec, x);
    let sq = squared_binomials(k);
    let mut num = Interval::from_i64(prec, 0);
    for (i, c) in sq.iter().enumerate() {
        let e = p
            .clone()
            .scaled(BigRational::new(BigInt::from(k as usize - i), k.into()));
        let term = if i == k as usize {
            Interval::from_i64(prec, 1)
        } else {
            xi.pow_log(&e)
        };
        num = num.add(&term.mul(&Interval::from_integer(prec, c)));
    }
    num.div(&xi.add(&Interval::from_i64(prec, 1)).pow_log(&p))
}

/// `ψ_k(x) = sum_{i<k} binom(k,i)^2 [((k-i)/k) x^(p(k-i)/k - 1) - (i/k) x^(p(k-i)/k)]`.
pub fn psi(k: u32, x: f64, prec: u32) -> Interval {
    let p = p_k(k);
    let xi = pt(prec, x);
    let sq = squared_binomials(k);
    let kk = Interval::from_i64(prec, k as i64);
    let mut acc = Interval::from_i64(prec, 0);
    for (i, c) in sq.iter().enumerate().take(k as usize) {
        let e = p
            .clone()
            .scaled(BigRational::new(BigInt::from(k as usize - i), k.into()));
        let e1 = e.clone().shifted(-BigRational::one());
        let w1 = Interval::from_i64(prec, (k as usize - i) as i64).div(&kk);
        let w2 = Interval::from_i64(prec, i as i64).div(&kk);
        let term = w1.mul(&xi.pow_log(&e1)).sub(&w2.mul(&xi.pow_log(&e)));
        acc = acc.add(&term.mul(&Interval::from_integer(prec, c)));
    }
    acc
}

pub fn curve_value(which: Curve, k: u32, x: f64, prec: u32) -> Interval {
    match which {
        Curve::Phi => phi(k, x, prec),
        Curve::Psi => psi(k, x, prec),
        Curve::GoalQ => goal_lhs(k, x, prec),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveData {
    pub which: Curve,
    pub k: u32,
    /// How the plotted function was chosen, when that is an interpretation.
    pub assumption: Option<String>,
    #[serde(serialize_with = "crate::report::sig17_vec")]
    pub x: Vec<f64>,
    #[serde(serialize_with = "crate::report::sig17_vec")]
    pub value: Vec<f64>,
    /// Certified second differences: how many are `<= 0`, `> 0`, unresolved.
    pub nonpositive_second_differences: usize,
    pub positive_second_differences: usize,
    pub inconclusive_second_differences: usize,
    /// Every sample certified `<= 1`.
    pub bounded_by_one: bool,
}

pub const GOAL_Q_ASSUMPTION: &str =
    "q_k(x) is taken to be the left-hand side of the one-variable goal inequality in a = x";

/// Samples `which` on `samples` uniform points of `[0, 1]`, with certified
/// second differences and a certified `<= 1` check.
pub fn curve_data(which: Curve, k: u32, samples: usize) -> Result<CurveData> {
    if k < 2 {
        return Err(Error::out_of_range("k", format!("{k} (need k >= 2)")));
    }
    if samples < 2 {
        return Err(Error::out_of_range("samples", "need at least 2 samples"));
    }
    let x: Vec<f64> = (0..samples)
        .map(|i| i as f64 / (samples - 1) as f64)
        .collect();
    let value: Vec<f64> = x
        .par_iter()
        .map(|&t| curve_value(which, k, t, 64).mid_f64())
        .collect();
    let bounded_by_one = x.par_iter().all(|&t| {
        certify_le(|prec| (curve_value(which, k, t, prec), Interval::from_i64(prec, 1)))
            .verdict
            .is_ok()
    });
    let (mut nonpos, mut pos, mut unresolved) = (0, 0, 0);
    if samples >= 3 {
        let c = second_differences("curve", k, false, samples, |t, prec| {
            curve_value(which, k, t, prec)
        });
        nonpos = c.agreeing;
        pos = c.violating;
        unresolved = c.inconclusive;
    }
    Ok(CurveData {
        which,
        k,
        assumption: (which == Curve::GoalQ).then(|| GOAL_Q_ASSUMPTION.to_string()),
        x,
        value,
        nonpositive_second_differences: nonpos,
        positive_second_differences: pos,
        inconclusive_second_differences: unresolved,
        bounded_by_one,
    })
}

impl CurveData {
    /// Two-column CSV with a `#` comment line carrying the assumption.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Some(a) = &self.assumption {
            out.push_str(&format!("# {a}\n"));
        }
        out.push_str("x,value\n");
        for (x, v) in self.x.iter().zip(&self.value) {
            out.push_str(&format!(
                "{},{}\n",
                crate::report::fmt_f64(*x),
                crate::report::fmt_f64(*v)
            ));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PkBoundReport {
    pub k_max: u32,
    pub checked: u32,
    /// First `k` with `binom(2k,k) >= 2^(2k-1)`, if any.
    pub first_failure: Option<u32>,
}

impl PkBoundReport {
    pub fn passed(&self) -> bool {
        self.first_failure.is_none()
    }
}

/// `binom(2k, k) < 2^(2k-1)` for `k = 2..=k_max`, by exact integers.
pub fn check_pk_bound(k_max: u32) -> Result<PkBoundReport> {
    if k_max < 2 {
        return Err(Error::out_of_range("k_max", "need k_max >= 2"));
    }
    let mut c = BigInt::from(2); // binom(2, 1)
    let mut first_failure = None;
    for k in 2..=k_max {
        // binom(2k, k) = binom(2k-2, k-1) (2k-1)(2k) / k^2
        c = c * (2 * k as u64 - 1) * (2 * k as u64) / ((k as u64) * (k as u64));
        if c >= BigInt::one() << (2 * k - 1) && first_failure.is_none() {
            first_failure = Some(k);
        }
    }
    Ok(PkBoundReport {
        k_max,
        checked: k_max - 1,
        first_failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn form(k: u32, i: u32) -> (i64, i64) {
        let f = coefficient_form(k, i).unwrap();
        (f.a.to_i64().unwrap(), f.b.to_i64().unwrap())
    }

    #[test]
    fn forms_for_k2() {
        assert_eq!(form(2, 0), (0, 0));
        assert_eq!(form(2, 1), (8, -8));
        assert_eq!(form(2, 2), (20, -8));
        assert_eq!(form(2, 3), (8, -8));
        assert!(coefficient_form(2, 5).is_err());
    }

    #[test]
    fn compare_alpha_examples() {
        let a = ExactAlpha::new(2).unwrap();
        assert_eq!(compare_alpha(&a, &1.into(), &1.into()), Ordering::Less);
        assert_eq!(compare_alpha(&a, &2.into(), &5.into()), Ordering::Greater);
        assert_eq!(compare_alpha(&a, &0.into(), &1.into()), Ordering::Greater);
        assert_eq!(
            compare_alpha(&a, &(-3).into(), &7.into()),
            Ordering::Greater
        );
        // forced interval route
        let big_q: BigInt = BigInt::from(10).pow(200u32);
        let p_num = BigInt::from((a.to_f64() * 1e15) as i64) * BigInt::from(10).pow(185u32);
        assert_eq!(compare_alpha(&a, &p_num, &big_q), Ordering::Greater);
    }

    #[test]
    fn table_rows() {
        assert_eq!(certify_sign_pattern(2).unwrap().signs, vec![-1, 1]);
        assert_eq!(
            certify_sign_pattern(7).unwrap().signs,
            vec![-1, -1, 1, 1, 1, 1, 1]
        );
        let p10 = certify_sign_pattern(10).unwrap();
        assert_eq!(p10.signs, vec![-1, -1, -1, 1, 1, 1, 1, 1, 1, 1]);
        assert!(p10.certified);
        assert_eq!(sign_of_coefficient(2, 0).unwrap(), 0);
    }

    #[test]
    fn csv_layout() {
        let ps = certify_sign_patterns(3).unwrap();
        assert_eq!(sign_table_csv(&ps), "k,C1*,C2*,C3*\n2,-1,1,\n3,-1,1,1\n");
    }

    #[test]
    fn legendre_values() {
        for k in 0..=10 {
            assert_eq!(legendre_q_exact(k, &BigRational::one()), BigRational::one());
        }
        assert_eq!(legendre_q(0, 7.5), 1.0);
        assert_eq!(legendre_q(2, 3.0), 13.0);
    }

    #[test]
    fn boundary_equalities() {
        let g = check_legendre_inequality(2, &[1.0, 3.0]).unwrap();
        assert_eq!((g.equalities, g.holds), (1, 1));
        let g = check_key_inequality(3, &[1.0, 4.0]).unwrap();
        assert_eq!((g.equalities, g.holds), (1, 1));
        let h = check_higher_energy_inequalities(2, &[0.0, 0.3, 0.5, 1.0], &[0.0, 0.5, 1.0], 20)
            .unwrap();
        assert!(h.passed(), "{h:?}");
        assert_eq!(h.goal.equality_at, vec![0.0, 0.5, 1.0]);
        assert_eq!(h.two_variable.equality_at, vec![0.0, 1.0]);
        assert_eq!(h.convex_concave.equality_at, vec![0.0, 1.0]);
    }

    #[test]
    fn curves_endpoints() {
        for k in [2, 3, 7] {
            let c = curve_data(Curve::Psi, k, 11).unwrap();
            assert_eq!(c.value[0], 0.0);
            assert!((c.value[10] - 1.0).abs() < 1e-15);
            let f = curve_data(Curve::Phi, k, 11).unwrap();
            assert!((f.value[10] - 1.0).abs() < 1e-15);
        }
        assert!(curve_data(Curve::GoalQ, 2, 5).unwrap().assumption.is_some());
    }

    #[test]
    fn pk_bound_small() {
        assert!(check_pk_bound(10).unwrap().passed());
        assert_eq!(check_pk_bound(2).unwrap().checked, 1);
    }
}
