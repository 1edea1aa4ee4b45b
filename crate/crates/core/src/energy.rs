//! Additive energy `E_k` and higher energy `Ẽ_k` of finite point sets,
//! their closed forms on full cubes, and the split identities along the last
//! coordinate of `{0,1}^d`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::binomial;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{
    convolve, correlate, indicator, iterate_convolve, sum_of_powers, CountsMap, Point, PointSet,
};

/// Default cap on the number of `2k`-tuples the enumeration oracle visits.
pub const DEFAULT_BRUTE_FORCE_BUDGET: u64 = 1_000_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyKind {
    /// `a_1 + ... + a_k = a_{k+1} + ... + a_{2k}`.
    Additive,
    /// `a_1 - a_2 = a_3 - a_4 = ... = a_{2k-1} - a_{2k}`.
    Higher,
}

impl EnergyKind {
    pub const ALL: [EnergyKind; 2] = [EnergyKind::Additive, EnergyKind::Higher];

    pub fn name(self) -> &'static str {
        match self {
            EnergyKind::Additive => "additive",
            EnergyKind::Higher => "higher",
        }
    }

    /// `(lower, upper)` exponents of the trivial bounds `|A|^lo <= E <= |A|^hi`.
    pub fn trivial_exponents(self, k: u32) -> (u32, u32) {
        match self {
            EnergyKind::Additive => (k, 2 * k - 1),
            EnergyKind::Higher => (k, k + 1),
        }
    }
}

impl std::str::FromStr for EnergyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "additive" => Ok(EnergyKind::Additive),
            "higher" => Ok(EnergyKind::Higher),
            other => Err(Error::out_of_range(
                "energy kind",
                format!("{other:?} (expected `additive` or `higher`)"),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EnergyValue {
    pub kind: EnergyKind,
    pub k: u32,
    #[serde(serialize_with = "crate::report::decimal")]
    pub set_size: BigInt,
    #[serde(serialize_with = "crate::report::decimal")]
    pub value: BigInt,
}

impl EnergyValue {
    pub fn trivial_bounds_hold(&self) -> bool {
        let (lo, hi) = self.kind.trivial_exponents(self.k);
        let n = &self.set_size;
        num_traits::pow(n.clone(), lo as usize) <= self.value
            && self.value <= num_traits::pow(n.clone(), hi as usize)
    }

    /// `ln E / ln |A|`, undefined for `|A| <= 1`.
    pub fn log_ratio(&self) -> Option<f64> {
        if self.set_size <= BigInt::one() {
            return None;
        }
        Some(ln_bigint(&self.value) / ln_bigint(&self.set_size))
    }
}

/// Natural logarithm of a positive big integer, in double precision.
pub fn ln_bigint(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("fits a double").ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64-bit prefix");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

fn check_k(k: u32) -> Result<()> {
    if k < 2 {
        return Err(Error::out_of_range(
            "k",
            format!("{k} (energies need k >= 2)"),
        ));
    }
    Ok(())
}

fn value(kind: EnergyKind, k: u32, set: &PointSet, value: BigInt) -> EnergyValue {
    EnergyValue {
        kind,
        k,
        set_size: BigInt::from(set.len()),
        value,
    }
}

/// `E_k(A) = sum_x (chi_A *_k chi_A)(x)^2`.
pub fn additive_energy(set: &PointSet, k: u32) -> Result<EnergyValue> {
    check_k(k)?;
    if set.is_empty() {
        return Ok(value(EnergyKind::Additive, k, set, BigInt::zero()));
    }
    let sums = iterate_convolve(&indicator(set), k)?;
    Ok(value(EnergyKind::Additive, k, set, sum_of_powers(&sums, 2)))
}

/// `Ẽ_k(A) = sum_x (chi_A ⋆ chi_A)(x)^k`.
pub fn higher_energy(set: &PointSet, k: u32) -> Result<EnergyValue> {
    check_k(k)?;
    let chi = indicator(set);
    let diffs = correlate(&chi, &chi)?;
    Ok(value(EnergyKind::Higher, k, set, sum_of_powers(&diffs, k)))
}

pub fn energy(set: &PointSet, k: u32, kind: EnergyKind) -> Result<EnergyValue> {
    match kind {
        EnergyKind::Additive => additive_energy(set, k),
        EnergyKind::Higher => higher_energy(set, k),
    }
}

/// Counts `2k`-tuples of `A` satisfying the defining relation one by one.
/// Refuses when `|A|^(2k)` exceeds `budget`.
pub fn brute_force_energy(
    set: &PointSet,
    k: u32,
    kind: EnergyKind,
    budget: u64,
) -> Result<EnergyValue> {
    check_k(k)?;
    let n = set.len();
    let arity = 2 * k as usize;
    let tuples = (n as u64).checked_pow(arity as u32);
    match tuples {
        Some(t) if t <= budget => {}
        _ => {
            return Err(Error::BudgetExceeded(format!(
                "{n}^{arity} tuples exceeds the enumeration budget {budget}"
            )))
        }
    }
    if n == 0 {
        return Ok(value(kind, k, set, BigInt::zero()));
    }
    let d = set.dim();
    let pts: Vec<&[i64]> = set.iter().map(|p| p.coords()).collect();
    let mut idx = vec![0usize; arity];
    let mut count: u64 = 0;
    let mut acc = vec![0i64; d];
    let mut first = vec![0i64; d];
    loop {
        let ok = match kind {
            EnergyKind::Additive => {
                acc.iter_mut().for_each(|c| *c = 0);
                for (slot, &i) in idx.iter().enumerate() {
                    let sign = if slot < k as usize { 1 } else { -1 };
                    for (c, x) in acc.iter_mut().zip(pts[i]) {
                        *c += sign * x;
                    }
                }
                acc.iter().all(|&c| c == 0)
            }
            EnergyKind::Higher => {
                for ((f, a), b) in first.iter_mut().zip(pts[idx[0]]).zip(pts[idx[1]]) {
                    *f = a - b;
                }
                idx.chunks(2).skip(1).all(|pair| {
                    pts[pair[0]]
                        .iter()
                        .zip(pts[pair[1]])
                        .zip(&first)
                        .all(|((a, b), f)| a - b == *f)
                })
            }
        };
        count += ok as u64;
        // odometer step
        let mut pos = 0;
        loop {
            if pos == arity {
                return Ok(value(kind, k, set, BigInt::from(count)));
            }
            idx[pos] += 1;
            if idx[pos] < n {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Energy of the full cube `{0,...,n}^d` by multiplicativity over
/// coordinates.
pub fn full_cube_energy(n: u32, d: u32, k: u32, kind: EnergyKind) -> Result<EnergyValue> {
    check_k(k)?;
    if n == 0 {
        return Err(Error::out_of_range("n", "cube side needs n >= 1"));
    }
    let side = PointSet::from_integers(0..=n as i64);
    let one_dim = energy(&side, k, kind)?;
    Ok(EnergyValue {
        kind,
        k,
        set_size: num_traits::pow(BigInt::from(n + 1), d as usize),
        value: num_traits::pow(one_dim.value, d as usize),
    })
}

/// `E_2({0,...,n})` from the cubic closed forms: `(16m^3 + 2m)/3` for
/// `n = 2m - 1`, `(16m^3 + 24m^2 + 14m + 3)/3` for `n = 2m`.
pub fn interval_energy_closed_form(n: u64) -> Result<BigInt> {
    if n == 0 {
        return Err(Error::out_of_range(
            "n",
            "interval closed form needs n >= 1",
        ));
    }
    let m = BigInt::from(n.div_ceil(2));
    let m2 = &m * &m;
    let m3 = &m2 * &m;
    let numer = if n % 2 == 1 {
        16 * &m3 + 2 * &m
    } else {
        16 * &m3 + 24 * &m2 + 14 * &m + 3
    };
    Ok(numer / 3)
}

/// `A = (A0 x {0}) ⊎ (A1 x {1})` together with the terms of the split
/// identity for one energy.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SplitDecomposition {
    #[serde(skip)]
    pub a0: PointSet,
    #[serde(skip)]
    pub a1: PointSet,
    pub kind: EnergyKind,
    pub k: u32,
    /// `C_{i,k}` for `i = 1..k-1`.
    #[serde(serialize_with = "crate::report::decimal_vec")]
    pub cross_terms: Vec<BigInt>,
    /// Higher energy only: tuples alternating `A0, A1`.
    #[serde(serialize_with = "crate::report::decimal_opt")]
    pub c1: Option<BigInt>,
    /// Higher energy only: tuples alternating `A1, A0`.
    #[serde(serialize_with = "crate::report::decimal_opt")]
    pub c2: Option<BigInt>,
}

/// Slices `A ⊆ Z^{d-1} x {0,1}` by its last coordinate.
pub fn split_last_coordinate(set: &PointSet) -> Result<(PointSet, PointSet)> {
    if set.dim() == 0 {
        return Err(Error::Precondition(
            "cannot split a 0-dimensional set".into(),
        ));
    }
    let mut a0 = Vec::new();
    let mut a1 = Vec::new();
    for p in set {
        let (head, last) = p.split_last().expect("dim >= 1");
        match last {
            0 => a0.push(head),
            1 => a1.push(head),
            other => {
                return Err(Error::Precondition(format!(
                    "last coordinate of {p} is {other}, not 0 or 1"
                )))
            }
        }
    }
    let d = set.dim() - 1;
    Ok((PointSet::new(d, a0)?, PointSet::new(d, a1)?))
}

fn fold_power(f: &CountsMap, i: u32) -> Result<CountsMap> {
    if i == 0 {
        Ok(CountsMap::delta(f.dim()))
    } else {
        iterate_convolve(f, i)
    }
}

/// Right-hand-side terms of the split identity, each counted directly.
pub fn split_decomposition(set: &PointSet, k: u32, kind: EnergyKind) -> Result<SplitDecomposition> {
    check_k(k)?;
    let (a0, a1) = split_last_coordinate(set)?;
    let chi0 = indicator(&a0);
    let chi1 = indicator(&a1);
    let mut cross_terms = Vec::with_capacity(k as usize - 1);
    let (c1, c2) = match kind {
        EnergyKind::Additive => {
            for i in 1..k {
                let mixed = convolve(&fold_power(&chi0, i)?, &fold_power(&chi1, k - i)?)?;
                cross_terms.push(sum_of_powers(&mixed, 2));
            }
            (None, None)
        }
        EnergyKind::Higher => {
            let d0 = correlate(&chi0, &chi0)?;
            let d1 = correlate(&chi1, &chi1)?;
            for i in 1..k {
                let term: BigInt = d0
                    .iter()
                    .map(|(x, v)| {
                        num_traits::pow(v.clone(), i as usize)
                            * num_traits::pow(d1.get(x), (k - i) as usize)
                    })
                    .sum();
                cross_terms.push(term);
            }
            (
                Some(bullet_product(&chi0, &chi1, k)?),
                Some(bullet_product(&chi1, &chi0, k)?),
            )
        }
    };
    Ok(SplitDecomposition {
        a0,
        a1,
        kind,
        k,
        cross_terms,
        c1,
        c2,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    pub kind: EnergyKind,
    pub k: u32,
    pub set_size: usize,
    #[serde(serialize_with = "crate::report::decimal")]
    pub lhs: BigInt,
    #[serde(serialize_with = "crate::report::decimal")]
    pub rhs: BigInt,
    #[serde(serialize_with = "crate::report::decimal")]
    pub energy_a0: BigInt,
    #[serde(serialize_with = "crate::report::decimal")]
    pub energy_a1: BigInt,
    pub decomposition: SplitDecomposition,
    pub holds: bool,
}

/// Checks `E(A) = E(A0) + E(A1) + sum_i binom(k,i)^2 C_{i,k}` (additive) or
/// `Ẽ(A) = C1 + C2 + Ẽ(A0) + Ẽ(A1) + sum_i binom(k,i) C_{i,k}` (higher).
pub fn decomposition_identity_check(
    set: &PointSet,
    k: u32,
    kind: EnergyKind,
) -> Result<IdentityReport> {
    let dec = split_decomposition(set, k, kind)?;
    let lhs = energy(set, k, kind)?.value;
    let e0 = energy(&dec.a0, k, kind)?.value;
    let e1 = energy(&dec.a1, k, kind)?.value;
    let mut rhs = &e0 + &e1;
    for (i, c) in (1..k).zip(&dec.cross_terms) {
        let b = binomial(BigInt::from(k), BigInt::from(i));
        rhs += match kind {
            EnergyKind::Additive => &b * &b * c,
            EnergyKind::Higher => b * c,
        };
    }
    if let (Some(c1), Some(c2)) = (&dec.c1, &dec.c2) {
        rhs += c1 + c2;
    }
    Ok(IdentityReport {
        kind,
        k,
        set_size: set.len(),
        holds: lhs == rhs,
        lhs,
        rhs,
        energy_a0: e0,
        energy_a1: e1,
        decomposition: dec,
    })
}

/// `f ∙ g = sum over a_1 - b_1 = ... = a_k - b_k of f(a_1)...f(a_k) g(b_1)...g(b_k)`,
/// evaluated through the shift factorisation
/// `sum_c (sum_a f(a) f(a+c_2)...f(a+c_k)) (sum_b g(b) g(b+c_2)...g(b+c_k))`
/// with `c` ranging over the shifts realised inside both supports.
pub fn bullet_product(f: &CountsMap, g: &CountsMap, k: u32) -> Result<BigInt> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: g.dim(),
        });
    }
    check_k(k)?;
    let sf = shift_sums(f, k);
    let sg = shift_sums(g, k);
    Ok(sf
        .iter()
        .filter_map(|(c, u)| sg.get(c).map(|v| u * v))
        .sum())
}

/// `c = (c_2..c_k) -> sum_a f(a) f(a + c_2) ... f(a + c_k)` over tuples of
/// support points.
fn shift_sums(f: &CountsMap, k: u32) -> BTreeMap<Vec<Point>, BigInt> {
    let support: Vec<(&Point, &BigInt)> = f.iter().collect();
    let mut out: BTreeMap<Vec<Point>, BigInt> = BTreeMap::new();
    let rest = k as usize - 1;
    if support.is_empty() {
        return out;
    }
    for (a, fa) in &support {
        let mut idx = vec![0usize; rest];
        loop {
            let shifts: Vec<Point> = idx.iter().map(|&j| support[j].0.sub(a)).collect();
            let prod = idx.iter().fold((*fa).clone(), |acc, &j| acc * support[j].1);
            *out.entry(shifts).or_insert_with(BigInt::zero) += prod;
            let mut pos = 0;
            while pos < rest {
                idx[pos] += 1;
                if idx[pos] < support.len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == rest {
                break;
            }
        }
    }
    out
}

/// Serialized summary of one energy computation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyReport {
    pub kind: EnergyKind,
    pub k: u32,
    #[serde(serialize_with = "crate::report::decimal")]
    pub set_size: BigInt,
    #[serde(serialize_with = "crate::report::decimal")]
    pub energy: BigInt,
    #[serde(serialize_with = "crate::report::sig17_opt")]
    pub log_ratio: Option<f64>,
    pub witness_path: Option<String>,
    pub trivial_bounds_hold: bool,
}

impl EnergyReport {
    pub fn new(v: &EnergyValue, witness_path: Option<String>) -> Self {
        EnergyReport {
            kind: v.kind,
            k: v.k,
            set_size: v.set_size.clone(),
            energy: v.value.clone(),
            log_ratio: v.log_ratio(),
            witness_path,
            trivial_bounds_hold: v.trivial_bounds_hold(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(values: &[i64]) -> PointSet {
        PointSet::from_integers(values.iter().copied())
    }

    fn e(s: &PointSet, k: u32, kind: EnergyKind) -> BigInt {
        energy(s, k, kind).unwrap().value
    }

    #[test]
    fn worked_examples() {
        use EnergyKind::*;
        assert_eq!(e(&set(&[0, 1]), 2, Additive), 6.into());
        assert_eq!(e(&PointSet::cube(1, 2), 2, Additive), 36.into());
        assert_eq!(e(&set(&[7]), 5, Additive), 1.into());
        assert_eq!(e(&set(&[0, 1]), 3, Additive), 20.into());
        assert_eq!(e(&set(&[0, 1]), 2, Higher), 6.into());
        assert_eq!(e(&set(&[0, 1]), 3, Higher), 10.into());
        assert_eq!(e(&PointSet::cube(1, 3), 2, Higher), 216.into());
        let bf = |s: &PointSet, kind| brute_force_energy(s, 2, kind, 1_000_000).unwrap().value;
        assert_eq!(bf(&set(&[0, 1]), Additive), 6.into());
        assert_eq!(bf(&set(&[0, 2]), Additive), 6.into());
        assert_eq!(bf(&set(&[0, 1, 2]), Additive), 19.into());
    }

    #[test]
    fn brute_force_budget() {
        let s = set(&[0, 1, 2, 3]);
        assert!(matches!(
            brute_force_energy(&s, 2, EnergyKind::Additive, 100),
            Err(Error::BudgetExceeded(_))
        ));
        assert!(energy(&s, 1, EnergyKind::Additive).is_err());
    }

    #[test]
    fn full_cubes() {
        use EnergyKind::*;
        assert_eq!(
            full_cube_energy(1, 5, 2, Additive).unwrap().value,
            7776.into()
        );
        assert_eq!(
            full_cube_energy(1, 4, 4, Higher).unwrap().value,
            104976.into()
        );
        assert_eq!(
            full_cube_energy(2, 1, 2, Additive).unwrap().value,
            19.into()
        );
        let zero_dim = full_cube_energy(1, 0, 3, Higher).unwrap();
        assert_eq!((zero_dim.set_size, zero_dim.value), (1.into(), 1.into()));
    }

    #[test]
    fn interval_closed_forms() {
        let v: Vec<BigInt> = (1..=4)
            .map(|n| interval_energy_closed_form(n).unwrap())
            .collect();
        assert_eq!(v, vec![6.into(), 19.into(), 44.into(), 85.into()]);
    }

    #[test]
    fn splitting() {
        let a = PointSet::new(
            2,
            [
                Point::from([0, 0]),
                Point::from([1, 0]),
                Point::from([1, 1]),
            ],
        )
        .unwrap();
        let (a0, a1) = split_last_coordinate(&a).unwrap();
        assert_eq!(a0, set(&[0, 1]));
        assert_eq!(a1, set(&[1]));
        let (c0, c1) = split_last_coordinate(&PointSet::cube(1, 3)).unwrap();
        assert_eq!(c0.points(), PointSet::cube(1, 2).points());
        assert_eq!(c1.points(), PointSet::cube(1, 2).points());
        let flat = PointSet::new(2, [Point::from([0, 0]), Point::from([1, 0])]).unwrap();
        assert!(split_last_coordinate(&flat).unwrap().1.is_empty());
        assert!(split_last_coordinate(&set(&[2])).is_err());
    }

    #[test]
    fn identity_on_square_and_singleton() {
        let r =
            decomposition_identity_check(&PointSet::cube(1, 2), 2, EnergyKind::Additive).unwrap();
        assert!(r.holds);
        assert_eq!(r.lhs, 36.into());
        let single = PointSet::new(2, [Point::from([1, 0])]).unwrap();
        for kind in EnergyKind::ALL {
            for k in 2..=4 {
                let r = decomposition_identity_check(&single, k, kind).unwrap();
                assert!(r.holds);
                assert!(r.decomposition.cross_terms.iter().all(Zero::is_zero));
            }
        }
    }

    #[test]
    fn bullet_examples() {
        let chi = indicator(&set(&[0, 1]));
        assert_eq!(bullet_product(&chi, &chi, 2).unwrap(), 6.into());
        let f = indicator(&set(&[0]));
        let g = indicator(&set(&[1000]));
        assert_eq!(bullet_product(&f, &g, 3).unwrap(), 1.into());
    }

    #[test]
    fn log_ratio_of_cube() {
        let v = full_cube_energy(1, 3, 2, EnergyKind::Additive).unwrap();
        assert!((v.log_ratio().unwrap() - 6f64.log2()).abs() < 1e-12);
        let big = BigInt::from(3).pow(2000);
        assert!((ln_bigint(&big) - 2000.0 * 3f64.ln()).abs() < 1e-9);
    }
}
