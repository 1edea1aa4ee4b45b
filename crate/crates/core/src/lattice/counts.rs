use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::point::{Point, PointSet};
use crate::error::{Error, Result};

/// Largest dense accumulator (number of cells) used by [`convolve`].
const DENSE_CELL_LIMIT: usize = 1 << 24;

/// Below this many pairs the sparse path is cheaper than allocating a grid.
const DENSE_MIN_PAIRS: usize = 256;

/// A finitely supported integer-valued function on `Z^d`.
///
/// Zero values are never stored, so two maps are equal exactly when the
/// functions are equal.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CountsMap {
    dim: usize,
    entries: BTreeMap<Point, BigInt>,
}

impl CountsMap {
    pub fn zero(dim: usize) -> Self {
        CountsMap {
            dim,
            entries: BTreeMap::new(),
        }
    }

    /// The unit mass at the origin, the identity for [`convolve`].
    pub fn delta(dim: usize) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(Point::origin(dim), BigInt::one());
        CountsMap { dim, entries }
    }

    /// Builds a map, summing repeated points and dropping zeros.
    pub fn from_entries(
        dim: usize,
        entries: impl IntoIterator<Item = (Point, BigInt)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (p, v) in entries {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.dim(),
                });
            }
            *map.entry(p).or_insert_with(BigInt::zero) += v;
        }
        map.retain(|_, v| !v.is_zero());
        Ok(CountsMap { dim, entries: map })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of support points.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, p: &Point) -> BigInt {
        self.entries.get(p).cloned().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, &BigInt)> {
        self.entries.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &Point> {
        self.entries.keys()
    }

    /// `x -> f(-x)`.
    pub fn reflect(&self) -> CountsMap {
        CountsMap {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .map(|(p, v)| (p.neg(), v.clone()))
                .collect(),
        }
    }

    fn bounding_box(&self) -> Option<(Vec<i64>, Vec<i64>)> {
        let mut it = self.entries.keys();
        let first = it.next()?;
        let mut lo = first.coords().to_vec();
        let mut hi = lo.clone();
        for p in it {
            for (j, &c) in p.coords().iter().enumerate() {
                lo[j] = lo[j].min(c);
                hi[j] = hi[j].max(c);
            }
        }
        Some((lo, hi))
    }

    fn max_abs_i64(&self) -> Option<i64> {
        self.entries
            .values()
            .map(|v| v.abs().to_i64())
            .try_fold(0i64, |acc, v| v.map(|v| acc.max(v)))
    }
}

/// `chi_A`: value 1 on every point of `A`.
pub fn indicator(set: &PointSet) -> CountsMap {
    CountsMap {
        dim: set.dim(),
        entries: set.iter().map(|p| (p.clone(), BigInt::one())).collect(),
    }
}

fn check_dims(f: &CountsMap, g: &CountsMap) -> Result<()> {
    if f.dim != g.dim {
        return Err(Error::DimensionMismatch {
            expected: f.dim,
            found: g.dim,
        });
    }
    Ok(())
}

/// `(f * g)(x) = sum_y f(y) g(x - y)`, computed exactly.
pub fn convolve(f: &CountsMap, g: &CountsMap) -> Result<CountsMap> {
    check_dims(f, g)?;
    if f.is_empty() || g.is_empty() {
        return Ok(CountsMap::zero(f.dim));
    }
    if let Some(dense) = convolve_dense(f, g) {
        return Ok(dense);
    }
    Ok(convolve_sparse(f, g))
}

fn convolve_sparse(f: &CountsMap, g: &CountsMap) -> CountsMap {
    let mut acc: BTreeMap<Point, BigInt> = BTreeMap::new();
    for (x, a) in &f.entries {
        for (y, b) in &g.entries {
            *acc.entry(x.add(y)).or_insert_with(BigInt::zero) += a * b;
        }
    }
    acc.retain(|_, v| !v.is_zero());
    CountsMap {
        dim: f.dim,
        entries: acc,
    }
}

/// Grid accumulation in `i128` over the bounding box of the sumset. Returns
/// `None` when the box is too large or the values could overflow.
fn convolve_dense(f: &CountsMap, g: &CountsMap) -> Option<CountsMap> {
    if f.len().saturating_mul(g.len()) < DENSE_MIN_PAIRS {
        return None;
    }
    let (flo, fhi) = f.bounding_box()?;
    let (glo, ghi) = g.bounding_box()?;
    let dim = f.dim;
    let extents: Vec<usize> = (0..dim)
        .map(|j| (fhi[j] - flo[j] + ghi[j] - glo[j] + 1) as usize)
        .collect();
    let cells = extents
        .iter()
        .try_fold(1usize, |acc, &e| acc.checked_mul(e))?;
    if cells > DENSE_CELL_LIMIT || cells > 16 * f.len() * g.len() {
        return None;
    }
    // |sum| <= max|f| * max|g| * min(|f|, |g|) must stay well inside i128
    let bound_bits = 64 - f.max_abs_i64()?.leading_zeros() + 64 - g.max_abs_i64()?.leading_zeros()
        + 64
        - (f.len().min(g.len()) as u64).leading_zeros();
    if bound_bits > 125 {
        return None;
    }

    // row-major strides: first coordinate most significant, so index order
    // is lexicographic order
    let mut strides = vec![1usize; dim];
    for j in (0..dim.saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * extents[j + 1];
    }
    let offset = |p: &Point, lo: &[i64]| -> usize {
        p.coords()
            .iter()
            .zip(lo)
            .zip(&strides)
            .map(|((&c, &l), &s)| (c - l) as usize * s)
            .sum()
    };
    let fv: Vec<(usize, i128)> = f
        .entries
        .iter()
        .map(|(p, v)| (offset(p, &flo), v.to_i64().unwrap() as i128))
        .collect();
    let gv: Vec<(usize, i128)> = g
        .entries
        .iter()
        .map(|(p, v)| (offset(p, &glo), v.to_i64().unwrap() as i128))
        .collect();

    let mut grid = vec![0i128; cells];
    for &(i, a) in &fv {
        for &(j, b) in &gv {
            grid[i + j] += a * b;
        }
    }

    let base: Vec<i64> = (0..dim).map(|j| flo[j] + glo[j]).collect();
    let entries = grid
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0)
        .map(|(idx, v)| {
            let mut rem = idx;
            let coords: Vec<i64> = (0..dim)
                .map(|j| {
                    let c = rem / strides[j];
                    rem %= strides[j];
                    base[j] + c as i64
                })
                .collect();
            (Point::new(coords), BigInt::from(*v))
        })
        .collect();
    Some(CountsMap { dim, entries })
}

/// `(f ⋆ g)(x) = sum_y f(y) g(x + y)`.
///
/// For indicators, `(chi_A ⋆ chi_A)(x)` counts pairs `(y, z)` in `A^2` with
/// `z - y = x`.
pub fn correlate(f: &CountsMap, g: &CountsMap) -> Result<CountsMap> {
    check_dims(f, g)?;
    convolve(&f.reflect(), g)
}

/// The `k`-fold convolution `f * f * ... * f`.
pub fn iterate_convolve(f: &CountsMap, k: u32) -> Result<CountsMap> {
    if k == 0 {
        return Err(Error::out_of_range(
            "k",
            "iterated convolution needs k >= 1",
        ));
    }
    let mut acc = f.clone();
    for _ in 1..k {
        acc = convolve(&acc, f)?;
    }
    Ok(acc)
}

/// Raises every value to the `k`-th power; the support is unchanged.
pub fn power_pointwise(f: &CountsMap, k: u32) -> Result<CountsMap> {
    if k == 0 {
        return Err(Error::out_of_range("k", "pointwise power needs k >= 1"));
    }
    Ok(CountsMap {
        dim: f.dim,
        entries: f
            .entries
            .iter()
            .map(|(p, v)| (p.clone(), num_traits::pow(v.clone(), k as usize)))
            .collect(),
    })
}

pub fn sum_values(f: &CountsMap) -> BigInt {
    f.entries.values().sum()
}

/// `sum_x f(x)^k` without materialising the powered map.
pub fn sum_of_powers(f: &CountsMap, k: u32) -> BigInt {
    f.entries
        .values()
        .map(|v| num_traits::pow(v.clone(), k as usize))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(values: &[(i64, i64)]) -> CountsMap {
        CountsMap::from_entries(
            1,
            values
                .iter()
                .map(|&(x, v)| (Point::from([x]), BigInt::from(v))),
        )
        .unwrap()
    }

    fn set(values: &[i64]) -> PointSet {
        PointSet::from_integers(values.iter().copied())
    }

    #[test]
    fn indicator_examples() {
        assert!(indicator(&PointSet::empty(3)).is_empty());
        assert_eq!(indicator(&set(&[0, 1])), line(&[(0, 1), (1, 1)]));
        let sq = indicator(&PointSet::cube(1, 2));
        assert_eq!(sq.len(), 4);
        assert!(sq.iter().all(|(_, v)| v.is_one()));
    }

    #[test]
    fn convolve_examples() {
        let two = indicator(&set(&[0, 1]));
        assert_eq!(
            convolve(&two, &two).unwrap(),
            line(&[(0, 1), (1, 2), (2, 1)])
        );
        let three = indicator(&set(&[0, 1, 2]));
        assert_eq!(
            convolve(&three, &three).unwrap(),
            line(&[(0, 1), (1, 2), (2, 3), (3, 2), (4, 1)])
        );
        let f = line(&[(-3, 7), (2, -1), (5, 4)]);
        assert_eq!(convolve(&f, &CountsMap::delta(1)).unwrap(), f);
    }

    #[test]
    fn convolve_rejects_dimension_mismatch() {
        let a = CountsMap::delta(1);
        let b = CountsMap::delta(2);
        assert!(matches!(
            convolve(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(correlate(&a, &b).is_err());
    }

    #[test]
    fn correlate_examples() {
        let two = indicator(&set(&[0, 1]));
        assert_eq!(
            correlate(&two, &two).unwrap(),
            line(&[(-1, 1), (0, 2), (1, 1)])
        );
        let gap = indicator(&set(&[0, 2]));
        assert_eq!(
            correlate(&gap, &gap).unwrap(),
            line(&[(-2, 1), (0, 2), (2, 1)])
        );
        let a = PointSet::cube(2, 2).filter(|p| p.coords()[0] <= p.coords()[1]);
        let chi = indicator(&a);
        assert_eq!(
            correlate(&chi, &chi).unwrap().get(&Point::origin(2)),
            BigInt::from(a.len())
        );
    }

    #[test]
    fn iterate_convolve_examples() {
        let two = indicator(&set(&[0, 1]));
        assert_eq!(iterate_convolve(&two, 1).unwrap(), two);
        assert_eq!(
            iterate_convolve(&two, 3).unwrap(),
            line(&[(0, 1), (1, 3), (2, 3), (3, 1)])
        );
        let three = indicator(&set(&[0, 1, 2]));
        assert_eq!(
            iterate_convolve(&three, 2).unwrap(),
            convolve(&three, &three).unwrap()
        );
        assert!(iterate_convolve(&two, 0).is_err());
    }

    #[test]
    fn power_pointwise_examples() {
        assert_eq!(
            power_pointwise(&line(&[(0, 2)]), 3).unwrap(),
            line(&[(0, 8)])
        );
        let f = line(&[(-1, 1), (0, 2), (1, 1)]);
        assert_eq!(power_pointwise(&f, 1).unwrap(), f);
        assert_eq!(
            power_pointwise(&f, 2).unwrap(),
            line(&[(-1, 1), (0, 4), (1, 1)])
        );
    }

    #[test]
    fn sum_values_examples() {
        assert_eq!(sum_values(&CountsMap::zero(2)), BigInt::zero());
        assert_eq!(
            sum_values(&line(&[(0, 1), (1, 2), (2, 1)])),
            BigInt::from(4)
        );
        assert_eq!(
            sum_values(&indicator(&PointSet::cube(1, 3))),
            BigInt::from(8)
        );
    }

    #[test]
    fn dense_and_sparse_paths_agree() {
        let a = PointSet::cube(2, 3).filter(|p| p.coords().iter().sum::<i64>() % 2 == 0);
        let f = indicator(&a);
        let g = power_pointwise(&convolve(&f, &f).unwrap(), 2).unwrap();
        let dense = convolve_dense(&f, &g).expect("small box should go dense");
        assert_eq!(dense, convolve_sparse(&f, &g));
    }

    #[test]
    fn dense_path_declines_huge_values() {
        let big: BigInt = BigInt::from(1u8) << 100;
        let f =
            CountsMap::from_entries(1, (0..20).map(|x| (Point::from([x]), big.clone()))).unwrap();
        assert!(convolve_dense(&f, &f).is_none());
        let exact = convolve(&f, &f).unwrap();
        assert_eq!(exact.get(&Point::from([19])), &big * &big * 20);
    }

    #[test]
    fn zero_dimensional_convolution() {
        let one = indicator(&PointSet::cube(1, 0));
        let sq = convolve(&one, &one).unwrap();
        assert_eq!(sq.get(&Point::origin(0)), BigInt::one());
    }
}
