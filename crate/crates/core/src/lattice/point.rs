use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the integer lattice `Z^d`.
///
/// Points order lexicographically by coordinates, which fixes the iteration
/// order of every map keyed by them.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<i64>);

impl Point {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        Point(coords.into())
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn add(&self, other: &Point) -> Point {
        debug_assert_eq!(self.dim(), other.dim());
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Point) -> Point {
        debug_assert_eq!(self.dim(), other.dim());
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> Point {
        Point(self.0.iter().map(|a| -a).collect())
    }

    /// Concatenation `(x, y)` used for Cartesian products.
    pub fn concat(&self, other: &Point) -> Point {
        let mut coords = self.0.clone();
        coords.extend_from_slice(&other.0);
        Point(coords)
    }

    /// The point with its last coordinate removed, and that coordinate.
    pub fn split_last(&self) -> Option<(Point, i64)> {
        let (&last, init) = self.0.split_last()?;
        Some((Point(init.to_vec()), last))
    }

    pub fn with_last(&self, last: i64) -> Point {
        let mut coords = self.0.clone();
        coords.push(last);
        Point(coords)
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl From<Vec<i64>> for Point {
    fn from(coords: Vec<i64>) -> Self {
        Point(coords)
    }
}

impl<const N: usize> From<[i64; N]> for Point {
    fn from(coords: [i64; N]) -> Self {
        Point(coords.to_vec())
    }
}

/// Inclusive per-coordinate bounds `lo <= x_i <= hi`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl Bounds {
    pub fn contains(&self, p: &Point) -> bool {
        p.coords()
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (lo, hi))| lo <= x && x <= hi)
    }
}

/// A finite, deduplicated subset of `Z^d`, stored in lexicographic order.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointSet {
    dim: usize,
    points: Vec<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bounds: Option<Bounds>,
}

impl PointSet {
    /// Builds a set, sorting and deduplicating the input.
    pub fn new(dim: usize, points: impl IntoIterator<Item = Point>) -> Result<Self> {
        let points: BTreeSet<Point> = points.into_iter().collect();
        for p in &points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.dim(),
                });
            }
        }
        Ok(PointSet {
            dim,
            points: points.into_iter().collect(),
            bounds: None,
        })
    }

    pub fn empty(dim: usize) -> Self {
        PointSet {
            dim,
            points: Vec::new(),
            bounds: None,
        }
    }

    /// Convenience constructor for one-dimensional sets of integers.
    pub fn from_integers(values: impl IntoIterator<Item = i64>) -> Self {
        let points: BTreeSet<Point> = values.into_iter().map(|v| Point(vec![v])).collect();
        PointSet {
            dim: 1,
            points: points.into_iter().collect(),
            bounds: None,
        }
    }

    /// The discrete cube `{0, 1, ..., n}^d`. For `d = 0` this is `{()}`.
    pub fn cube(n: u32, d: usize) -> Self {
        let side = n as i64 + 1;
        let total = (side as usize).pow(d as u32);
        let mut points = Vec::with_capacity(total);
        let mut coords = vec![0i64; d];
        for _ in 0..total {
            points.push(Point(coords.clone()));
            // odometer with the last coordinate fastest keeps lexicographic order
            for c in coords.iter_mut().rev() {
                *c += 1;
                if *c < side {
                    break;
                }
                *c = 0;
            }
        }
        PointSet {
            dim: d,
            points,
            bounds: Some(Bounds {
                lo: vec![0; d],
                hi: vec![n as i64; d],
            }),
        }
    }

    /// Attaches coordinate bounds, failing if a point lies outside them.
    pub fn with_bounds(mut self, bounds: Bounds) -> Result<Self> {
        if bounds.lo.len() != self.dim || bounds.hi.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: bounds.lo.len().max(bounds.hi.len()),
            });
        }
        if let Some(p) = self.points.iter().find(|p| !bounds.contains(p)) {
            return Err(Error::out_of_range(
                "point",
                format!("{p} lies outside the declared bounds"),
            ));
        }
        self.bounds = Some(bounds);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }

    pub fn bounds(&self) -> Option<&Bounds> {
        self.bounds.as_ref()
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.points.binary_search(p).is_ok()
    }

    /// The subset selected by the bits of `mask` (bit `i` selects `points()[i]`).
    pub fn subset_by_mask(&self, mask: u64) -> PointSet {
        let points = self
            .points
            .iter()
            .enumerate()
            .filter(|(i, _)| *i < 64 && mask >> i & 1 == 1)
            .map(|(_, p)| p.clone())
            .collect();
        PointSet {
            dim: self.dim,
            points,
            bounds: self.bounds.clone(),
        }
    }

    /// The subset of points satisfying `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&Point) -> bool) -> PointSet {
        PointSet {
            dim: self.dim,
            points: self.points.iter().filter(|p| keep(p)).cloned().collect(),
            bounds: self.bounds.clone(),
        }
    }

    /// Cartesian product `A x B` in `Z^{d1 + d2}`.
    pub fn product(&self, other: &PointSet) -> PointSet {
        let mut points = Vec::with_capacity(self.len() * other.len());
        for a in &self.points {
            for b in &other.points {
                points.push(a.concat(b));
            }
        }
        // lexicographic order of (a, b) pairs is already sorted
        PointSet {
            dim: self.dim + other.dim,
            points,
            bounds: None,
        }
    }

    pub fn translate(&self, shift: &Point) -> PointSet {
        self.map_points(|p| p.add(shift))
    }

    /// Applies `x -> c - x` to every point.
    pub fn reflect(&self, center: &Point) -> PointSet {
        self.map_points(|p| center.sub(p))
    }

    /// Reorders coordinates: new coordinate `j` is old coordinate `perm[j]`.
    pub fn permute_coordinates(&self, perm: &[usize]) -> PointSet {
        assert_eq!(
            perm.len(),
            self.dim,
            "permutation length must equal dimension"
        );
        self.map_points(|p| Point(perm.iter().map(|&j| p.coords()[j]).collect()))
    }

    fn map_points(&self, f: impl Fn(&Point) -> Point) -> PointSet {
        let points: BTreeSet<Point> = self.points.iter().map(f).collect();
        PointSet {
            dim: self.dim,
            points: points.into_iter().collect(),
            bounds: None,
        }
    }
}

impl fmt::Debug for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PointSet(d={}, ", self.dim)?;
        f.debug_set().entries(&self.points).finish()?;
        write!(f, ")")
    }
}

impl<'a> IntoIterator for &'a PointSet {
    type Item = &'a Point;
    type IntoIter = std::slice::Iter<'a, Point>;

    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_is_sorted_and_bounded() {
        let c = PointSet::cube(2, 2);
        assert_eq!(c.len(), 9);
        assert!(c.points().windows(2).all(|w| w[0] < w[1]));
        assert!(c.contains(&Point::from([2, 1])));
        assert!(!c.contains(&Point::from([3, 0])));
    }

    #[test]
    fn zero_dimensional_cube_is_one_point() {
        let c = PointSet::cube(1, 0);
        assert_eq!(c.len(), 1);
        assert_eq!(c.points()[0].dim(), 0);
    }

    #[test]
    fn new_rejects_wrong_dimension() {
        let err = PointSet::new(2, [Point::from([0, 1]), Point::from([1])]).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 2,
                found: 1
            }
        );
    }

    #[test]
    fn new_deduplicates() {
        let s = PointSet::new(1, [Point::from([1]), Point::from([0]), Point::from([1])]).unwrap();
        assert_eq!(s.points(), &[Point::from([0]), Point::from([1])]);
    }

    #[test]
    fn bounds_are_enforced() {
        let s = PointSet::from_integers([0, 5]);
        let err = s
            .with_bounds(Bounds {
                lo: vec![0],
                hi: vec![3],
            })
            .unwrap_err();
        assert!(matches!(err, Error::OutOfRange { .. }));
    }

    #[test]
    fn product_matches_cube() {
        let a = PointSet::cube(1, 1);
        let sq = a.product(&a);
        assert_eq!(sq.points(), PointSet::cube(1, 2).points());
    }
}
