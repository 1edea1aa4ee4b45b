use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::point::{Point, PointSet};
use crate::error::{Error, Result};

/// Scalar types a [`WeightFn`] can carry: `f64` for the optimiser, exact
/// rationals where identities must hold bit for bit.
pub trait Weight:
    Clone
    + PartialOrd
    + Zero
    + num_traits::One
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::fmt::Debug
{
    fn to_f64(&self) -> f64;
}

impl Weight for f64 {
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Weight for BigRational {
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// A finitely supported nonnegative function on `Z^d`. Only strictly
/// positive values are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightFn<W = f64> {
    dim: usize,
    entries: BTreeMap<Point, W>,
}

impl<W: Weight> WeightFn<W> {
    pub fn zero(dim: usize) -> Self {
        WeightFn {
            dim,
            entries: BTreeMap::new(),
        }
    }

    /// Builds a weight function, dropping zeros and rejecting negative or
    /// non-finite values and duplicate points.
    pub fn from_entries(dim: usize, entries: impl IntoIterator<Item = (Point, W)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (p, w) in entries {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.dim(),
                });
            }
            let as_float = w.to_f64();
            if w < W::zero() || as_float.is_nan() {
                return Err(Error::out_of_range(
                    "weight",
                    format!("{p} has weight {w:?}; weights must be nonnegative"),
                ));
            }
            if w.is_zero() {
                continue;
            }
            if map.insert(p.clone(), w).is_some() {
                return Err(Error::Precondition(format!("duplicate point {p}")));
            }
        }
        Ok(WeightFn { dim, entries: map })
    }

    /// Values listed in the order of `set.points()`.
    pub fn on_set(set: &PointSet, values: impl IntoIterator<Item = W>) -> Result<Self> {
        let values: Vec<W> = values.into_iter().collect();
        if values.len() != set.len() {
            return Err(Error::Precondition(format!(
                "{} weights supplied for a set of {} points",
                values.len(),
                set.len()
            )));
        }
        Self::from_entries(set.dim(), set.iter().cloned().zip(values))
    }

    pub fn indicator(set: &PointSet) -> Self {
        WeightFn {
            dim: set.dim(),
            entries: set.iter().map(|p| (p.clone(), W::one())).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, p: &Point) -> W {
        self.entries.get(p).cloned().unwrap_or_else(W::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, &W)> {
        self.entries.iter()
    }

    pub fn support(&self) -> PointSet {
        PointSet::new(self.dim, self.entries.keys().cloned()).expect("support points share dim")
    }

    /// `sup_x f(x)`, or zero for the empty function.
    pub fn sup(&self) -> W {
        self.entries
            .values()
            .fold(W::zero(), |m, v| if *v > m { v.clone() } else { m })
    }

    /// `(f ⊗ g)(x, y) = f(x) g(y)` on `Z^{d1 + d2}`.
    pub fn tensor(&self, other: &WeightFn<W>) -> WeightFn<W> {
        let mut entries = BTreeMap::new();
        for (a, u) in &self.entries {
            for (b, v) in &other.entries {
                entries.insert(a.concat(b), u.clone() * v.clone());
            }
        }
        WeightFn {
            dim: self.dim + other.dim,
            entries,
        }
    }

    pub fn map_values(&self, f: impl Fn(&W) -> W) -> Result<Self> {
        Self::from_entries(
            self.dim,
            self.entries.iter().map(|(p, w)| (p.clone(), f(w))),
        )
    }

    pub fn to_f64(&self) -> WeightFn<f64> {
        WeightFn {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .map(|(p, w)| (p.clone(), w.to_f64()))
                .collect(),
        }
    }
}

impl WeightFn<f64> {
    /// `(sum_x f(x)^q)^(1/q)`.
    pub fn lq_norm(&self, q: f64) -> f64 {
        self.entries
            .values()
            .map(|w| w.powf(q))
            .sum::<f64>()
            .powf(1.0 / q)
    }

    /// Exact rational image of every stored `f64`.
    pub fn to_rational(&self) -> WeightFn<BigRational> {
        WeightFn {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .map(|(p, w)| {
                    (
                        p.clone(),
                        BigRational::from_float(*w).expect("stored weights are finite"),
                    )
                })
                .collect(),
        }
    }
}

/// Exact rational `n / d`.
pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros_are_dropped_and_negatives_rejected() {
        let set = PointSet::from_integers([0, 1, 2]);
        let f = WeightFn::on_set(&set, [1.0, 0.0, 0.5]).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f.get(&Point::from([1])), 0.0);
        assert!(WeightFn::on_set(&set, [1.0, -0.1, 0.5]).is_err());
        assert!(WeightFn::on_set(&set, [1.0, f64::NAN, 0.5]).is_err());
    }

    #[test]
    fn tensor_multiplies() {
        let a =
            WeightFn::on_set(&PointSet::from_integers([0, 1]), [ratio(1, 2), ratio(1, 1)]).unwrap();
        let t = a.tensor(&a);
        assert_eq!(t.len(), 4);
        assert_eq!(t.get(&Point::from([0, 0])), ratio(1, 4));
        assert_eq!(t.get(&Point::from([1, 0])), ratio(1, 2));
    }

    #[test]
    fn lq_norm_of_indicator() {
        let f: WeightFn<f64> = WeightFn::indicator(&PointSet::cube(1, 2));
        assert!((f.lq_norm(2.0) - 2.0).abs() < 1e-15);
    }
}
