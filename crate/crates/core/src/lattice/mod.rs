//! Lattice points, finite point sets and exact integer-valued functions on
//! `Z^d`, with the convolution and correlation engine used by every energy
//! computation.

mod counts;
pub mod io;
mod point;
mod weights;

pub use counts::{
    convolve, correlate, indicator, iterate_convolve, power_pointwise, sum_of_powers, sum_values,
    CountsMap,
};
pub use point::{Bounds, Point, PointSet};
pub use weights::{ratio, Weight, WeightFn};
