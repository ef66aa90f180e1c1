//! Floating point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumCast, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar used for coordinates, distances and density levels: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumCast
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossy conversion from an `f64` constant.
    fn from_f64_lossy(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("f64 constant representable")
    }

    /// Conversion from a count.
    fn from_usize_lossy(v: usize) -> Self {
        <Self as NumCast>::from(v).expect("count representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Volume of the Euclidean unit ball in `d` dimensions.
///
/// Uses the closed forms 2, π and 4π/3 for d ≤ 3 and the recurrence
/// `v_d = v_{d-2} · 2π / d` beyond.
pub fn unit_ball_volume<T: Scalar>(d: usize) -> T {
    let pi = T::from_f64_lossy(std::f64::consts::PI);
    let two = T::from_f64_lossy(2.0);
    match d {
        0 => T::one(),
        1 => two,
        2 => pi,
        3 => T::from_f64_lossy(4.0) * pi / T::from_f64_lossy(3.0),
        _ => unit_ball_volume::<T>(d - 2) * two * pi / T::from_usize_lossy(d),
    }
}

/// Total order on finite scalars; NaN sorts last.
pub(crate) fn total_cmp<T: Scalar>(a: &T, b: &T) -> std::cmp::Ordering {
    a.partial_cmp(b).unwrap_or_else(|| a.is_nan().cmp(&b.is_nan()))
}
