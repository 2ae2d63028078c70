//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::ToPrimitive;

/// Real scalar used for node estimates, weights and metrics.
///
/// Implemented for `f32` and `f64`. Everything that touches a matrix or an
/// estimate is generic over this trait; the crate root exposes `f64`
/// aliases for the common case.
pub trait Real: RealField + Copy + ToPrimitive + Display + Debug + Send + Sync + 'static {
    /// Lossy conversion from an `f64` literal or sample.
    fn of(v: f64) -> Self {
        nalgebra::convert(v)
    }

    fn of_usize(v: usize) -> Self {
        Self::of(v as f64)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Neumaier-compensated sum; used wherever conservation is measured.
pub fn compensated_sum<T: Real>(values: impl IntoIterator<Item = T>) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn mean<T: Real>(values: &[T]) -> T {
    if values.is_empty() {
        return T::zero();
    }
    compensated_sum(values.iter().copied()) / T::of_usize(values.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancelled_terms() {
        let v = [1e16_f64, 1.0, -1e16];
        assert_eq!(compensated_sum(v), 1.0);
        assert_eq!(v.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn mean_of_empty_is_zero() {
        assert_eq!(mean::<f32>(&[]), 0.0);
        assert_eq!(mean(&[1.0_f32, 2.0, 3.0]), 2.0);
    }
}
