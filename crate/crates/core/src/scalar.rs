// SPDX-License-Identifier: MIT OR Apache-2.0

//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, NumCast};

/// Floating-point scalar the statistics are computed in: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumCast
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only if the target cannot represent
    /// finite `f64` values at all, which never happens for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Kahan–Babuška (Neumaier) compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    compensation: T,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            compensation: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum + self.compensation
    }
}

/// Compensated sum of a slice.
pub fn compensated_sum<T: Real>(xs: &[T]) -> T {
    let mut acc = CompensatedSum::new();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Running compensated sums `[0, x_1, x_1 + x_2, ...]` of length `xs.len() + 1`.
pub fn partial_sums<T: Real>(xs: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(xs.len() + 1);
    let mut acc = CompensatedSum::new();
    out.push(T::zero());
    for &x in xs {
        acc.add(x);
        out.push(acc.value());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_increments() {
        let mut xs = vec![1.0e16_f64];
        xs.extend(std::iter::repeat_n(1.0, 10_000));
        xs.push(-1.0e16);
        assert_eq!(compensated_sum(&xs), 10_000.0);
    }

    #[test]
    fn partial_sums_start_at_zero() {
        let p = partial_sums(&[1.0_f32, 2.0, 3.0]);
        assert_eq!(p, vec![0.0, 1.0, 3.0, 6.0]);
    }

    #[test]
    fn literal_conversion_round_trips() {
        assert_eq!(<f32 as Real>::lit(0.5), 0.5_f32);
        assert_eq!(<f64 as Real>::from_count(7), 7.0);
        assert_eq!(0.25_f32.as_f64(), 0.25);
    }
}
