// SPDX-License-Identifier: Apache-2.0

//! Scalar abstraction shared by the placer, the feature pipeline and the
//! learning code. Everything numeric is written against [`Scalar`] so the
//! same code runs in `f64` (tests, gradient checks) and `f32`.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + rustfft::FftNum
    + Default
    + Debug
    + Display
    + LowerExp
    + FromStr
    + Send
    + Sync
    + 'static
{
    /// Tag written into checkpoints.
    const DTYPE_TAG: u8;

    /// Converts a literal. Panics only if `x` is not representable, which
    /// cannot happen for `f32`/`f64`.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn half() -> Self {
        Self::of(0.5)
    }

    #[inline]
    fn two() -> Self {
        Self::of(2.0)
    }
}

impl Scalar for f32 {
    const DTYPE_TAG: u8 = 0;
}

impl Scalar for f64 {
    const DTYPE_TAG: u8 = 1;
}

/// Linear-interpolated percentile of an already sorted slice, `q` in `[0, 1]`.
pub fn percentile_sorted<T: Scalar>(sorted: &[T], q: f64) -> T {
    match sorted.len() {
        0 => T::zero(),
        1 => sorted[0],
        n => {
            let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            let frac = T::of(pos - lo as f64);
            sorted[lo] + (sorted[hi] - sorted[lo]) * frac
        }
    }
}

/// `sign(x) * ln(1 + |x|)`.
#[inline]
pub fn signed_log1p<T: Scalar>(x: T) -> T {
    x.signum() * x.abs().ln_1p()
}

/// Numerically stable softplus.
#[inline]
pub fn softplus<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_interpolates() {
        let v = [0.0, 10.0, 20.0, 30.0, 40.0];
        assert_eq!(percentile_sorted(&v, 0.0), 0.0);
        assert_eq!(percentile_sorted(&v, 1.0), 40.0);
        assert!((percentile_sorted(&v, 0.1) - 4.0).abs() < 1e-12);
        assert_eq!(percentile_sorted::<f64>(&[], 0.5), 0.0);
    }

    #[test]
    fn signed_log_is_odd() {
        assert_eq!(signed_log1p(0.0f64), 0.0);
        assert!((signed_log1p(-3.0f64) + 4.0f64.ln()).abs() < 1e-12);
        assert!((signed_log1p(3.0f32) - 4.0f32.ln()).abs() < 1e-6);
    }

    #[test]
    fn softplus_matches_naive() {
        for &x in &[-30.0f64, -2.0, 0.0, 1.5, 40.0] {
            let naive = (1.0 + x.exp()).ln();
            assert!((softplus(x) - naive).abs() < 1e-9 * naive.max(1.0));
        }
        assert!((sigmoid(0.0f64) - 0.5).abs() < 1e-15);
    }
}
