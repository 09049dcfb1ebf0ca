// SPDX-License-Identifier: Apache-2.0

//! Density-weight schedule: initial weight from gradient magnitudes and the
//! multiplicative per-iteration update.

use thiserror::Error;

use crate::num::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("degenerate density gradient: all components are zero")]
pub struct DegenerateDensityGradient;

/// `sum |wl_grad| / sum |density_grad|`.
pub fn lambda_init<T: Scalar>(wl_grad: &[T], density_grad: &[T]) -> Result<T, DegenerateDensityGradient> {
    let num: T = wl_grad.iter().map(|g| g.abs()).sum();
    let den: T = density_grad.iter().map(|g| g.abs()).sum();
    if den > T::zero() && den.is_finite() {
        Ok(num / den)
    } else {
        Err(DegenerateDensityGradient)
    }
}

/// Heuristic multiplier: `cof_max` while HPWL is shrinking (`p < 0`),
/// otherwise `max(cof_min, cof_max^(1 - p))`.
pub fn heuristic_cof<T: Scalar>(p: T, cof_min: T, cof_max: T) -> T {
    if p < T::zero() {
        cof_max
    } else {
        cof_min.max(cof_max.powf(T::one() - p))
    }
}

/// Normalised HPWL change `(HPWL_k - HPWL_{k-1}) / delta_ref`; zero before
/// the second sample.
pub fn hpwl_progress<T: Scalar>(history: &[T], delta_ref: T) -> T {
    match history {
        [.., prev, cur] => (*cur - *prev) / delta_ref,
        _ => T::zero(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_init_examples() {
        assert_eq!(lambda_init(&[4.0, -6.0], &[-2.0, 3.0]), Ok(2.0));
        assert_eq!(lambda_init(&[0.0, 0.0], &[1.0, 0.0]), Ok(0.0));
        assert_eq!(lambda_init(&[1.0], &[0.0f64]), Err(DegenerateDensityGradient));
    }

    #[test]
    fn heuristic_examples() {
        let (lo, hi) = (0.95f64, 1.05f64);
        assert_eq!(heuristic_cof(-0.3, lo, hi), hi);
        assert_eq!(heuristic_cof(0.0, lo, hi), hi);
        assert!((heuristic_cof(0.5, lo, hi) - 1.05f64.sqrt()).abs() < 1e-15);
        assert!((heuristic_cof(0.5, lo, hi) - 1.02470).abs() < 1e-5);
        assert_eq!(heuristic_cof(1.0, lo, hi), 1.0);
        // 1.05^-1 = 0.952.. stays above the floor; 1.05^-2 = 0.907.. is floored
        assert!((heuristic_cof(2.0, lo, hi) - 1.0 / 1.05).abs() < 1e-15);
        assert_eq!(heuristic_cof(3.0, lo, hi), 0.95);
    }

    #[test]
    fn progress_needs_two_samples() {
        assert_eq!(hpwl_progress(&[5.0], 1.0), 0.0);
        assert_eq!(hpwl_progress(&[5.0, 3.0, 4.0], 2.0), 0.5);
    }
}
