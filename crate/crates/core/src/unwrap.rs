//! First-order-difference (Itoh) unwrapping of folded samples.
//!
//! If consecutive true samples differ by at most `λ`, folding the
//! differences of the folded samples returns the true differences, and a
//! cumulative sum recovers the samples up to one constant in `2λℤ`.

use crate::error::{Error, Result};
use crate::precision::Real;
use crate::sampler::modulo_fold;

/// Relative margin below `λ` for the post-hoc difference check.
pub const CONDITION_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct UnwrapResult<T = f64> {
    /// Recovered samples, anchored at the first observation.
    pub y_bar: Vec<T>,
    /// Every recovered difference satisfied `|d| ≤ λ(1 − margin)`.
    pub condition_ok: bool,
    /// Recovered first differences, `y_bar[n+1] − y_bar[n] = d[n]`.
    pub d: Vec<T>,
}

pub fn itoh_unwrap<T: Real>(y_obs: &[T], lambda: f64) -> Result<UnwrapResult<T>> {
    if y_obs.len() < 2 {
        return Err(Error::TooShort { need: 2, got: y_obs.len() });
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter("lambda must be positive".into()));
    }
    let lam = T::lift(lambda);
    let d: Vec<T> = y_obs.windows(2).map(|w| modulo_fold(w[1] - w[0], lam)).collect();
    let mut y_bar = Vec::with_capacity(y_obs.len());
    let mut acc = y_obs[0];
    y_bar.push(acc);
    for &step in &d {
        acc = acc + step;
        y_bar.push(acc);
    }
    let limit = lambda * (1.0 - CONDITION_MARGIN);
    let condition_ok = d.iter().all(|v| v.to_double().abs() <= limit);
    Ok(UnwrapResult { y_bar, condition_ok, d })
}

/// `max_n |y[n+1] − y[n]| ≤ λ`.
pub fn verify_slope_condition<T: Real>(y_true: &[T], lambda: f64) -> bool {
    y_true.windows(2).all(|w| (w[1] - w[0]).to_double().abs() <= lambda)
}

/// Largest absolute first difference.
pub fn max_step<T: Real>(y: &[T]) -> f64 {
    y.windows(2).map(|w| (w[1] - w[0]).to_double().abs()).fold(0.0, f64::max)
}

/// `(β, spread)`: the offset `y_bar − y_true` at the first sample and the
/// spread of that offset across all samples.
pub fn offset_from_truth<T: Real>(y_bar: &[T], y_true: &[T]) -> (f64, f64) {
    let diffs: Vec<f64> = y_bar.iter().zip(y_true).map(|(&a, &b)| (a - b).to_double()).collect();
    let beta = diffs.first().copied().unwrap_or(0.0);
    let spread = diffs.iter().map(|d| (d - beta).abs()).fold(0.0, f64::max);
    (beta, spread)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_without_folding() {
        let y = vec![0.1, -0.3, 0.25, 0.0, 0.4];
        let r = itoh_unwrap(&y, 100.0).unwrap();
        for (a, b) in r.y_bar.iter().zip(&y) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(r.condition_ok);
    }

    #[test]
    fn three_sample_example() {
        let folded = vec![0.0, 0.8, modulo_fold(1.6, 1.0)];
        assert!((folded[2] + 0.4).abs() < 1e-15);
        let r = itoh_unwrap(&folded, 1.0).unwrap();
        assert!((r.d[0] - 0.8).abs() < 1e-15 && (r.d[1] - 0.8).abs() < 1e-15);
        assert!((r.y_bar[2] - 1.6).abs() < 1e-15);
    }

    #[test]
    fn cumulative_sum_is_exact() {
        let y = vec![0.3, -0.9, 0.7, 0.95, -0.2];
        let r = itoh_unwrap(&y, 1.0).unwrap();
        for i in 0..r.d.len() {
            assert_eq!(r.y_bar[i + 1], r.y_bar[i] + r.d[i]);
        }
    }

    #[test]
    fn too_short() {
        assert_eq!(itoh_unwrap(&[1.0], 1.0), Err(Error::TooShort { need: 2, got: 1 }));
    }

    #[test]
    fn slope_condition() {
        assert!(verify_slope_condition(&[0.5; 6], 0.1));
        assert!(!verify_slope_condition(&[0.0, 2.0], 1.0));
        assert!(verify_slope_condition(&[0.0, 1.0], 1.0));
    }

    #[test]
    fn condition_flag_tracks_large_steps() {
        let r = itoh_unwrap(&[0.0, 0.99999999999], 1.0).unwrap();
        assert!(!r.condition_ok);
    }
}
