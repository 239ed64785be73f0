//! From unwrapped samples to FRI parameters.

pub mod amplitudes;
pub mod annihilator;
pub mod fourier;
pub mod linalg;

use num_complex::Complex64;
use serde::Serialize;

pub use amplitudes::{estimate_amplitudes, AmplitudeFit};
pub use annihilator::{
    annihilate, asaf, delay_from_root, filter_response, hermitian_toeplitz, oversampled_af, run_variant,
    standard_af, AfVariant, AnnihilatorOutput, Diagnostics,
};
pub use fourier::{solve_fourier, FourierSolve};

use crate::error::{Error, Result};
use crate::kernel::{SamplingDesign, SosKernel};
use crate::precision::Real;
use crate::signal::{spectral_divide, FriParams, Pulse};
use crate::unwrap::itoh_unwrap;

/// Tolerance on `s̄[−k] = s̄[k]*`.
pub const CONJUGATE_TOLERANCE: f64 = 1e-9;

/// `s̄[k]` for `k ∈ {−K..K}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSeq {
    pub k_max: usize,
    pub values: Vec<Complex64>,
    /// `s̄[0]` may carry an unknown real offset.
    pub zero_ambiguous: bool,
    pub beta_bar_estimate: Option<f64>,
}

impl SpectralSeq {
    pub fn new(values: Vec<Complex64>, zero_ambiguous: bool) -> Result<Self> {
        if values.len() % 2 == 0 {
            return Err(Error::InvalidParameter("spectral sequence must have odd length 2K+1".into()));
        }
        let scale = values.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let n = values.len();
        let asym = (0..n).map(|i| (values[n - 1 - i] - values[i].conj()).norm()).fold(0.0, f64::max);
        if asym > CONJUGATE_TOLERANCE * scale {
            return Err(Error::Precondition(format!("sequence is not conjugate symmetric ({asym:.3e})")));
        }
        Ok(SpectralSeq { k_max: n / 2, values, zero_ambiguous, beta_bar_estimate: None })
    }

    /// `s̄[k]`; zero outside `{−K..K}`.
    pub fn get(&self, k: i64) -> Complex64 {
        let idx = k + self.k_max as i64;
        if idx < 0 || idx as usize >= self.values.len() {
            Complex64::new(0.0, 0.0)
        } else {
            self.values[idx as usize]
        }
    }

    /// Adds a real `β̄` at `k = 0` and marks it ambiguous.
    pub fn inject_offset(&mut self, beta_bar: f64) {
        self.values[self.k_max] += beta_bar;
        self.zero_ambiguous = true;
    }

    /// Central `{−K'..K'}` window.
    pub fn truncated(&self, k_max: usize) -> Result<Self> {
        if k_max > self.k_max {
            return Err(Error::Precondition(format!("cannot widen K from {} to {k_max}", self.k_max)));
        }
        let start = self.k_max - k_max;
        Ok(SpectralSeq {
            k_max,
            values: self.values[start..start + 2 * k_max + 1].to_vec(),
            ..self.clone()
        })
    }
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn circular(a: f64, b: f64, td: f64) -> f64 {
    let d = (a - b).rem_euclid(td);
    d.min(td - d)
}

/// Best cyclic pairing of two sorted delay lists on the circle of
/// circumference `Td`; returns the shift `r` pairing `truth[i]` with
/// `est[(i + r) mod L]`.
fn best_rotation(truth: &[f64], est: &[f64], td: f64) -> (usize, f64) {
    let l = truth.len();
    (0..l.max(1))
        .map(|r| {
            let cost = (0..l).map(|i| circular(truth[i], est[(i + r) % l], td).powi(2)).sum::<f64>();
            (r, cost)
        })
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

/// `Σ |τℓ − τ̂ℓ|²` with wrap-aware distance and the best cyclic
/// assignment of sorted delays.
pub fn delay_mse(truth: &[f64], est: &[f64], td: f64) -> Result<f64> {
    if truth.len() != est.len() {
        return Err(Error::LengthMismatch { left: truth.len(), right: est.len() });
    }
    if truth.is_empty() {
        return Ok(0.0);
    }
    Ok(best_rotation(&sorted(truth), &sorted(est), td).1)
}

/// Amplitudes of `est` reordered to match `truth` under the same pairing
/// as `delay_mse`.
pub fn matched_amplitudes(truth: &FriParams, est: &AnnihilatorOutput) -> Result<Vec<f64>> {
    if truth.len() != est.delays.len() {
        return Err(Error::LengthMismatch { left: truth.len(), right: est.delays.len() });
    }
    let t = truth.sorted();
    let (r, _) = best_rotation(&t.delays, &est.delays, truth.td);
    let l = t.len();
    Ok((0..l).map(|i| est.amps[(i + r) % l]).collect())
}

/// `(Σ|aℓ − âℓ|², max|aℓ − âℓ|)` with amplitudes paired as in `delay_mse`.
/// Truth amplitudes are taken in ascending-delay order.
pub fn amplitude_errors(truth: &FriParams, est: &AnnihilatorOutput) -> Result<(f64, f64)> {
    let t = truth.sorted();
    let matched = matched_amplitudes(truth, est)?;
    let diffs: Vec<f64> = t.amps.iter().zip(&matched).map(|(a, b)| (a - b).abs()).collect();
    Ok((diffs.iter().map(|d| d * d).sum(), diffs.iter().copied().fold(0.0, f64::max)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recovery {
    pub output: AnnihilatorOutput,
    pub spectral: SpectralSeq,
    pub unwrap_condition_ok: bool,
    pub fourier_residual: f64,
    pub fourier_condition: f64,
}

/// Unwrap, solve for `F̄`, divide by `H`, then annihilate.
///
/// The unwrapped samples and the Fourier solve stay in `T`; everything
/// after spectral division is double precision.
pub fn recover<T: Real>(
    y_obs: &[T],
    kernel: &SosKernel,
    design: &SamplingDesign,
    pulse: &Pulse,
    l: usize,
    variant: AfVariant,
) -> Result<Recovery> {
    let unwrapped = itoh_unwrap(y_obs, design.lambda)?;
    let fourier = solve_fourier(&unwrapped.y_bar, kernel, design)?;
    let s_bar = spectral_divide(&fourier.f_bar, pulse, kernel.omega0())?;
    let mut spectral = SpectralSeq::new(s_bar, true)?;
    let input = match variant {
        AfVariant::Asaf => spectral.truncated(l.min(spectral.k_max))?,
        _ => spectral.clone(),
    };
    let input = if variant == AfVariant::StandardAf {
        // no unwrap ambiguity is claimed; the caller asked for the plain AF
        SpectralSeq { zero_ambiguous: false, ..input }
    } else {
        input
    };
    let output = run_variant(variant, &input, l, design.td)?;
    spectral.beta_bar_estimate = output.beta_bar;
    Ok(Recovery {
        output,
        spectral,
        unwrap_condition_ok: unwrapped.condition_ok,
        fourier_residual: fourier.residual,
        fourier_condition: fourier.condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_examples() {
        assert_eq!(delay_mse(&[0.2, 0.5], &[0.2, 0.5], 1.0).unwrap(), 0.0);
        assert!((delay_mse(&[0.3], &[0.31], 1.0).unwrap() - 1e-4).abs() < 1e-15);
        assert!((delay_mse(&[0.999], &[0.001], 1.0).unwrap() - 0.002f64.powi(2)).abs() < 1e-15);
        assert!(matches!(delay_mse(&[0.1], &[0.1, 0.2], 1.0), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn wrap_pairing_matches_brute_force() {
        let truth = [0.05, 0.5];
        let est = [0.49, 0.97];
        let brute = [[0, 1], [1, 0]]
            .iter()
            .map(|perm| (0..2).map(|i| circular(truth[i], est[perm[i]], 1.0).powi(2)).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        assert!((delay_mse(&truth, &est, 1.0).unwrap() - brute).abs() < 1e-15);
    }

    #[test]
    fn spectral_seq_checks_symmetry() {
        let ok = vec![Complex64::new(1.0, -2.0), Complex64::new(3.0, 0.0), Complex64::new(1.0, 2.0)];
        let s = SpectralSeq::new(ok, false).unwrap();
        assert_eq!(s.get(1), Complex64::new(1.0, 2.0));
        assert_eq!(s.get(5), Complex64::new(0.0, 0.0));
        let bad = vec![Complex64::new(1.0, 2.0), Complex64::new(3.0, 0.0), Complex64::new(1.0, 2.0)];
        assert!(SpectralSeq::new(bad, false).is_err());
    }

    #[test]
    fn truncation_keeps_centre() {
        let v: Vec<Complex64> = (-2..=2).map(|k| Complex64::new(1.0 / (1 + (k as i64).abs()) as f64, k as f64)).collect();
        let s = SpectralSeq::new(v, false).unwrap();
        let t = s.truncated(1).unwrap();
        assert_eq!(t.get(1), s.get(1));
        assert_eq!(t.get(-1), s.get(-1));
        assert!(s.truncated(3).is_err());
    }
}
