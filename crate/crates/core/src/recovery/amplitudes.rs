use std::f64::consts::TAU;

use num_complex::Complex64;

use super::linalg::qr_least_squares;
use super::SpectralSeq;
use crate::error::{Error, Result};

/// Largest tolerated imaginary part of a recovered amplitude.
pub const IMAG_TOLERANCE: f64 = 1e-6;
/// Vandermonde condition above which the fit is flagged.
pub const AMPLITUDE_CONDITION_LIMIT: f64 = 1e10;

#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeFit {
    pub amps: Vec<f64>,
    pub imag: f64,
    pub residual: f64,
    pub condition: f64,
    pub ill_conditioned: bool,
}

impl AmplitudeFit {
    /// Same fit as `estimate_amplitudes` without the imaginary-part check.
    pub fn unchecked(s: &SpectralSeq, delays: &[f64], td: f64, beta_bar: Option<f64>) -> Result<Self> {
        if delays.is_empty() {
            return Err(Error::InvalidParameter("no delays".into()));
        }
        let k = s.k_max as i64;
        let omega0 = TAU / td;
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for kk in -k..=k {
            let value = if kk == 0 {
                match beta_bar {
                    Some(b) => s.get(0) - b,
                    None => continue,
                }
            } else {
                s.get(kk)
            };
            rows.push(delays.iter().map(|&t| Complex64::from_polar(1.0, -(kk as f64) * omega0 * t)).collect());
            rhs.push(value);
        }
        if rows.len() < delays.len() {
            return Err(Error::TooShort { need: delays.len(), got: rows.len() });
        }
        let sol = qr_least_squares(rows, rhs)?;
        let scale = sol.x.iter().map(|z| z.norm()).fold(1.0, f64::max);
        Ok(AmplitudeFit {
            amps: sol.x.iter().map(|z| z.re).collect(),
            imag: sol.x.iter().map(|z| z.im.abs()).fold(0.0, f64::max) / scale,
            residual: sol.residual,
            condition: sol.condition,
            ill_conditioned: sol.condition > AMPLITUDE_CONDITION_LIMIT,
        })
    }
}

/// Least squares for `â` in `s̄[k] ≈ Σ âℓ e^{−jkω0τ̂ℓ}` over `k ≠ 0`, plus
/// `k = 0` against `s̄[0] − β̄` when `beta_bar` is given.
pub fn estimate_amplitudes(s: &SpectralSeq, delays: &[f64], td: f64, beta_bar: Option<f64>) -> Result<AmplitudeFit> {
    let mut sorted = delays.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Precondition("delays must be distinct".into()));
    }
    let fit = AmplitudeFit::unchecked(s, delays, td, beta_bar)?;
    if fit.imag > IMAG_TOLERANCE {
        return Err(Error::Numerical(format!("amplitudes have imaginary part {:.3e}", fit.imag)));
    }
    Ok(fit)
}
