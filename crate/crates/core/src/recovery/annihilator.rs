use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::amplitudes::{estimate_amplitudes, AmplitudeFit};
use super::linalg::{hermitian_eigen, jacobi_svd, monic_roots, toeplitz};
use super::SpectralSeq;
use crate::error::{Error, Result};

/// Second-smallest singular value must exceed this multiple of the smallest.
pub const NULL_SPACE_SEPARATION: f64 = 10.0;
/// `σ_L` at or below this fraction of `σ_max` counts as a second null direction.
pub const RANK_TOLERANCE: f64 = 1e-13;
/// Relative eigen-gap below which the ASAF minimum eigenspace is degenerate.
pub const EIGEN_GAP_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AfVariant {
    #[serde(alias = "StandardAF")]
    StandardAf,
    #[serde(alias = "OversampledAF")]
    OversampledAf,
    #[serde(alias = "ASAF")]
    Asaf,
}

impl AfVariant {
    pub fn name(self) -> &'static str {
        match self {
            AfVariant::StandardAf => "standard-af",
            AfVariant::OversampledAf => "oversampled-af",
            AfVariant::Asaf => "asaf",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// `σ_{L+1} / σ_L` of the Toeplitz system (AF variants).
    pub singular_ratio: Option<f64>,
    /// `(λ_2 − λ_1) / radius` of `S̄` (ASAF).
    pub eigen_gap: Option<f64>,
    /// `max_ℓ ||z_ℓ| − 1|` before projection to the unit circle.
    pub root_modulus_error: f64,
    pub amplitude_condition: f64,
    pub amplitude_residual: f64,
    pub amplitude_ill_conditioned: bool,
    /// Largest discarded imaginary part of the amplitude solve.
    pub amplitude_imag: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnihilatorOutput {
    /// `x[0..L]` with `x[0] = 1`.
    pub filter: Vec<Complex64>,
    /// Unit-modulus roots `e^{−jω0 τ̂ℓ}`, ordered like `delays`.
    pub roots: Vec<Complex64>,
    /// Ascending, in `(0, Td]`.
    pub delays: Vec<f64>,
    pub amps: Vec<f64>,
    pub variant: AfVariant,
    pub beta_bar: Option<f64>,
    pub diagnostics: Diagnostics,
}

/// `X(ω) = Σ_i x[i] e^{jωi}`.
pub fn filter_response(x: &[Complex64], omega: f64) -> Complex64 {
    x.iter().enumerate().map(|(i, &c)| c * Complex64::from_polar(1.0, omega * i as f64)).sum()
}

/// Maps `−arg(z)/ω0` into `(0, Td]`, with argument 0 landing on `Td`.
pub fn delay_from_root(z: Complex64, td: f64) -> f64 {
    let omega0 = TAU / td;
    let tau = (-z.arg() / omega0).rem_euclid(td);
    if tau <= 0.0 {
        td
    } else {
        tau
    }
}

struct NullVector {
    x: Vec<Complex64>,
    ratio: f64,
}

/// Right singular vector of the smallest singular value of the
/// `(hi − lo − L + 1) × (L + 1)` Toeplitz matrix `M[r][i] = s[lo + L + r − i]`.
fn toeplitz_null_vector(s: &SpectralSeq, lo: i64, hi: i64, l: usize) -> Result<NullVector> {
    let rows = (hi - lo + 1) as usize - l;
    let st = toeplitz(|k| s.get(k), lo + l as i64, rows, l + 1);
    let (sv, v) = jacobi_svd(&st);
    let (smallest, second, largest) = (sv[0], sv[1], sv[sv.len() - 1]);
    let ratio = if second > 0.0 { smallest / second } else { f64::INFINITY };
    if second < NULL_SPACE_SEPARATION * smallest || second <= RANK_TOLERANCE * largest {
        return Err(Error::AmbiguousNullSpace { ratio });
    }
    let x = v.column(0).iter().copied().collect();
    Ok(NullVector { x, ratio })
}

fn finish(
    s: &SpectralSeq,
    x: Vec<Complex64>,
    td: f64,
    variant: AfVariant,
    beta_bar: Option<f64>,
    mut diagnostics: Diagnostics,
) -> Result<AnnihilatorOutput> {
    let lead = x[0];
    if lead.norm() == 0.0 {
        return Err(Error::Numerical("annihilating filter has zero leading coefficient".into()));
    }
    let filter: Vec<Complex64> = x.iter().map(|c| c / lead).collect();
    let raw = monic_roots(&filter)?;
    diagnostics.root_modulus_error = raw.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
    let mut pairs: Vec<(f64, Complex64)> = raw
        .iter()
        .map(|&z| {
            let tau = delay_from_root(z, td);
            (tau, Complex64::from_polar(1.0, -TAU * tau / td))
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let delays: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let roots = pairs.iter().map(|p| p.1).collect();
    let fit = match estimate_amplitudes(s, &delays, td, beta_bar) {
        Ok(fit) => fit,
        Err(Error::Numerical(_)) => AmplitudeFit::unchecked(s, &delays, td, beta_bar)?,
        Err(e) => return Err(e),
    };
    diagnostics.amplitude_condition = fit.condition;
    diagnostics.amplitude_residual = fit.residual;
    diagnostics.amplitude_ill_conditioned = fit.ill_conditioned;
    diagnostics.amplitude_imag = fit.imag;
    Ok(AnnihilatorOutput { filter, roots, delays, amps: fit.amps, variant, beta_bar, diagnostics })
}

/// Annihilating filter on the window `k ∈ [lo, hi]` of `s`, which must
/// hold at least `2L` consecutive samples.
pub fn annihilate(s: &SpectralSeq, lo: i64, hi: i64, l: usize, td: f64) -> Result<(Vec<Complex64>, f64)> {
    if l == 0 {
        return Err(Error::InvalidParameter("L must be positive".into()));
    }
    let k = s.k_max as i64;
    if lo < -k || hi > k || hi - lo + 1 < 2 * l as i64 {
        return Err(Error::Precondition(format!("window [{lo}, {hi}] cannot annihilate L = {l}")));
    }
    if !(td > 0.0) {
        return Err(Error::InvalidParameter("Td must be positive".into()));
    }
    let nv = toeplitz_null_vector(s, lo, hi, l)?;
    Ok((nv.x, nv.ratio))
}

pub fn standard_af(s: &SpectralSeq, l: usize, td: f64) -> Result<AnnihilatorOutput> {
    if s.zero_ambiguous {
        return Err(Error::Precondition("standard AF needs an unambiguous k = 0 sample".into()));
    }
    if s.k_max < l {
        return Err(Error::Precondition(format!("standard AF needs K >= L (K = {}, L = {l})", s.k_max)));
    }
    let k = s.k_max as i64;
    let (x, ratio) = annihilate(s, -k, k, l, td)?;
    let diagnostics = Diagnostics { singular_ratio: Some(ratio), ..Default::default() };
    finish(s, x, td, AfVariant::StandardAf, None, diagnostics)
}

/// Annihilating filter on `k ∈ {1..K}` only; `s̄[0]` is never read.
pub fn oversampled_af(s: &SpectralSeq, l: usize, td: f64) -> Result<AnnihilatorOutput> {
    if s.k_max < 2 * l {
        return Err(Error::Precondition(format!("oversampled AF needs K >= 2L (K = {}, L = {l})", s.k_max)));
    }
    let (x, ratio) = annihilate(s, 1, s.k_max as i64, l, td)?;
    let diagnostics = Diagnostics { singular_ratio: Some(ratio), ..Default::default() };
    finish(s, x, td, AfVariant::OversampledAf, None, diagnostics)
}

/// Hermitian Toeplitz `S̄[i][j] = s̄[i − j]`, `i, j ∈ {0..L}`.
pub fn hermitian_toeplitz(s: &SpectralSeq, l: usize) -> DMatrix<Complex64> {
    toeplitz(|k| s.get(k), 0, l + 1, l + 1)
}

/// Ambiguous-sample annihilating filter: the minimum eigenpair of `S̄`
/// gives the filter and `β̄`. Amplitudes must be positive.
pub fn asaf(s: &SpectralSeq, l: usize, td: f64) -> Result<AnnihilatorOutput> {
    if l == 0 {
        return Err(Error::InvalidParameter("L must be positive".into()));
    }
    if s.k_max < l {
        return Err(Error::Precondition(format!("ASAF needs K >= L (K = {}, L = {l})", s.k_max)));
    }
    let (vals, vecs) = hermitian_eigen(&hermitian_toeplitz(s, l));
    let radius = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let lo = vals[0];
    let gap = vals[1] - lo;
    if !(gap > EIGEN_GAP_TOLERANCE * radius) {
        return Err(Error::DegenerateEigenspace { gap });
    }
    let x: Vec<Complex64> = vecs.column(0).iter().copied().collect();
    let diagnostics = Diagnostics { eigen_gap: Some(gap / radius), ..Default::default() };
    finish(s, x, td, AfVariant::Asaf, Some(lo), diagnostics)
}

pub fn run_variant(variant: AfVariant, s: &SpectralSeq, l: usize, td: f64) -> Result<AnnihilatorOutput> {
    match variant {
        AfVariant::StandardAf => standard_af(s, l, td),
        AfVariant::OversampledAf => oversampled_af(s, l, td),
        AfVariant::Asaf => asaf(s, l, td),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{exponential_sum, FriParams};

    fn seq(p: &FriParams, k: usize) -> SpectralSeq {
        SpectralSeq::new(exponential_sum(p, k), false).unwrap()
    }

    #[test]
    fn single_exponential() {
        let p = FriParams::new(1.0, vec![0.3], vec![1.0], 1.0).unwrap();
        let out = standard_af(&seq(&p, 1), 1, 1.0).unwrap();
        assert!((out.delays[0] - 0.3).abs() < 1e-14);
        assert!((out.amps[0] - 1.0).abs() < 1e-14);
        assert_eq!(out.filter[0], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn zero_argument_maps_to_td() {
        assert_eq!(delay_from_root(Complex64::new(1.0, 0.0), 2.0), 2.0);
        assert!((delay_from_root(Complex64::from_polar(1.0, -TAU * 0.25), 1.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn filter_vanishes_at_delays() {
        let p = FriParams::new(1.0, vec![0.12, 0.5, 0.77], vec![1.0, -0.4, 2.0], 2.0).unwrap();
        let out = standard_af(&seq(&p, 4), 3, 1.0).unwrap();
        let xn = out.filter.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for &t in &p.delays {
            assert!(filter_response(&out.filter, TAU * t).norm() <= 1e-8 * xn);
        }
        for (a, b) in out.delays.iter().zip(&p.delays) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn standard_af_detects_wrong_order() {
        let p = FriParams::new(1.0, vec![0.2, 0.6], vec![1.0, 1.0], 1.0).unwrap();
        assert!(matches!(standard_af(&seq(&p, 4), 3, 1.0), Err(Error::AmbiguousNullSpace { .. })));
    }

    #[test]
    fn oversampled_af_ignores_zero_sample() {
        let p = FriParams::new(1.0, vec![0.25, 0.61], vec![0.7, 1.3], 2.0).unwrap();
        let mut s = seq(&p, 4);
        let clean = oversampled_af(&s, 2, 1.0).unwrap();
        s.inject_offset(7.3);
        let out = oversampled_af(&s, 2, 1.0).unwrap();
        assert_eq!(clean.delays, out.delays);
        for (a, b) in out.delays.iter().zip(&p.delays) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(matches!(oversampled_af(&seq(&p, 3), 2, 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn asaf_recovers_offset() {
        let p = FriParams::new(1.0, vec![0.1, 0.45, 0.8], vec![1.0, 2.0, 0.5], 2.0).unwrap();
        let clean = asaf(&seq(&p, 3), 3, 1.0).unwrap();
        assert!(clean.beta_bar.unwrap().abs() < 1e-10);
        let mut s = seq(&p, 3);
        s.inject_offset(3.7);
        let out = asaf(&s, 3, 1.0).unwrap();
        assert!((out.beta_bar.unwrap() - 3.7).abs() < 1e-9);
        for (a, b) in out.delays.iter().zip(&p.delays) {
            assert!((a - b).abs() < 1e-9);
        }
        for (a, b) in out.amps.iter().zip(&p.amps) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn asaf_rejects_degenerate_minimum() {
        // L = 2 asked of a single exponential: two zero eigenvalues
        let p = FriParams::new(1.0, vec![0.4], vec![1.0], 1.0).unwrap();
        assert!(matches!(asaf(&seq(&p, 2), 2, 1.0), Err(Error::DegenerateEigenspace { .. })));
    }
}
