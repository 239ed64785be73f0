//! FRI signal class: a known time-limited pulse, delayed and weighted `L`
//! times inside a window `(0, Td]`, together with its Fourier description
//! at multiples of `ω0 = 2π/Td`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum pairwise (circular) separation of randomly drawn delays, in units of `Td`.
pub const MIN_DELAY_SEPARATION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseKind {
    Dirac,
    BSpline3,
    Tabulated,
}

/// Known real pulse `h(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Pulse {
    Dirac,
    /// Causal cubic B-spline with knot spacing `knot`, normalized to unit area.
    /// Support `[0, 4·knot]`.
    BSpline3 { knot: f64 },
    /// Spectrum supplied explicitly at integer multiples of `ω0`.
    Tabulated {
        spectrum: BTreeMap<i64, Complex64>,
        support: f64,
        l1_norm: f64,
    },
}

impl Pulse {
    pub fn bspline3(knot: f64) -> Result<Self> {
        if !(knot > 0.0 && knot.is_finite()) {
            return Err(Error::InvalidParameter(format!("knot spacing must be positive, got {knot}")));
        }
        Ok(Pulse::BSpline3 { knot })
    }

    /// Cubic B-spline whose support is a quarter of the delay window.
    pub fn bspline3_for_window(td: f64) -> Self {
        Pulse::BSpline3 { knot: td / 16.0 }
    }

    /// Tabulated spectrum for `k ∈ {−K..K}`, given as `(k, H(kω0))` pairs.
    /// Conjugate symmetry is enforced by filling missing negative indices.
    pub fn tabulated(
        values: impl IntoIterator<Item = (i64, Complex64)>,
        support: f64,
        l1_norm: f64,
    ) -> Result<Self> {
        if support < 0.0 || l1_norm <= 0.0 {
            return Err(Error::InvalidParameter("tabulated pulse needs support >= 0 and l1 norm > 0".into()));
        }
        let mut spectrum: BTreeMap<i64, Complex64> = values.into_iter().collect();
        let mirrored: Vec<_> = spectrum
            .iter()
            .filter(|(k, _)| **k != 0)
            .map(|(k, v)| (-k, v.conj()))
            .collect();
        for (k, v) in mirrored {
            spectrum.entry(k).or_insert(v);
        }
        Ok(Pulse::Tabulated { spectrum, support, l1_norm })
    }

    pub fn kind(&self) -> PulseKind {
        match self {
            Pulse::Dirac => PulseKind::Dirac,
            Pulse::BSpline3 { .. } => PulseKind::BSpline3,
            Pulse::Tabulated { .. } => PulseKind::Tabulated,
        }
    }

    /// Support length `T_h`.
    pub fn support(&self) -> f64 {
        match self {
            Pulse::Dirac => 0.0,
            Pulse::BSpline3 { knot } => 4.0 * knot,
            Pulse::Tabulated { support, .. } => *support,
        }
    }

    /// `α_h = ∫|h|`.
    pub fn l1_norm(&self) -> f64 {
        match self {
            Pulse::Dirac | Pulse::BSpline3 { .. } => 1.0,
            Pulse::Tabulated { l1_norm, .. } => *l1_norm,
        }
    }

    /// `H(ω)`. Tabulated pulses only answer at tabulated `ω = kω0`.
    pub fn spectrum_at(&self, omega: f64) -> Complex64 {
        match self {
            Pulse::Dirac => Complex64::new(1.0, 0.0),
            Pulse::BSpline3 { knot } => bspline3_spectrum(omega * knot),
            Pulse::Tabulated { .. } => Complex64::new(f64::NAN, f64::NAN),
        }
    }

    /// `H(kω0)`.
    pub fn spectrum(&self, k: i64, omega0: f64) -> Result<Complex64> {
        match self {
            Pulse::Tabulated { spectrum, .. } => spectrum.get(&k).copied().ok_or(Error::SpectrumMissing { k }),
            _ => Ok(self.spectrum_at(k as f64 * omega0)),
        }
    }

    /// `H(kω0)` for `k ∈ {−K..K}`; fails if any sample is numerically zero.
    pub fn spectrum_samples(&self, k_max: usize, omega0: f64) -> Result<Vec<Complex64>> {
        let k_max = k_max as i64;
        let values = (-k_max..=k_max)
            .map(|k| self.spectrum(k, omega0))
            .collect::<Result<Vec<_>>>()?;
        let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let floor = 1e-12 * peak;
        for (i, v) in values.iter().enumerate() {
            if !(v.norm() > floor) {
                return Err(Error::SpectrumVanishes { k: i as i64 - k_max });
            }
        }
        Ok(values)
    }

    /// Time-domain value `h(t)`; `None` for the Dirac and tabulated pulses.
    pub fn eval(&self, t: f64) -> Option<f64> {
        match self {
            Pulse::BSpline3 { knot } => Some(bspline3_value(t / knot) / knot),
            _ => None,
        }
    }
}

/// `((1 − e^{−jx}) / (jx))^4`, the transform of the unit-knot causal cubic B-spline.
fn bspline3_spectrum(x: f64) -> Complex64 {
    if x.abs() < 1e-4 {
        // sinc-like expansion: e^{−j2x}·(sin(x/2)/(x/2))^4
        let h = x / 2.0;
        let s = 1.0 - h * h / 6.0 + h.powi(4) / 120.0;
        return Complex64::from_polar(s.powi(4), -2.0 * x);
    }
    let h = x / 2.0;
    let s = h.sin() / h;
    Complex64::from_polar(s.powi(4), -2.0 * x)
}

/// Unit-knot causal cubic B-spline on `[0, 4]`.
fn bspline3_value(u: f64) -> f64 {
    if !(0.0..=4.0).contains(&u) {
        return 0.0;
    }
    if u < 1.0 {
        u.powi(3) / 6.0
    } else if u < 2.0 {
        (-3.0 * u.powi(3) + 12.0 * u * u - 12.0 * u + 4.0) / 6.0
    } else if u < 3.0 {
        (3.0 * u.powi(3) - 24.0 * u * u + 60.0 * u - 44.0) / 6.0
    } else {
        (4.0 - u).powi(3) / 6.0
    }
}

/// The unknowns `{aℓ, tℓ}` plus the model constants of the class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriParams {
    pub td: f64,
    pub delays: Vec<f64>,
    pub amps: Vec<f64>,
    pub a_max: f64,
}

impl FriParams {
    pub fn new(td: f64, delays: Vec<f64>, amps: Vec<f64>, a_max: f64) -> Result<Self> {
        let p = FriParams { td, delays, amps, a_max };
        p.validate()?;
        Ok(p)
    }

    /// Same as [`FriParams::new`] but allows a delay at `t = 0`.
    pub fn new_unchecked_window(td: f64, delays: Vec<f64>, amps: Vec<f64>, a_max: f64) -> Self {
        FriParams { td, delays, amps, a_max }
    }

    fn validate(&self) -> Result<()> {
        if !(self.td > 0.0) {
            return Err(Error::InvalidParameter("Td must be positive".into()));
        }
        if self.delays.is_empty() {
            return Err(Error::InvalidParameter("need at least one pulse".into()));
        }
        if self.delays.len() != self.amps.len() {
            return Err(Error::LengthMismatch { left: self.delays.len(), right: self.amps.len() });
        }
        for &t in &self.delays {
            if !(t > 0.0 && t <= self.td) {
                return Err(Error::InvalidParameter(format!("delay {t} outside (0, {}]", self.td)));
            }
        }
        let mut sorted = self.delays.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("delays must be distinct".into()));
        }
        for &a in &self.amps {
            if a == 0.0 || !a.is_finite() {
                return Err(Error::InvalidParameter("amplitudes must be nonzero and finite".into()));
            }
            if a.abs() > self.a_max * (1.0 + 1e-12) {
                return Err(Error::InvalidParameter(format!("|a| = {} exceeds a_max = {}", a.abs(), self.a_max)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    pub fn omega0(&self) -> f64 {
        2.0 * PI / self.td
    }

    pub fn all_positive(&self) -> bool {
        self.amps.iter().all(|&a| a > 0.0)
    }

    /// Multiply every amplitude (and `a_max`) by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        FriParams {
            td: self.td,
            delays: self.delays.clone(),
            amps: self.amps.iter().map(|a| a * factor).collect(),
            a_max: self.a_max * factor,
        }
    }

    /// Delays sorted ascending with their amplitudes.
    pub fn sorted(&self) -> Self {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&i, &j| self.delays[i].total_cmp(&self.delays[j]));
        FriParams {
            td: self.td,
            delays: idx.iter().map(|&i| self.delays[i]).collect(),
            amps: idx.iter().map(|&i| self.amps[i]).collect(),
            a_max: self.a_max,
        }
    }

    /// Smallest circular gap between delays, as a fraction of `Td`.
    pub fn min_separation(&self) -> f64 {
        let l = self.len();
        if l < 2 {
            return 1.0;
        }
        let mut d: Vec<f64> = self.delays.iter().map(|t| t.rem_euclid(self.td)).collect();
        d.sort_by(f64::total_cmp);
        (0..l)
            .map(|i| {
                let next = if i + 1 < l { d[i + 1] } else { d[0] + self.td };
                next - d[i]
            })
            .fold(f64::INFINITY, f64::min)
            / self.td
    }

    /// Uniform delays on `(0, Td]`, redrawn until every circular gap is at
    /// least `MIN_DELAY_SEPARATION·Td`. Amplitudes come from `amp`.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        l: usize,
        td: f64,
        a_max: f64,
        amp: impl FnMut(&mut R) -> f64,
    ) -> Self {
        Self::random_separated(rng, l, td, a_max, MIN_DELAY_SEPARATION, amp)
    }

    /// As [`FriParams::random`] with gaps of at least `min_sep·Td`.
    pub fn random_separated<R: Rng + ?Sized>(
        rng: &mut R,
        l: usize,
        td: f64,
        a_max: f64,
        min_sep: f64,
        mut amp: impl FnMut(&mut R) -> f64,
    ) -> Self {
        let delays = loop {
            let mut d: Vec<f64> = (0..l).map(|_| td * (1.0 - rng.gen::<f64>())).collect();
            d.sort_by(f64::total_cmp);
            let min_gap = (0..l)
                .map(|i| {
                    let next = if i + 1 < l { d[i + 1] } else { d[0] + td };
                    next - d[i]
                })
                .fold(f64::INFINITY, f64::min);
            if l == 1 || min_gap >= min_sep * td {
                break d;
            }
        };
        let amps = (0..l).map(|_| amp(rng)).collect();
        FriParams { td, delays, amps, a_max }
    }

    /// `f(t) = Σ aℓ h(t − tℓ)` for pulses with a time-domain form.
    pub fn eval(&self, pulse: &Pulse, t: f64) -> Option<f64> {
        let mut acc = 0.0;
        for (&d, &a) in self.delays.iter().zip(&self.amps) {
            acc += a * pulse.eval(t - d)?;
        }
        Some(acc)
    }
}

/// `s[k] = Σ aℓ e^{−jkω0 tℓ}` for `k ∈ {−K..K}`.
pub fn exponential_sum(params: &FriParams, k_max: usize) -> Vec<Complex64> {
    let w0 = params.omega0();
    let k_max = k_max as i64;
    (-k_max..=k_max)
        .map(|k| {
            params
                .delays
                .iter()
                .zip(&params.amps)
                .map(|(&t, &a)| Complex64::from_polar(a, -(k as f64) * w0 * t))
                .sum()
        })
        .collect()
}

/// `F(kω0) = H(kω0) Σ aℓ e^{−jkω0 tℓ}` for `k ∈ {−K..K}`.
pub fn fourier_coeffs(params: &FriParams, pulse: &Pulse, k_max: usize) -> Result<Vec<Complex64>> {
    let h = pulse.spectrum_samples(k_max, params.omega0())?;
    let s = exponential_sum(params, k_max);
    Ok(h.iter().zip(&s).map(|(h, s)| h * s).collect())
}

/// `s[k] = F(kω0) / H(kω0)`, with `F` indexed over `{−K..K}`.
pub fn spectral_divide(f: &[Complex64], pulse: &Pulse, omega0: f64) -> Result<Vec<Complex64>> {
    if f.len() % 2 == 0 {
        return Err(Error::InvalidParameter("spectral sequence must have odd length 2K+1".into()));
    }
    let k_max = f.len() / 2;
    let h = pulse.spectrum_samples(k_max, omega0)?;
    Ok(f.iter().zip(&h).map(|(f, h)| f / h).collect())
}

/// `max_k |x[−k] − x[k]*|` over a sequence indexed `{−K..K}`.
pub fn conjugate_asymmetry(x: &[Complex64]) -> f64 {
    let n = x.len();
    (0..n).map(|i| (x[n - 1 - i] - x[i].conj()).norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn seed42_params() -> FriParams {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        FriParams::random(&mut rng, 3, 1.0, 2.0, |r| r.gen_range(0.5..2.0))
    }

    #[test]
    fn dirac_at_origin_has_flat_spectrum() {
        let p = FriParams::new_unchecked_window(1.0, vec![0.0], vec![1.0], 1.0);
        let f = fourier_coeffs(&p, &Pulse::Dirac, 5).unwrap();
        for v in f {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn zero_frequency_is_amplitude_sum() {
        let p = seed42_params();
        let f = fourier_coeffs(&p, &Pulse::Dirac, 4).unwrap();
        let sum: f64 = p.amps.iter().sum();
        assert!((f[4].re - sum).abs() < 1e-14 && f[4].im.abs() < 1e-14);
    }

    #[test]
    fn bspline_normalization_and_symmetry() {
        let pulse = Pulse::bspline3(0.0625).unwrap();
        let w0 = 2.0 * PI;
        assert_eq!(pulse.spectrum(0, w0).unwrap(), Complex64::new(1.0, 0.0));
        for k in 1..10 {
            let a = pulse.spectrum(k, w0).unwrap();
            let b = pulse.spectrum(-k, w0).unwrap();
            assert!((a - b.conj()).norm() < 1e-15);
        }
        assert_eq!(pulse.support(), 0.25);
        // near-zero branch agrees with the closed form
        let x: f64 = 5e-5;
        let closed = Complex64::from_polar(((x / 2.0).sin() / (x / 2.0)).powi(4), -2.0 * x);
        assert!((bspline3_spectrum(x) - closed).norm() < 1e-15);
        assert!((bspline3_spectrum(1e-4 * (1.0 - 1e-12)) - bspline3_spectrum(1e-4)).norm() < 1e-14);
    }

    #[test]
    fn bspline_has_unit_area() {
        let n = 40_000;
        let h = 4.0 / n as f64;
        let area: f64 = (0..n).map(|i| bspline3_value((i as f64 + 0.5) * h) * h).sum();
        assert!((area - 1.0).abs() < 1e-8);
        assert!((bspline3_value(2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((bspline3_value(1.0) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn spectrum_zero_is_reported() {
        // H(kω0) = 0 at k = 16 for a knot of Td/16.
        let pulse = Pulse::bspline3(1.0 / 16.0).unwrap();
        let p = seed42_params();
        let err = fourier_coeffs(&p, &pulse, 16).unwrap_err();
        assert_eq!(err, Error::SpectrumVanishes { k: -16 });
    }

    #[test]
    fn tabulated_zero_sample_rejected() {
        let pulse = Pulse::tabulated(
            vec![(0, Complex64::new(1.0, 0.0)), (1, Complex64::new(0.5, 0.1)), (2, Complex64::new(0.0, 0.0))],
            0.1,
            1.0,
        )
        .unwrap();
        assert!(matches!(
            spectral_divide(&vec![Complex64::new(1.0, 0.0); 5], &pulse, 2.0 * PI),
            Err(Error::SpectrumVanishes { .. })
        ));
        assert!(matches!(pulse.spectrum(3, 1.0), Err(Error::SpectrumMissing { k: 3 })));
    }

    #[test]
    fn dirac_divide_is_identity() {
        let p = seed42_params();
        let f = fourier_coeffs(&p, &Pulse::Dirac, 3).unwrap();
        assert_eq!(spectral_divide(&f, &Pulse::Dirac, p.omega0()).unwrap(), f);
    }

    #[test]
    fn random_params_respect_window_and_separation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let p = FriParams::random(&mut rng, 6, 2.0, 6.0, |r| r.gen_range(0.5..6.0));
            assert!(FriParams::new(p.td, p.delays.clone(), p.amps.clone(), p.a_max).is_ok());
            assert!(p.delays.windows(2).all(|w| w[1] - w[0] >= 2e-3));
        }
    }

    #[test]
    fn params_validation() {
        assert!(FriParams::new(1.0, vec![0.0], vec![1.0], 1.0).is_err());
        assert!(FriParams::new(1.0, vec![0.2, 0.2], vec![1.0, 1.0], 1.0).is_err());
        assert!(FriParams::new(1.0, vec![0.2], vec![3.0], 1.0).is_err());
        assert!(FriParams::new(1.0, vec![1.0], vec![-1.0], 1.0).is_ok());
    }
}
