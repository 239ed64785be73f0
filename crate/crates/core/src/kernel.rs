//! Sum-of-sincs sampling kernel `g(t) = rect(t/Tg) Σ_k c_k e^{jkω0 t}`,
//! the sampling grid it is paired with, and the dynamic-range bounds that
//! decide how fast the folded output must be sampled for first-difference
//! unwrapping to succeed.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack used when converting real sample positions to indices.
const INDEX_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SosKernel {
    k_max: usize,
    /// `c_k` for `k ∈ {−K..K}`, stored at `k + K`.
    coeffs: Vec<Complex64>,
    td: f64,
    tg: f64,
}

impl SosKernel {
    /// Kernel with explicit coefficients `c_0..c_K`; negative indices are
    /// filled by conjugate symmetry. `c_0` must be real.
    pub fn new(one_sided: &[Complex64], td: f64, tg: f64) -> Result<Self> {
        if one_sided.is_empty() {
            return Err(Error::InvalidParameter("need at least c_0".into()));
        }
        if one_sided[0].im.abs() > 1e-12 * one_sided[0].norm().max(1.0) {
            return Err(Error::InvalidParameter("c_0 must be real".into()));
        }
        if !(td > 0.0 && tg > 0.0) {
            return Err(Error::InvalidParameter("Td and Tg must be positive".into()));
        }
        let k_max = one_sided.len() - 1;
        let mut coeffs = Vec::with_capacity(2 * k_max + 1);
        coeffs.extend(one_sided[1..].iter().rev().map(|c| c.conj()));
        coeffs.push(Complex64::new(one_sided[0].re, 0.0));
        coeffs.extend_from_slice(&one_sided[1..]);
        Ok(SosKernel { k_max, coeffs, td, tg })
    }

    /// `c_k = 1` for all `k`.
    pub fn unit(k_max: usize, td: f64, tg: f64) -> Result<Self> {
        Self::new(&vec![Complex64::new(1.0, 0.0); k_max + 1], td, tg)
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn td(&self) -> f64 {
        self.td
    }

    pub fn tg(&self) -> f64 {
        self.tg
    }

    pub fn omega0(&self) -> f64 {
        2.0 * PI / self.td
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        self.coeffs[(k + self.k_max as i64) as usize]
    }

    pub fn is_unit(&self) -> bool {
        self.coeffs.iter().all(|c| (c - Complex64::new(1.0, 0.0)).norm() < 1e-12)
    }

    /// `Σ_{k=1..K} k|c_k|`.
    pub fn weighted_coeff_sum(&self) -> f64 {
        (1..=self.k_max as i64).map(|k| k as f64 * self.coeff(k).norm()).sum()
    }

    /// `|c_0| + 2Σ_{k≥1}|c_k|`, a bound on `‖g‖∞`.
    pub fn coeff_l1(&self) -> f64 {
        self.coeff(0).norm() + 2.0 * (1..=self.k_max as i64).map(|k| self.coeff(k).norm()).sum::<f64>()
    }

    /// `g(t)`: zero outside `[0, Tg]`.
    pub fn impulse_response(&self, t: f64) -> f64 {
        if !(0.0..=self.tg).contains(&t) {
            return 0.0;
        }
        self.analytic_sum(t).re
    }

    /// `Σ_k c_k e^{jkω0 t}` without the window (imaginary part should vanish).
    pub fn analytic_sum(&self, t: f64) -> Complex64 {
        let w = self.omega0() * t;
        let k_max = self.k_max as i64;
        (-k_max..=k_max).map(|k| self.coeff(k) * Complex64::from_polar(1.0, k as f64 * w)).sum()
    }

    pub fn with_tg(&self, tg: f64) -> Self {
        SosKernel { tg, ..self.clone() }
    }
}

/// Uniform sampling grid paired with a kernel: `Ts = Td / M` for an integer
/// number `M` of samples per delay window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingDesign {
    pub td: f64,
    pub k_max: usize,
    /// Samples per `Td`.
    pub samples_per_period: u64,
    pub ts: f64,
    /// Effective oversampling `M / (2K+1)`.
    pub oversampling: f64,
    /// `(M − 1) / 2`, rounded down.
    pub kprime: u64,
    pub n_min: i64,
    pub n_max: i64,
    pub lambda: f64,
    pub pulse_support: f64,
}

impl SamplingDesign {
    /// Builds the grid for an oversampling factor and a sample count. The
    /// number of samples per `Td` is the next integer at or above
    /// `OF·(2K+1)`; the kernel support is placed half a sample past the last
    /// wanted index so `|N|` equals `n_count` exactly.
    pub fn new(
        k_max: usize,
        td: f64,
        pulse_support: f64,
        oversampling: f64,
        n_count: usize,
        lambda: f64,
    ) -> Result<Self> {
        if !(oversampling >= 1.0) {
            return Err(Error::InvalidParameter(format!("oversampling must be >= 1, got {oversampling}")));
        }
        let optimal = (2 * k_max + 1) as f64;
        let m = (oversampling * optimal * (1.0 - INDEX_SLACK)).ceil() as u64;
        Self::with_samples_per_period(k_max, td, pulse_support, m, n_count, lambda)
    }

    pub fn with_samples_per_period(
        k_max: usize,
        td: f64,
        pulse_support: f64,
        samples_per_period: u64,
        n_count: usize,
        lambda: f64,
    ) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter("lambda must be positive".into()));
        }
        if !(td > 0.0) || pulse_support < 0.0 {
            return Err(Error::InvalidParameter("Td must be positive and T_h non-negative".into()));
        }
        let optimal = 2 * k_max as u64 + 1;
        if samples_per_period < optimal {
            return Err(Error::InvalidParameter(format!(
                "{samples_per_period} samples per Td is below the minimum {optimal}"
            )));
        }
        if n_count < optimal as usize {
            return Err(Error::InvalidParameter(format!("need at least {optimal} samples, got {n_count}")));
        }
        let ts = td / samples_per_period as f64;
        let n_min = ((pulse_support + td) / ts - INDEX_SLACK).ceil() as i64;
        let n_max = n_min + n_count as i64 - 1;
        Ok(SamplingDesign {
            td,
            k_max,
            samples_per_period,
            ts,
            oversampling: samples_per_period as f64 / optimal as f64,
            kprime: (samples_per_period - 1) / 2,
            n_min,
            n_max,
            lambda,
            pulse_support,
        })
    }

    /// Kernel support that makes `⌊Tg/Ts⌋ = n_max` while keeping `Tg > T_h + Td`.
    pub fn kernel_support(&self) -> f64 {
        (self.n_max as f64 + 0.5) * self.ts
    }

    pub fn len(&self) -> usize {
        (self.n_max - self.n_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.n_max < self.n_min
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> {
        self.n_min..=self.n_max
    }

    pub fn t_opt(&self) -> f64 {
        self.td / (2 * self.k_max + 1) as f64
    }

    /// Observation window `[T_h + Td, Tg]`.
    pub fn observation_window(&self) -> (f64, f64) {
        (self.pulse_support + self.td, self.kernel_support())
    }

    /// Checks the grid against a kernel: same `K` and `Td`, support long
    /// enough, and the index set fits inside the observation window.
    pub fn check_kernel(&self, kernel: &SosKernel) -> Result<()> {
        if kernel.k_max() != self.k_max {
            return Err(Error::Precondition(format!("kernel K = {} but design K = {}", kernel.k_max(), self.k_max)));
        }
        if (kernel.td() - self.td).abs() > 1e-12 * self.td {
            return Err(Error::Precondition("kernel and design disagree on Td".into()));
        }
        if !(kernel.tg() > self.pulse_support + self.td) {
            return Err(Error::Precondition("kernel support must exceed T_h + Td".into()));
        }
        let n_max = (kernel.tg() / self.ts * (1.0 + INDEX_SLACK)).floor() as i64;
        if n_max < self.n_max {
            return Err(Error::Precondition(format!("kernel support ends at index {n_max}, design needs {}", self.n_max)));
        }
        Ok(())
    }

    /// Kernel with unit coefficients and the matching support.
    pub fn unit_kernel(&self) -> SosKernel {
        SosKernel::unit(self.k_max, self.td, self.kernel_support()).expect("validated design")
    }
}

/// Largest admissible `Σ_{k≥1} k|c_k|` for unwrapping at interval `Ts`:
/// `λ / (2 L a_max α_h ω0 Ts)`.
pub fn coeff_budget(k_max: usize, lambda: f64, l: usize, a_max: f64, alpha_h: f64, ts: f64, td: f64) -> Result<f64> {
    if k_max == 0 || l == 0 {
        return Err(Error::InvalidParameter("K and L must be positive".into()));
    }
    for (name, v) in [("lambda", lambda), ("a_max", a_max), ("alpha_h", alpha_h), ("Ts", ts), ("Td", td)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    let omega0 = 2.0 * PI / td;
    Ok(lambda / (2.0 * l as f64 * a_max * alpha_h * omega0 * ts))
}

/// Oversampling needed by a unit-coefficient kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OversamplingBound {
    /// `max(1, 2π (L a_max α_h / λ) K(K+1)/(2K+1))`.
    pub exact: f64,
    /// `max(1, (π/2) ‖y‖∞ / λ)` with `‖y‖∞ = L a_max α_h (2K+1)`.
    pub approximate: f64,
}

pub fn required_oversampling(
    kernel: &SosKernel,
    lambda: f64,
    l: usize,
    a_max: f64,
    alpha_h: f64,
) -> Result<OversamplingBound> {
    if !kernel.is_unit() {
        return Err(Error::NonUnitCoefficients);
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter("lambda must be positive".into()));
    }
    let k = kernel.k_max() as f64;
    let y_sup = y_sup_bound(kernel, l, a_max, alpha_h);
    if y_sup < lambda {
        return Ok(OversamplingBound { exact: 1.0, approximate: 1.0 });
    }
    let exact = 2.0 * PI * (l as f64 * a_max * alpha_h / lambda) * k * (k + 1.0) / (2.0 * k + 1.0);
    let approximate = PI / 2.0 * y_sup / lambda;
    Ok(OversamplingBound { exact: exact.max(1.0), approximate: approximate.max(1.0) })
}

/// `L a_max α_h (|c_0| + 2Σ|c_k|)`, a bound on `‖y‖∞`.
pub fn y_sup_bound(kernel: &SosKernel, l: usize, a_max: f64, alpha_h: f64) -> f64 {
    l as f64 * a_max * alpha_h * kernel.coeff_l1()
}
