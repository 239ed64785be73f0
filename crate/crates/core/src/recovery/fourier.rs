use num_complex::{Complex, Complex64};
use serde::Serialize;

use super::linalg::qr_least_squares;
use crate::error::{Error, Result};
use crate::kernel::{SamplingDesign, SosKernel};
use crate::precision::Real;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourierSolve {
    /// `F̄(kω0)` for `k ∈ {−K..K}`.
    pub f_bar: Vec<Complex64>,
    pub residual: f64,
    pub condition: f64,
}

/// Least-squares solve of `ȳ[n] = Σ_k c_k e^{jkω0 nTs} F̄(kω0)` over the
/// design's index set, in the precision of the samples.
pub fn solve_fourier<T: Real>(y_bar: &[T], kernel: &SosKernel, design: &SamplingDesign) -> Result<FourierSolve> {
    let k_max = kernel.k_max() as i64;
    let unknowns = 2 * kernel.k_max() + 1;
    if kernel.k_max() != design.k_max {
        return Err(Error::Precondition("kernel and design disagree on K".into()));
    }
    if y_bar.len() != design.len() {
        return Err(Error::LengthMismatch { left: y_bar.len(), right: design.len() });
    }
    if y_bar.len() < unknowns {
        return Err(Error::TooShort { need: unknowns, got: y_bar.len() });
    }
    if design.samples_per_period < unknowns as u64 {
        return Err(Error::Precondition("Ts exceeds Td/(2K+1); exponentials are not distinct".into()));
    }
    if kernel.coeffs().iter().any(|c| c.norm() == 0.0) {
        return Err(Error::Precondition("kernel coefficients must be nonzero".into()));
    }
    let m = design.samples_per_period;
    let coeffs: Vec<Complex<T>> = kernel
        .coeffs()
        .iter()
        .map(|c| Complex::new(T::lift(c.re), T::lift(c.im)))
        .collect();
    let rows: Vec<Vec<Complex<T>>> = design
        .indices()
        .map(|n| {
            (-k_max..=k_max)
                .map(|k| coeffs[(k + k_max) as usize] * T::cis_turns(k * n, m))
                .collect()
        })
        .collect();
    let rhs: Vec<Complex<T>> = y_bar.iter().map(|&y| Complex::new(y, T::zero())).collect();
    let sol = qr_least_squares(rows, rhs)?;
    if !(sol.condition <= T::CONDITION_LIMIT) {
        return Err(Error::IllConditioned { condition: sol.condition });
    }
    let raw: Vec<Complex64> = sol.x.iter().map(|z| Complex64::new(z.re.to_double(), z.im.to_double())).collect();
    // Real data: enforce F̄(−k) = F̄(k)* exactly.
    let n = raw.len();
    let f_bar = (0..n).map(|i| (raw[i] + raw[n - 1 - i].conj()) * 0.5).collect();
    Ok(FourierSolve { f_bar, residual: sol.residual, condition: sol.condition })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::Extended;
    use crate::sampler::acquire;
    use crate::signal::{fourier_coeffs, FriParams, Pulse};

    #[test]
    fn k0_returns_mean() {
        let design = SamplingDesign::with_samples_per_period(0, 1.0, 0.0, 3, 4, 1.0).unwrap();
        let kernel = design.unit_kernel();
        let y = [1.0, 2.0, 4.0, 5.0];
        let sol = solve_fourier(&y, &kernel, &design).unwrap();
        assert!((sol.f_bar[0].re - 3.0).abs() < 1e-14);
    }

    #[test]
    fn round_trip_from_sampler() {
        let p = FriParams::new(1.0, vec![0.1, 0.45, 0.8], vec![1.0, 2.0, 0.5], 2.0).unwrap();
        let design = SamplingDesign::new(3, 1.0, 0.0, 1.5, 12, 100.0).unwrap();
        let kernel = design.unit_kernel();
        let rec = acquire::<f64>(&p, &Pulse::Dirac, &kernel, &design, 0.0, 0).unwrap();
        let sol = solve_fourier(&rec.y_true, &kernel, &design).unwrap();
        let f = fourier_coeffs(&p, &Pulse::Dirac, 3).unwrap();
        for (a, b) in sol.f_bar.iter().zip(&f) {
            assert!((a - b).norm() < 1e-9);
        }
        let ynorm = rec.y_true.iter().map(|y| y * y).sum::<f64>().sqrt();
        assert!(sol.residual <= 1e-8 * ynorm);
    }

    #[test]
    fn constant_offset_only_moves_zero_frequency() {
        let p = FriParams::new(1.0, vec![0.3, 0.7], vec![1.0, 1.5], 2.0).unwrap();
        let design = SamplingDesign::new(2, 1.0, 0.0, 2.0, 5, 100.0).unwrap();
        let kernel = design.unit_kernel();
        let rec = acquire::<f64>(&p, &Pulse::Dirac, &kernel, &design, 0.0, 0).unwrap();
        let beta = 0.8;
        let shifted: Vec<f64> = rec.y_true.iter().map(|y| y + beta).collect();
        let a = solve_fourier(&rec.y_true, &kernel, &design).unwrap();
        let b = solve_fourier(&shifted, &kernel, &design).unwrap();
        for k in 0..5 {
            let diff = b.f_bar[k] - a.f_bar[k];
            if k == 2 {
                assert!((diff.re - beta / kernel.coeff(0).re).abs() < 1e-10 && diff.im.abs() < 1e-10);
            } else {
                assert!(diff.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn double_precision_rejects_narrow_burst() {
        // 13 samples at 8x oversampling: condition ~1e13
        let design = SamplingDesign::new(6, 1.0, 0.25, 8.0, 13, 0.2).unwrap();
        let kernel = design.unit_kernel();
        let y = vec![0.1; 13];
        assert!(matches!(solve_fourier(&y, &kernel, &design), Err(Error::IllConditioned { .. })));
        let y_ext = vec![Extended::from(0.1); 13];
        assert!(solve_fourier(&y_ext, &kernel, &design).is_ok());
    }

    #[test]
    fn too_few_samples() {
        let design = SamplingDesign::new(2, 1.0, 0.0, 2.0, 5, 1.0).unwrap();
        let kernel = design.unit_kernel();
        assert!(matches!(solve_fourier(&[0.0; 4], &kernel, &design), Err(Error::LengthMismatch { .. })));
    }
}
