//! Scalar types for the sample path (synthesis, folding, unwrapping and the
//! Fourier-sample solve).
//!
//! The map from Fourier samples to a short burst of closely spaced time
//! samples is a Vandermonde system on a narrow arc of the unit circle. With a
//! handful of samples at high oversampling its condition number reaches
//! 1e13 and beyond, so rounding of the samples in `f64` alone limits the
//! recovered delays to a few significant digits. [`Extended`] carries the
//! same pipeline in double-double arithmetic for those designs.

use std::fmt::Debug;

use num_complex::Complex;
use num_traits::{Float, FromPrimitive};

/// Double-double scalar, about 32 significant digits.
pub type Extended = twofloat::TwoFloat;

/// Floating-point scalar usable on the sample path.
pub trait Real: Float + FromPrimitive + Debug + Default + Send + Sync + 'static {
    /// Largest condition estimate the Fourier solve accepts in this precision.
    const CONDITION_LIMIT: f64;

    const NAME: &'static str;

    fn lift(x: f64) -> Self;

    fn to_double(self) -> f64;

    /// `exp(j 2π num / den)`, accurate to the working precision.
    fn cis_turns(num: i64, den: u64) -> Complex<Self>;

    /// `1 / self`, accurate to the working precision.
    fn reciprocal(self) -> Self;
}

/// `a / b` through [`Real::reciprocal`].
pub fn cdiv<T: Real>(a: Complex<T>, b: Complex<T>) -> Complex<T> {
    a * b.conj() * b.norm_sqr().reciprocal()
}

fn reduced_angle(num: i64, den: u64) -> f64 {
    let r = num.rem_euclid(den as i64);
    2.0 * std::f64::consts::PI * (r as f64) / (den as f64)
}

impl Real for f64 {
    const CONDITION_LIMIT: f64 = 1e12;
    const NAME: &'static str = "double";

    fn lift(x: f64) -> Self {
        x
    }

    fn to_double(self) -> f64 {
        self
    }

    fn cis_turns(num: i64, den: u64) -> Complex<f64> {
        let (s, c) = reduced_angle(num, den).sin_cos();
        Complex::new(c, s)
    }

    fn reciprocal(self) -> f64 {
        1.0 / self
    }
}

impl Real for Extended {
    const CONDITION_LIMIT: f64 = 1e28;
    const NAME: &'static str = "extended";

    fn lift(x: f64) -> Self {
        Extended::from(x)
    }

    fn to_double(self) -> f64 {
        self.hi() + self.lo()
    }

    fn reciprocal(self) -> Extended {
        // twofloat's own division drops the low word of 1 − b·(1/b)
        let one = Extended::from(1.0);
        let r = Extended::from(1.0 / self.hi());
        r + r * (one - self * r)
    }

    fn cis_turns(num: i64, den: u64) -> Complex<Extended> {
        // twofloat's trig is only accurate to ~1e-17; refine the double
        // estimate as a root of z^den = 1 with Newton steps instead.
        let seed = f64::cis_turns(num, den);
        let mut z = Complex::new(Extended::from(seed.re), Extended::from(seed.im));
        let n = Extended::from(den as f64);
        let one = Complex::new(Extended::from(1.0), Extended::from(0.0));
        for _ in 0..2 {
            let w = cpow(z, den);
            let step = (w - one) / (w * n);
            z = z * (one - step);
        }
        z
    }
}

fn cpow<T: Float>(mut base: Complex<T>, mut exp: u64) -> Complex<T> {
    let mut acc = Complex::new(T::one(), T::zero());
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base;
        }
        base = base * base;
        exp >>= 1;
    }
    acc
}

/// Working precision of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    Double,
    Extended,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extended_reciprocal_is_full_precision() {
        for &b in &[3.0, 0.7, 1.0 + 1e-20, 123456.789] {
            let b = Extended::from(b) + Extended::from(b * 1e-18);
            let r = b.reciprocal();
            assert!((Extended::from(1.0) - b * r).to_double().abs() < 1e-31);
        }
        let q = cdiv(Complex::new(Extended::from(1.0), Extended::from(2.0)), Complex::new(Extended::from(3.0), Extended::from(-1.0)));
        let back = q * Complex::new(Extended::from(3.0), Extended::from(-1.0));
        assert!((back.re - Extended::from(1.0)).to_double().abs() < 1e-31);
        assert!((back.im - Extended::from(2.0)).to_double().abs() < 1e-31);
    }

    #[test]
    fn double_roots_of_unity() {
        let z = f64::cis_turns(1, 4);
        assert!((z.re).abs() < 1e-15 && (z.im - 1.0).abs() < 1e-15);
        let z = f64::cis_turns(-1, 4);
        assert!((z.im + 1.0).abs() < 1e-15);
        let z = f64::cis_turns(5, 4);
        assert!((z.im - 1.0).abs() < 1e-15);
    }

    #[test]
    fn extended_roots_of_unity_match_reference() {
        // cos/sin(2π m/104) to 30+ digits, hi and lo parts.
        let cases: [(i64, f64, f64, f64, f64); 3] = [
            (1, 0.9981755542233175, -2.519704346278146e-17, 0.06037849742228606, -3.1015775779907087e-18),
            (13, 0.7071067811865476, -4.833646656726457e-17, 0.7071067811865476, -4.833646656726457e-17),
            (77, -0.06037849742228606, 3.1015775779907087e-18, -0.9981755542233175, 2.519704346278146e-17),
        ];
        for (m, c_hi, c_lo, s_hi, s_lo) in cases {
            let z = Extended::cis_turns(m, 104);
            let dc = (z.re - Extended::from(c_hi)) - Extended::from(c_lo);
            let ds = (z.im - Extended::from(s_hi)) - Extended::from(s_lo);
            assert!(dc.to_double().abs() < 1e-30, "cos m={m}: {:e}", dc.to_double());
            assert!(ds.to_double().abs() < 1e-30, "sin m={m}: {:e}", ds.to_double());
        }
    }

    #[test]
    fn extended_unit_modulus() {
        for m in 0..55 {
            let z = Extended::cis_turns(m, 55);
            let err = (z.norm_sqr() - Extended::from(1.0)).to_double();
            assert!(err.abs() < 1e-30);
        }
    }
}
