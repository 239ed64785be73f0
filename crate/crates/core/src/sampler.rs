//! Simulated modulo ADC: closed-form samples of the filtered signal, the
//! centered fold `M_λ(a) = (a + λ) mod 2λ − λ`, and additive Gaussian noise.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use num_complex::{Complex, Complex64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::kernel::{SamplingDesign, SosKernel};
use crate::precision::Real;
use crate::signal::{fourier_coeffs, FriParams, Pulse};

/// Grid size for the continuous-time sup used to normalize the filtered signal.
pub const NORMALIZATION_GRID: usize = 10_000;

/// `M_λ(a)`, in `[−λ, λ)`.
pub fn modulo_fold<T: Real>(a: T, lambda: T) -> T {
    let period = lambda + lambda;
    let wraps = ((a + lambda) / period).floor();
    let mut r = a - period * wraps;
    // a rounded quotient can leave r one period off
    if r >= lambda {
        r = r - period;
    }
    if r < -lambda {
        r = r + period;
    }
    r
}

/// `y(t) = Σ_k c_k e^{jkω0 t} F(kω0)` from precomputed Fourier samples.
/// Valid only on the observation window.
pub fn filtered_from_fourier(f: &[Complex64], kernel: &SosKernel, t: f64) -> Complex64 {
    let k_max = kernel.k_max() as i64;
    let step = Complex64::from_polar(1.0, kernel.omega0() * t);
    let mut phase = Complex64::from_polar(1.0, -(k_max as f64) * kernel.omega0() * t);
    let mut acc = Complex64::new(0.0, 0.0);
    for k in -k_max..=k_max {
        acc += kernel.coeff(k) * f[(k + k_max) as usize] * phase;
        phase *= step;
    }
    acc
}

/// `(f * g)(t)` on `T_obs = [T_h + Td, Tg]`.
pub fn evaluate_filtered(params: &FriParams, pulse: &Pulse, kernel: &SosKernel, t: f64) -> Result<f64> {
    let lo = pulse.support() + params.td;
    let hi = kernel.tg();
    let slack = 1e-9 * params.td;
    if t < lo - slack || t > hi + slack {
        return Err(Error::OutsideObservation { t, lo, hi });
    }
    let f = fourier_coeffs(params, pulse, kernel.k_max())?;
    let y = filtered_from_fourier(&f, kernel, t);
    if y.im.abs() > 1e-10 * y.norm().max(1.0) {
        return Err(Error::Numerical(format!("filtered output has imaginary residue {:e}", y.im)));
    }
    Ok(y.re)
}

/// `y(nTs)` with the exponentials taken as exact roots of unity of order
/// `M = Td/Ts`, evaluated in the working precision.
pub fn grid_sample<T: Real>(f: &[Complex64], kernel: &SosKernel, n: i64, samples_per_period: u64) -> T {
    let k_max = kernel.k_max() as i64;
    let mut acc = Complex::new(T::zero(), T::zero());
    for k in -k_max..=k_max {
        let w = kernel.coeff(k) * f[(k + k_max) as usize];
        let w = Complex::new(T::lift(w.re), T::lift(w.im));
        acc = acc + w * T::cis_turns(k * n, samples_per_period);
    }
    acc.re
}

/// Output of the simulated modulo ADC over the index set `{n_min..n_max}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord<T = f64> {
    pub design: SamplingDesign,
    pub y_true: Vec<T>,
    pub y_folded: Vec<T>,
    pub noise_sigma: f64,
    pub y_observed: Vec<T>,
    /// `y_true − y_folded = 2λ·wraps`.
    pub wraps: Vec<i64>,
}

impl<T: Real> SampleRecord<T> {
    pub fn len(&self) -> usize {
        self.y_true.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_true.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.design.indices().map(|n| n as f64 * self.design.ts).collect()
    }

    /// Residual `z = y_true − y_folded`, in the working precision.
    pub fn residual(&self) -> Vec<T> {
        self.y_true.iter().zip(&self.y_folded).map(|(&a, &b)| a - b).collect()
    }

    pub fn to_f64(&self) -> SampleRecord<f64> {
        let conv = |v: &[T]| v.iter().map(|x| x.to_double()).collect();
        SampleRecord {
            design: self.design.clone(),
            y_true: conv(&self.y_true),
            y_folded: conv(&self.y_folded),
            noise_sigma: self.noise_sigma,
            y_observed: conv(&self.y_observed),
            wraps: self.wraps.clone(),
        }
    }

    /// Writes `n,t,y_true,y_folded,y_observed` rows after `# key=value`
    /// metadata lines. Values are written at `f64` precision.
    pub fn write_csv<W: Write>(&self, mut w: W, extra: &[(String, String)]) -> std::io::Result<()> {
        let d = &self.design;
        let meta: [(&str, String); 10] = [
            ("td", d.td.to_string()),
            ("k", d.k_max.to_string()),
            ("samples_per_period", d.samples_per_period.to_string()),
            ("ts", d.ts.to_string()),
            ("n_min", d.n_min.to_string()),
            ("n_max", d.n_max.to_string()),
            ("lambda", d.lambda.to_string()),
            ("pulse_support", d.pulse_support.to_string()),
            ("noise_sigma", self.noise_sigma.to_string()),
            ("precision", T::NAME.to_string()),
        ];
        for (k, v) in meta.iter() {
            writeln!(w, "# {k}={v}")?;
        }
        for (k, v) in extra {
            writeln!(w, "# {k}={v}")?;
        }
        writeln!(w, "n,t,y_true,y_folded,y_observed")?;
        for (i, n) in d.indices().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{}",
                n,
                n as f64 * d.ts,
                self.y_true[i].to_double(),
                self.y_folded[i].to_double(),
                self.y_observed[i].to_double()
            )?;
        }
        Ok(())
    }
}

impl SampleRecord<f64> {
    /// Reads a record written by [`SampleRecord::write_csv`]; returns it
    /// with every metadata pair found in the header.
    pub fn read_csv<R: BufRead>(r: R) -> Result<(Self, BTreeMap<String, String>)> {
        let mut meta = BTreeMap::new();
        let mut rows: Vec<[f64; 5]> = Vec::new();
        let mut saw_header = false;
        for (lineno, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::InvalidParameter(format!("read error: {e}")))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            if !saw_header {
                saw_header = true;
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidParameter(format!("line {}: {e}", lineno + 1)))?;
            if vals.len() != 5 {
                return Err(Error::InvalidParameter(format!("line {}: expected 5 columns", lineno + 1)));
            }
            rows.push([vals[0], vals[1], vals[2], vals[3], vals[4]]);
        }
        let get = |key: &str| -> Result<f64> {
            meta.get(key)
                .ok_or_else(|| Error::InvalidParameter(format!("missing metadata key {key}")))?
                .parse::<f64>()
                .map_err(|e| Error::InvalidParameter(format!("metadata {key}: {e}")))
        };
        let n_min = get("n_min")? as i64;
        let n_max = get("n_max")? as i64;
        let design = SamplingDesign::with_samples_per_period(
            get("k")? as usize,
            get("td")?,
            get("pulse_support")?,
            get("samples_per_period")? as u64,
            (n_max - n_min + 1) as usize,
            get("lambda")?,
        )?;
        if design.n_min != n_min || rows.len() != design.len() {
            return Err(Error::InvalidParameter("sample rows disagree with the metadata index set".into()));
        }
        let lambda = design.lambda;
        let y_true: Vec<f64> = rows.iter().map(|r| r[2]).collect();
        let y_folded: Vec<f64> = rows.iter().map(|r| r[3]).collect();
        let wraps = y_true
            .iter()
            .zip(&y_folded)
            .map(|(t, f)| ((t - f) / (2.0 * lambda)).round() as i64)
            .collect();
        let record = SampleRecord {
            design,
            y_true,
            y_folded,
            noise_sigma: get("noise_sigma").unwrap_or(0.0),
            y_observed: rows.iter().map(|r| r[4]).collect(),
            wraps,
        };
        Ok((record, meta))
    }
}

/// Samples, folds and (optionally) adds noise. Deterministic for a fixed seed.
pub fn acquire<T: Real>(
    params: &FriParams,
    pulse: &Pulse,
    kernel: &SosKernel,
    design: &SamplingDesign,
    noise_sigma: f64,
    rng_seed: u64,
) -> Result<SampleRecord<T>> {
    design.check_kernel(kernel)?;
    if (params.td - design.td).abs() > 1e-12 * design.td {
        return Err(Error::Precondition("signal and design disagree on Td".into()));
    }
    if (pulse.support() - design.pulse_support).abs() > 1e-12 {
        return Err(Error::Precondition("pulse support differs from the design's T_h".into()));
    }
    if !(noise_sigma >= 0.0) {
        return Err(Error::InvalidParameter("noise sigma must be non-negative".into()));
    }
    let f = fourier_coeffs(params, pulse, kernel.k_max())?;
    let lambda = T::lift(design.lambda);
    let y_true: Vec<T> = design
        .indices()
        .map(|n| grid_sample::<T>(&f, kernel, n, design.samples_per_period))
        .collect();
    let y_folded: Vec<T> = y_true.iter().map(|&y| modulo_fold(y, lambda)).collect();
    let two_lambda = 2.0 * design.lambda;
    let wraps = y_true
        .iter()
        .zip(&y_folded)
        .map(|(&t, &f)| ((t - f).to_double() / two_lambda).round() as i64)
        .collect();
    let y_observed = if noise_sigma == 0.0 {
        y_folded.clone()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let normal = Normal::new(0.0, noise_sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        y_folded.iter().map(|&y| y + T::lift(normal.sample(&mut rng))).collect()
    };
    Ok(SampleRecord { design: design.clone(), y_true, y_folded, noise_sigma, y_observed, wraps })
}

/// Noise standard deviation for a target SNR in dB given the signal power.
pub fn snr_to_sigma(record_power: f64, snr_db: f64) -> Result<f64> {
    if !(record_power > 0.0) {
        return Err(Error::InvalidParameter("signal power must be positive".into()));
    }
    Ok((record_power / 10f64.powf(snr_db / 10.0)).sqrt())
}

/// Mean square of the folded, noise-free samples.
pub fn folded_power<T: Real>(record: &SampleRecord<T>) -> f64 {
    let n = record.y_folded.len().max(1) as f64;
    record.y_folded.iter().map(|y| y.to_double().powi(2)).sum::<f64>() / n
}

/// `max |y(t)|` over one period of the observation window on a
/// `NORMALIZATION_GRID`-point grid. `y` is `Td`-periodic there.
pub fn dense_sup(params: &FriParams, pulse: &Pulse, kernel: &SosKernel) -> Result<f64> {
    let f = fourier_coeffs(params, pulse, kernel.k_max())?;
    let start = pulse.support() + params.td;
    Ok((0..NORMALIZATION_GRID)
        .map(|i| {
            let t = start + params.td * i as f64 / NORMALIZATION_GRID as f64;
            filtered_from_fourier(&f, kernel, t).re.abs()
        })
        .fold(0.0, f64::max))
}

/// Rescales the amplitudes so the filtered signal has unit dense-grid sup.
/// Returns the scaled parameters and the original sup.
pub fn normalize(params: &FriParams, pulse: &Pulse, kernel: &SosKernel) -> Result<(FriParams, f64)> {
    let sup = dense_sup(params, pulse, kernel)?;
    if !(sup > 0.0) {
        return Err(Error::Numerical("filtered signal is identically zero".into()));
    }
    Ok((params.scaled(1.0 / sup), sup))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::Extended;
    use rand::Rng;

    #[test]
    fn fold_examples() {
        assert_eq!(modulo_fold(0.3, 1.0), 0.3);
        assert_eq!(modulo_fold(1.5, 1.0), -0.5);
        assert_eq!(modulo_fold(1.0, 1.0), -1.0);
        assert_eq!(modulo_fold(-1.0, 1.0), -1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let a: f64 = rng.gen_range(-1.0..1.0);
            let base = modulo_fold(a, 1.0);
            for k in -3..=3 {
                let v = modulo_fold(a + 2.0 * k as f64, 1.0);
                assert!((v - base).abs() < 1e-14, "{a} {k}");
            }
        }
    }

    #[test]
    fn fold_in_extended_precision() {
        let lam = Extended::from(0.2);
        let a = Extended::from(0.7) + Extended::from(1e-20);
        let r = modulo_fold(a, lam);
        let expect = (a - Extended::from(0.8)).to_double();
        assert!((r.to_double() - expect).abs() < 1e-30);
    }

    #[test]
    fn snr_mapping() {
        assert_eq!(snr_to_sigma(1.0, 0.0).unwrap(), 1.0);
        assert!((snr_to_sigma(2.0, 10.0).unwrap() - 0.2f64.sqrt()).abs() < 1e-15);
        assert!(snr_to_sigma(1.0, 300.0).unwrap() < 1e-14);
        assert!(snr_to_sigma(0.0, 10.0).is_err());
    }

    fn small_setup(lambda: f64) -> (FriParams, Pulse, SosKernel, SamplingDesign) {
        let params = FriParams::new(1.0, vec![0.2, 0.55, 0.9], vec![1.0, 0.7, 1.3], 2.0).unwrap();
        let pulse = Pulse::Dirac;
        let design = SamplingDesign::new(3, 1.0, 0.0, 2.0, 9, lambda).unwrap();
        let kernel = design.unit_kernel();
        (params, pulse, kernel, design)
    }

    #[test]
    fn evaluate_rejects_outside_window() {
        let (p, h, g, _) = small_setup(1.0);
        assert!(matches!(evaluate_filtered(&p, &h, &g, 0.5), Err(Error::OutsideObservation { .. })));
        assert!(evaluate_filtered(&p, &h, &g, 1.0).is_ok());
    }

    #[test]
    fn dirichlet_peak() {
        let one = Pulse::tabulated((0..=4).map(|k| (k, Complex64::new(1.0, 0.0))), 0.0, 1.0).unwrap();
        let p = FriParams::new_unchecked_window(1.0, vec![0.0], vec![1.0], 1.0);
        let g = SosKernel::unit(4, 1.0, 3.0).unwrap();
        assert!((evaluate_filtered(&p, &one, &g, 2.0).unwrap() - 9.0).abs() < 1e-12);
    }

    #[test]
    fn acquire_noiseless_and_unfolded() {
        let (p, h, g, d) = small_setup(100.0);
        let rec = acquire::<f64>(&p, &h, &g, &d, 0.0, 1).unwrap();
        assert_eq!(rec.y_observed, rec.y_folded);
        assert_eq!(rec.y_folded, rec.y_true);
        assert!(rec.wraps.iter().all(|&w| w == 0));
    }

    #[test]
    fn acquire_matches_closed_form_and_folds() {
        let (p, h, g, d) = small_setup(0.4);
        let rec = acquire::<f64>(&p, &h, &g, &d, 0.0, 1).unwrap();
        for (i, n) in d.indices().enumerate() {
            let y = evaluate_filtered(&p, &h, &g, n as f64 * d.ts).unwrap();
            assert!((rec.y_true[i] - y).abs() < 1e-12);
            assert!(rec.y_folded[i] >= -0.4 && rec.y_folded[i] < 0.4);
            let z = rec.y_true[i] - rec.y_folded[i];
            assert!((z - 0.8 * rec.wraps[i] as f64).abs() < 1e-9);
        }
        assert!(rec.wraps.iter().any(|&w| w != 0));
    }

    #[test]
    fn acquire_is_deterministic_with_noise() {
        let (p, h, g, d) = small_setup(0.4);
        let a = acquire::<f64>(&p, &h, &g, &d, 0.01, 9).unwrap();
        let b = acquire::<f64>(&p, &h, &g, &d, 0.01, 9).unwrap();
        let c = acquire::<f64>(&p, &h, &g, &d, 0.01, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.y_observed, c.y_observed);
    }

    #[test]
    fn extended_acquisition_agrees_with_double() {
        let (p, h, g, d) = small_setup(0.4);
        let a = acquire::<f64>(&p, &h, &g, &d, 0.0, 1).unwrap();
        let b = acquire::<Extended>(&p, &h, &g, &d, 0.0, 1).unwrap();
        for (x, y) in a.y_true.iter().zip(&b.y_true) {
            assert!((x - y.to_double()).abs() < 1e-13);
        }
        assert_eq!(a.wraps, b.wraps);
    }

    #[test]
    fn normalization_gives_unit_sup() {
        let (p, h, g, _) = small_setup(1.0);
        let (scaled, sup) = normalize(&p, &h, &g).unwrap();
        assert!(sup > 0.0);
        assert!((dense_sup(&scaled, &h, &g).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let (p, h, g, d) = small_setup(0.4);
        let rec = acquire::<f64>(&p, &h, &g, &d, 0.02, 4).unwrap();
        let mut buf = Vec::new();
        rec.write_csv(&mut buf, &[("pulse".into(), "dirac".into())]).unwrap();
        let (back, meta) = SampleRecord::read_csv(&buf[..]).unwrap();
        assert_eq!(back, rec);
        assert_eq!(meta.get("pulse").map(String::as_str), Some("dirac"));
    }
}
