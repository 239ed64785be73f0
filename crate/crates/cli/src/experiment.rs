//! Scenario runner: per-trial rows, per-point summaries and the dense
//! reconstruction grid.

use std::f64::consts::FRAC_PI_2;

use modfri::identifiability::{fold_crossings, folding_bound, is_prime, prime_table, CROSSING_GRID};
use modfri::recovery::{amplitude_errors, delay_mse};
use modfri::sampler::{dense_sup, filtered_from_fourier, folded_power, snr_to_sigma};
use modfri::signal::fourier_coeffs;
use modfri::{acquire, recover, AnnihilatorOutput, Extended, FriParams, Precision, Pulse, Real, Recovery, SamplingDesign, SosKernel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{AmplitudeMode, ExperimentConfig, Scenario};
use crate::error::HarnessError;

/// Points per period in the reconstruction grid.
pub const GRID_POINTS: usize = 1000;

/// One instance drawn for a trial, with the design it is sampled on.
#[derive(Debug, Clone)]
pub struct Instance {
    pub params: FriParams,
    pub pulse: Pulse,
    pub design: SamplingDesign,
    pub kernel: SosKernel,
    pub sup: f64,
    /// Seed for the noise stream of this (trial, point).
    pub noise_seed: u64,
}

/// RNG stream for a trial: seeded by the experiment seed, one stream per trial.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

pub fn draw_params(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> FriParams {
    let a_max = cfg.a_max;
    match cfg.amplitude_mode {
        AmplitudeMode::Unit => FriParams::random(rng, cfg.l, cfg.td, a_max.max(1.0), |_| 1.0),
        AmplitudeMode::RandomPositive => FriParams::random(rng, cfg.l, cfg.td, a_max, |r| r.gen_range(0.5..=a_max)),
    }
}

/// Smallest prime at or above `m`.
fn next_prime(m: u64) -> u64 {
    (m..).find(|&n| is_prime(n)).expect("primes are unbounded")
}

/// Draws the trial's signal and builds the design for a given `λ` choice and
/// oversampling factor.
pub fn build_instance(
    cfg: &ExperimentConfig,
    trial: usize,
    point: usize,
    lambda_fraction: Option<f64>,
    of: f64,
) -> Result<Instance, modfri::Error> {
    let mut rng = trial_rng(cfg.seed, trial);
    let params = draw_params(cfg, &mut rng);
    let noise_seed = rng.gen::<u64>() ^ (point as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let pulse = cfg.pulse();
    let k = cfg.k();
    let n = cfg.samples();
    let make = |lambda: f64| {
        if cfg.prime_grid {
            let m = (of * (2 * k + 1) as f64 * (1.0 - 1e-9)).ceil() as u64;
            SamplingDesign::with_samples_per_period(k, cfg.td, pulse.support(), next_prime(m), n, lambda)
        } else {
            SamplingDesign::new(k, cfg.td, pulse.support(), of, n, lambda)
        }
    };
    let kernel = make(1.0)?.unit_kernel();
    let sup = dense_sup(&params, &pulse, &kernel)?;
    let lambda = match (lambda_fraction, cfg.lambda_abs) {
        (Some(f), _) => f * sup,
        (None, Some(a)) => a,
        (None, None) => return Err(modfri::Error::InvalidParameter("no lambda given".into())),
    };
    let design = make(lambda)?;
    Ok(Instance { params, pulse, design, kernel, sup, noise_seed })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub scenario: Scenario,
    pub point: usize,
    /// λ fraction for a λ-sweep, SNR in dB for an SNR sweep, empty otherwise.
    pub sweep_value: Option<f64>,
    pub trial: usize,
    pub seed: u64,
    pub variant: &'static str,
    pub precision: &'static str,
    pub l: usize,
    pub k: usize,
    pub samples: usize,
    pub oversampling: Option<f64>,
    pub lambda: Option<f64>,
    pub status: &'static str,
    pub delay_mse: Option<f64>,
    pub amp_mse: Option<f64>,
    pub amp_max_error: Option<f64>,
    pub beta_bar: Option<f64>,
    pub condition_ok: Option<bool>,
    pub fourier_residual: Option<f64>,
    pub fourier_condition: Option<f64>,
    pub amplitude_residual: Option<f64>,
    pub crossings: Option<u64>,
    pub crossing_bound: Option<u64>,
    pub error: String,
}

impl TrialRow {
    fn blank(cfg: &ExperimentConfig, point: usize, sweep_value: Option<f64>, trial: usize) -> Self {
        TrialRow {
            scenario: cfg.scenario,
            point,
            sweep_value,
            trial,
            seed: cfg.seed,
            variant: cfg.variant.name(),
            precision: precision_name(cfg.precision),
            l: cfg.l,
            k: cfg.k(),
            samples: cfg.samples(),
            oversampling: None,
            lambda: None,
            status: "failed",
            delay_mse: None,
            amp_mse: None,
            amp_max_error: None,
            beta_bar: None,
            condition_ok: None,
            fourier_residual: None,
            fourier_condition: None,
            amplitude_residual: None,
            crossings: None,
            crossing_bound: None,
            error: String::new(),
        }
    }

    pub fn succeeded(&self) -> bool {
        self.status == "ok"
    }
}

fn precision_name(p: Precision) -> &'static str {
    match p {
        Precision::Double => <f64 as Real>::NAME,
        Precision::Extended => <Extended as Real>::NAME,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub point: usize,
    pub sweep_value: Option<f64>,
    pub trials: usize,
    pub successes: usize,
    pub failures: usize,
    /// Over successful trials.
    pub mean_delay_mse: Option<f64>,
    /// Over all trials, a failed trial counting as `+inf`.
    pub median_delay_mse: Option<f64>,
    pub max_delay_mse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub trial: usize,
    pub t: f64,
    pub y_true: f64,
    pub y_recovered: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimeRow {
    #[serde(rename = "L")]
    pub l: usize,
    pub optimal: u64,
    pub required: u64,
    pub excess: u64,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentResult {
    pub trials: Vec<TrialRow>,
    pub summary: Vec<SummaryRow>,
    pub grid: Vec<GridRow>,
    pub primes: Vec<PrimeRow>,
}

impl ExperimentResult {
    /// True when the scenario ran trials and none of them succeeded.
    pub fn all_failed(&self) -> bool {
        !self.trials.is_empty() && self.trials.iter().all(|r| !r.succeeded())
    }
}

/// Median with NaN-free input; `None` for an empty slice.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

fn summarize(rows: &[TrialRow]) -> SummaryRow {
    let ok: Vec<f64> = rows.iter().filter(|r| r.succeeded()).filter_map(|r| r.delay_mse).collect();
    let all: Vec<f64> = rows
        .iter()
        .map(|r| if r.succeeded() { r.delay_mse.unwrap_or(f64::INFINITY) } else { f64::INFINITY })
        .collect();
    let successes = rows.iter().filter(|r| r.succeeded()).count();
    SummaryRow {
        point: rows[0].point,
        sweep_value: rows[0].sweep_value,
        trials: rows.len(),
        successes,
        failures: rows.len() - successes,
        mean_delay_mse: (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64),
        median_delay_mse: if rows[0].scenario == Scenario::FoldBoundCheck { None } else { median(&all) },
        max_delay_mse: ok.iter().copied().reduce(f64::max),
    }
}

struct Recovered {
    row: TrialRow,
    instance: Option<Instance>,
    output: Option<AnnihilatorOutput>,
}

fn recovery_trial<T: Real>(
    cfg: &ExperimentConfig,
    point: usize,
    sweep_value: Option<f64>,
    trial: usize,
    lambda_fraction: Option<f64>,
    of: f64,
    snr_db: Option<f64>,
) -> Recovered {
    let mut row = TrialRow::blank(cfg, point, sweep_value, trial);
    let attempt = || -> Result<(Instance, Recovery, TrialRow), modfri::Error> {
        let inst = build_instance(cfg, trial, point, lambda_fraction, of)?;
        let mut row = row.clone();
        row.oversampling = Some(inst.design.oversampling);
        row.lambda = Some(inst.design.lambda);
        let clean = acquire::<T>(&inst.params, &inst.pulse, &inst.kernel, &inst.design, 0.0, 0)?;
        let record = match snr_db {
            Some(snr) => {
                let sigma = snr_to_sigma(folded_power(&clean), snr)?;
                acquire::<T>(&inst.params, &inst.pulse, &inst.kernel, &inst.design, sigma, inst.noise_seed)?
            }
            None => clean,
        };
        let rec = recover(&record.y_observed, &inst.kernel, &inst.design, &inst.pulse, cfg.l, cfg.variant)?;
        Ok((inst, rec, row))
    };
    match attempt() {
        Ok((inst, rec, filled)) => {
            row = filled;
            let out = rec.output;
            let errors = delay_mse(&inst.params.delays, &out.delays, cfg.td)
                .and_then(|mse| amplitude_errors(&inst.params, &out).map(|a| (mse, a)));
            match errors {
                Ok((mse, (amp_sq, amp_max))) => {
                    row.status = "ok";
                    row.delay_mse = Some(mse);
                    row.amp_mse = Some(amp_sq);
                    row.amp_max_error = Some(amp_max);
                }
                Err(e) => row.error = e.to_string(),
            }
            row.beta_bar = out.beta_bar;
            row.condition_ok = Some(rec.unwrap_condition_ok);
            row.fourier_residual = Some(rec.fourier_residual);
            row.fourier_condition = Some(rec.fourier_condition);
            row.amplitude_residual = Some(out.diagnostics.amplitude_residual);
            Recovered { row, instance: Some(inst), output: Some(out) }
        }
        Err(e) => {
            row.error = e.to_string();
            Recovered { row, instance: None, output: None }
        }
    }
}

fn run_recovery(
    cfg: &ExperimentConfig,
    point: usize,
    sweep_value: Option<f64>,
    trial: usize,
    lambda_fraction: Option<f64>,
    of: f64,
    snr_db: Option<f64>,
) -> Recovered {
    match cfg.precision {
        Precision::Double => recovery_trial::<f64>(cfg, point, sweep_value, trial, lambda_fraction, of, snr_db),
        Precision::Extended => recovery_trial::<Extended>(cfg, point, sweep_value, trial, lambda_fraction, of, snr_db),
    }
}

fn fold_bound_trial(cfg: &ExperimentConfig, trial: usize) -> TrialRow {
    let mut row = TrialRow::blank(cfg, 0, None, trial);
    let attempt = || -> Result<(u64, u64, f64), modfri::Error> {
        let mut rng = trial_rng(cfg.seed, trial);
        let params = draw_params(cfg, &mut rng);
        let pulse = cfg.pulse();
        let kernel = SosKernel::unit(cfg.k(), cfg.td, 2.0 * cfg.td + pulse.support())?;
        let f = fourier_coeffs(&params, &pulse, cfg.k())?;
        let t0 = pulse.support() + cfg.td;
        let grid: Vec<f64> = (0..=CROSSING_GRID)
            .map(|i| filtered_from_fourier(&f, &kernel, t0 + cfg.td * i as f64 / CROSSING_GRID as f64).re)
            .collect();
        let sup = grid.iter().fold(0.0f64, |m, y| m.max(y.abs()));
        let lambda = match (cfg.lambda_fraction, cfg.lambda_abs) {
            (Some(fr), _) => fr * sup,
            (None, Some(a)) => a,
            (None, None) => return Err(modfri::Error::InvalidParameter("no lambda given".into())),
        };
        Ok((fold_crossings(&grid, lambda) as u64, folding_bound(cfg.k(), sup, lambda)?, lambda))
    };
    match attempt() {
        Ok((count, bound, lambda)) => {
            row.lambda = Some(lambda);
            row.crossings = Some(count);
            row.crossing_bound = Some(bound);
            if count <= bound {
                row.status = "ok";
            } else {
                row.error = format!("{count} crossings exceed the bound {bound}");
            }
        }
        Err(e) => row.error = e.to_string(),
    }
    row
}

/// Dense-grid `y(t)` of the true and the recovered signal over one period
/// of the observation window.
fn reconstruction_grid(trial: usize, inst: &Instance, out: &AnnihilatorOutput) -> Result<Vec<GridRow>, modfri::Error> {
    let est = FriParams::new_unchecked_window(inst.params.td, out.delays.clone(), out.amps.clone(), inst.params.a_max);
    let k = inst.kernel.k_max();
    let f_true = fourier_coeffs(&inst.params, &inst.pulse, k)?;
    let f_est = fourier_coeffs(&est, &inst.pulse, k)?;
    let t0 = inst.pulse.support() + inst.params.td;
    Ok((0..GRID_POINTS)
        .map(|i| {
            let t = t0 + inst.params.td * i as f64 / GRID_POINTS as f64;
            GridRow {
                trial,
                t,
                y_true: filtered_from_fourier(&f_true, &inst.kernel, t).re,
                y_recovered: filtered_from_fourier(&f_est, &inst.kernel, t).re,
            }
        })
        .collect())
}

/// Sweep points as `(sweep value, λ fraction, OF, SNR)`.
fn sweep_points(cfg: &ExperimentConfig) -> Vec<(Option<f64>, Option<f64>, f64, Option<f64>)> {
    match cfg.scenario {
        Scenario::LambdaSweep => cfg
            .lambda_fractions
            .iter()
            .map(|&fr| (Some(fr), Some(fr), cfg.of.unwrap_or((FRAC_PI_2 / fr).max(1.0)), None))
            .collect(),
        Scenario::SnrSweep => cfg
            .snr_db
            .iter()
            .map(|&s| (Some(s), cfg.lambda_fraction, cfg.of.expect("validated"), Some(s)))
            .collect(),
        _ => vec![(None, cfg.lambda_fraction, cfg.of.unwrap_or(1.0), None)],
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    cfg.validate()?;
    let mut result = ExperimentResult::default();
    match cfg.scenario {
        Scenario::PrimeTable => {
            result.primes = prime_table(cfg.l_min, cfg.l_max)?
                .into_iter()
                .map(|p| PrimeRow { l: p.l, optimal: p.optimal_count, required: p.required_count, excess: p.excess })
                .collect();
        }
        Scenario::FoldBoundCheck => {
            let rows: Vec<TrialRow> = (0..cfg.trials).into_par_iter().map(|t| fold_bound_trial(cfg, t)).collect();
            result.summary.push(summarize(&rows));
            result.trials = rows;
        }
        Scenario::NoiselessRecovery | Scenario::LambdaSweep | Scenario::SnrSweep => {
            for (point, (value, fraction, of, snr)) in sweep_points(cfg).into_iter().enumerate() {
                let runs: Vec<Recovered> = (0..cfg.trials)
                    .into_par_iter()
                    .map(|t| run_recovery(cfg, point, value, t, fraction, of, snr))
                    .collect();
                let rows: Vec<TrialRow> = runs.iter().map(|r| r.row.clone()).collect();
                result.summary.push(summarize(&rows));
                if cfg.scenario == Scenario::NoiselessRecovery {
                    for run in &runs {
                        if let (Some(inst), Some(out)) = (&run.instance, &run.output) {
                            result.grid.extend(reconstruction_grid(run.row.trial, inst, out)?);
                        }
                    }
                }
                result.trials.extend(rows);
            }
        }
    }
    Ok(result)
}
