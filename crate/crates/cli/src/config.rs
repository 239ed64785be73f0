//! Flat `key = value` experiment description, read from TOML.

use std::path::{Path, PathBuf};

use modfri::{AfVariant, Precision, Pulse};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    NoiselessRecovery,
    LambdaSweep,
    SnrSweep,
    PrimeTable,
    FoldBoundCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PulseChoice {
    #[default]
    Dirac,
    Bspline3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmplitudeMode {
    #[default]
    Unit,
    /// Uniform on `[0.5, a_max]`.
    RandomPositive,
}

fn default_td() -> f64 {
    1.0
}

fn default_a_max() -> f64 {
    1.0
}

fn default_trials() -> usize {
    1
}

fn default_variant() -> AfVariant {
    AfVariant::Asaf
}

fn default_l_min() -> usize {
    2
}

fn default_l_max() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub l: usize,
    #[serde(default = "default_td")]
    pub td: f64,
    #[serde(default)]
    pub pulse: PulseChoice,
    /// B-spline knot spacing; `Td/16` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knot: Option<f64>,
    #[serde(default)]
    pub amplitude_mode: AmplitudeMode,
    #[serde(default = "default_a_max")]
    pub a_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_abs: Option<f64>,
    /// `λ` as a fraction of the dense-grid sup of `y`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_fraction: Option<f64>,
    /// Fixed oversampling factor. For a λ-sweep without it, each point uses
    /// `(π/2) / fraction`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub of: Option<f64>,
    /// Kernel bandwidth; `L` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Samples used for recovery; `2K + 1` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Bump samples per `Td` to the smallest prime at or above the OF grid.
    #[serde(default)]
    pub prime_grid: bool,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snr_db: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lambda_fractions: Vec<f64>,
    #[serde(default = "default_variant")]
    pub variant: AfVariant,
    #[serde(default)]
    pub precision: Precision,
    #[serde(default = "default_l_min")]
    pub l_min: usize,
    #[serde(default = "default_l_max")]
    pub l_max: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn dump(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn k(&self) -> usize {
        self.k.unwrap_or(self.l)
    }

    pub fn samples(&self) -> usize {
        self.samples.unwrap_or(2 * self.k() + 1)
    }

    pub fn pulse(&self) -> Pulse {
        match self.pulse {
            PulseChoice::Dirac => Pulse::Dirac,
            PulseChoice::Bspline3 => Pulse::BSpline3 { knot: self.knot.unwrap_or(self.td / 16.0) },
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        if self.scenario == Scenario::PrimeTable {
            if self.l_min < 1 || self.l_min > self.l_max {
                return bad(format!("need 1 <= l_min <= l_max, got {}..{}", self.l_min, self.l_max));
            }
            return Ok(());
        }
        if self.l < 1 {
            return bad("l must be at least 1".into());
        }
        if !(self.td > 0.0 && self.td.is_finite()) {
            return bad(format!("td must be positive, got {}", self.td));
        }
        if !(self.a_max > 0.0) {
            return bad(format!("a_max must be positive, got {}", self.a_max));
        }
        if self.amplitude_mode == AmplitudeMode::RandomPositive && self.a_max < 0.5 {
            return bad("random-positive amplitudes need a_max >= 0.5".into());
        }
        if let Some(knot) = self.knot {
            if !(knot > 0.0) {
                return bad(format!("knot must be positive, got {knot}"));
            }
            if self.pulse == PulseChoice::Dirac {
                return bad("knot is only meaningful for pulse = \"bspline3\"".into());
            }
        }
        if self.k() < self.l {
            return bad(format!("k = {} is below l = {}", self.k(), self.l));
        }
        if self.samples() < 2 * self.k() + 1 {
            return bad(format!("samples = {} is below 2K+1 = {}", self.samples(), 2 * self.k() + 1));
        }
        if let Some(of) = self.of {
            if !(of >= 1.0 && of.is_finite()) {
                return bad(format!("of must be at least 1, got {of}"));
            }
        }
        let check_fraction = |f: f64| -> Result<(), HarnessError> {
            if f > 0.0 && f <= 1.0 {
                Ok(())
            } else {
                Err(HarnessError::Config(format!("lambda fraction must lie in (0, 1], got {f}")))
            }
        };
        match (self.lambda_abs, self.lambda_fraction) {
            (Some(_), Some(_)) => return bad("set only one of lambda_abs and lambda_fraction".into()),
            (Some(a), None) if !(a > 0.0 && a.is_finite()) => return bad(format!("lambda_abs must be positive, got {a}")),
            (_, Some(f)) => check_fraction(f)?,
            _ => {}
        }
        for &f in &self.lambda_fractions {
            check_fraction(f)?;
        }
        for &s in &self.snr_db {
            if !s.is_finite() {
                return bad("snr_db values must be finite".into());
            }
        }
        let has_lambda = self.lambda_abs.is_some() || self.lambda_fraction.is_some();
        match self.scenario {
            Scenario::LambdaSweep => {
                if self.lambda_fractions.is_empty() {
                    return bad("lambda-sweep needs lambda_fractions".into());
                }
                if has_lambda {
                    return bad("lambda-sweep takes lambda_fractions, not lambda_abs or lambda_fraction".into());
                }
            }
            Scenario::SnrSweep => {
                if self.snr_db.is_empty() {
                    return bad("snr-sweep needs snr_db".into());
                }
            }
            _ => {}
        }
        if self.scenario != Scenario::LambdaSweep && !has_lambda {
            return bad("set lambda_abs or lambda_fraction".into());
        }
        if matches!(self.scenario, Scenario::NoiselessRecovery | Scenario::SnrSweep) && self.of.is_none() {
            return bad("of is required for this scenario".into());
        }
        Ok(())
    }
}
