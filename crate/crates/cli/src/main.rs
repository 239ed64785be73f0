use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use modfri::identifiability::prime_table;
use modfri::recovery::delay_mse;
use modfri::sampler::{folded_power, snr_to_sigma};
use modfri::unwrap::offset_from_truth;
use modfri::{acquire, itoh_unwrap, modulo_fold, recover, AfVariant, Extended, Precision, Pulse, Real, SampleRecord};
use modfri_cli::experiment::{build_instance, PrimeRow};
use modfri_cli::output::{sibling, write_rows, write_rows_to};
use modfri_cli::{run_experiment, ExperimentConfig, Format, HarnessError, Scenario};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "modfri", version, about = "Modulo sampling and recovery of FRI signals")]
struct Cli {
    /// Experiment config (TOML, flat key = value).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one instance from the config and write its sample record.
    Synth {
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Refold the true samples of a record, optionally at a new λ.
    Fold {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Unwrap the observed samples of a record.
    Unwrap {
        #[arg(long)]
        input: PathBuf,
    },
    /// Recover delays and amplitudes from a record.
    Recover {
        #[arg(long)]
        input: PathBuf,
    },
    /// Run the scenario described by the config.
    Experiment,
    /// Prime sample-count plans for a range of L.
    PrimeTable {
        #[arg(long)]
        l_min: Option<usize>,
        #[arg(long)]
        l_max: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("modfri: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, HarnessError> {
    let path = cli.config.as_ref().ok_or_else(|| HarnessError::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, HarnessError> {
    Ok(match out {
        Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn read_record(path: &Path) -> Result<(SampleRecord, std::collections::BTreeMap<String, String>), HarnessError> {
    let file = File::open(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    SampleRecord::read_csv(BufReader::new(file)).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

fn run(cli: &Cli) -> Result<(), HarnessError> {
    match &cli.command {
        Command::Synth { trial } => synth(cli, *trial),
        Command::Fold { input, lambda } => fold(cli, input, *lambda),
        Command::Unwrap { input } => unwrap(cli, input),
        Command::Recover { input } => recover_cmd(cli, input),
        Command::Experiment => experiment(cli),
        Command::PrimeTable { l_min, l_max } => primes(cli, *l_min, *l_max),
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn split(s: &str) -> Result<Vec<f64>, HarnessError> {
    s.split(';')
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<f64>().map_err(|e| HarnessError::Config(format!("bad number {x}: {e}"))))
        .collect()
}

#[derive(Serialize)]
struct SampleRow {
    n: i64,
    t: f64,
    y_true: f64,
    y_folded: f64,
    y_observed: f64,
}

fn write_record(cli: &Cli, rec: &SampleRecord, meta: &[(String, String)]) -> Result<(), HarnessError> {
    let w = sink(cli.out.as_deref())?;
    match cli.format {
        Format::Csv => {
            let mut w = w;
            rec.write_csv(&mut w, meta)?;
            w.flush()?;
        }
        Format::Jsonl => {
            let rows: Vec<SampleRow> = rec
                .design
                .indices()
                .enumerate()
                .map(|(i, n)| SampleRow {
                    n,
                    t: n as f64 * rec.design.ts,
                    y_true: rec.y_true[i],
                    y_folded: rec.y_folded[i],
                    y_observed: rec.y_observed[i],
                })
                .collect();
            write_rows(&rows, w, Format::Jsonl)?;
        }
    }
    Ok(())
}

fn synth(cli: &Cli, trial: usize) -> Result<(), HarnessError> {
    let cfg = load_config(cli)?;
    if cfg.scenario == Scenario::PrimeTable {
        return Err(HarnessError::Config("prime-table configs describe no signal".into()));
    }
    let fraction = cfg.lambda_fraction.or_else(|| cfg.lambda_fractions.first().copied());
    let of = cfg.of.or_else(|| fraction.map(|f| (std::f64::consts::FRAC_PI_2 / f).max(1.0))).unwrap_or(1.0);
    let inst = build_instance(&cfg, trial, 0, fraction, of)?;
    let clean = acquire::<f64>(&inst.params, &inst.pulse, &inst.kernel, &inst.design, 0.0, 0)?;
    let rec = match cfg.snr_db.first() {
        Some(&snr) => {
            let sigma = snr_to_sigma(folded_power(&clean), snr)?;
            acquire::<f64>(&inst.params, &inst.pulse, &inst.kernel, &inst.design, sigma, inst.noise_seed)?
        }
        None => clean,
    };
    let mut meta = vec![
        ("l".to_string(), cfg.l.to_string()),
        ("pulse".to_string(), pulse_name(&inst.pulse).to_string()),
        ("delays".to_string(), join(&inst.params.delays)),
        ("amps".to_string(), join(&inst.params.amps)),
        ("seed".to_string(), cfg.seed.to_string()),
        ("trial".to_string(), trial.to_string()),
    ];
    if let Pulse::BSpline3 { knot } = inst.pulse {
        meta.push(("knot".to_string(), knot.to_string()));
    }
    write_record(cli, &rec, &meta)
}

fn pulse_name(p: &Pulse) -> &'static str {
    match p {
        Pulse::Dirac => "dirac",
        Pulse::BSpline3 { .. } => "bspline3",
        Pulse::Tabulated { .. } => "tabulated",
    }
}

fn fold(cli: &Cli, input: &Path, lambda: Option<f64>) -> Result<(), HarnessError> {
    let (mut rec, meta) = read_record(input)?;
    if let Some(l) = lambda {
        if !(l > 0.0) {
            return Err(HarnessError::Config(format!("lambda must be positive, got {l}")));
        }
        rec.design.lambda = l;
    }
    let lam = rec.design.lambda;
    let noise: Vec<f64> = rec.y_observed.iter().zip(&rec.y_folded).map(|(o, f)| o - f).collect();
    rec.y_folded = rec.y_true.iter().map(|&y| modulo_fold(y, lam)).collect();
    rec.y_observed = rec.y_folded.iter().zip(&noise).map(|(f, n)| f + n).collect();
    rec.wraps = rec.y_true.iter().zip(&rec.y_folded).map(|(t, f)| ((t - f) / (2.0 * lam)).round() as i64).collect();
    let known = ["td", "k", "samples_per_period", "ts", "n_min", "n_max", "lambda", "pulse_support", "noise_sigma", "precision"];
    let extra: Vec<(String, String)> = meta.into_iter().filter(|(k, _)| !known.contains(&k.as_str())).collect();
    write_record(cli, &rec, &extra)
}

#[derive(Serialize)]
struct UnwrapRow {
    n: i64,
    t: f64,
    y_observed: f64,
    y_unwrapped: f64,
    y_true: f64,
    offset: f64,
}

fn unwrap(cli: &Cli, input: &Path) -> Result<(), HarnessError> {
    let (rec, _) = read_record(input)?;
    let u = itoh_unwrap(&rec.y_observed, rec.design.lambda)?;
    let (beta, spread) = offset_from_truth(&u.y_bar, &rec.y_true);
    let rows: Vec<UnwrapRow> = rec
        .design
        .indices()
        .enumerate()
        .map(|(i, n)| UnwrapRow {
            n,
            t: n as f64 * rec.design.ts,
            y_observed: rec.y_observed[i],
            y_unwrapped: u.y_bar[i],
            y_true: rec.y_true[i],
            offset: u.y_bar[i] - rec.y_true[i],
        })
        .collect();
    write_rows(&rows, sink(cli.out.as_deref())?, cli.format)?;
    eprintln!(
        "condition_ok={} offset={beta} ({} x 2λ) spread={spread:e}",
        u.condition_ok,
        beta / (2.0 * rec.design.lambda)
    );
    Ok(())
}

#[derive(Serialize)]
struct RecoverRow {
    variant: &'static str,
    precision: &'static str,
    l: usize,
    beta_bar: Option<f64>,
    delays: String,
    amps: String,
    delay_mse: Option<f64>,
    condition_ok: bool,
    fourier_residual: f64,
    fourier_condition: f64,
    singular_ratio: Option<f64>,
    eigen_gap: Option<f64>,
    root_modulus_error: f64,
    amplitude_condition: f64,
    amplitude_residual: f64,
}

fn recover_with<T: Real>(
    rec: &SampleRecord,
    pulse: &Pulse,
    l: usize,
    variant: AfVariant,
) -> Result<modfri::Recovery, HarnessError> {
    let y: Vec<T> = rec.y_observed.iter().map(|&v| T::lift(v)).collect();
    let kernel = rec.design.unit_kernel();
    Ok(recover(&y, &kernel, &rec.design, pulse, l, variant)?)
}

fn recover_cmd(cli: &Cli, input: &Path) -> Result<(), HarnessError> {
    let (rec, meta) = read_record(input)?;
    let cfg = cli.config.as_ref().map(|_| load_config(cli)).transpose()?;
    let meta_num = |key: &str| -> Result<Option<f64>, HarnessError> {
        meta.get(key)
            .map(|v| v.parse::<f64>().map_err(|e| HarnessError::Config(format!("metadata {key}: {e}"))))
            .transpose()
    };
    let (l, pulse, variant, precision) = match &cfg {
        Some(c) => (c.l, c.pulse(), c.variant, c.precision),
        None => {
            let l = meta_num("l")?.ok_or_else(|| HarnessError::Config("record has no l; pass --config".into()))? as usize;
            let pulse = match meta.get("pulse").map(String::as_str) {
                Some("bspline3") => Pulse::bspline3(
                    meta_num("knot")?.ok_or_else(|| HarnessError::Config("record has no knot".into()))?,
                )?,
                Some("dirac") | None => Pulse::Dirac,
                Some(other) => return Err(HarnessError::Config(format!("unsupported pulse {other}"))),
            };
            (l, pulse, AfVariant::Asaf, Precision::Double)
        }
    };
    if (pulse.support() - rec.design.pulse_support).abs() > 1e-12 {
        return Err(HarnessError::Config("pulse support disagrees with the record".into()));
    }
    let r = match precision {
        Precision::Double => recover_with::<f64>(&rec, &pulse, l, variant)?,
        Precision::Extended => recover_with::<Extended>(&rec, &pulse, l, variant)?,
    };
    let truth = meta.get("delays").map(|d| split(d)).transpose()?;
    let out = &r.output;
    let row = RecoverRow {
        variant: variant.name(),
        precision: match precision {
            Precision::Double => <f64 as Real>::NAME,
            Precision::Extended => <Extended as Real>::NAME,
        },
        l,
        beta_bar: out.beta_bar,
        delays: join(&out.delays),
        amps: join(&out.amps),
        delay_mse: truth.map(|t| delay_mse(&t, &out.delays, rec.design.td)).transpose()?,
        condition_ok: r.unwrap_condition_ok,
        fourier_residual: r.fourier_residual,
        fourier_condition: r.fourier_condition,
        singular_ratio: out.diagnostics.singular_ratio,
        eigen_gap: out.diagnostics.eigen_gap,
        root_modulus_error: out.diagnostics.root_modulus_error,
        amplitude_condition: out.diagnostics.amplitude_condition,
        amplitude_residual: out.diagnostics.amplitude_residual,
    };
    write_rows(&[row], sink(cli.out.as_deref())?, cli.format)
}

fn experiment(cli: &Cli) -> Result<(), HarnessError> {
    let cfg = load_config(cli)?;
    let result = run_experiment(&cfg)?;
    let out = cli.out.clone().or_else(|| cfg.output.clone());
    if cfg.scenario == Scenario::PrimeTable {
        return match &out {
            Some(p) => write_rows_to(&result.primes, p, cli.format),
            None => write_rows(&result.primes, io::stdout().lock(), cli.format),
        };
    }
    match &out {
        Some(p) => {
            write_rows_to(&result.trials, p, cli.format)?;
            write_rows_to(&result.summary, &sibling(p, "summary", cli.format), cli.format)?;
            if !result.grid.is_empty() {
                write_rows_to(&result.grid, &sibling(p, "grid", cli.format), cli.format)?;
            }
        }
        None => write_rows(&result.trials, io::stdout().lock(), cli.format)?,
    }
    for s in &result.summary {
        eprintln!(
            "point {} value {:?}: {}/{} ok, median delay MSE {:?}",
            s.point, s.sweep_value, s.successes, s.trials, s.median_delay_mse
        );
    }
    if result.all_failed() {
        return Err(HarnessError::Experiment("every trial failed".into()));
    }
    Ok(())
}

fn primes(cli: &Cli, l_min: Option<usize>, l_max: Option<usize>) -> Result<(), HarnessError> {
    let (mut lo, mut hi) = (2, 200);
    if cli.config.is_some() {
        let cfg = load_config(cli)?;
        lo = cfg.l_min;
        hi = cfg.l_max;
    }
    let lo = l_min.unwrap_or(lo);
    let hi = l_max.unwrap_or(hi);
    if lo < 1 || lo > hi {
        return Err(HarnessError::Config(format!("need 1 <= l-min <= l-max, got {lo}..{hi}")));
    }
    let rows: Vec<PrimeRow> = prime_table(lo, hi)?
        .into_iter()
        .map(|p| PrimeRow { l: p.l, optimal: p.optimal_count, required: p.required_count, excess: p.excess })
        .collect();
    write_rows(&rows, sink(cli.out.as_deref())?, cli.format)
}
