//! End-to-end runs: synthetic signal, calibrated noise, estimation, error
//! metrics and reports.
//!
//! The named presets reproduce the two simulation setups — a damped sine in
//! Brownian noise and `sin 2t` in white Gaussian noise — each as a pair of
//! estimators with integer and with extended `(κ, µ)`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::analysis::{continuous_moments, discrete_moments, theoretical_delay, NoiseMomentReport};
use crate::error::{Error, Result};
use crate::estimator::{estimate_series, read_columns, SampledSignal};
use crate::kernel::{optimal_xi, DiscreteKernel, EndpointRule, EstimatorConfig};
use crate::stochastic::{calibrate_snr, gen_path, mc_noise_error, snr_db, NoiseModel, RngSeed};

/// Clean signal `x` with a known `n`-th derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalSpec {
    /// `exp(−t/1.2) sin(6t + π)`.
    Expsin,
    /// `sin 2t`.
    Sin2t,
    /// `Σ coeffs[i] tⁱ`.
    Polynomial { coeffs: Vec<f64> },
    /// Headed CSV with columns `t, value, derivative`, the last holding the
    /// true `n`-th derivative used for the error metrics.
    Csv { path: PathBuf },
}

impl SignalSpec {
    pub fn value(&self, t: f64) -> Result<f64> {
        self.derivative(0, t)
    }

    /// `x^{(n)}(t)` for the analytic signals.
    pub fn derivative(&self, n: usize, t: f64) -> Result<f64> {
        match self {
            SignalSpec::Expsin => {
                // x = −Im(e^{zt}), z = −1/1.2 + 6i, so x⁽ⁿ⁾ = −|z|ⁿ e^{−t/1.2} sin(6t + n·arg z).
                let (re, im) = (-1.0 / 1.2, 6.0);
                let r = f64::hypot(re, im);
                let arg = im.atan2(re);
                Ok(-r.powi(n as i32) * (-t / 1.2).exp() * (6.0 * t + n as f64 * arg).sin())
            }
            SignalSpec::Sin2t => Ok(2f64.powi(n as i32) * (2.0 * t + n as f64 * PI / 2.0).sin()),
            SignalSpec::Polynomial { coeffs } => {
                let mut acc = 0.0;
                for (k, c) in coeffs.iter().enumerate().skip(n).rev() {
                    let falling = ((k - n + 1)..=k).fold(1.0, |a, j| a * j as f64);
                    acc = acc * t + c * falling;
                }
                Ok(acc)
            }
            SignalSpec::Csv { .. } => Err(Error::Experiment("CSV signals are tabulated, not analytic".into())),
        }
    }

    /// Samples and true `n`-th derivatives on `t_k = k·ts`.
    fn tabulate(&self, n: usize, ts: f64, samples: usize) -> Result<(SampledSignal, Vec<f64>)> {
        if let SignalSpec::Csv { path } = self {
            let file = std::fs::File::open(path)?;
            let cols = read_columns(file, 3)?;
            let signal = SampledSignal::read_csv(csv_pairs(&cols[0], &cols[1]).as_bytes())?;
            return Ok((signal, cols[2].clone()));
        }
        let signal = SampledSignal::from_fn(0.0, ts, samples, |t| self.value(t).unwrap_or(f64::NAN))?;
        let truth = (0..samples).map(|k| self.derivative(n, k as f64 * ts)).collect::<Result<_>>()?;
        Ok((signal, truth))
    }

    pub fn name(&self) -> String {
        match self {
            SignalSpec::Expsin => "expsin".into(),
            SignalSpec::Sin2t => "sin2t".into(),
            SignalSpec::Polynomial { .. } => "polynomial".into(),
            SignalSpec::Csv { path } => format!("csv:{}", path.display()),
        }
    }
}

fn csv_pairs(t: &[f64], v: &[f64]) -> String {
    let mut s = String::from("t,value\n");
    for (a, b) in t.iter().zip(v) {
        let _ = writeln!(s, "{a},{b}");
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub model: NoiseModel,
    /// Input SNR the noise is scaled to; `None` keeps the raw path.
    pub snr_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub signal: SignalSpec,
    pub ts: f64,
    pub samples: usize,
    pub noise: Option<NoiseSpec>,
    pub estimator: EstimatorConfig,
    /// `[t_lo, t_hi]` in seconds; `t_hi` is clamped to the last sample.
    pub metrics: (f64, f64),
    pub seed: RngSeed,
    /// Chebyshev multiplier for the reported band.
    pub gamma: f64,
}

/// Everything a run reports; serialized as the JSON run document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// `T_s Σ e(τᵢ)²` over the metrics window.
    pub total_error: f64,
    /// `10 log₁₀(Σ estimate² / Σ (noisy − noiseless estimate)²)` over the
    /// window; `None` without noise.
    pub snr_db: Option<f64>,
    pub delay_s: f64,
    /// Discrete Chebyshev band of the noise error at the window end.
    pub band_low: Option<f64>,
    pub band_high: Option<f64>,
    pub band_gamma: f64,
    pub config: EstimatorConfig,
    pub seed: RngSeed,
    pub signal: String,
    pub input_snr_db: Option<f64>,
    pub noise_scale: Option<f64>,
    pub metrics_window: (f64, f64),
    pub metrics_samples: usize,
    pub estimate_snr_definition: String,
}

/// Per-instant series of a run over the valid estimate range.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSeries {
    pub t: Vec<f64>,
    pub truth: Vec<f64>,
    pub noisy: Vec<f64>,
    pub noiseless: Vec<f64>,
}

impl RunSeries {
    /// Writes `t,truth,noisy_estimate,noiseless_estimate` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "truth", "noisy_estimate", "noiseless_estimate"])?;
        for k in 0..self.t.len() {
            w.write_record([
                self.t[k].to_string(),
                self.truth[k].to_string(),
                self.noisy[k].to_string(),
                self.noiseless[k].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: RunReport,
    pub series: RunSeries,
}

/// Delay of the configured estimator: `T(κ+n+1)/(µ+κ+2n+2)` or `Tξ`.
pub fn estimator_delay(cfg: &EstimatorConfig) -> f64 {
    if cfg.q == 0 {
        theoretical_delay(cfg.n, cfg.kappa, cfg.mu, cfg.window)
    } else {
        cfg.window * cfg.xi
    }
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunOutput> {
    let cfg = &spec.estimator;
    cfg.validate()?;
    if !(spec.gamma > 0.0) {
        return Err(Error::InvalidConfig(format!("gamma must be positive, got {}", spec.gamma)));
    }
    let (x, truth) = spec.signal.tabulate(cfg.n, spec.ts, spec.samples)?;
    if truth.len() != x.len() {
        return Err(Error::Experiment("derivative column length differs from the signal".into()));
    }
    if (cfg.sample_period() - x.ts).abs() > 1e-9 * x.ts {
        return Err(Error::InvalidConfig(format!(
            "T = {} over m = {} intervals does not match the sampling period {}",
            cfg.window, cfg.m, x.ts
        )));
    }

    let mut noise_scale = None;
    let mut noise_path = None;
    let y = match &spec.noise {
        None => x.clone(),
        Some(ns) => {
            let path = gen_path(&ns.model, x.ts, x.len(), spec.seed)?;
            let c = match ns.snr_db {
                Some(db) => calibrate_snr(&x, &path, db)?,
                None => 1.0,
            };
            let values = x.values.iter().zip(&path.values).map(|(a, b)| a + c * b).collect();
            noise_scale = Some(c);
            noise_path = Some(path);
            SampledSignal::new(x.t_start, x.ts, values)?
        }
    };

    let noisy = estimate_series(&y, cfg)?;
    let clean = estimate_series(&x, cfg)?;
    let first = ((noisy.t_first - x.t_start) / x.ts).round() as usize;
    let t_last = x.time(x.len() - 1);
    let (lo, hi) = (spec.metrics.0, spec.metrics.1.min(t_last));
    let eps = 1e-9 * x.ts;
    if lo < noisy.t_first - eps || noisy.estimates.is_empty() {
        return Err(Error::Experiment(format!(
            "metrics window starts at {lo} s, before the first estimate at {} s",
            noisy.t_first
        )));
    }
    if hi < lo {
        return Err(Error::Experiment(format!("empty metrics window [{lo}, {hi}]")));
    }

    let mut sum_e2 = 0.0;
    let mut sum_est2 = 0.0;
    let mut sum_noise2 = 0.0;
    let mut count = 0usize;
    let mut last_t0 = lo;
    for (j, (&est, &cl)) in noisy.estimates.iter().zip(&clean.estimates).enumerate() {
        let t = noisy.time(j);
        if t < lo - eps || t > hi + eps {
            continue;
        }
        let e = est - truth[first + j];
        sum_e2 += e * e;
        sum_est2 += est * est;
        sum_noise2 += (est - cl) * (est - cl);
        count += 1;
        last_t0 = t;
    }
    let snr = (spec.noise.is_some() && sum_noise2 > 0.0).then(|| 10.0 * (sum_est2 / sum_noise2).log10());

    let (band_low, band_high) = match (&spec.noise, noise_scale) {
        (Some(ns), Some(c)) => {
            let k = DiscreteKernel::from_config(cfg)?;
            let r = discrete_moments(&k, &ns.model, last_t0, spec.gamma)?;
            let half = c * (r.cheb_high - r.mean);
            (Some(c * r.mean - half), Some(c * r.mean + half))
        }
        _ => (None, None),
    };

    let series = RunSeries {
        t: noisy.times().collect(),
        truth: truth[first..first + noisy.estimates.len()].to_vec(),
        noisy: noisy.estimates.clone(),
        noiseless: clean.estimates.clone(),
    };
    let input_snr_db = match (noise_path, noise_scale) {
        (Some(p), Some(c)) => Some(snr_db(&x.values, &p.values, c)),
        _ => None,
    };
    let report = RunReport {
        total_error: x.ts * sum_e2,
        snr_db: snr,
        delay_s: estimator_delay(cfg),
        band_low,
        band_high,
        band_gamma: spec.gamma,
        config: *cfg,
        seed: spec.seed,
        signal: spec.signal.name(),
        input_snr_db,
        noise_scale,
        metrics_window: (lo, hi),
        metrics_samples: count,
        estimate_snr_definition: "10 log10(sum estimate^2 / sum (noisy - noiseless estimate)^2) over the metrics window"
            .into(),
    };
    Ok(RunOutput { report, series })
}

/// Two estimators run on the same data: integer and extended `(κ, µ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetPair {
    pub name: &'static str,
    pub integer: ExperimentSpec,
    pub extended: ExperimentSpec,
}

pub const PRESET_NAMES: [&str; 4] = ["table1-a", "table1-b", "table2-a", "table2-b"];

#[allow(clippy::too_many_arguments)]
fn causal(n: usize, q: usize, mu: f64, kappa: f64, m: usize, ts: f64, xi: Option<f64>, f: f64) -> Result<EstimatorConfig> {
    EstimatorConfig::affine(n, q, mu, kappa, crate::kernel::Direction::Causal, m as f64 * ts, m, xi)?
        .with_endpoint(EndpointRule::Regularized { factor: f })
}

/// The reference simulation setups. The affine presets use `ξ` rounded to
/// three decimals, the values their reference delays are computed from.
pub fn preset(name: &str, seed: RngSeed) -> Result<PresetPair> {
    let (table1, table2) = (1.0 / 200.0, PI / 100.0);
    let brownian = |est| ExperimentSpec {
        signal: SignalSpec::Expsin,
        ts: table1,
        samples: 1001,
        noise: Some(NoiseSpec { model: NoiseModel::Wiener { sigma2: 1.0 }, snr_db: Some(16.0) }),
        estimator: est,
        metrics: (50.0 * table1, 5.0),
        seed,
        gamma: 2.0,
    };
    let white = |est| ExperimentSpec {
        signal: SignalSpec::Sin2t,
        ts: table2,
        samples: 446,
        noise: Some(NoiseSpec { model: NoiseModel::WhiteGaussian { sigma2: 1.0 }, snr_db: Some(20.0) }),
        estimator: est,
        metrics: (38.0 * table2, 14.0),
        seed,
        gamma: 2.0,
    };
    let (name, integer, extended) = match name {
        "table1-a" => (
            "table1-a",
            brownian(causal(1, 0, 0.0, 0.0, 18, table1, None, 0.1)?),
            brownian(causal(1, 0, 0.0, -0.79, 30, table1, None, 0.1)?),
        ),
        "table1-b" => (
            "table1-b",
            brownian(causal(1, 1, 0.0, 0.0, 30, table1, Some(0.276), 0.1)?),
            brownian(causal(1, 1, -0.6, -0.78, 46, table1, Some(0.218), 0.1)?),
        ),
        "table2-a" => (
            "table2-a",
            white(causal(1, 0, 0.0, 0.0, 25, table2, None, 0.5)?),
            white(causal(1, 0, 0.0, -0.75, 25, table2, None, 0.5)?),
        ),
        "table2-b" => (
            "table2-b",
            white(causal(1, 1, 0.0, 0.0, 38, table2, Some(0.276), 0.5)?),
            white(causal(1, 1, -0.66, -0.7, 32, table2, Some(0.234), 0.5)?),
        ),
        other => {
            return Err(Error::Experiment(format!(
                "unknown preset '{other}'; expected one of {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(PresetPair { name, integer, extended })
}

/// Reports of both estimators of a preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub preset: String,
    pub integer: RunReport,
    pub extended: RunReport,
}

pub fn run_preset(pair: &PresetPair) -> Result<PairReport> {
    Ok(PairReport {
        preset: pair.name.to_string(),
        integer: run_experiment(&pair.integer)?.report,
        extended: run_experiment(&pair.extended)?.report,
    })
}

fn estimator_label(cfg: &EstimatorConfig, ts: f64) -> String {
    let m = (cfg.window / ts).round();
    let sign = if cfg.beta() < 0.0 { "-" } else { "" };
    if cfg.q == 0 {
        format!("D^{{{},{}}}_{{{sign}{m}Ts}}", cfg.mu, cfg.kappa)
    } else {
        format!("D^{{{},{}}}_{{{sign}{m}Ts,{},{}}}", cfg.mu, cfg.kappa, cfg.q + 1, cfg.xi)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.4}"))
}

/// Table layout of a pair: total error, SNR and delay side by side.
pub fn render_table(pair: &PairReport, ts: f64) -> String {
    let (a, b) = (&pair.integer, &pair.extended);
    let endpoint = match a.config.endpoint {
        EndpointRule::Regularized { factor } => format!("F = {factor}"),
        EndpointRule::Suppress => "endpoint suppressed".into(),
    };
    let rows = [
        (endpoint, estimator_label(&a.config, ts), estimator_label(&b.config, ts)),
        ("total error".into(), format!("{:.4}", a.total_error), format!("{:.4}", b.total_error)),
        ("SNR".into(), fmt_opt(a.snr_db), fmt_opt(b.snr_db)),
        ("Theoretical Delay".into(), format!("{:.4}", a.delay_s), format!("{:.4}", b.delay_s)),
    ];
    let w0 = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    let w1 = rows.iter().map(|r| r.1.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (c0, c1, c2) in rows {
        let _ = writeln!(out, "{c0:<w0$}  {c1:<w1$}  {c2}");
    }
    out
}

/// Monte-Carlo noise errors with closed-form and discrete Chebyshev bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub config: EstimatorConfig,
    pub noise: NoiseModel,
    pub t0: f64,
    pub trials: usize,
    pub seed: RngSeed,
    pub gamma: f64,
    pub empirical_mean: f64,
    pub empirical_variance: f64,
    pub stderr_mean: f64,
    pub stderr_variance: f64,
    /// Discrete band, the primary one.
    pub band_low: f64,
    pub band_high: f64,
    pub discrete: NoiseMomentReport,
    pub discrete_coverage: f64,
    pub continuous: Option<NoiseMomentReport>,
    pub continuous_coverage: Option<f64>,
    /// The Chebyshev guarantee `1 − 1/γ²`.
    pub guaranteed_coverage: f64,
}

pub fn mc_report(cfg: &EstimatorConfig, model: &NoiseModel, t0: f64, trials: usize, gamma: f64, seed: RngSeed) -> Result<McReport> {
    let k = DiscreteKernel::from_config(cfg)?;
    let discrete = discrete_moments(&k, model, t0, gamma)?;
    let continuous = match model {
        NoiseModel::Wiener { .. } | NoiseModel::Poisson { .. } => continuous_moments(cfg, model, gamma).ok(),
        _ => None,
    };
    let mc = mc_noise_error(cfg, model, t0, trials, seed)?;
    Ok(McReport {
        config: *cfg,
        noise: model.clone(),
        t0,
        trials,
        seed,
        gamma,
        empirical_mean: mc.mean,
        empirical_variance: mc.variance,
        stderr_mean: mc.stderr_mean(),
        stderr_variance: mc.stderr_var,
        band_low: discrete.cheb_low,
        band_high: discrete.cheb_high,
        discrete_coverage: mc.fraction_inside(discrete.cheb_low, discrete.cheb_high),
        continuous_coverage: continuous.map(|c| mc.fraction_inside(c.cheb_low, c.cheb_high)),
        discrete,
        continuous,
        guaranteed_coverage: 1.0 - 1.0 / (gamma * gamma),
    })
}

/// Parses a flat `key = value` experiment file.
///
/// ```text
/// # lines starting with '#' are comments
/// preset  = table1-a:extended   # optional starting point
/// signal  = expsin | sin2t | polynomial | csv
/// coeffs  = 0, 1, 0.5           # polynomial, ascending powers
/// path    = data.csv            # csv: t, value, derivative
/// ts = 0.005
/// samples = 1001
/// noise = none | white | wiener | poisson
/// sigma2 = 1                    # or nu = ...
/// mean_coeffs = 0.1, 0.2        # optional polynomial mean added to the noise
/// snr_db = 16
/// n, q, mu, kappa, beta, T, m, xi, F, endpoint = regularized | suppress
/// metrics = 0.25, 5
/// seed = 0
/// stream = 0
/// gamma = 2
/// ```
pub fn parse_spec(text: &str) -> Result<ExperimentSpec> {
    let mut kv: Vec<(String, String)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Experiment(format!("line {}: expected key = value", lineno + 1)))?;
        kv.push((k.trim().to_string(), v.trim().to_string()));
    }
    let base = match kv.iter().find(|(k, _)| k == "preset") {
        Some((_, v)) => Some(preset_variant(v, RngSeed::new(0))?),
        None => None,
    };
    apply_overrides(base, &kv)
}

/// `name` or `name:integer` / `name:extended` (default extended).
pub fn preset_variant(spec: &str, seed: RngSeed) -> Result<ExperimentSpec> {
    let (name, which) = spec.split_once(':').unwrap_or((spec, "extended"));
    let pair = preset(name, seed)?;
    match which {
        "integer" => Ok(pair.integer),
        "extended" => Ok(pair.extended),
        other => Err(Error::Experiment(format!("unknown preset variant '{other}'"))),
    }
}

fn num(key: &str, v: &str) -> Result<f64> {
    v.parse().map_err(|_| Error::Experiment(format!("{key}: '{v}' is not a number")))
}

fn int(key: &str, v: &str) -> Result<u64> {
    v.parse().map_err(|_| Error::Experiment(format!("{key}: '{v}' is not a nonnegative integer")))
}

fn list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|s| num(key, s.trim())).collect()
}

/// Applies `key = value` settings on top of `base` (or on empty defaults).
pub fn apply_overrides(base: Option<ExperimentSpec>, kv: &[(String, String)]) -> Result<ExperimentSpec> {
    let get = |key: &str| kv.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
    let base_est = base.as_ref().map(|b| b.estimator);

    let signal = match get("signal") {
        Some("expsin") => SignalSpec::Expsin,
        Some("sin2t") => SignalSpec::Sin2t,
        Some("polynomial") => SignalSpec::Polynomial {
            coeffs: list("coeffs", get("coeffs").ok_or_else(|| Error::Experiment("polynomial signal needs coeffs".into()))?)?,
        },
        Some("csv") => SignalSpec::Csv {
            path: get("path").ok_or_else(|| Error::Experiment("csv signal needs path".into()))?.into(),
        },
        Some(other) => return Err(Error::Experiment(format!("unknown signal '{other}'"))),
        None => base.as_ref().map(|b| b.signal.clone()).unwrap_or(SignalSpec::Expsin),
    };
    let default_ts = match signal {
        SignalSpec::Sin2t => PI / 100.0,
        _ => 1.0 / 200.0,
    };
    let ts = match get("ts") {
        Some(v) => num("ts", v)?,
        None => base.as_ref().map_or(default_ts, |b| b.ts),
    };
    let samples = match get("samples") {
        Some(v) => int("samples", v)? as usize,
        None => base.as_ref().map_or(1001, |b| b.samples),
    };

    let base_noise = base.as_ref().and_then(|b| b.noise.clone());
    let noise = match get("noise") {
        Some("none") => None,
        Some(kind) => {
            let intensity = |key: &str| -> Result<f64> { get(key).map_or(Ok(1.0), |v| num(key, v)) };
            let model = match kind {
                "white" => NoiseModel::WhiteGaussian { sigma2: intensity("sigma2")? },
                "wiener" => NoiseModel::Wiener { sigma2: intensity("sigma2")? },
                "poisson" => NoiseModel::Poisson { nu: intensity("nu")? },
                other => return Err(Error::Experiment(format!("unknown noise '{other}'"))),
            };
            Some(NoiseSpec { model, snr_db: None })
        }
        None => base_noise,
    };
    let noise = match noise {
        Some(mut ns) => {
            if let Some(v) = get("mean_coeffs") {
                ns.model = NoiseModel::PolyMean { coeffs: list("mean_coeffs", v)?, base: Box::new(ns.model) };
            }
            match get("snr_db") {
                Some("none") => ns.snr_db = None,
                Some(v) => ns.snr_db = Some(num("snr_db", v)?),
                None if get("noise").is_some() => ns.snr_db = None,
                None => {}
            }
            Some(ns)
        }
        None => None,
    };

    let n = match get("n") {
        Some(v) => int("n", v)? as usize,
        None => base_est.map_or(1, |e| e.n),
    };
    let q = match get("q") {
        Some(v) => int("q", v)? as usize,
        None => base_est.map_or(0, |e| e.q),
    };
    let mu = get("mu").map_or(Ok(base_est.map_or(0.0, |e| e.mu)), |v| num("mu", v))?;
    let kappa = get("kappa").map_or(Ok(base_est.map_or(0.0, |e| e.kappa)), |v| num("kappa", v))?;
    let direction = match get("beta") {
        Some(v) => crate::kernel::Direction::from_sign(
            v.parse().map_err(|_| Error::Experiment(format!("beta: '{v}' is not -1 or 1")))?,
        )?,
        None => base_est.map_or(crate::kernel::Direction::Causal, |e| e.direction),
    };
    let m = match (get("m"), get("T")) {
        (Some(v), _) => int("m", v)? as usize,
        (None, Some(t)) => (num("T", t)? / ts).round() as usize,
        (None, None) => base_est.map_or(20, |e| e.m),
    };
    let window = match get("T") {
        Some(v) => num("T", v)?,
        None => m as f64 * ts,
    };
    let xi = match get("xi") {
        Some(v) => Some(num("xi", v)?),
        None if get("mu").is_none() && get("kappa").is_none() && get("n").is_none() && get("q").is_none() => {
            base_est.filter(|e| e.q == q && q > 0).map(|e| e.xi)
        }
        None => None,
    };
    let endpoint = match (get("endpoint"), get("F")) {
        (Some("suppress"), _) => EndpointRule::Suppress,
        (Some("regularized") | None, Some(f)) => EndpointRule::Regularized { factor: num("F", f)? },
        (Some("regularized"), None) => EndpointRule::default(),
        (None, None) => base_est.map_or(EndpointRule::default(), |e| e.endpoint),
        (Some(other), _) => return Err(Error::Experiment(format!("unknown endpoint rule '{other}'"))),
    };
    let xi = if q == 0 { None } else { Some(xi.map_or_else(|| optimal_xi(n, q, mu, kappa), Ok)?) };
    let estimator = EstimatorConfig::affine(n, q, mu, kappa, direction, window, m, xi)?.with_endpoint(endpoint)?;

    let metrics = match get("metrics") {
        Some(v) => {
            let l = list("metrics", v)?;
            if l.len() != 2 {
                return Err(Error::Experiment("metrics needs two values: t_lo, t_hi".into()));
            }
            (l[0], l[1])
        }
        None => base
            .as_ref()
            .map_or((window, f64::INFINITY), |b| b.metrics),
    };
    let seed = RngSeed {
        seed: get("seed").map_or(Ok(base.as_ref().map_or(0, |b| b.seed.seed)), |v| int("seed", v))?,
        stream: get("stream").map_or(Ok(base.as_ref().map_or(0, |b| b.seed.stream)), |v| int("stream", v))?,
    };
    let gamma = get("gamma").map_or(Ok(base.as_ref().map_or(2.0, |b| b.gamma)), |v| num("gamma", v))?;
    Ok(ExperimentSpec { signal, ts, samples, noise, estimator, metrics, seed, gamma })
}
