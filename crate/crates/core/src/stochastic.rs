//! Noise processes, SNR calibration and Monte-Carlo noise errors.
//!
//! Every random draw comes from a ChaCha stream selected by [`RngSeed`], so a
//! `(seed, stream)` pair reproduces a path bit for bit and Monte-Carlo trial
//! `k` always uses stream `stream + k`, whatever the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{estimate_at, SampledSignal};
use crate::kernel::{DiscreteKernel, EstimatorConfig};

/// Noise law, with the moment functions the error calculus needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// iid `N(0, σ²)` samples.
    WhiteGaussian { sigma2: f64 },
    /// `W(0) = 0`, `Cov = σ² min(s, t)`.
    Wiener { sigma2: f64 },
    /// Counting process, `E = νt`, `Cov = ν min(s, t)`.
    Poisson { nu: f64 },
    /// `base` plus the deterministic polynomial `Σ coeffs[i]·tⁱ`.
    PolyMean { coeffs: Vec<f64>, base: Box<NoiseModel> },
}

/// Samples closer than this (relative) count as one instant for white noise.
const SAME_INSTANT: f64 = 1e-9;

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be nonnegative, got {v}")))
            }
        };
        match self {
            NoiseModel::WhiteGaussian { sigma2 } | NoiseModel::Wiener { sigma2 } => check("sigma2", *sigma2),
            NoiseModel::Poisson { nu } => check("nu", *nu),
            NoiseModel::PolyMean { coeffs, base } => {
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidConfig("polynomial mean coefficients must be finite".into()));
                }
                base.validate()
            }
        }
    }

    pub fn mean(&self, t: f64) -> f64 {
        match self {
            NoiseModel::WhiteGaussian { .. } | NoiseModel::Wiener { .. } => 0.0,
            NoiseModel::Poisson { nu } => nu * t,
            NoiseModel::PolyMean { coeffs, base } => base.mean(t) + poly(coeffs, t),
        }
    }

    pub fn variance(&self, t: f64) -> f64 {
        self.covariance(t, t)
    }

    pub fn covariance(&self, s: f64, t: f64) -> f64 {
        match self {
            NoiseModel::WhiteGaussian { sigma2 } => {
                if (s - t).abs() <= SAME_INSTANT * s.abs().max(t.abs()).max(1.0) {
                    *sigma2
                } else {
                    0.0
                }
            }
            NoiseModel::Wiener { sigma2 } => sigma2 * s.min(t),
            NoiseModel::Poisson { nu } => nu * s.min(t),
            NoiseModel::PolyMean { base, .. } => base.covariance(s, t),
        }
    }
}

fn poly(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

/// Selects one independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        RngSeed { seed, stream: 0 }
    }

    /// The seed for trial `k` of a batch starting at this stream.
    pub fn trial(self, k: u64) -> Self {
        RngSeed { seed: self.seed, stream: self.stream.wrapping_add(k) }
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Samples `count` values of the process at `t_k = k·ts`.
pub fn gen_path(model: &NoiseModel, ts: f64, count: usize, seed: RngSeed) -> Result<SampledSignal> {
    model.validate()?;
    if count == 0 {
        return Err(Error::SignalTooShort { needed: 1, have: 0 });
    }
    let mut rng = seed.rng();
    let values = sample(model, ts, count, &mut rng)?;
    SampledSignal::new(0.0, ts, values)
}

fn sample(model: &NoiseModel, ts: f64, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let bad = |e: &dyn std::fmt::Display| Error::InvalidConfig(e.to_string());
    Ok(match model {
        NoiseModel::WhiteGaussian { sigma2 } => {
            if *sigma2 == 0.0 {
                vec![0.0; count]
            } else {
                let d = Normal::new(0.0, sigma2.sqrt()).map_err(|e| bad(&e))?;
                (0..count).map(|_| d.sample(rng)).collect()
            }
        }
        NoiseModel::Wiener { sigma2 } => {
            if *sigma2 == 0.0 {
                vec![0.0; count]
            } else {
                let d = Normal::new(0.0, (sigma2 * ts).sqrt()).map_err(|e| bad(&e))?;
                cumulative(count, || d.sample(rng))
            }
        }
        NoiseModel::Poisson { nu } => {
            if *nu == 0.0 {
                vec![0.0; count]
            } else {
                let d = Poisson::new(nu * ts).map_err(|e| bad(&e))?;
                cumulative(count, || d.sample(rng))
            }
        }
        NoiseModel::PolyMean { coeffs, base } => {
            let mut v = sample(base, ts, count, rng)?;
            for (k, x) in v.iter_mut().enumerate() {
                *x += poly(coeffs, k as f64 * ts);
            }
            v
        }
    })
}

/// `[0, d₁, d₁+d₂, …]` with `count` entries.
fn cumulative(count: usize, mut draw: impl FnMut() -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut acc = 0.0;
    out.push(acc);
    for _ in 1..count {
        acc += draw();
        out.push(acc);
    }
    out
}

/// `10 log₁₀(Σ(x + Cϖ)² / Σ(Cϖ)²)`.
pub fn snr_db(x: &[f64], noise: &[f64], scale: f64) -> f64 {
    let num: f64 = x.iter().zip(noise).map(|(a, b)| (a + scale * b).powi(2)).sum();
    let den: f64 = noise.iter().map(|b| (scale * b).powi(2)).sum();
    10.0 * (num / den).log10()
}

/// Noise scale `C > 0` at which [`snr_db`] equals `target_db`.
///
/// With `u = 1/C` the SNR condition is the quadratic
/// `u²Σx² + 2uΣxϖ + (1 − r)Σϖ² = 0`, `r = 10^{dB/10}`, so it is solved in
/// closed form. The largest positive root is taken: on that branch the SNR
/// increases with `u`, i.e. a larger target gives a smaller `C`.
pub fn calibrate_snr(x: &SampledSignal, noise: &SampledSignal, target_db: f64) -> Result<f64> {
    if x.len() != noise.len() || (x.ts - noise.ts).abs() > 1e-12 * x.ts {
        return Err(Error::Misaligned(format!(
            "signal ({} samples, ts={}) and noise ({} samples, ts={}) differ",
            x.len(),
            x.ts,
            noise.len(),
            noise.ts
        )));
    }
    let sxx: f64 = x.values.iter().map(|v| v * v).sum();
    let sxw: f64 = x.values.iter().zip(&noise.values).map(|(a, b)| a * b).sum();
    let sww: f64 = noise.values.iter().map(|v| v * v).sum();
    if sww == 0.0 {
        return Err(Error::InvalidConfig("noise path is identically zero".into()));
    }
    let infeasible = Error::InfeasibleSnr { target_db };
    if !target_db.is_finite() || sxx == 0.0 {
        return Err(infeasible);
    }
    let r = 10f64.powf(target_db / 10.0);
    let c = sww * (1.0 - r);
    let disc = sxw * sxw - sxx * c;
    if disc < 0.0 {
        return Err(infeasible);
    }
    // Larger root of a u² + 2b u + c, written to avoid cancellation.
    let u = if sxw <= 0.0 {
        (-sxw + disc.sqrt()) / sxx
    } else {
        let other = -sxw - disc.sqrt();
        if other == 0.0 {
            return Err(infeasible);
        }
        c / other
    };
    if !(u > 0.0 && u.is_finite()) {
        return Err(infeasible);
    }
    Ok(1.0 / u)
}

/// Empirical law of the discrete noise error at `t₀` over many trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub samples: Vec<f64>,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Standard error of `variance`.
    pub stderr_var: f64,
}

impl McResult {
    pub fn from_samples(samples: Vec<f64>) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let m2 = samples.iter().map(|e| (e - mean).powi(2)).sum::<f64>();
        let m4 = samples.iter().map(|e| (e - mean).powi(4)).sum::<f64>() / n;
        let variance = m2 / (n - 1.0);
        let s4 = variance * variance;
        let stderr_var = ((m4 - s4 * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt();
        McResult { samples, mean, variance, stderr_var }
    }

    /// Standard error of `mean`.
    pub fn stderr_mean(&self) -> f64 {
        (self.variance / self.samples.len() as f64).sqrt()
    }

    /// Fraction of samples strictly inside `(low, high)`.
    pub fn fraction_inside(&self, low: f64, high: f64) -> f64 {
        let inside = self.samples.iter().filter(|&&e| e > low && e < high).count();
        inside as f64 / self.samples.len() as f64
    }
}

/// Sample index of `t₀` on the `k·ts` grid. Paths start at `t = 0`, so a
/// causal window needs `t₀ ≥ T`.
pub fn t0_index(cfg: &EstimatorConfig, t0: f64) -> Result<usize> {
    let ts = cfg.sample_period();
    let idx = (t0 / ts).round();
    if !(idx >= 0.0) || (idx * ts - t0).abs() > 1e-6 * ts {
        return Err(Error::OutOfRange(format!("t0 = {t0} is not a sample instant of the grid ts = {ts}")));
    }
    if cfg.beta() < 0.0 && (idx as usize) < cfg.m {
        return Err(Error::OutOfRange(format!(
            "causal window at t0 = {t0} reaches before t = 0 (need t0 >= T = {})",
            cfg.window
        )));
    }
    Ok(idx as usize)
}

/// Noise-only estimates `e = Σ tapᵢ ϖ(t₀ + βT i/m)` over `trials` independent paths.
pub fn mc_noise_error(cfg: &EstimatorConfig, model: &NoiseModel, t0: f64, trials: usize, seed: RngSeed) -> Result<McResult> {
    if trials < 100 {
        return Err(Error::InvalidConfig(format!("need at least 100 trials, got {trials}")));
    }
    model.validate()?;
    let k = DiscreteKernel::from_config(cfg)?;
    mc_with_kernel(&k, model, t0, trials, seed)
}

/// As [`mc_noise_error`] for an already-built kernel.
pub fn mc_with_kernel(k: &DiscreteKernel, model: &NoiseModel, t0: f64, trials: usize, seed: RngSeed) -> Result<McResult> {
    let cfg = &k.config;
    let idx = t0_index(cfg, t0)?;
    let len = if cfg.beta() < 0.0 { idx + 1 } else { idx + cfg.m + 1 };
    let ts = cfg.sample_period();
    let samples = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let path = gen_path(model, ts, len, seed.trial(trial))?;
            estimate_at(&path, k, idx)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(McResult::from_samples(samples))
}
