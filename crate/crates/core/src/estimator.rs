//! Applying discrete kernels to sampled data.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{DiscreteKernel, EstimatorConfig};

/// Uniformly sampled observation; sample `k` is taken at `t_start + k·ts`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSignal {
    pub t_start: f64,
    pub ts: f64,
    pub values: Vec<f64>,
}

impl SampledSignal {
    pub fn new(t_start: f64, ts: f64, values: Vec<f64>) -> Result<Self> {
        if !(ts > 0.0 && ts.is_finite()) {
            return Err(Error::InvalidConfig(format!("sampling period must be positive, got {ts}")));
        }
        if values.is_empty() {
            return Err(Error::SignalTooShort { needed: 1, have: 0 });
        }
        Ok(SampledSignal { t_start, ts, values })
    }

    /// Samples `f` at `len` instants starting from `t_start`.
    pub fn from_fn(t_start: f64, ts: f64, len: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..len).map(|k| f(t_start + k as f64 * ts)).collect();
        Self::new(t_start, ts, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.ts
    }

    /// Writes `t,value` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "value"])?;
        for (k, v) in self.values.iter().enumerate() {
            w.write_record([self.time(k).to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a headed CSV whose first two columns are time and value. The
    /// times must be uniformly spaced.
    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let columns = read_columns(input, 2)?;
        let (t, v) = (&columns[0], &columns[1]);
        if t.len() < 2 {
            return Err(Error::SignalTooShort { needed: 2, have: t.len() });
        }
        let ts = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
        for (k, tk) in t.iter().enumerate() {
            if (tk - (t[0] + k as f64 * ts)).abs() > 1e-6 * ts {
                return Err(Error::InvalidConfig(format!("sample times are not uniform at row {}", k + 1)));
            }
        }
        Self::new(t[0], ts, v.clone())
    }
}

/// First `count` columns of a headed numeric CSV.
pub(crate) fn read_columns<R: std::io::Read>(input: R, count: usize) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut cols = vec![Vec::new(); count];
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() < count {
            return Err(Error::InvalidConfig(format!("row {} has {} columns, need {count}", row + 1, rec.len())));
        }
        for (c, col) in cols.iter_mut().enumerate() {
            let v: f64 = rec[c]
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("row {}: '{}' is not a number", row + 1, &rec[c])))?;
            col.push(v);
        }
    }
    Ok(cols)
}

/// Estimates at every window-feasible sample instant, in time order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSeries {
    pub t_first: f64,
    pub ts: f64,
    pub estimates: Vec<f64>,
    pub config: EstimatorConfig,
}

impl EstimateSeries {
    pub fn time(&self, k: usize) -> f64 {
        self.t_first + k as f64 * self.ts
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.estimates.len()).map(|k| self.time(k))
    }

    /// Writes `t,estimate` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "estimate"])?;
        for (t, e) in self.times().zip(&self.estimates) {
            w.write_record([t.to_string(), e.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One derivative estimate at sample `t0_index`.
///
/// Tap `i` multiplies the sample at `t0_index + β·i`, so the causal window
/// reads backward from `t₀` and the anti-causal one forward.
pub fn estimate_at(signal: &SampledSignal, k: &DiscreteKernel, t0_index: usize) -> Result<f64> {
    let m = k.m();
    let causal = k.config.beta() < 0.0;
    let in_range = if causal { t0_index >= m && t0_index < signal.len() } else { t0_index + m < signal.len() };
    if !in_range {
        return Err(Error::OutOfRange(format!(
            "window of {} samples at index {t0_index} exceeds signal of {} samples",
            m + 1,
            signal.len()
        )));
    }
    Ok(dot(&k.taps, &signal.values, t0_index, causal))
}

fn dot(taps: &[f64], values: &[f64], t0: usize, causal: bool) -> f64 {
    let mut acc = 0.0;
    for (i, tap) in taps.iter().enumerate() {
        let idx = if causal { t0 - i } else { t0 + i };
        acc += tap * values[idx];
    }
    acc
}

/// Builds the kernel for `cfg` and slides it over `signal`.
pub fn estimate_series(signal: &SampledSignal, cfg: &EstimatorConfig) -> Result<EstimateSeries> {
    check_alignment(signal, cfg)?;
    estimate_series_with(signal, &DiscreteKernel::from_config(cfg)?)
}

/// Slides an already-built kernel over `signal`; one estimate per feasible `t₀`.
pub fn estimate_series_with(signal: &SampledSignal, k: &DiscreteKernel) -> Result<EstimateSeries> {
    let m = k.m();
    if signal.len() < m + 1 {
        return Err(Error::SignalTooShort { needed: m + 1, have: signal.len() });
    }
    let causal = k.config.beta() < 0.0;
    let count = signal.len() - m;
    let first = if causal { m } else { 0 };
    let estimates = (first..first + count)
        .into_par_iter()
        .map(|t0| dot(&k.taps, &signal.values, t0, causal))
        .collect();
    Ok(EstimateSeries {
        t_first: signal.time(first),
        ts: signal.ts,
        estimates,
        config: k.config,
    })
}

fn check_alignment(signal: &SampledSignal, cfg: &EstimatorConfig) -> Result<()> {
    let implied = cfg.sample_period();
    if (implied - signal.ts).abs() > 1e-9 * signal.ts {
        return Err(Error::InvalidConfig(format!(
            "window T = {} with m = {} implies T_s = {implied}, but the signal has T_s = {}",
            cfg.window, cfg.m, signal.ts
        )));
    }
    Ok(())
}

/// Coefficients `(A, B)` of the order-lowering recurrence
/// `D̂ⁿ_{µ,κ} = −(A+B) D̂ⁿ⁻¹_{µ,κ} + A D̂ⁿ⁻¹_{µ,κ+1} + B D̂ⁿ⁻¹_{µ+1,κ}`.
pub fn recurrence_coefficients(n: usize, mu: f64, kappa: f64, beta: f64, window: f64) -> (f64, f64) {
    let nf = n as f64;
    let c = (mu + kappa + 2.0 * nf + 1.0) * (mu + kappa + 2.0 * nf) / (2.0 * beta * window);
    (c / (nf + mu), -c / (nf + kappa))
}
