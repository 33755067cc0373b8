//! Error calculus: bias and delay, noise-error moments, Chebyshev bands and
//! parameter surfaces.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{optimal_xi, DiscreteKernel, EstimatorConfig};
use crate::specfun::{beta_fn, JacobiIndex};
use crate::stochastic::NoiseModel;

/// Interval containing the bias of a minimal estimator, given the range of
/// `x^{(n+1)}` over the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasBounds {
    pub lower: f64,
    pub upper: f64,
    /// Signed delay coefficient `βT(κ+n+1)/(µ+κ+2n+2)`.
    pub c_factor: f64,
}

/// Delay magnitude `T(κ+n+1)/(µ+κ+2n+2)` of a minimal estimator.
pub fn theoretical_delay(n: usize, kappa: f64, mu: f64, window: f64) -> f64 {
    let nf = n as f64;
    window * (kappa + nf + 1.0) / (mu + kappa + 2.0 * nf + 2.0)
}

/// Delay `Tξ` of an affine estimator evaluated at `ξ`.
pub fn affine_delay(_n: usize, _kappa: f64, _mu: f64, window: f64, xi: f64) -> f64 {
    window * xi
}

pub fn bias_bounds(n: usize, kappa: f64, mu: f64, window: f64, beta: f64, inf_d: f64, sup_d: f64) -> BiasBounds {
    let c = beta.signum() * theoretical_delay(n, kappa, mu, window);
    let (a, b) = (c * inf_d, c * sup_d);
    BiasBounds { lower: a.min(b), upper: a.max(b), c_factor: c }
}

/// `I(µ,κ,n) = ∫₀¹ (1−τ)^{2µ+1} τ^{2κ+2} P_n^{µ,κ} P_{n−1}^{µ+1,κ+1} dτ`.
///
/// `n = 1` and `n = 2` use their known closed forms; higher orders use
/// [`i_integral_expanded`].
pub fn i_integral(mu: f64, kappa: f64, n: usize) -> Result<f64> {
    match n {
        0 => Err(Error::Domain("I(mu, kappa, n) needs n >= 1".into())),
        1 => Ok((mu + 1.0) * beta_fn(2.0 * mu + 2.0, 2.0 * kappa + 3.0)? / (2.0 * mu + 2.0 * kappa + 5.0)),
        2 => {
            let (k, m) = (kappa, mu);
            let two_i = -(k + 2.0).powi(2) * (k + 1.0) * beta_fn(2.0 * m + 5.0, 2.0 * k + 3.0)?
                + (k + 2.0) * (m + 2.0) * (3.0 * k + 5.0) * beta_fn(2.0 * m + 4.0, 2.0 * k + 4.0)?
                - (k + 2.0) * (m + 2.0) * (3.0 * m + 5.0) * beta_fn(2.0 * m + 3.0, 2.0 * k + 5.0)?
                + (m + 2.0).powi(2) * (m + 1.0) * beta_fn(2.0 * m + 2.0, 2.0 * k + 6.0)?;
            Ok(two_i / 2.0)
        }
        _ => i_integral_expanded(mu, kappa, n),
    }
}

/// `I(µ,κ,n)` for any `n` by termwise Beta integrals.
///
/// Both factors are kept in the `(t−1)^a t^b` form of the explicit Jacobi
/// sum, so each product term integrates to `±B(2κ+3+b, 2µ+2+a)` without
/// expanding into monomials.
pub fn i_integral_expanded(mu: f64, kappa: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("I(mu, kappa, n) needs n >= 1".into()));
    }
    let p = JacobiIndex::new(n, mu, kappa)?;
    let q = JacobiIndex::new(n - 1, mu + 1.0, kappa + 1.0)?;
    let mut acc = 0.0;
    for (s, a) in p.term_coeffs().iter().enumerate() {
        for (r, b) in q.term_coeffs().iter().enumerate() {
            let pow_one_minus = (n - s) + (n - 1 - r);
            let pow_t = s + r;
            let sign = if pow_one_minus.is_multiple_of(2) { 1.0 } else { -1.0 };
            acc += sign * a * b * beta_fn(2.0 * kappa + 3.0 + pow_t as f64, 2.0 * mu + 2.0 + pow_one_minus as f64)?;
        }
    }
    Ok(acc)
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Continuous noise-error variance of the minimal estimator for Wiener
/// (`η = σ²`) or Poisson (`η = ν`) noise.
pub fn variance_minimal(n: usize, kappa: f64, mu: f64, window: f64, eta: f64) -> Result<f64> {
    let nf = n as f64;
    let b = beta_fn(kappa + nf + 1.0, mu + nf + 1.0)?;
    let scale = 2.0 * eta * factorial(n) * factorial(n - 1) / (window.powi(2 * n as i32 - 1) * b * b);
    Ok(scale * i_integral(mu, kappa, n)?)
}

/// `λ₁ = (κ+3) − (µ+κ+5)ξ`, the weight of the `(µ+1, κ)` minimal estimator
/// in the first-order affine estimator; `λ₀ = 1 − λ₁`.
pub fn lambda1(xi: f64, kappa: f64, mu: f64) -> f64 {
    (kappa + 3.0) - (mu + kappa + 5.0) * xi
}

/// Continuous noise-error variance of the first-order affine estimator
/// with `q = 1`.
pub fn variance_affine_n1(kappa: f64, mu: f64, xi: f64, window: f64, eta: f64) -> Result<f64> {
    let (k, m) = (kappa, mu);
    let l1 = lambda1(xi, k, m);
    let l0 = 1.0 - l1;
    let c = 2.0 * eta / window;
    let t1 = (m + 2.0) / (2.0 * m + 2.0 * k + 7.0) * beta_fn(2.0 * m + 4.0, 2.0 * k + 3.0)?
        / beta_fn(k + 2.0, m + 3.0)?.powi(2);
    let t0 = (m + 1.0) / (2.0 * m + 2.0 * k + 7.0) * beta_fn(2.0 * m + 2.0, 2.0 * k + 5.0)?
        / beta_fn(k + 3.0, m + 2.0)?.powi(2);
    let cross = beta_fn(2.0 * m + 4.0, 2.0 * k + 4.0)? / (beta_fn(k + 2.0, m + 3.0)? * beta_fn(k + 3.0, m + 2.0)?);
    Ok(c * (l1 * l1 * t1 + l0 * l0 * t0 + l0 * l1 * cross))
}

/// Mean noise error for Poisson noise of intensity `ν`: `ν` for first
/// derivatives, `0` from the second on.
pub fn poisson_mean(n: usize, nu: f64) -> f64 {
    if n == 1 {
        nu
    } else {
        0.0
    }
}

/// `(mean − γ√Var, mean + γ√Var)`; the error lies inside with probability
/// above `1 − 1/γ²`.
pub fn chebyshev_band(mean: f64, variance: f64, gamma: f64) -> (f64, f64) {
    let half = gamma * variance.sqrt();
    (mean - half, mean + half)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Continuous,
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseMomentReport {
    pub mean: f64,
    pub variance: f64,
    pub cheb_low: f64,
    pub cheb_high: f64,
    pub gamma: f64,
    pub regime: Regime,
}

impl NoiseMomentReport {
    fn new(mean: f64, variance: f64, gamma: f64, regime: Regime) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::InvalidConfig(format!("Chebyshev multiplier must be positive, got {gamma}")));
        }
        let variance = variance.max(0.0);
        let (cheb_low, cheb_high) = chebyshev_band(mean, variance, gamma);
        Ok(NoiseMomentReport { mean, variance, cheb_low, cheb_high, gamma, regime })
    }
}

/// Closed-form continuous moments for Wiener or Poisson noise: any minimal
/// estimator, or the first-order affine estimator with `q = 1`.
pub fn continuous_moments(cfg: &EstimatorConfig, noise: &NoiseModel, gamma: f64) -> Result<NoiseMomentReport> {
    cfg.validate()?;
    let (eta, mean) = match noise {
        NoiseModel::Wiener { sigma2 } => (*sigma2, 0.0),
        NoiseModel::Poisson { nu } => (*nu, poisson_mean(cfg.n, *nu)),
        other => {
            return Err(Error::InvalidConfig(format!(
                "continuous closed forms cover Wiener and Poisson noise, not {other:?}"
            )))
        }
    };
    let variance = match (cfg.n, cfg.q) {
        (n, 0) => variance_minimal(n, cfg.kappa, cfg.mu, cfg.window, eta)?,
        (1, 1) => variance_affine_n1(cfg.kappa, cfg.mu, cfg.xi, cfg.window, eta)?,
        (n, q) => {
            return Err(Error::InvalidConfig(format!("no closed-form variance for affine n = {n}, q = {q}")))
        }
    };
    NoiseMomentReport::new(mean, variance, gamma, Regime::Continuous)
}

/// Absolute sample instants `t₀ + βT·i/m` of the kernel taps.
fn tap_times(k: &DiscreteKernel, t0: f64) -> Result<Vec<f64>> {
    let ts = k.config.sample_period();
    let beta = k.config.beta();
    let times: Vec<f64> = (0..k.taps.len()).map(|i| t0 + beta * ts * i as f64).collect();
    if times.iter().any(|&t| t < -1e-9 * ts) {
        return Err(Error::OutOfRange(format!(
            "window at t0 = {t0} reaches before t = 0, where the noise processes start"
        )));
    }
    Ok(times)
}

/// Exact mean and variance of the discrete noise error from the model's
/// moment functions.
pub fn discrete_moments(k: &DiscreteKernel, noise: &NoiseModel, t0: f64, gamma: f64) -> Result<NoiseMomentReport> {
    noise.validate()?;
    let times = tap_times(k, t0)?;
    let mean = k.taps.iter().zip(&times).map(|(w, &t)| w * noise.mean(t)).sum();
    let variance = double_sum(&k.taps, &times, &k.taps, &times, noise);
    NoiseMomentReport::new(mean, variance, gamma, Regime::Discrete)
}

fn double_sum(w1: &[f64], t1: &[f64], w2: &[f64], t2: &[f64], noise: &NoiseModel) -> f64 {
    let mut acc = 0.0;
    for (a, &s) in w1.iter().zip(t1) {
        let mut row = 0.0;
        for (b, &t) in w2.iter().zip(t2) {
            row += b * noise.covariance(s, t);
        }
        acc += a * row;
    }
    acc
}

/// Covariance of the noise errors of two kernels applied at `t0_1` and
/// `t0_2`. Both must read the same sample grid in the same direction.
pub fn discrete_covariance(
    k1: &DiscreteKernel,
    t0_1: f64,
    k2: &DiscreteKernel,
    t0_2: f64,
    noise: &NoiseModel,
) -> Result<f64> {
    noise.validate()?;
    let (c1, c2) = (&k1.config, &k2.config);
    if c1.direction != c2.direction {
        return Err(Error::Misaligned("kernels have opposite directions".into()));
    }
    let (ts1, ts2) = (c1.sample_period(), c2.sample_period());
    if (ts1 - ts2).abs() > 1e-12 * ts1 {
        return Err(Error::Misaligned(format!("sampling periods differ: {ts1} vs {ts2}")));
    }
    let offset = (t0_2 - t0_1) / ts1;
    if (offset - offset.round()).abs() > 1e-6 {
        return Err(Error::Misaligned(format!("t0 offset {} is not a whole number of samples", t0_2 - t0_1)));
    }
    let (t1, t2) = (tap_times(k1, t0_1)?, tap_times(k2, t0_2)?);
    Ok(double_sum(&k1.taps, &t1, &k2.taps, &t2, noise))
}

/// Quantity plotted over the `(κ, µ)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceQuantity {
    /// Minimal-estimator delay `T(κ+n+1)/(µ+κ+2n+2)`.
    Delay,
    /// Smallest root of `P_2^{µ+n,κ+n}`, the optimal `q = 1` evaluation point.
    Xi,
    VarianceMinimal,
    /// First-order `q = 1` affine estimator at its optimal `ξ(κ, µ)`.
    VarianceAffine,
}

impl std::str::FromStr for SurfaceQuantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delay" => Ok(SurfaceQuantity::Delay),
            "xi" => Ok(SurfaceQuantity::Xi),
            "variance_minimal" | "variance-minimal" => Ok(SurfaceQuantity::VarianceMinimal),
            "variance_affine" | "variance-affine" => Ok(SurfaceQuantity::VarianceAffine),
            other => Err(Error::InvalidConfig(format!("unknown surface quantity '{other}'"))),
        }
    }
}

/// Fixed parameters of a sweep; the figures use `n = 1`, `T = η = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceParams {
    pub n: usize,
    pub window: f64,
    pub eta: f64,
}

impl Default for SurfaceParams {
    fn default() -> Self {
        SurfaceParams { n: 1, window: 1.0, eta: 1.0 }
    }
}

/// Grid values, one row per κ and one column per µ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub quantity: SurfaceQuantity,
    pub kappas: Vec<f64>,
    pub mus: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl Surface {
    pub fn get(&self, kappa_idx: usize, mu_idx: usize) -> f64 {
        self.values[kappa_idx][mu_idx]
    }

    /// Header row of µ values; each following row starts with its κ.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["kappa\\mu".to_string()];
        header.extend(self.mus.iter().map(|m| m.to_string()));
        w.write_record(&header)?;
        for (k, row) in self.kappas.iter().zip(&self.values) {
            let mut rec = vec![k.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `cells` equispaced points in `(lo, hi]`.
pub fn half_open_grid(lo: f64, hi: f64, cells: usize) -> Vec<f64> {
    (1..=cells).map(|k| lo + (hi - lo) * k as f64 / cells as f64).collect()
}

/// The figures' plane: 41 points per axis over `(−1, 1]`.
pub fn default_grid() -> Vec<f64> {
    half_open_grid(-1.0, 1.0, 41)
}

pub fn surface_value(quantity: SurfaceQuantity, kappa: f64, mu: f64, p: &SurfaceParams) -> Result<f64> {
    match quantity {
        SurfaceQuantity::Delay => Ok(theoretical_delay(p.n, kappa, mu, p.window)),
        SurfaceQuantity::Xi => optimal_xi(p.n, 1, mu, kappa),
        SurfaceQuantity::VarianceMinimal => variance_minimal(p.n, kappa, mu, p.window, p.eta),
        SurfaceQuantity::VarianceAffine => {
            if p.n != 1 {
                return Err(Error::InvalidConfig("the affine variance surface is defined for n = 1".into()));
            }
            variance_affine_n1(kappa, mu, optimal_xi(1, 1, mu, kappa)?, p.window, p.eta)
        }
    }
}

pub fn sweep_surface(quantity: SurfaceQuantity, kappas: &[f64], mus: &[f64], params: &SurfaceParams) -> Result<Surface> {
    if params.n == 0 || !(params.window > 0.0) || !(params.eta >= 0.0) {
        return Err(Error::InvalidConfig(format!("invalid surface parameters {params:?}")));
    }
    if let Some(bad) = kappas.iter().chain(mus).find(|v| !(**v > -1.0 && v.is_finite())) {
        return Err(Error::InvalidConfig(format!("grid value {bad} is not above -1")));
    }
    let values = kappas
        .par_iter()
        .map(|&k| mus.iter().map(|&m| surface_value(quantity, k, m, params)).collect::<Result<Vec<f64>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(Surface { quantity, kappas: kappas.to_vec(), mus: mus.to_vec(), values })
}
