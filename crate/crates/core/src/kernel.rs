//! Estimator kernels.
//!
//! A Jacobi estimator is the integral `∫₀¹ p(τ) y(t₀ + βTτ) dτ` of the
//! observation against a power function `p`. Every such `p` is a weight
//! `(1 − τ)^µ τ^κ` times a polynomial, which [`WeightedPoly`] stores exactly.
//! [`discretize`] turns `p` into the FIR taps applied to sampled data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{
    beta_fn, jacobi_eval_unchecked, jacobi_norm_sq, jacobi_weighted_moment, smallest_root, JacobiIndex,
};

/// Which side of `t₀` the estimation window lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `β = −1`: window `[t₀ − T, t₀]`, usable online.
    Causal,
    /// `β = +1`: window `[t₀, t₀ + T]`.
    AntiCausal,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Causal => -1.0,
            Direction::AntiCausal => 1.0,
        }
    }

    pub fn from_sign(beta: i32) -> Result<Self> {
        match beta {
            -1 => Ok(Direction::Causal),
            1 => Ok(Direction::AntiCausal),
            other => Err(Error::InvalidConfig(format!("beta must be +1 or -1, got {other}"))),
        }
    }
}

/// Treatment of a singular weight factor at a window endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum EndpointRule {
    /// Replace `τ^κ` at `τ = 0` (or `(1 − τ)^µ` at `τ = 1`) by `(F/m)^κ`
    /// (or `(F/m)^µ`) when the exponent is negative.
    Regularized { factor: f64 },
    /// Drop the singular endpoint sample entirely (zero quadrature weight).
    Suppress,
}

impl Default for EndpointRule {
    fn default() -> Self {
        EndpointRule::Regularized { factor: 0.1 }
    }
}

/// Full parameterization of one Jacobi estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Derivative order, at least 1.
    pub n: usize,
    /// Number of extra Jacobi series terms; `0` gives the minimal estimator.
    pub q: usize,
    pub mu: f64,
    pub kappa: f64,
    pub direction: Direction,
    /// Window length `T` in seconds.
    pub window: f64,
    /// Affine evaluation point in `[0, 1]`, forced to `0` when `q = 0`.
    pub xi: f64,
    pub endpoint: EndpointRule,
    /// Number of sampling intervals in the window, `m = T / T_s`.
    pub m: usize,
}

impl EstimatorConfig {
    pub fn minimal(n: usize, mu: f64, kappa: f64, direction: Direction, window: f64, m: usize) -> Result<Self> {
        let cfg = EstimatorConfig {
            n,
            q: 0,
            mu,
            kappa,
            direction,
            window,
            xi: 0.0,
            endpoint: EndpointRule::default(),
            m,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Affine estimator with `q` extra terms. `xi = None` selects the
    /// smallest root of `P_{q+1}^{µ+n, κ+n}`, the delay-minimizing choice.
    #[allow(clippy::too_many_arguments)]
    pub fn affine(
        n: usize,
        q: usize,
        mu: f64,
        kappa: f64,
        direction: Direction,
        window: f64,
        m: usize,
        xi: Option<f64>,
    ) -> Result<Self> {
        let xi = match (q, xi) {
            (0, _) => 0.0,
            (_, Some(x)) => x,
            (_, None) => optimal_xi(n, q, mu, kappa)?,
        };
        let cfg = EstimatorConfig {
            n,
            q,
            mu,
            kappa,
            direction,
            window,
            xi,
            endpoint: EndpointRule::default(),
            m,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_endpoint(mut self, rule: EndpointRule) -> Result<Self> {
        self.endpoint = rule;
        self.validate()?;
        Ok(self)
    }

    pub fn beta(&self) -> f64 {
        self.direction.sign()
    }

    /// Sampling period implied by the window and tap count.
    pub fn sample_period(&self) -> f64 {
        self.window / self.m as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n == 0 {
            return bad("derivative order n must be at least 1".into());
        }
        if !(self.mu > -1.0 && self.mu.is_finite()) || !(self.kappa > -1.0 && self.kappa.is_finite()) {
            return bad(format!("mu and kappa must exceed -1, got mu={}, kappa={}", self.mu, self.kappa));
        }
        if !(self.window > 0.0 && self.window.is_finite()) {
            return bad(format!("window length T must be positive, got {}", self.window));
        }
        if !(0.0..=1.0).contains(&self.xi) {
            return bad(format!("xi must lie in [0, 1], got {}", self.xi));
        }
        if self.q == 0 && self.xi != 0.0 {
            return bad("minimal estimators (q = 0) require xi = 0".into());
        }
        if let EndpointRule::Regularized { factor } = self.endpoint {
            if !(factor > 0.0 && factor <= 1.0) {
                return bad(format!("endpoint factor F must lie in (0, 1], got {factor}"));
            }
        }
        if self.m < self.n + self.q + 1 {
            return bad(format!(
                "need m >= n + q + 1 = {} taps intervals, got {}",
                self.n + self.q + 1,
                self.m
            ));
        }
        Ok(())
    }
}

/// Smallest root of `P_{q+1}^{µ+n, κ+n}`, the evaluation point giving the
/// smallest delay for an affine estimator.
pub fn optimal_xi(n: usize, q: usize, mu: f64, kappa: f64) -> Result<f64> {
    smallest_root(JacobiIndex::new(q + 1, mu + n as f64, kappa + n as f64)?)
}

/// `(1 − τ)^mu_exp · τ^kappa_exp · Q(τ)` with `Q` in ascending monomial
/// coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPoly {
    pub mu_exp: f64,
    pub kappa_exp: f64,
    coeffs: Vec<f64>,
}

impl WeightedPoly {
    pub fn new(mu_exp: f64, kappa_exp: f64, mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        WeightedPoly { mu_exp, kappa_exp, coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Whether both weight exponents exceed −1, so `∫₀¹` of the function is finite.
    pub fn is_integrable(&self) -> bool {
        self.mu_exp > -1.0 && self.kappa_exp > -1.0
    }

    /// Value of the polynomial factor `Q(t)`.
    pub fn poly_eval(&self, t: f64) -> f64 {
        horner(&self.coeffs, t)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("weighted polynomial evaluated outside [0, 1] at {t}")));
        }
        if t == 0.0 && self.kappa_exp < 0.0 {
            return Err(Error::Domain(format!("tau^{} is singular at 0", self.kappa_exp)));
        }
        if t == 1.0 && self.mu_exp < 0.0 {
            return Err(Error::Domain(format!("(1 - tau)^{} is singular at 1", self.mu_exp)));
        }
        Ok((1.0 - t).powf(self.mu_exp) * t.powf(self.kappa_exp) * self.poly_eval(t))
    }

    /// Exact derivative, in the same representation with each nonzero
    /// exponent lowered by one.
    pub fn derivative(&self) -> WeightedPoly {
        let (a, b) = (self.mu_exp, self.kappa_exp);
        let q = &self.coeffs;
        let dq = poly_derivative(q);
        // d/dτ[(1−τ)^a τ^b Q] = (1−τ)^{a−1} τ^{b−1} [(b(1−τ) − aτ) Q + τ(1−τ) Q′],
        // with a zero exponent contributing no factor to peel off.
        match (a == 0.0, b == 0.0) {
            (true, true) => WeightedPoly::new(0.0, 0.0, dq),
            (true, false) => {
                // τ^{b−1} [b Q + τ Q′]
                let poly = poly_add(&poly_scale(q, b), &poly_mul(&[0.0, 1.0], &dq));
                WeightedPoly::new(0.0, b - 1.0, poly)
            }
            (false, true) => {
                // (1−τ)^{a−1} [−a Q + (1−τ) Q′]
                let poly = poly_add(&poly_scale(q, -a), &poly_mul(&[1.0, -1.0], &dq));
                WeightedPoly::new(a - 1.0, 0.0, poly)
            }
            (false, false) => {
                let linear = [b, -(a + b)];
                let poly = poly_add(&poly_mul(&linear, q), &poly_mul(&[0.0, 1.0, -1.0], &dq));
                WeightedPoly::new(a - 1.0, b - 1.0, poly)
            }
        }
    }

    pub fn nth_derivative(&self, k: usize) -> WeightedPoly {
        (0..k).fold(self.clone(), |p, _| p.derivative())
    }

    pub fn scaled(&self, factor: f64) -> WeightedPoly {
        WeightedPoly::new(self.mu_exp, self.kappa_exp, poly_scale(&self.coeffs, factor))
    }

    /// Sum of two weighted polynomials with matching exponents.
    pub fn add(&self, other: &WeightedPoly) -> Result<WeightedPoly> {
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * (1.0 + x.abs());
        if !close(self.mu_exp, other.mu_exp) || !close(self.kappa_exp, other.kappa_exp) {
            return Err(Error::Domain(format!(
                "cannot add weights ({}, {}) and ({}, {})",
                self.mu_exp, self.kappa_exp, other.mu_exp, other.kappa_exp
            )));
        }
        Ok(WeightedPoly::new(self.mu_exp, self.kappa_exp, poly_add(&self.coeffs, &other.coeffs)))
    }

    /// Exact moment `∫₀¹ τ^j p(τ) dτ` by termwise Beta integrals.
    pub fn moment(&self, j: usize) -> Result<f64> {
        if !self.is_integrable() {
            return Err(Error::Domain(format!(
                "weight exponents ({}, {}) are not integrable",
                self.mu_exp, self.kappa_exp
            )));
        }
        let mut acc = 0.0;
        for (k, c) in self.coeffs.iter().enumerate() {
            acc += c * beta_fn(self.kappa_exp + (k + j) as f64 + 1.0, self.mu_exp + 1.0)?;
        }
        Ok(acc)
    }
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * t + v)
}

fn poly_derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, v)| k as f64 * v).collect()
}

fn poly_scale(c: &[f64], f: f64) -> Vec<f64> {
    c.iter().map(|v| v * f).collect()
}

fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, v) in a.iter().enumerate() {
        out[i] += v;
    }
    for (i, v) in b.iter().enumerate() {
        out[i] += v;
    }
    out
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `γ_n^{µ,κ} = n! / B(κ + n + 1, µ + n + 1)`.
pub fn gamma_coefficient(n: usize, mu: f64, kappa: f64) -> Result<f64> {
    let nf = n as f64;
    Ok(factorial(n) / beta_fn(kappa + nf + 1.0, mu + nf + 1.0)?)
}

/// Power function of the minimal estimator,
/// `γ_n^{µ,κ} / (βT)^n · w^{µ,κ}(τ) P_n^{µ,κ}(τ)`.
pub fn minimal_kernel(cfg: &EstimatorConfig) -> Result<WeightedPoly> {
    cfg.validate()?;
    if cfg.q != 0 {
        return Err(Error::InvalidConfig("minimal_kernel requires q = 0".into()));
    }
    let scale = gamma_coefficient(cfg.n, cfg.mu, cfg.kappa)? / (cfg.beta() * cfg.window).powi(cfg.n as i32);
    let poly = JacobiIndex::new(cfg.n, cfg.mu, cfg.kappa)?.monomial_coeffs();
    Ok(WeightedPoly::new(cfg.mu, cfg.kappa, poly_scale(&poly, scale)))
}

/// Power function of the affine estimator built from the truncated series of
/// `x^{(n)}` in `P_i^{µ+n, κ+n}`, `i ≤ q`, evaluated at `ξ`.
///
/// Each series coefficient is moved onto `y` by `n` integrations by parts, so
/// term `i` contributes `P_i(ξ)/‖P_i‖² · (−1)^n/(βT)^n · d^n/dτ^n[w^{µ+n,κ+n} P_i]`.
/// The boundary terms vanish because every intermediate exponent exceeds 0.
pub fn affine_kernel(cfg: &EstimatorConfig) -> Result<WeightedPoly> {
    cfg.validate()?;
    let n = cfg.n;
    let nf = n as f64;
    let (mu_n, kappa_n) = (cfg.mu + nf, cfg.kappa + nf);
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let outer = sign / (cfg.beta() * cfg.window).powi(n as i32);
    let mut coeffs = vec![0.0; n + cfg.q + 1];
    for i in 0..=cfg.q {
        let idx = JacobiIndex::new(i, mu_n, kappa_n)?;
        let weight = jacobi_eval_unchecked(&idx, cfg.xi) / jacobi_norm_sq(idx);
        let term = WeightedPoly::new(mu_n, kappa_n, idx.monomial_coeffs()).nth_derivative(n);
        for (k, c) in term.coeffs().iter().enumerate() {
            coeffs[k] += weight * outer * c;
        }
    }
    Ok(WeightedPoly::new(cfg.mu, cfg.kappa, coeffs))
}

/// Minimal kernel for `q = 0`, affine kernel otherwise.
pub fn kernel(cfg: &EstimatorConfig) -> Result<WeightedPoly> {
    if cfg.q == 0 {
        minimal_kernel(cfg)
    } else {
        affine_kernel(cfg)
    }
}

/// Moment `∫₀¹ τ^j p(τ) dτ` of the kernel for `cfg`, computed from its
/// Jacobi structure instead of the expanded monomials.
///
/// Expanding `p` in monomials cancels badly for short windows and larger
/// `n + q`; here each series term is integrated by parts back onto
/// `w^{µ+n,κ+n} P_i`, so annihilated moments come out as exact zeros.
pub fn kernel_moment(cfg: &EstimatorConfig, j: usize) -> Result<f64> {
    cfg.validate()?;
    let n = cfg.n;
    let nf = n as f64;
    let scale = (cfg.beta() * cfg.window).powi(n as i32);
    if cfg.q == 0 {
        let idx = JacobiIndex::new(n, cfg.mu, cfg.kappa)?;
        return Ok(gamma_coefficient(n, cfg.mu, cfg.kappa)? / scale * jacobi_weighted_moment(idx, j));
    }
    if j < n {
        return Ok(0.0);
    }
    // ∫τ^j (−1)^n Dⁿf = j!/(j−n)! ∫τ^{j−n} f, boundary terms vanishing.
    let falling = ((j - n + 1)..=j).fold(1.0, |acc, k| acc * k as f64);
    let mut acc = 0.0;
    for i in 0..=cfg.q {
        let idx = JacobiIndex::new(i, cfg.mu + nf, cfg.kappa + nf)?;
        let weight = jacobi_eval_unchecked(&idx, cfg.xi) / jacobi_norm_sq(idx);
        acc += weight * jacobi_weighted_moment(idx, j - n);
    }
    Ok(acc * falling / scale)
}

/// FIR realization of a kernel: tap `i` multiplies `y(t₀ + βT·i/m)` and
/// already includes the trapezoid weight `w_i/m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteKernel {
    pub taps: Vec<f64>,
    pub config: EstimatorConfig,
}

impl DiscreteKernel {
    pub fn from_config(cfg: &EstimatorConfig) -> Result<Self> {
        discretize(&kernel(cfg)?, cfg)
    }

    pub fn m(&self) -> usize {
        self.taps.len() - 1
    }

    pub fn abscissa(&self, i: usize) -> f64 {
        i as f64 / self.m() as f64
    }

    /// Discrete counterpart of `∫₀¹ τ^j p(τ) dτ`.
    pub fn moment(&self, j: usize) -> f64 {
        self.taps
            .iter()
            .enumerate()
            .map(|(i, t)| t * self.abscissa(i).powi(j as i32))
            .sum()
    }

    /// `Σ tapᵢ²`, the noise gain for unit-variance white noise.
    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t * t).sum()
    }

    /// Writes `i,abscissa,tap` rows with a header.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "abscissa", "tap"])?;
        for (i, tap) in self.taps.iter().enumerate() {
            w.write_record([i.to_string(), self.abscissa(i).to_string(), tap.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Composite-trapezoid discretization of `p` on `m + 1` equispaced nodes.
///
/// A negative exponent at an endpoint is handled by `cfg.endpoint`: either
/// the singular power alone is evaluated at `F/m` while the other factors
/// keep their endpoint values, or the endpoint tap is zeroed.
pub fn discretize(p: &WeightedPoly, cfg: &EstimatorConfig) -> Result<DiscreteKernel> {
    cfg.validate()?;
    let m = cfg.m;
    let mf = m as f64;
    let mut taps = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let t = i as f64 / mf;
        let w = if i == 0 || i == m { 0.5 } else { 1.0 };
        let left = endpoint_power(t == 0.0, t, p.kappa_exp, cfg.endpoint, mf);
        let right = endpoint_power(t == 1.0, 1.0 - t, p.mu_exp, cfg.endpoint, mf);
        let tap = match (left, right) {
            (Some(l), Some(r)) => w / mf * l * r * p.poly_eval(t),
            _ => 0.0,
        };
        taps.push(tap);
    }
    Ok(DiscreteKernel { taps, config: *cfg })
}

/// `base^exp`, or the endpoint substitute when `base` is the singular zero.
/// `None` means the sample is suppressed.
fn endpoint_power(at_end: bool, base: f64, exp: f64, rule: EndpointRule, m: f64) -> Option<f64> {
    if at_end && exp < 0.0 {
        match rule {
            EndpointRule::Regularized { factor } => Some((factor / m).powf(exp)),
            EndpointRule::Suppress => None,
        }
    } else {
        Some(base.powf(exp))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{gamma_fn, jacobi_eval};
    use approx::assert_relative_eq;

    fn interior_grid() -> impl Iterator<Item = f64> {
        (1..20).map(|k| k as f64 / 20.0)
    }

    fn min_cfg(n: usize, mu: f64, kappa: f64, dir: Direction, t: f64, m: usize) -> EstimatorConfig {
        EstimatorConfig::minimal(n, mu, kappa, dir, t, m).unwrap()
    }

    #[test]
    fn wpoly_eval_examples() {
        let p = WeightedPoly::new(0.0, 0.0, vec![-1.0, 2.0]);
        assert_eq!(p.eval(0.5).unwrap(), 0.0);
        assert_relative_eq!(WeightedPoly::new(1.0, 1.0, vec![1.0]).eval(0.5).unwrap(), 0.25);
        assert_relative_eq!(WeightedPoly::new(0.0, -0.5, vec![1.0]).eval(0.25).unwrap(), 2.0, epsilon = 1e-15);
        assert!(matches!(WeightedPoly::new(0.0, -0.5, vec![1.0]).eval(0.0), Err(Error::Domain(_))));
        assert!(matches!(WeightedPoly::new(-0.3, 0.0, vec![1.0]).eval(1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn trailing_zeros_are_trimmed() {
        let p = WeightedPoly::new(0.0, 0.0, vec![1.0, 2.0, 0.0, 0.0]);
        assert_eq!(p.degree(), 1);
        assert_eq!(WeightedPoly::new(0.0, 0.0, vec![]).coeffs(), &[0.0]);
    }

    #[test]
    fn derivative_examples() {
        let d = WeightedPoly::new(1.0, 1.0, vec![1.0]).derivative();
        assert_eq!((d.mu_exp, d.kappa_exp), (0.0, 0.0));
        assert_eq!(d.coeffs(), &[1.0, -2.0]);

        let d = WeightedPoly::new(0.0, 0.0, vec![0.0, 0.0, 1.0]).derivative();
        for t in interior_grid() {
            assert_relative_eq!(d.eval(t).unwrap(), 2.0 * t, epsilon = 1e-15);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let p = WeightedPoly::new(1.7, 0.4, vec![0.3, -1.2, 2.0]);
        let d = p.derivative();
        assert!((d.mu_exp - 0.7).abs() < 1e-15 && (d.kappa_exp + 0.6).abs() < 1e-15);
        let h = 1e-6;
        for t in interior_grid() {
            let fd = (p.eval(t + h).unwrap() - p.eval(t - h).unwrap()) / (2.0 * h);
            assert_relative_eq!(d.eval(t).unwrap(), fd, max_relative = 1e-6, epsilon = 1e-8);
        }
        // One-sided zero exponents.
        for p in [WeightedPoly::new(0.0, 1.5, vec![1.0, 1.0]), WeightedPoly::new(2.5, 0.0, vec![1.0, 1.0])] {
            let d = p.derivative();
            for t in interior_grid() {
                let fd = (p.eval(t + h).unwrap() - p.eval(t - h).unwrap()) / (2.0 * h);
                assert_relative_eq!(d.eval(t).unwrap(), fd, max_relative = 1e-6, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn rodrigues_formula() {
        for n in 1..=3usize {
            for &mu in &[-0.5, 0.0, 1.0] {
                for &kappa in &[-0.5, 0.0, 1.0] {
                    let nf = n as f64;
                    let d = WeightedPoly::new(mu + nf, kappa + nf, vec![1.0]).nth_derivative(n);
                    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                    let fact = factorial(n);
                    let idx = JacobiIndex::new(n, mu, kappa).unwrap();
                    for t in interior_grid() {
                        let rhs = sign * fact * (1.0 - t).powf(mu) * t.powf(kappa) * jacobi_eval(idx, t).unwrap();
                        assert!((d.eval(t).unwrap() - rhs).abs() <= 1e-9, "n={n} mu={mu} kappa={kappa} t={t}");
                    }
                }
            }
        }
    }

    #[test]
    fn minimal_kernel_first_order_symmetric() {
        let p = minimal_kernel(&min_cfg(1, 0.0, 0.0, Direction::AntiCausal, 1.0, 10)).unwrap();
        assert_eq!((p.mu_exp, p.kappa_exp), (0.0, 0.0));
        assert_relative_eq!(p.coeffs()[0], -6.0, max_relative = 1e-13);
        assert_relative_eq!(p.coeffs()[1], 12.0, max_relative = 1e-13);
        assert!(p.eval(0.5).unwrap().abs() < 1e-13);
    }

    #[test]
    fn minimal_kernel_matches_explicit_first_order_form() {
        // Γ(µ+κ+4)/(Γ(κ+2)Γ(µ+2)) ((µ+κ+2)τ − (κ+1)) (1−τ)^µ τ^κ / (βT)
        for &(mu, kappa) in &[(0.0, 0.0), (0.0, -0.79), (-0.6, -0.78), (1.5, 0.3)] {
            let cfg = min_cfg(1, mu, kappa, Direction::Causal, 0.15, 30);
            let p = minimal_kernel(&cfg).unwrap();
            let c = gamma_fn(mu + kappa + 4.0).unwrap() / (gamma_fn(kappa + 2.0).unwrap() * gamma_fn(mu + 2.0).unwrap());
            for t in interior_grid() {
                let explicit = c * ((mu + kappa + 2.0) * t - (kappa + 1.0)) * (1.0 - t).powf(mu) * t.powf(kappa) / -0.15;
                assert_relative_eq!(p.eval(t).unwrap(), explicit, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn minimal_kernel_second_order_moments() {
        let cfg = min_cfg(2, 0.0, 0.0, Direction::AntiCausal, 1.0, 10);
        let p = minimal_kernel(&cfg).unwrap();
        assert!(p.moment(0).unwrap().abs() <= 1e-12);
        assert!(p.moment(1).unwrap().abs() <= 1e-12);
        assert_relative_eq!(p.moment(2).unwrap(), 2.0, max_relative = 1e-12);
        // Same values through the Jacobi moment routine.
        let g = gamma_coefficient(2, 0.0, 0.0).unwrap();
        let idx = JacobiIndex::new(2, 0.0, 0.0).unwrap();
        assert_relative_eq!(g * jacobi_weighted_moment(idx, 2), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn minimal_kernel_rejects_affine_config() {
        let cfg = EstimatorConfig::affine(1, 1, 0.0, 0.0, Direction::Causal, 1.0, 10, None).unwrap();
        assert!(matches!(minimal_kernel(&cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn affine_with_q0_equals_minimal() {
        for n in 1..=3 {
            for &(mu, kappa) in &[(0.0, 0.0), (-0.5, 1.0), (0.3, -0.25)] {
                let cfg = min_cfg(n, mu, kappa, Direction::Causal, 0.3, 40);
                let a = affine_kernel(&cfg).unwrap();
                let b = minimal_kernel(&cfg).unwrap();
                let scale: f64 = b.coeffs().iter().map(|c| c.abs()).sum();
                for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
                    assert!((x - y).abs() <= 1e-13 * scale, "n={n}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn affine_first_order_matches_lambda_combination() {
        for &(kappa, mu, xi) in &[(0.0, 0.0, 0.276), (-0.78, -0.6, 0.218)] {
            let dir = Direction::Causal;
            let t_win = 0.2;
            let cfg = EstimatorConfig::affine(1, 1, mu, kappa, dir, t_win, 40, Some(xi)).unwrap();
            let p = affine_kernel(&cfg).unwrap();
            assert_eq!(p.degree(), 2);
            let lambda1 = (kappa + 3.0) - (mu + kappa + 5.0) * xi;
            let lambda0 = 1.0 - lambda1;
            let p_mu1 = minimal_kernel(&min_cfg(1, mu + 1.0, kappa, dir, t_win, 40)).unwrap();
            let p_kappa1 = minimal_kernel(&min_cfg(1, mu, kappa + 1.0, dir, t_win, 40)).unwrap();
            for t in interior_grid() {
                let combo = lambda1 * p_mu1.eval(t).unwrap() + lambda0 * p_kappa1.eval(t).unwrap();
                assert!((p.eval(t).unwrap() - combo).abs() <= 1e-10, "kappa={kappa} t={t}");
            }
        }
    }

    #[test]
    fn affine_first_order_moments_at_optimal_xi() {
        let cfg = EstimatorConfig::affine(1, 1, 0.0, 0.0, Direction::AntiCausal, 1.0, 40, None).unwrap();
        assert!((cfg.xi - 0.276_393_202_250_021).abs() < 1e-12);
        let p = affine_kernel(&cfg).unwrap();
        assert!(p.moment(0).unwrap().abs() <= 1e-12);
        assert_relative_eq!(p.moment(1).unwrap(), 1.0, max_relative = 1e-12);
        // Exact on quadratics up to the shift ξ: ∫τ² p = 2ξ/(βT).
        assert_relative_eq!(p.moment(2).unwrap(), 2.0 * cfg.xi, max_relative = 1e-10);
    }

    /// `Σ |c_k| B(κ+k+j+1, µ+1)`, the magnitude lost to cancellation when
    /// integrating the monomial form.
    fn moment_condition(p: &WeightedPoly, j: usize) -> f64 {
        p.coeffs()
            .iter()
            .enumerate()
            .map(|(k, c)| c.abs() * beta_fn(p.kappa_exp + (k + j) as f64 + 1.0, p.mu_exp + 1.0).unwrap())
            .sum()
    }

    #[test]
    fn kernel_moment_identities() {
        let exps = [-0.5, -0.25, 0.0, 1.0];
        for n in 1..=3usize {
            for q in 0..=2usize {
                for &mu in &exps {
                    for &kappa in &exps {
                        for &t_win in &[0.1, 1.0] {
                            for dir in [Direction::Causal, Direction::AntiCausal] {
                                let cfg = EstimatorConfig::affine(n, q, mu, kappa, dir, t_win, 50, None).unwrap();
                                let p = kernel(&cfg).unwrap();
                                assert_eq!(p.degree(), n + q);
                                let norm = factorial(n) / (cfg.beta() * t_win).powi(n as i32);
                                for l in 0..n {
                                    let v = kernel_moment(&cfg, l).unwrap();
                                    assert!(v.abs() <= 1e-10 * norm.abs().max(1.0), "n={n} q={q} l={l}: {v}");
                                }
                                let v = kernel_moment(&cfg, n).unwrap();
                                assert!((v - norm).abs() <= 1e-10 * norm.abs().max(1.0), "n={n} q={q}: {v} vs {norm}");
                                for j in 0..=n + 2 {
                                    let (a, b) = (kernel_moment(&cfg, j).unwrap(), p.moment(j).unwrap());
                                    let cond = moment_condition(&p, j);
                                    assert!((a - b).abs() <= 1e-13 * cond, "n={n} q={q} j={j}: {a} vs {b}");
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn discretize_three_taps() {
        let cfg = min_cfg(1, 0.0, 0.0, Direction::AntiCausal, 1.0, 2);
        let k = DiscreteKernel::from_config(&cfg).unwrap();
        assert_eq!(k.taps.len(), 3);
        let expected = [-1.5, 0.0, 1.5];
        for (a, b) in k.taps.iter().zip(expected) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn nonnegative_exponents_use_plain_evaluation() {
        let cfg = min_cfg(2, 1.0, 0.5, Direction::Causal, 0.4, 16)
            .with_endpoint(EndpointRule::Regularized { factor: 0.3 })
            .unwrap();
        let p = kernel(&cfg).unwrap();
        let k = discretize(&p, &cfg).unwrap();
        for (i, tap) in k.taps.iter().enumerate() {
            let w = if i == 0 || i == 16 { 0.5 } else { 1.0 };
            let t = i as f64 / 16.0;
            assert_eq!(*tap, w / 16.0 * (1.0 - t).powf(1.0) * t.powf(0.5) * p.poly_eval(t));
        }
    }

    #[test]
    fn regularized_endpoint_tap() {
        let (kappa, mu, f, m) = (-0.79, 0.0, 0.1, 30usize);
        let t_win = 30.0 / 200.0;
        let cfg = min_cfg(1, mu, kappa, Direction::Causal, t_win, m)
            .with_endpoint(EndpointRule::Regularized { factor: f })
            .unwrap();
        let k = DiscreteKernel::from_config(&cfg).unwrap();
        let c = gamma_fn(mu + kappa + 4.0).unwrap() / (gamma_fn(kappa + 2.0).unwrap() * gamma_fn(mu + 2.0).unwrap());
        let p0 = c / -t_win * (-(kappa + 1.0)) * (f / m as f64).powf(kappa);
        assert!(k.taps[0].is_finite());
        assert_relative_eq!(k.taps[0], 0.5 / m as f64 * p0, max_relative = 1e-12);
    }

    #[test]
    fn both_endpoints_regularized_independently() {
        let cfg = EstimatorConfig::affine(1, 1, -0.66, -0.7, Direction::Causal, 1.0, 32, Some(0.234))
            .unwrap()
            .with_endpoint(EndpointRule::Regularized { factor: 0.5 })
            .unwrap();
        let p = kernel(&cfg).unwrap();
        let k = discretize(&p, &cfg).unwrap();
        let s = 0.5f64 / 32.0;
        assert_relative_eq!(k.taps[0], 0.5 / 32.0 * s.powf(-0.7) * p.poly_eval(0.0), max_relative = 1e-13);
        assert_relative_eq!(k.taps[32], 0.5 / 32.0 * s.powf(-0.66) * p.poly_eval(1.0), max_relative = 1e-13);
        assert!(k.taps.iter().all(|t| t.is_finite()));
    }

    #[test]
    fn suppressed_endpoint_is_zero() {
        let cfg = min_cfg(1, -0.4, -0.3, Direction::Causal, 1.0, 20)
            .with_endpoint(EndpointRule::Suppress)
            .unwrap();
        let k = DiscreteKernel::from_config(&cfg).unwrap();
        assert_eq!(k.taps[0], 0.0);
        assert_eq!(k.taps[20], 0.0);
        assert!(k.taps[1] != 0.0);
    }

    fn discrete_moment_error(n: usize, mu: f64, kappa: f64, m: usize, j: usize) -> f64 {
        let cfg = min_cfg(n, mu, kappa, Direction::AntiCausal, 1.0, m);
        let p = kernel(&cfg).unwrap();
        discretize(&p, &cfg).unwrap().moment(j) - p.moment(j).unwrap()
    }

    #[test]
    fn discrete_moments_converge_quadratically() {
        for n in 1..=2 {
            for &(mu, kappa) in &[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
                let e1 = discrete_moment_error(n, mu, kappa, 100, n);
                let e2 = discrete_moment_error(n, mu, kappa, 200, n);
                let ratio = e1 / e2;
                assert!((3.5..=4.5).contains(&ratio), "n={n} mu={mu} kappa={kappa}: ratio {ratio}");
            }
        }
    }

    #[test]
    fn discrete_annihilation_is_second_order() {
        // m²·|Σ tapᵢ (i/m)^l| stays bounded as m doubles.
        for n in 2..=3 {
            for &(mu, kappa) in &[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)] {
                for l in 0..n {
                    let c: Vec<f64> = [100usize, 200, 400]
                        .iter()
                        .map(|&m| {
                            let cfg = min_cfg(n, mu, kappa, Direction::AntiCausal, 1.0, m);
                            (m * m) as f64 * DiscreteKernel::from_config(&cfg).unwrap().moment(l).abs()
                        })
                        .collect();
                    assert!(c[2] <= 1.05 * c[0] + 1e-6, "n={n} l={l}: C sequence {c:?}");
                }
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(EstimatorConfig::minimal(0, 0.0, 0.0, Direction::Causal, 1.0, 10).is_err());
        assert!(EstimatorConfig::minimal(1, -1.0, 0.0, Direction::Causal, 1.0, 10).is_err());
        assert!(EstimatorConfig::minimal(1, 0.0, 0.0, Direction::Causal, 0.0, 10).is_err());
        assert!(EstimatorConfig::minimal(2, 0.0, 0.0, Direction::Causal, 1.0, 2).is_err());
        assert!(EstimatorConfig::affine(1, 1, 0.0, 0.0, Direction::Causal, 1.0, 2, None).is_err());
        assert!(EstimatorConfig::affine(1, 1, 0.0, 0.0, Direction::Causal, 1.0, 10, Some(1.5)).is_err());
        let cfg = EstimatorConfig::affine(1, 0, 0.0, 0.0, Direction::Causal, 1.0, 10, Some(0.4)).unwrap();
        assert_eq!(cfg.xi, 0.0);
        assert!(min_cfg(1, 0.0, 0.0, Direction::Causal, 1.0, 10)
            .with_endpoint(EndpointRule::Regularized { factor: 0.0 })
            .is_err());
        assert!(Direction::from_sign(0).is_err());
    }
}
