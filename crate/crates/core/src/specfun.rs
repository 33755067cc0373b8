//! Special functions and shifted Jacobi polynomials on `[0, 1]`.
//!
//! The Jacobi polynomials used throughout the crate are orthogonal on `[0, 1]`
//! with respect to the weight `w^{µ,κ}(t) = (1 − t)^µ t^κ`, and are written in
//! the explicit form
//!
//! ```text
//! P_n^{µ,κ}(t) = Σ_{s=0}^{n} C(n+µ, s) C(n+κ, n−s) (t − 1)^{n−s} t^s
//! ```
//!
//! where the binomial coefficients have real upper index.

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Largest argument for which `Γ(x)` is a finite `f64`.
pub const GAMMA_MAX_ARG: f64 = 171.624_376_956_302_7;

/// Lanczos sum for `z ≥ 0.5`, returns `(series, t)` with `t = z − 1 + g + 0.5`.
fn lanczos(z: f64) -> (f64, f64) {
    let x = z - 1.0;
    let mut a = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (a, x + LANCZOS_G + 0.5)
}

/// Gamma function for positive real arguments.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("gamma requires x > 0, got {x}")));
    }
    if x > GAMMA_MAX_ARG {
        return Err(Error::Overflow(format!("gamma({x}) exceeds f64 range")));
    }
    if x < 0.5 {
        // Γ(x) = Γ(x + 1) / x keeps the Lanczos sum on its accurate branch.
        return Ok(gamma_fn(x + 1.0)? / x);
    }
    let (a, t) = lanczos(x);
    // Split the power so t^(x−0.5) does not overflow before e^{−t} tames it.
    let half = t.powf((x - 0.5) / 2.0);
    Ok((2.0 * std::f64::consts::PI).sqrt() * half * (half * (-t).exp()) * a)
}

/// Natural logarithm of `Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    if x < 0.5 {
        return Ok(ln_gamma(x + 1.0)? - x.ln());
    }
    let (a, t) = lanczos(x);
    Ok(LN_SQRT_2PI + (x - 0.5) * t.ln() - t + a.ln())
}

/// Euler Beta function `B(a, b) = Γ(a)Γ(b)/Γ(a+b)`.
///
/// Evaluated directly when `a + b` keeps every Gamma factor finite, and in
/// log space otherwise.
pub fn beta_fn(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(Error::Domain(format!("beta requires a, b > 0, got ({a}, {b})")));
    }
    if a + b < GAMMA_MAX_ARG - 1.0 {
        return Ok(gamma_fn(a)? * gamma_fn(b)? / gamma_fn(a + b)?);
    }
    let v = (ln_gamma(a)? + ln_gamma(b)? - ln_gamma(a + b)?).exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow(format!("beta({a}, {b})")))
    }
}

/// Binomial coefficient `C(a, k)` with real upper index.
///
/// Equal to `Γ(a+1)/(Γ(k+1)Γ(a−k+1))` wherever the Gamma form is defined,
/// computed as the falling product `Π_{j<k} (a − j)/(j + 1)`.
pub fn binomial_real(a: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (a - j as f64) / (j as f64 + 1.0))
}

/// Degree and weight exponents of a shifted Jacobi polynomial.
///
/// `mu` is the exponent of `(1 − t)` and `kappa` the exponent of `t` in the
/// orthogonality weight.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct JacobiIndex {
    pub degree: usize,
    pub mu: f64,
    pub kappa: f64,
}

impl JacobiIndex {
    pub fn new(degree: usize, mu: f64, kappa: f64) -> Result<Self> {
        if !(mu > -1.0) || !(kappa > -1.0) || !mu.is_finite() || !kappa.is_finite() {
            return Err(Error::Domain(format!(
                "Jacobi weight exponents must exceed -1, got mu={mu}, kappa={kappa}"
            )));
        }
        Ok(JacobiIndex { degree, mu, kappa })
    }

    /// Coefficients `C(n+µ, s) C(n+κ, n−s)` of the explicit sum, indexed by `s`.
    pub(crate) fn term_coeffs(&self) -> Vec<f64> {
        let n = self.degree;
        let nf = n as f64;
        (0..=n)
            .map(|s| binomial_real(nf + self.mu, s) * binomial_real(nf + self.kappa, n - s))
            .collect()
    }

    /// Monomial coefficients of the polynomial, ascending powers of `t`.
    pub fn monomial_coeffs(&self) -> Vec<f64> {
        let n = self.degree;
        let mut out = vec![0.0; n + 1];
        for (s, c) in self.term_coeffs().into_iter().enumerate() {
            // (t − 1)^{n−s} t^s
            let k = n - s;
            for j in 0..=k {
                let sign = if (k - j).is_multiple_of(2) { 1.0 } else { -1.0 };
                out[s + j] += c * sign * binomial_real(k as f64, j);
            }
        }
        out
    }
}

/// Evaluates `P_n^{µ,κ}(t)` for `t ∈ [0, 1]` by the explicit sum.
pub fn jacobi_eval(idx: JacobiIndex, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("jacobi_eval requires t in [0, 1], got {t}")));
    }
    Ok(jacobi_eval_unchecked(&idx, t))
}

pub(crate) fn jacobi_eval_unchecked(idx: &JacobiIndex, t: f64) -> f64 {
    let n = idx.degree;
    idx.term_coeffs()
        .iter()
        .enumerate()
        .map(|(s, c)| c * (t - 1.0).powi((n - s) as i32) * t.powi(s as i32))
        .sum()
}

/// Squared weighted norm `∫₀¹ w^{µ,κ}(t) [P_i^{µ,κ}(t)]² dt`.
pub fn jacobi_norm_sq(idx: JacobiIndex) -> f64 {
    let (a, b) = (idx.mu, idx.kappa);
    if idx.degree == 0 {
        // a + b + 1 may be negative here, so use Γ(a+b+1)(a+b+1) = Γ(a+b+2).
        return beta_fn(b + 1.0, a + 1.0).expect("a, b > -1");
    }
    let i = idx.degree as f64;
    // (1/(2i+a+b+1)) Γ(i+a+1)Γ(i+b+1) / (Γ(i+a+b+1) i!)
    let ln = ln_gamma(i + a + 1.0).expect("a > -1")
        + ln_gamma(i + b + 1.0).expect("b > -1")
        - ln_gamma(i + a + b + 1.0).expect("i >= 1 and a + b > -2")
        - ln_gamma(i + 1.0).expect("i >= 1");
    ln.exp() / (2.0 * i + a + b + 1.0)
}

/// Exact weighted moment `∫₀¹ w^{µ,κ}(τ) P_n^{µ,κ}(τ) τ^j dτ`.
///
/// Each term of the explicit sum integrates to a single Beta value, since
/// `(τ − 1)^{n−s} = (−1)^{n−s} (1 − τ)^{n−s}`.
pub fn jacobi_weighted_moment(idx: JacobiIndex, j: usize) -> f64 {
    if j < idx.degree {
        return 0.0;
    }
    jacobi_weighted_moment_expanded(idx, j)
}

/// Same as [`jacobi_weighted_moment`] but without short-circuiting `j < n`,
/// so orthogonality can be checked numerically rather than assumed.
pub fn jacobi_weighted_moment_expanded(idx: JacobiIndex, j: usize) -> f64 {
    let n = idx.degree;
    idx.term_coeffs()
        .iter()
        .enumerate()
        .map(|(s, c)| {
            let sign = if (n - s).is_multiple_of(2) { 1.0 } else { -1.0 };
            sign * c
                * beta_fn(idx.kappa + (s + j) as f64 + 1.0, idx.mu + (n - s) as f64 + 1.0)
                    .expect("exponents exceed -1")
        })
        .sum()
}

const ROOT_GRID: usize = 1024;
const ROOT_TOL: f64 = 1e-13;

/// Smallest zero of `P_n^{µ,κ}` in `(0, 1)`.
///
/// Brackets the first sign change on a uniform grid of 1024 cells, then
/// bisects to an interval narrower than `1e-13`.
pub fn smallest_root(idx: JacobiIndex) -> Result<f64> {
    if idx.degree == 0 {
        return Err(Error::Domain("smallest_root requires degree >= 1".into()));
    }
    let f = |t: f64| jacobi_eval_unchecked(&idx, t);
    let mut lo = 0.0;
    let mut f_lo = f(lo);
    for k in 1..=ROOT_GRID {
        let hi = k as f64 / ROOT_GRID as f64;
        let f_hi = f(hi);
        if f_hi == 0.0 {
            return Ok(hi);
        }
        if f_lo.signum() != f_hi.signum() {
            return Ok(bisect(f, lo, hi, f_lo));
        }
        lo = hi;
        f_lo = f_hi;
    }
    Err(Error::NoSignChange(format!("{idx:?}")))
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut f_lo: f64) -> f64 {
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn idx(n: usize, mu: f64, kappa: f64) -> JacobiIndex {
        JacobiIndex::new(n, mu, kappa).unwrap()
    }

    fn grid21() -> impl Iterator<Item = f64> {
        (0..=20).map(|k| k as f64 / 20.0)
    }

    #[test]
    fn gamma_examples() {
        assert_relative_eq!(gamma_fn(1.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(gamma_fn(4.0).unwrap(), 6.0, max_relative = 1e-14);
        assert_relative_eq!(gamma_fn(0.5).unwrap(), 1.772_453_850_905_516, max_relative = 1e-14);
    }

    #[test]
    fn gamma_factorials_to_sixty() {
        let mut fact = 1.0_f64;
        for k in 1..=60u32 {
            // Γ(k) = (k−1)!
            assert_relative_eq!(gamma_fn(k as f64).unwrap(), fact, max_relative = 1e-12);
            fact *= k as f64;
        }
    }

    #[test]
    fn gamma_recurrence() {
        let mut x = 0.013;
        while x < 59.0 {
            let lhs = gamma_fn(x + 1.0).unwrap();
            let rhs = x * gamma_fn(x).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
            x += 0.37;
        }
    }

    #[test]
    fn gamma_domain_and_overflow() {
        assert!(matches!(gamma_fn(0.0), Err(Error::Domain(_))));
        assert!(matches!(gamma_fn(-1.5), Err(Error::Domain(_))));
        assert!(matches!(gamma_fn(200.0), Err(Error::Overflow(_))));
        assert!(gamma_fn(171.0).unwrap().is_finite());
    }

    #[test]
    fn ln_gamma_matches_gamma() {
        for &x in &[0.1, 0.5, 1.7, 10.0, 55.5] {
            assert_relative_eq!(ln_gamma(x).unwrap(), gamma_fn(x).unwrap().ln(), epsilon = 1e-13);
        }
    }

    #[test]
    fn beta_examples() {
        assert_relative_eq!(beta_fn(1.0, 1.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(beta_fn(2.0, 3.0).unwrap(), 1.0 / 12.0, max_relative = 1e-13);
        assert!(matches!(beta_fn(0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(beta_fn(1.0, -0.2), Err(Error::Domain(_))));
    }

    /// Composite 4-point Gauss–Legendre on 64 panels after the substitution
    /// `t = u^5`, which removes the `t^{0.21}` endpoint singularity.
    fn beta_quadrature_oracle(a: f64, b: f64) -> f64 {
        let nodes = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
        let weights = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
        let g = |u: f64| {
            let t = u.powi(5);
            5.0 * u.powi(4) * t.powf(a - 1.0) * (1.0 - t).powf(b - 1.0)
        };
        let panels = 64;
        let h = 1.0 / panels as f64;
        let mut acc = 0.0;
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            for (x, w) in nodes.iter().zip(weights) {
                acc += w * g(mid + 0.5 * h * x) * 0.5 * h;
            }
        }
        acc
    }

    #[test]
    fn beta_against_quadrature() {
        let oracle = beta_quadrature_oracle(1.21, 2.0);
        assert_relative_eq!(beta_fn(1.21, 2.0).unwrap(), oracle, max_relative = 1e-10);
        // B(a, 2) = 1/(a(a+1))
        assert_relative_eq!(beta_fn(1.21, 2.0).unwrap(), 1.0 / (1.21 * 2.21), max_relative = 1e-11);
    }

    #[test]
    fn beta_large_arguments_use_log_space() {
        let v = beta_fn(150.0, 100.0).unwrap();
        let expected = (ln_gamma(150.0).unwrap() + ln_gamma(100.0).unwrap() - ln_gamma(250.0).unwrap()).exp();
        assert_relative_eq!(v, expected, max_relative = 1e-12);
        assert!(v > 0.0);
    }

    #[test]
    fn binomial_matches_gamma_form() {
        for &a in &[2.3, 4.5, 1.01, 3.0] {
            for k in (0..=3usize).filter(|&k| a - k as f64 + 1.0 > 0.0) {
                let g = gamma_fn(a + 1.0).unwrap()
                    / (gamma_fn(k as f64 + 1.0).unwrap() * gamma_fn(a - k as f64 + 1.0).unwrap());
                assert_relative_eq!(binomial_real(a, k), g, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn jacobi_eval_examples() {
        for &t in &[0.0, 0.3, 1.0] {
            assert_eq!(jacobi_eval(idx(0, 0.4, -0.3), t).unwrap(), 1.0);
        }
        assert_relative_eq!(jacobi_eval(idx(1, 0.0, 0.0), 0.25).unwrap(), -0.5, epsilon = 1e-15);
        assert_relative_eq!(jacobi_eval(idx(2, 1.0, 1.0), 1.0).unwrap(), 3.0, epsilon = 1e-14);
        assert!(matches!(jacobi_eval(idx(1, 0.0, 0.0), 1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn jacobi_index_rejects_bad_exponents() {
        assert!(JacobiIndex::new(2, -1.0, 0.0).is_err());
        assert!(JacobiIndex::new(2, 0.0, -1.2).is_err());
        assert!(JacobiIndex::new(2, f64::NAN, 0.0).is_err());
    }

    #[test]
    fn monomial_coeffs_agree_with_explicit_sum() {
        let p = idx(4, 0.7, -0.5);
        let c = p.monomial_coeffs();
        for t in grid21() {
            let horner = c.iter().rev().fold(0.0, |acc, v| acc * t + v);
            assert_relative_eq!(horner, jacobi_eval(p, t).unwrap(), epsilon = 1e-11);
        }
    }

    #[test]
    fn norm_examples() {
        assert_relative_eq!(jacobi_norm_sq(idx(0, 0.0, 0.0)), 1.0, max_relative = 1e-14);
        assert_relative_eq!(jacobi_norm_sq(idx(1, 0.0, 0.0)), 1.0 / 3.0, max_relative = 1e-13);
        assert_relative_eq!(
            jacobi_norm_sq(idx(0, 0.5, 0.5)),
            beta_fn(1.5, 1.5).unwrap(),
            max_relative = 1e-13
        );
        assert_relative_eq!(jacobi_norm_sq(idx(0, 0.5, 0.5)), std::f64::consts::FRAC_PI_8, max_relative = 1e-12);
    }

    #[test]
    fn norm_matches_moment_expansion() {
        // ‖P_n‖² = Σ_j a_j ∫ w P_n τ^j, with a_j the monomial coefficients of P_n.
        for &(mu, kappa) in &[(0.0, 0.0), (-0.5, 0.7), (2.0, -0.3), (0.3, 0.3)] {
            for n in 0..=4 {
                let p = idx(n, mu, kappa);
                let via_moments: f64 = p
                    .monomial_coeffs()
                    .iter()
                    .enumerate()
                    .map(|(j, a)| a * jacobi_weighted_moment(p, j))
                    .sum();
                assert_relative_eq!(jacobi_norm_sq(p), via_moments, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn moment_examples() {
        assert_eq!(jacobi_weighted_moment(idx(1, 0.0, 0.0), 0), 0.0);
        assert!(jacobi_weighted_moment_expanded(idx(1, 0.0, 0.0), 0).abs() < 1e-15);
        assert_relative_eq!(jacobi_weighted_moment(idx(1, 0.0, 0.0), 1), 1.0 / 6.0, max_relative = 1e-13);
        assert!(jacobi_weighted_moment_expanded(idx(2, 0.3, -0.4), 1).abs() < 1e-13);
    }

    #[test]
    fn orthogonality_by_moment_combination() {
        let exps = [-0.5, 0.0, 0.7, 2.0];
        for &mu in &exps {
            for &kappa in &exps {
                for n in 0..=4 {
                    for m in 0..=4 {
                        if m == n {
                            continue;
                        }
                        let pm = idx(m, mu, kappa).monomial_coeffs();
                        let inner: f64 = pm
                            .iter()
                            .enumerate()
                            .map(|(j, a)| a * jacobi_weighted_moment_expanded(idx(n, mu, kappa), j))
                            .sum();
                        assert!(inner.abs() <= 1e-10, "n={n} m={m} mu={mu} kappa={kappa}: {inner}");
                    }
                }
            }
        }
    }

    #[test]
    fn reflection_symmetry() {
        let exps = [-0.5, 0.0, 0.7, 2.0];
        for &mu in &exps {
            for &kappa in &exps {
                for n in 0..=5 {
                    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                    for t in grid21() {
                        let lhs = jacobi_eval(idx(n, mu, kappa), t).unwrap();
                        let rhs = sign * jacobi_eval(idx(n, kappa, mu), 1.0 - t).unwrap();
                        assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
                    }
                }
            }
        }
    }

    #[test]
    fn contiguous_recurrences() {
        let exps = [-0.5, 0.0, 0.7, 2.0];
        for &mu in &exps {
            for &kappa in &exps {
                for n in 0..=4usize {
                    let nf = n as f64;
                    let lead = 2.0 * nf + 2.0 + mu + kappa;
                    for t in grid21() {
                        let p = |d, m, k| jacobi_eval(idx(d, m, k), t).unwrap();
                        let next = p(n + 1, mu, kappa);
                        let cur = p(n, mu, kappa);
                        let up_mu = p(n, mu + 1.0, kappa);
                        let up_kappa = p(n, mu, kappa + 1.0);
                        let r18 = lead * (1.0 - t) * up_mu - ((1.0 + nf + mu) * cur - (nf + 1.0) * next);
                        let r19 = lead * t * up_kappa - ((1.0 + nf + kappa) * cur + (nf + 1.0) * next);
                        let r20 = next
                            - ((mu - kappa) / (2.0 * (nf + 1.0)) * cur
                                + lead / (2.0 * (nf + 1.0)) * (t * up_kappa - (1.0 - t) * up_mu));
                        for r in [r18, r19, r20] {
                            assert!(r.abs() <= 1e-10, "n={n} mu={mu} kappa={kappa} t={t}: {r}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn smallest_root_examples() {
        let r = smallest_root(idx(2, 1.0, 1.0)).unwrap();
        assert!((r - (1.0 - 1.0 / 5f64.sqrt()) / 2.0).abs() <= 1e-12);
        assert_eq!((r * 1000.0).round() / 1000.0, 0.276);
        // ξ(κ = −0.78, µ = −0.6, n = 1) is the smallest root of P_2^{0.4, 0.22}.
        let r = smallest_root(idx(2, -0.6 + 1.0, -0.78 + 1.0)).unwrap();
        assert_eq!((r * 1000.0).round() / 1000.0, 0.218);
        assert!(matches!(smallest_root(idx(0, 0.0, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn smallest_root_has_small_residual_and_no_earlier_sign_change() {
        let exps = [-0.9, -0.5, 0.0, 0.7, 2.0];
        for &mu in &exps {
            for &kappa in &exps {
                for n in 1..=5 {
                    let p = idx(n, mu, kappa);
                    let r = smallest_root(p).unwrap();
                    assert!(r > 0.0 && r < 1.0);
                    assert!(jacobi_eval(p, r).unwrap().abs() <= 1e-9);
                    let v0 = jacobi_eval(p, 0.0).unwrap();
                    for k in 0..2000 {
                        let t = r * k as f64 / 2000.0;
                        assert_eq!(jacobi_eval(p, t).unwrap().signum(), v0.signum());
                    }
                }
            }
        }
    }
}
