//! The auxiliary integrals behind the closed-form statistics:
//!
//! `J(λ, μ) = ∫_0^1 u^λ e^{μu} du = Σ_k μ^k / (k! (1 + λ + k))` and
//! `I^(m)(x, y) = ∫_0^1 e^{mθ(u-1)} u^x (1 + p(u-1))^y u^a du`.

use super::quadrature::{rule_for_degree, QuadratureRule};
use super::Y_SAFE;
use crate::error::{Error, Result};

pub const J_MAX_TERMS: usize = 10_000;
const J_REL_TOL: f64 = 1e-16;

/// `J(λ, μ)` by its power series.
pub fn integral_j(lambda: f64, mu: f64) -> Result<f64> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::invalid("lambda", lambda, "must be finite and >= 0"));
    }
    if !mu.is_finite() {
        return Err(Error::invalid("mu", mu, "must be finite"));
    }
    let base = 1.0 / (1.0 + lambda);
    if mu == 0.0 {
        return Ok(base);
    }
    let mut coef = 1.0;
    let mut sum = base;
    let mut abs_sum = base;
    for k in 1..J_MAX_TERMS {
        coef *= mu / k as f64;
        if !coef.is_finite() {
            break;
        }
        let term = coef / (1.0 + lambda + k as f64);
        sum += term;
        abs_sum += term.abs();
        if k as f64 > mu.abs() && term.abs() <= J_REL_TOL * sum.abs() {
            // alternating series for μ < 0 lose digits to cancellation
            if abs_sum > 1e4 * sum.abs() {
                break;
            }
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence {
        lambda,
        mu,
        terms: J_MAX_TERMS,
    })
}

/// `e^{-μ} J(λ, μ) = ∫_0^1 u^λ e^{μ(u-1)} du`, series when it is usable,
/// quadrature otherwise.
pub fn scaled_j(lambda: f64, mu: f64) -> f64 {
    if mu <= 700.0 {
        if let Ok(j) = integral_j(lambda, mu) {
            return (-mu).exp() * j;
        }
    }
    scaled_j_quadrature(lambda, mu)
}

/// Quadrature route for `e^{-μ} J(λ, μ)`; the rule grows with `μ` so the
/// boundary layer of width `1/μ` at `u = 1` stays resolved.
pub fn scaled_j_quadrature(lambda: f64, mu: f64) -> f64 {
    let rule = rule_for_degree(lambda.max(16.0 * mu.abs()));
    rule.integrate_weighted(lambda, |u| (mu * (u - 1.0)).exp())
}

/// Binomial(y, p) probabilities: the collapsed coefficients of the
/// alternating double sum `Σ_ℓ (-1)^{ℓ-j} C(y,ℓ) C(ℓ,j) p^ℓ = C(y,j) p^j (1-p)^{y-j}`.
pub(crate) fn binomial_weights(y: u32, p: f64) -> Vec<f64> {
    let n = y as usize;
    let mut w = vec![0.0; n + 1];
    if p <= 0.0 {
        w[0] = 1.0;
        return w;
    }
    if p >= 1.0 {
        w[n] = 1.0;
        return w;
    }
    let q = 1.0 - p;
    // start from the mode to avoid underflow at either end
    let mode = ((n as f64 + 1.0) * p).floor().min(n as f64) as usize;
    let ln_c = ln_choose(n, mode);
    w[mode] = (ln_c + mode as f64 * p.ln() + (n - mode) as f64 * q.ln()).exp();
    let ratio = p / q;
    for j in mode..n {
        w[j + 1] = w[j] * (n - j) as f64 / (j + 1) as f64 * ratio;
    }
    for j in (0..mode).rev() {
        w[j] = w[j + 1] * (j + 1) as f64 / (n - j) as f64 / ratio;
    }
    w
}

fn ln_choose(n: usize, k: usize) -> f64 {
    use crate::models::sampling::ln_factorial;
    ln_factorial(n as u64) - ln_factorial(k as u64) - ln_factorial((n - k) as u64)
}

/// `I^(m)(x, y)` for the Poisson INAR(1) null with weight `u^a`.
///
/// Uses the binomial expansion `e^{-mθ} Σ_j C(y,j) p^j (1-p)^{y-j} J(a+x+j, mθ)`
/// for `y <= 2·Y_SAFE`, direct quadrature of the integrand beyond.
pub fn integral_i(m: u32, x: u32, y: u32, p_hat: f64, theta_hat: f64, a: f64) -> f64 {
    debug_assert!(m <= 2);
    if y <= 2 * Y_SAFE {
        let mu = m as f64 * theta_hat;
        binomial_weights(y, p_hat)
            .iter()
            .enumerate()
            .map(|(j, &b)| b * scaled_j(a + (x as u64 + j as u64) as f64, mu))
            .sum()
    } else {
        integral_i_quadrature(m, x, y, p_hat, theta_hat, a, None)
    }
}

pub(crate) fn integral_i_quadrature(
    m: u32,
    x: u32,
    y: u32,
    p_hat: f64,
    theta_hat: f64,
    a: f64,
    rule: Option<&QuadratureRule>,
) -> f64 {
    let rule = rule.unwrap_or_else(|| rule_for_degree(x as f64 + y as f64 + a + 16.0 * theta_hat));
    let mu = m as f64 * theta_hat;
    rule.integrate_weighted(a, |u| {
        (mu * (u - 1.0)).exp()
            * crate::pgf::pow_count(u, x)
            * crate::pgf::pow_count(1.0 + p_hat * (u - 1.0), y)
    })
}

/// The uncollapsed alternating double-sum expansion, kept for cross-checking the
/// collapsed expansion on small `y`.
pub fn integral_i_alternating(m: u32, x: u32, y: u32, p_hat: f64, theta_hat: f64, a: f64) -> f64 {
    let mu = m as f64 * theta_hat;
    let mut total = 0.0;
    for l in 0..=y as usize {
        for j in 0..=l {
            let sign = if (l - j) % 2 == 0 { 1.0 } else { -1.0 };
            let c = (ln_choose(y as usize, l) + ln_choose(l, j)).exp();
            total += sign * c * p_hat.powi(l as i32) * scaled_j(a + (x as usize + j) as f64, mu);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn j_analytic_values() {
        assert_eq!(integral_j(3.0, 0.0).unwrap(), 0.25);
        assert!((integral_j(0.0, 1.0).unwrap() - (E - 1.0)).abs() < 1e-15);
        assert!((integral_j(2.0, 1.0).unwrap() - (E - 2.0)).abs() < 1e-15);
        // ∫ e^{-u} du = 1 - 1/e
        assert!((integral_j(0.0, -1.0).unwrap() - (1.0 - 1.0 / E)).abs() < 1e-15);
    }

    #[test]
    fn j_rejects_bad_input_and_overflow() {
        assert!(integral_j(-1.0, 1.0).is_err());
        assert!(matches!(
            integral_j(0.0, 800.0),
            Err(Error::NonConvergence { .. })
        ));
        assert!(matches!(
            integral_j(0.0, -60.0),
            Err(Error::NonConvergence { .. })
        ));
    }

    #[test]
    fn scaled_j_falls_back_smoothly() {
        // both routes near the switch point
        let series = (-700.0f64).exp() * integral_j(3.0, 700.0).unwrap();
        let quad = scaled_j_quadrature(3.0, 700.0);
        assert!(
            ((series - quad) / series).abs() < 1e-10,
            "{series} vs {quad}"
        );
        // large μ: ∫ e^{μ(u-1)} du = (1 - e^{-μ})/μ
        let v = scaled_j(0.0, 2000.0);
        assert!((v - 1.0 / 2000.0).abs() < 1e-14);
    }

    #[test]
    fn binomial_weights_sum_to_one() {
        for &(y, p) in &[
            (0u32, 0.3),
            (1, 0.5),
            (30, 0.999_999),
            (60, 1e-6),
            (200, 0.4),
        ] {
            let w = binomial_weights(y, p);
            assert_eq!(w.len(), y as usize + 1);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12, "y={y} p={p}");
        }
        let w = binomial_weights(2, 0.5);
        assert!((w[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn i_examples() {
        assert!((integral_i(0, 4, 0, 0.3, 2.0, 0.0) - 0.2).abs() < 1e-15);
        assert!((integral_i(0, 4, 0, 0.3, 2.0, 1.5) - 1.0 / 6.5).abs() < 1e-15);
        assert!((integral_i(1, 0, 0, 0.5, 1.0, 0.0) - (1.0 - 1.0 / E)).abs() < 1e-15);
        let e2 = E * E;
        let expect = (0.5 * (e2 - 1.0) / 2.0 + 0.5 * (e2 + 1.0) / 4.0) / e2;
        assert!((integral_i(2, 0, 1, 0.5, 1.0, 0.0) - expect).abs() < 1e-14);
        assert!((expect - 0.3581).abs() < 1e-4);
    }

    #[test]
    fn collapsed_expansion_equals_alternating_form() {
        for m in 0..=2 {
            for x in [0u32, 3, 7] {
                for y in 0..=8u32 {
                    for &(p, theta, a) in &[(0.3, 1.2, 0.0), (0.6, 4.0, 2.0), (0.85, 0.4, 5.0)] {
                        let c = integral_i(m, x, y, p, theta, a);
                        let alt = integral_i_alternating(m, x, y, p, theta, a);
                        assert!(((c - alt) / c).abs() < 1e-9, "m={m} x={x} y={y}: {c} {alt}");
                    }
                }
            }
        }
    }

    #[test]
    fn expansion_and_quadrature_agree_across_threshold() {
        for &y in &[5u32, 30, 60, 61, 90] {
            let e = integral_i(1, 4, y, 0.6, 3.0, 1.0);
            let q = integral_i_quadrature(1, 4, y, 0.6, 3.0, 1.0, None);
            assert!(((e - q) / q).abs() < 1e-12, "y={y}: {e} {q}");
        }
    }
}
