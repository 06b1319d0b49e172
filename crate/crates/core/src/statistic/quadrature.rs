use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const DEFAULT_ORDER: usize = 128;

/// Gauss–Legendre rule mapped onto `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Builds the `n`-point rule and checks it integrates `u^k`, `k < 2n`,
    /// exactly (to roundoff).
    pub fn gauss_legendre(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("quadrature order must be >= 1".into()));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p1, mut p2) = (1.0, 0.0);
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
                }
                dp = nf * (z * p1 - p2) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let w = 1.0 / ((1.0 - z * z) * dp * dp);
            // w above is half the [-1, 1] weight, i.e. the [0, 1] weight
            nodes[i] = 0.5 * (1.0 - z);
            nodes[n - 1 - i] = 0.5 * (1.0 + z);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        let rule = Self { nodes, weights };
        rule.verify()?;
        Ok(rule)
    }

    fn verify(&self) -> Result<()> {
        if self.weights.iter().any(|&w| w.is_nan() || w <= 0.0) {
            return Err(Error::Config("nonpositive quadrature weight".into()));
        }
        if self.nodes.iter().any(|&u| !(u > 0.0 && u < 1.0)) {
            return Err(Error::Config("quadrature node outside (0, 1)".into()));
        }
        for k in 0..2 * self.order() {
            let approx: f64 = self
                .nodes
                .iter()
                .zip(&self.weights)
                .map(|(&u, &w)| w * u.powi(k as i32))
                .sum();
            let exact = 1.0 / (k as f64 + 1.0);
            if ((approx - exact) / exact).abs() > 1e-11 {
                return Err(Error::Config(format!(
                    "quadrature rule of order {} fails on degree {k}",
                    self.order()
                )));
            }
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&u, &w)| w * f(u))
            .sum()
    }

    /// Evaluation points and weights for `∫_0^1 f(u) u^a du`.
    ///
    /// Integer `a` is folded into the weights. For fractional `a` the rule is
    /// applied after `u = s^4`, which turns `u^a du` into `4 s^{4a+3} ds` and
    /// removes the endpoint singularity from the low-order derivatives.
    pub fn weighted_points(&self, a: f64) -> Vec<(f64, f64)> {
        if a.fract() == 0.0 {
            let k = a as i32;
            self.nodes
                .iter()
                .zip(&self.weights)
                .map(|(&u, &w)| (u, w * u.powi(k)))
                .collect()
        } else {
            self.nodes
                .iter()
                .zip(&self.weights)
                .map(|(&s, &w)| {
                    let s2 = s * s;
                    let u = s2 * s2;
                    (u, w * 4.0 * s2 * s * u.powf(a))
                })
                .collect()
        }
    }

    pub fn integrate_weighted(&self, a: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.weighted_points(a)
            .into_iter()
            .map(|(u, w)| w * f(u))
            .sum()
    }
}

const CACHED_ORDERS: [usize; 7] = [128, 256, 512, 1024, 2048, 4096, 8192];

fn cached(idx: usize) -> &'static QuadratureRule {
    static RULES: [OnceLock<QuadratureRule>; 7] = [const { OnceLock::new() }; 7];
    RULES[idx].get_or_init(|| {
        QuadratureRule::gauss_legendre(CACHED_ORDERS[idx]).expect("Gauss-Legendre construction")
    })
}

/// Shared 128-point rule.
pub fn default_rule() -> &'static QuadratureRule {
    cached(0)
}

/// Smallest cached rule exact for polynomials of degree `degree` with some
/// headroom for the smooth exponential factors.
pub fn rule_for_degree(degree: f64) -> &'static QuadratureRule {
    let need = degree + 48.0;
    let idx = CACHED_ORDERS
        .iter()
        .position(|&n| (2 * n - 1) as f64 >= need)
        .unwrap_or(CACHED_ORDERS.len() - 1);
    cached(idx)
}
