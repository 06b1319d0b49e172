//! The weighted L2 distance between the empirical and the semiparametric null
//! PGF,
//!
//! ```text
//! S_T = T ∫_0^1 (ĝ_T(u) − ĝ_T0(u))² u^a du,
//! ```
//!
//! computed either in closed form (Poisson INAR(1) and INARCH(1) nulls) or by
//! Gauss–Legendre quadrature (every null). The two routes are independent and
//! are cross-checked in the tests.
//!
//! The closed forms expand the square into a double sum over observation
//! pairs. Because the summand depends on a pair only through its two values,
//! the sum is regrouped over the distinct-value histogram, costing `O(K²)` in
//! the number `K` of distinct counts.

mod integrals;
mod quadrature;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{CountSeries, Histogram};
use crate::numeric::CompensatedSum;
use crate::pgf::{EmpiricalPgf, JointEmpiricalPgf, NullEstimate, NullParams};

pub use integrals::{
    integral_i, integral_i_alternating, integral_j, scaled_j, scaled_j_quadrature, J_MAX_TERMS,
};
pub use quadrature::{default_rule, rule_for_degree, QuadratureRule, DEFAULT_ORDER};

/// Largest count for which the INAR(1) closed form uses the binomial
/// expansion; beyond it every `I`-term is integrated numerically.
pub const Y_SAFE: u32 = 30;

/// Roundoff below this (negative) value is reported when flooring at zero.
pub const NEGATIVE_TOLERANCE: f64 = -1e-9;

/// Weight function `w(u) = u^a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub a: f64,
}

impl WeightSpec {
    pub fn new(a: f64) -> Result<Self> {
        if a.is_finite() && a >= 0.0 {
            Ok(Self { a })
        } else {
            Err(Error::invalid(
                "a",
                a,
                "weight exponent must be finite and >= 0",
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    /// Closed form where one exists and counts stay below [`Y_SAFE`],
    /// quadrature otherwise.
    #[default]
    Auto,
    Closed,
    Quadrature,
}

impl std::str::FromStr for Route {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Route::Auto),
            "closed" => Ok(Route::Closed),
            "quadrature" => Ok(Route::Quadrature),
            _ => Err(Error::Config(format!("unknown route `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatisticValue {
    pub value: f64,
    /// The route actually used (never `Auto`).
    pub route: Route,
    /// The raw value was below [`NEGATIVE_TOLERANCE`] before flooring.
    pub floored: bool,
}

fn floor_at_zero(raw: f64, route: Route) -> StatisticValue {
    StatisticValue {
        value: raw.max(0.0),
        route,
        floored: raw < NEGATIVE_TOLERANCE,
    }
}

/// Evaluates `S_T` for a fitted null on `series` by the requested route.
pub fn statistic(
    series: &CountSeries,
    params: &NullParams,
    weight: WeightSpec,
    route: Route,
) -> Result<StatisticValue> {
    let a = weight.a;
    let resolved = match (route, params) {
        (Route::Closed, NullParams::PoissonInar2 { .. }) => {
            return Err(Error::Config(
                "no closed form is available for the INAR(2) null".into(),
            ))
        }
        (Route::Auto, NullParams::PoissonInar2 { .. }) => Route::Quadrature,
        (Route::Auto, _) if series.max() > Y_SAFE => Route::Quadrature,
        (Route::Auto, _) => Route::Closed,
        (r, _) => r,
    };
    let raw = match (resolved, *params) {
        (Route::Closed, NullParams::PoissonInar1 { p, theta }) => {
            closed_inar1_raw(series, p, theta, a)
        }
        (Route::Closed, NullParams::PoissonInarch1 { theta1, theta2 }) => {
            closed_inarch1_raw(series, theta1, theta2, a)
        }
        _ => {
            let rule = auto_rule(series, params, a);
            let null = NullEstimate::new(*params, series);
            quadrature_raw(series, &null, weight, rule)?
        }
    };
    Ok(floor_at_zero(raw, resolved))
}

/// A rule exact for the polynomial part of the integrand, with headroom for
/// the exponential factors.
fn auto_rule(series: &CountSeries, params: &NullParams, a: f64) -> &'static QuadratureRule {
    let m = series.max() as f64;
    let rate = match *params {
        NullParams::PoissonInar1 { theta, .. } | NullParams::PoissonInar2 { theta, .. } => theta,
        NullParams::PoissonInarch1 { theta1, theta2 } => theta1 + theta2 * m,
    };
    let degree = 2.0 * m + a.ceil() + 4.0 * rate;
    if a.fract() == 0.0 {
        rule_for_degree(degree)
    } else {
        rule_for_degree(4.0 * degree + 3.0)
    }
}

fn weighted_l2(
    t: usize,
    points: &[(f64, f64)],
    emp: &EmpiricalPgf,
    null: impl Fn(f64) -> f64,
) -> f64 {
    let mut acc = CompensatedSum::new();
    for &(u, w) in points {
        let d = emp.eval(u) - null(u);
        acc.add(w * d * d);
    }
    t as f64 * acc.value()
}

fn quadrature_raw(
    series: &CountSeries,
    null: &NullEstimate<'_>,
    weight: WeightSpec,
    rule: &QuadratureRule,
) -> Result<f64> {
    let emp = EmpiricalPgf::new(series);
    let points = rule.weighted_points(weight.a);
    let t = series.len();
    let value = match null.params {
        NullParams::PoissonInar1 { p, theta } => {
            let cond = EmpiricalPgf::new(null.series);
            weighted_l2(t, &points, &emp, |u| {
                (theta * (u - 1.0)).exp() * cond.eval((1.0 + p * (u - 1.0)).clamp(0.0, 1.0))
            })
        }
        NullParams::PoissonInarch1 { theta1, theta2 } => {
            let cond = EmpiricalPgf::new(null.series);
            weighted_l2(t, &points, &emp, |u| {
                (theta1 * (u - 1.0)).exp() * cond.eval((theta2 * (u - 1.0)).exp().min(1.0))
            })
        }
        NullParams::PoissonInar2 { p1, p2, theta } => {
            let joint = JointEmpiricalPgf::new(null.series)?;
            weighted_l2(t, &points, &emp, |u| {
                (theta * (u - 1.0)).exp()
                    * joint.eval(
                        (1.0 + p1 * (u - 1.0)).clamp(0.0, 1.0),
                        (1.0 + p2 * (u - 1.0)).clamp(0.0, 1.0),
                    )
            })
        }
    };
    Ok(value)
}

/// `S_T` by quadrature for any null estimate.
pub fn statistic_quadrature(
    series: &CountSeries,
    null: &NullEstimate<'_>,
    weight: WeightSpec,
    rule: &QuadratureRule,
) -> Result<f64> {
    Ok(quadrature_raw(series, null, weight, rule)?.max(0.0))
}

/// `S_T` by quadrature against an arbitrary function standing in for the
/// null PGF estimate.
pub fn statistic_quadrature_with(
    series: &CountSeries,
    weight: WeightSpec,
    rule: &QuadratureRule,
    null_pgf: impl Fn(f64) -> f64,
) -> f64 {
    let emp = EmpiricalPgf::new(series);
    weighted_l2(
        series.len(),
        &rule.weighted_points(weight.a),
        &emp,
        null_pgf,
    )
    .max(0.0)
}

/// INAR(2) statistic: empirical PGF over all `T` observations against the
/// lag-pair based null estimate, quadrature only.
pub fn statistic_inar2(
    series: &CountSeries,
    p1_hat: f64,
    p2_hat: f64,
    theta_hat: f64,
    a: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    let weight = WeightSpec::new(a)?;
    let params = NullParams::PoissonInar2 {
        p1: p1_hat,
        p2: p2_hat,
        theta: theta_hat,
    };
    statistic_quadrature(series, &NullEstimate::new(params, series), weight, rule)
}

/// Closed-form `S_T` for the Poisson INAR(1) null:
/// `(1/T) Σ_{t,s} {I^(0)(Y_t+Y_s, 0) + I^(2)(0, Y_t+Y_s) − 2 I^(1)(Y_t, Y_s)}`.
pub fn statistic_closed_inar1(series: &CountSeries, p_hat: f64, theta_hat: f64, a: f64) -> f64 {
    closed_inar1_raw(series, p_hat, theta_hat, a).max(0.0)
}

fn closed_inar1_raw(series: &CountSeries, p: f64, theta: f64, a: f64) -> f64 {
    let hist = series.histogram();
    let m = series.max();
    let mut acc = CompensatedSum::new();
    if m <= Y_SAFE {
        let top = 2 * m as usize;
        let j1: Vec<f64> = (0..=top).map(|k| scaled_j(a + k as f64, theta)).collect();
        let j2: Vec<f64> = (0..=top)
            .map(|k| scaled_j(a + k as f64, 2.0 * theta))
            .collect();
        let binom: Vec<Vec<f64>> = (0..=top as u32)
            .map(|y| integrals::binomial_weights(y, p))
            .collect();
        let i2: Vec<f64> = binom
            .iter()
            .map(|b| b.iter().zip(&j2).map(|(w, j)| w * j).sum())
            .collect();
        for (x, nx) in hist.iter() {
            for (y, ny) in hist.iter() {
                let i1: f64 = binom[y as usize]
                    .iter()
                    .zip(&j1[x as usize..])
                    .map(|(w, j)| w * j)
                    .sum();
                let i0 = 1.0 / (1.0 + a + (x + y) as f64);
                acc.add(nx * ny * (i0 + i2[(x + y) as usize] - 2.0 * i1));
            }
        }
    } else {
        let mut i2_cache: HashMap<u32, f64> = HashMap::new();
        for (x, nx) in hist.iter() {
            for (y, ny) in hist.iter() {
                let z = x + y;
                let i2 = *i2_cache.entry(z).or_insert_with(|| {
                    integrals::integral_i_quadrature(2, 0, z, p, theta, a, None)
                });
                let i1 = integrals::integral_i_quadrature(1, x, y, p, theta, a, None);
                let i0 = 1.0 / (1.0 + a + z as f64);
                acc.add(nx * ny * (i0 + i2 - 2.0 * i1));
            }
        }
    }
    acc.value() / hist.total as f64
}

/// Closed-form `S_T` for the Poisson INARCH(1) null:
/// `(1/T) Σ_{t,s} {I^(0)(Y_t+Y_s, 0) + e^{-w_ts} J(a, w_ts) − 2 e^{-w_s} J(a+Y_t, w_s)}`
/// with `w_ts = 2θ1 + θ2(Y_t+Y_s)` and `w_s = θ1 + θ2 Y_s`.
pub fn statistic_closed_inarch1(
    series: &CountSeries,
    theta1_hat: f64,
    theta2_hat: f64,
    a: f64,
) -> f64 {
    closed_inarch1_raw(series, theta1_hat, theta2_hat, a).max(0.0)
}

fn closed_inarch1_raw(series: &CountSeries, theta1: f64, theta2: f64, a: f64) -> f64 {
    let hist: Histogram = series.histogram();
    let mut pair_cache: HashMap<u32, f64> = HashMap::new();
    let mut acc = CompensatedSum::new();
    for (x, nx) in hist.iter() {
        for (y, ny) in hist.iter() {
            let z = x + y;
            let sq = *pair_cache
                .entry(z)
                .or_insert_with(|| scaled_j(a, 2.0 * theta1 + theta2 * z as f64));
            let cross = scaled_j(a + x as f64, theta1 + theta2 * y as f64);
            let i0 = 1.0 / (1.0 + a + z as f64);
            acc.add(nx * ny * (i0 + sq - 2.0 * cross));
        }
    }
    acc.value() / hist.total as f64
}
