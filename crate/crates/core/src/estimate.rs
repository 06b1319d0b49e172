//! Conditional least-squares (CLS) fits of the Poisson null models.
//!
//! Under every null the one-step conditional mean is linear in the lags,
//! `E(Y_t | past) = c + Σ_j b_j Y_{t-j}`, so minimizing the summed squared
//! one-step prediction errors is an ordinary least-squares regression that we
//! solve through the centered normal equations. Estimates falling outside the
//! admissible parameter region are clamped onto it and flagged.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::CountSeries;
use crate::numeric::compensated_sum;
use crate::pgf::{NullFamily, NullParams};

/// Margin keeping clamped parameters strictly inside the open constraints.
pub const CLAMP_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub family: NullFamily,
    /// Admissible (possibly clamped) estimates.
    pub params: NullParams,
    /// The unconstrained least-squares minimizer.
    pub unclamped: NullParams,
    /// Names of parameters that were moved onto the admissible region.
    pub clamped: Vec<&'static str>,
    /// Sum of squared one-step prediction errors at `params`.
    pub residual_ss: f64,
}

impl FitResult {
    pub fn was_clamped(&self) -> bool {
        !self.clamped.is_empty()
    }
}

/// Fits `family` to `series` by conditional least squares.
pub fn fit(series: &CountSeries, family: NullFamily) -> Result<FitResult> {
    match family {
        NullFamily::PoissonInar1 => cls_inar1(series),
        NullFamily::PoissonInarch1 => cls_inarch1(series),
        NullFamily::PoissonInar2 => cls_inar2(series),
    }
}

/// The CLS objective `Σ_t (Y_t - E_ϑ(Y_t | past))²` at arbitrary parameters.
pub fn cls_objective(series: &CountSeries, params: &NullParams) -> f64 {
    let y = series.values();
    match *params {
        NullParams::PoissonInar1 { p, theta } => compensated_sum(
            y.windows(2)
                .map(|w| (w[1] as f64 - p * w[0] as f64 - theta).powi(2)),
        ),
        NullParams::PoissonInarch1 { theta1, theta2 } => compensated_sum(
            y.windows(2)
                .map(|w| (w[1] as f64 - theta1 - theta2 * w[0] as f64).powi(2)),
        ),
        NullParams::PoissonInar2 { p1, p2, theta } => compensated_sum(
            y.windows(3)
                .map(|w| (w[2] as f64 - p1 * w[1] as f64 - p2 * w[0] as f64 - theta).powi(2)),
        ),
    }
}

/// Least-squares line of `Y_t` on `Y_{t-1}`, `t = 2..T`.
struct Lag1Fit {
    x_mean: f64,
    y_mean: f64,
    slope: f64,
}

impl Lag1Fit {
    fn intercept(&self, slope: f64) -> f64 {
        self.y_mean - slope * self.x_mean
    }
}

fn lag1_regression(series: &CountSeries) -> Result<Lag1Fit> {
    let y = series.values();
    if y.len() < 3 {
        return Err(Error::SeriesTooShort {
            needed: 3,
            got: y.len(),
        });
    }
    let n = (y.len() - 1) as f64;
    let x_mean = compensated_sum(y[..y.len() - 1].iter().map(|&v| v as f64)) / n;
    let y_mean = compensated_sum(y[1..].iter().map(|&v| v as f64)) / n;
    let sxx = compensated_sum(y.windows(2).map(|w| (w[0] as f64 - x_mean).powi(2)));
    let sxy = compensated_sum(
        y.windows(2)
            .map(|w| (w[0] as f64 - x_mean) * (w[1] as f64 - y_mean)),
    );
    if sxx <= 1e-9 {
        return Err(Error::DegenerateSeries(
            "lagged regressor has zero variance".into(),
        ));
    }
    Ok(Lag1Fit {
        x_mean,
        y_mean,
        slope: sxy / sxx,
    })
}

fn clamp_into(
    value: f64,
    lo: f64,
    hi: f64,
    name: &'static str,
    flags: &mut Vec<&'static str>,
) -> f64 {
    if value < lo {
        flags.push(name);
        lo
    } else if value > hi {
        flags.push(name);
        hi
    } else {
        value
    }
}

/// Poisson INAR(1): slope is `p̂`, intercept is `θ̂`. A clamped slope is
/// followed by the intercept that is optimal for it.
pub fn cls_inar1(series: &CountSeries) -> Result<FitResult> {
    let line = lag1_regression(series)?;
    let (slope, intercept) = (line.slope, line.intercept(line.slope));
    let mut clamped = Vec::new();
    let p = clamp_into(slope, CLAMP_EPS, 1.0 - CLAMP_EPS, "p", &mut clamped);
    let theta = clamp_into(
        line.intercept(p),
        CLAMP_EPS,
        f64::INFINITY,
        "theta",
        &mut clamped,
    );
    let params = NullParams::PoissonInar1 { p, theta };
    Ok(FitResult {
        family: NullFamily::PoissonInar1,
        params,
        unclamped: NullParams::PoissonInar1 {
            p: slope,
            theta: intercept,
        },
        clamped,
        residual_ss: cls_objective(series, &params),
    })
}

/// Poisson INARCH(1): intercept is `θ̂1`, slope is `θ̂2`.
pub fn cls_inarch1(series: &CountSeries) -> Result<FitResult> {
    let line = lag1_regression(series)?;
    let (slope, intercept) = (line.slope, line.intercept(line.slope));
    let mut clamped = Vec::new();
    let theta2 = clamp_into(slope, 0.0, 1.0 - CLAMP_EPS, "theta2", &mut clamped);
    let theta1 = clamp_into(
        line.intercept(theta2),
        CLAMP_EPS,
        f64::INFINITY,
        "theta1",
        &mut clamped,
    );
    let params = NullParams::PoissonInarch1 { theta1, theta2 };
    Ok(FitResult {
        family: NullFamily::PoissonInarch1,
        params,
        unclamped: NullParams::PoissonInarch1 {
            theta1: intercept,
            theta2: slope,
        },
        clamped,
        residual_ss: cls_objective(series, &params),
    })
}

/// Poisson INAR(2): `Y_t` on `(Y_{t-1}, Y_{t-2})`, `t = 3..T`.
pub fn cls_inar2(series: &CountSeries) -> Result<FitResult> {
    let y = series.values();
    if y.len() < 4 {
        return Err(Error::SeriesTooShort {
            needed: 4,
            got: y.len(),
        });
    }
    let n = (y.len() - 2) as f64;
    let m1 = compensated_sum(y[1..y.len() - 1].iter().map(|&v| v as f64)) / n;
    let m2 = compensated_sum(y[..y.len() - 2].iter().map(|&v| v as f64)) / n;
    let my = compensated_sum(y[2..].iter().map(|&v| v as f64)) / n;
    let centered = |w: &[u32]| (w[1] as f64 - m1, w[0] as f64 - m2, w[2] as f64 - my);
    let s11 = compensated_sum(y.windows(3).map(|w| centered(w).0.powi(2)));
    let s22 = compensated_sum(y.windows(3).map(|w| centered(w).1.powi(2)));
    let s12 = compensated_sum(y.windows(3).map(|w| {
        let c = centered(w);
        c.0 * c.1
    }));
    let s1y = compensated_sum(y.windows(3).map(|w| {
        let c = centered(w);
        c.0 * c.2
    }));
    let s2y = compensated_sum(y.windows(3).map(|w| {
        let c = centered(w);
        c.1 * c.2
    }));
    let det = s11 * s22 - s12 * s12;
    if s11 <= 1e-9 || s22 <= 1e-9 || det <= 1e-10 * s11 * s22 {
        return Err(Error::DegenerateSeries(
            "lag-1 and lag-2 regressors are collinear".into(),
        ));
    }
    let b1 = (s22 * s1y - s12 * s2y) / det;
    let b2 = (s11 * s2y - s12 * s1y) / det;
    let intercept = my - b1 * m1 - b2 * m2;

    let mut clamped = Vec::new();
    let (p1, p2) = project_slopes((b1, b2), [s11, s12, s22]);
    if p1 != b1 {
        clamped.push("p1");
    }
    if p2 != b2 {
        clamped.push("p2");
    }
    let theta = clamp_into(
        my - p1 * m1 - p2 * m2,
        CLAMP_EPS,
        f64::INFINITY,
        "theta",
        &mut clamped,
    );
    let params = NullParams::PoissonInar2 { p1, p2, theta };
    Ok(FitResult {
        family: NullFamily::PoissonInar2,
        params,
        unclamped: NullParams::PoissonInar2 {
            p1: b1,
            p2: b2,
            theta: intercept,
        },
        clamped,
        residual_ss: cls_objective(series, &params),
    })
}

/// Minimizes the profiled INAR(2) objective `(b - b̂)' S (b - b̂)` over
/// `p1, p2 >= 0`, `p1 + p2 <= 1 - ε`. Inside the region this is `b̂`;
/// otherwise the minimum lies on one of the three edges.
fn project_slopes(b: (f64, f64), [s11, s12, s22]: [f64; 3]) -> (f64, f64) {
    let c = 1.0 - CLAMP_EPS;
    if b.0 >= 0.0 && b.1 >= 0.0 && b.0 + b.1 <= c {
        return b;
    }
    let q = |p: (f64, f64)| {
        let (d1, d2) = (p.0 - b.0, p.1 - b.1);
        s11 * d1 * d1 + 2.0 * s12 * d1 * d2 + s22 * d2 * d2
    };
    let on_p1_zero = (0.0, (b.1 + s12 * b.0 / s22).clamp(0.0, c));
    let on_p2_zero = ((b.0 + s12 * b.1 / s11).clamp(0.0, c), 0.0);
    let s = ((s11 - s12) * b.0 + (s22 - s12) * (c - b.1)) / (s11 + s22 - 2.0 * s12);
    let s = s.clamp(0.0, c);
    let on_diagonal = (s, c - s);
    [on_p1_zero, on_p2_zero, on_diagonal]
        .into_iter()
        .min_by(|x, y| q(*x).total_cmp(&q(*y)))
        .expect("three candidates")
}
