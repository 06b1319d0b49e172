//! Parametric bootstrap test.
//!
//! The null model is fitted to the data and `S_T` computed. Each replicate
//! simulates a pseudo-series of the same length from the fitted null, refits
//! it, and recomputes the statistic with the refitted parameters. The p-value
//! is `(1 + #{b : S*_b >= S_T}) / (B + 1)`; ties count as exceedances.
//!
//! Replicate `b` draws from its own stream seeded by `derive_seed(seed, b)`,
//! so results do not depend on scheduling or on the number of threads. A
//! replicate whose pseudo-series cannot be fitted is redrawn from a fresh
//! sub-seed, up to [`MAX_REDRAWS`] times.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{fit, FitResult};
use crate::models::{derive_seed, simulate, CountSeries, DEFAULT_BURN_IN};
use crate::pgf::{NullFamily, NullParams};
use crate::statistic::{statistic, Route, WeightSpec};

pub const MAX_REDRAWS: usize = 100;
pub const DEFAULT_REPLICATES: usize = 499;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub null_family: NullFamily,
    pub weight: WeightSpec,
    /// Number of bootstrap replicates `B`.
    pub replicates: usize,
    pub seed: u64,
    #[serde(default)]
    pub route: Route,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    /// Run replicates on the rayon pool.
    #[serde(default = "default_true")]
    pub parallel: bool,
    /// Keep the replicate statistics in the result.
    #[serde(default)]
    pub keep_replicates: bool,
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

fn default_true() -> bool {
    true
}

impl TestConfig {
    pub fn new(null_family: NullFamily, a: f64, replicates: usize, seed: u64) -> Result<Self> {
        let config = Self {
            null_family,
            weight: WeightSpec::new(a)?,
            replicates,
            seed,
            route: Route::Auto,
            burn_in: DEFAULT_BURN_IN,
            parallel: true,
            keep_replicates: false,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        WeightSpec::new(self.weight.a)?;
        if self.replicates == 0 {
            return Err(Error::Config(
                "number of bootstrap replicates must be >= 1".into(),
            ));
        }
        if self.route == Route::Closed && self.null_family == NullFamily::PoissonInar2 {
            return Err(Error::Config(
                "no closed form is available for the INAR(2) null".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Route used for the statistic on the original data.
    pub route: Route,
    /// Negative roundoff was floored on the original data.
    pub floored: bool,
    /// Replicates whose refit was clamped onto the admissible region.
    pub clamped_replicates: usize,
    /// Total number of pseudo-series discarded as degenerate.
    pub redraws: usize,
    /// Replicate statistics floored at zero.
    pub floored_replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    #[serde(rename = "B")]
    pub replicate_count: usize,
    pub family: NullFamily,
    pub a: f64,
    pub params: NullParams,
    pub fit: FitResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

impl TestResult {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value <= alpha
    }
}

/// `(1 + #{S*_b >= S_T}) / (B + 1)`.
pub fn p_value(statistic: f64, replicates: &[f64]) -> f64 {
    let exceed = replicates.iter().filter(|&&s| s >= statistic).count();
    (1 + exceed) as f64 / (replicates.len() + 1) as f64
}

/// Runs the bootstrap test on `series`.
pub fn bootstrap_test(series: &CountSeries, config: &TestConfig) -> Result<TestResult> {
    let mut results = bootstrap_test_weights(series, config, &[config.weight])?;
    Ok(results.remove(0))
}

/// Runs the test for several weight exponents at once. The pseudo-series and
/// refits are shared, so each result equals the one obtained by
/// [`bootstrap_test`] with the corresponding weight.
pub fn bootstrap_test_weights(
    series: &CountSeries,
    config: &TestConfig,
    weights: &[WeightSpec],
) -> Result<Vec<TestResult>> {
    run(series, config, weights, ReplicateFit::Refit)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ReplicateFit {
    Refit,
    /// Evaluates replicate statistics at the original estimate. Wrong; kept
    /// only so tests can confirm that refitting matters.
    #[cfg_attr(not(test), allow(dead_code))]
    PlugIn,
}

struct Replicate {
    stats: Vec<(f64, bool)>,
    clamped: bool,
    redraws: usize,
}

fn run(
    series: &CountSeries,
    config: &TestConfig,
    weights: &[WeightSpec],
    mode: ReplicateFit,
) -> Result<Vec<TestResult>> {
    config.validate()?;
    if weights.is_empty() {
        return Err(Error::Config(
            "at least one weight exponent is required".into(),
        ));
    }
    for w in weights {
        WeightSpec::new(w.a)?;
    }
    let fitted = fit(series, config.null_family)?;
    let observed = weights
        .iter()
        .map(|&w| statistic(series, &fitted.params, w, config.route))
        .collect::<Result<Vec<_>>>()?;

    let model = fitted.params.to_model();
    let t = series.len();
    let replicate = |b: usize| -> Result<Replicate> {
        let base = derive_seed(config.seed, b as u64);
        for attempt in 0..MAX_REDRAWS {
            let seed = if attempt == 0 {
                base
            } else {
                derive_seed(base, attempt as u64)
            };
            let pseudo = simulate(&model, t, config.burn_in, seed)?;
            let refit = match fit(&pseudo, config.null_family) {
                Ok(f) => f,
                Err(e) if e.is_degenerate() => continue,
                Err(e) => return Err(e),
            };
            let params = match mode {
                ReplicateFit::Refit => refit.params,
                ReplicateFit::PlugIn => fitted.params,
            };
            let stats = weights
                .iter()
                .map(|&w| {
                    statistic(&pseudo, &params, w, config.route).map(|v| (v.value, v.floored))
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(Replicate {
                stats,
                clamped: refit.was_clamped(),
                redraws: attempt,
            });
        }
        Err(Error::TooManyRedraws {
            replicate: b,
            attempts: MAX_REDRAWS,
        })
    };
    let reps: Vec<Replicate> = if config.parallel {
        (0..config.replicates)
            .into_par_iter()
            .map(replicate)
            .collect::<Result<_>>()?
    } else {
        (0..config.replicates)
            .map(replicate)
            .collect::<Result<_>>()?
    };

    let clamped_replicates = reps.iter().filter(|r| r.clamped).count();
    let redraws = reps.iter().map(|r| r.redraws).sum();
    let results = weights
        .iter()
        .zip(&observed)
        .enumerate()
        .map(|(i, (w, obs))| {
            let stars: Vec<f64> = reps.iter().map(|r| r.stats[i].0).collect();
            TestResult {
                statistic: obs.value,
                p_value: p_value(obs.value, &stars),
                replicate_count: config.replicates,
                family: config.null_family,
                a: w.a,
                params: fitted.params,
                fit: fitted.clone(),
                diagnostics: Diagnostics {
                    route: obs.route,
                    floored: obs.floored,
                    clamped_replicates,
                    redraws,
                    floored_replicates: reps.iter().filter(|r| r.stats[i].1).count(),
                },
                replicates: config.keep_replicates.then_some(stars),
            }
        })
        .collect();
    Ok(results)
}
