//! Monte Carlo size and power experiments.
//!
//! Each repetition simulates one series per length from the true model and
//! runs the bootstrap test for every weight exponent on it. Rejection rates
//! for all significance levels come from thresholding the stored p-values.
//! Repetitions run in parallel; the bootstrap inside a repetition runs
//! sequentially unless `nested_parallel` is set.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{bootstrap_test_weights, TestConfig};
use crate::error::{Error, Result};
use crate::models::{derive_seed, simulate, ModelSpec, DEFAULT_BURN_IN};
use crate::pgf::NullFamily;
use crate::statistic::{Route, WeightSpec};

/// Largest tolerated fraction of failed repetitions.
pub const MAX_FAILURE_RATE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MCConfig {
    pub truth: ModelSpec,
    pub null: NullFamily,
    /// Series lengths `T`.
    pub lengths: Vec<usize>,
    /// Weight exponents.
    pub a: Vec<f64>,
    /// Significance levels.
    pub alpha: Vec<f64>,
    /// Bootstrap replicates `B` per test.
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Monte Carlo repetitions `R`.
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    pub seed: u64,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default)]
    pub route: Route,
    #[serde(default)]
    pub nested_parallel: bool,
}

fn default_replicates() -> usize {
    199
}

fn default_repetitions() -> usize {
    300
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

impl MCConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("MCConfig serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.truth.validate()?;
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be >= 1".into()));
        }
        if self.lengths.is_empty() || self.a.is_empty() || self.alpha.is_empty() {
            return Err(Error::Config(
                "lengths, a and alpha must be nonempty".into(),
            ));
        }
        if let Some(&t) = self.lengths.iter().find(|&&t| t < 4) {
            return Err(Error::Config(format!("series length {t} is below 4")));
        }
        for &a in &self.a {
            WeightSpec::new(a)?;
        }
        for &alpha in &self.alpha {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::invalid("alpha", alpha, "must lie in (0, 1)"));
            }
        }
        self.test_config(0).validate()
    }

    fn test_config(&self, seed: u64) -> TestConfig {
        TestConfig {
            null_family: self.null,
            weight: WeightSpec { a: self.a[0] },
            replicates: self.replicates,
            seed,
            route: self.route,
            burn_in: self.burn_in,
            parallel: self.nested_parallel,
            keep_replicates: false,
        }
    }
}

/// Rejection rate for one `(T, a, α)` combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCCell {
    #[serde(rename = "T")]
    pub t: usize,
    pub a: f64,
    pub alpha: f64,
    pub rejection_rate: f64,
    /// `sqrt(rate (1 - rate) / R)` over the successful repetitions.
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    #[serde(rename = "T")]
    pub t: usize,
    pub repetition: usize,
    pub message: String,
}

/// All repetitions at one series length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthBlock {
    #[serde(rename = "T")]
    pub t: usize,
    /// `p_values[i][r]`: weight `a[i]`, `r`-th successful repetition.
    pub p_values: Vec<Vec<f64>>,
    pub failures: Vec<Failure>,
    pub redraws: usize,
    pub clamped_replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MCResult {
    pub config: MCConfig,
    pub cells: Vec<MCCell>,
    pub blocks: Vec<LengthBlock>,
    pub wall_time_secs: f64,
}

impl MCResult {
    pub fn cell(&self, t: usize, a: f64, alpha: f64) -> Option<&MCCell> {
        self.cells
            .iter()
            .find(|c| c.t == t && c.a == a && c.alpha == alpha)
    }

    pub fn failure_count(&self) -> usize {
        self.blocks.iter().map(|b| b.failures.len()).sum()
    }

    pub fn redraws(&self) -> usize {
        self.blocks.iter().map(|b| b.redraws).sum()
    }
}

/// Fraction of p-values at or below `alpha`, with its binomial standard error.
pub fn rejection_rate(p_values: &[f64], alpha: f64) -> (f64, f64) {
    if p_values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = p_values.len() as f64;
    let rate = p_values.iter().filter(|&&p| p <= alpha).count() as f64 / n;
    (rate, (rate * (1.0 - rate) / n).sqrt())
}

enum Outcome {
    Done {
        p_values: Vec<f64>,
        redraws: usize,
        clamped: usize,
    },
    Failed(String),
}

pub fn run_experiment(config: &MCConfig) -> Result<MCResult> {
    config.validate()?;
    let start = Instant::now();
    let weights: Vec<WeightSpec> = config.a.iter().map(|&a| WeightSpec { a }).collect();

    let jobs: Vec<(usize, usize)> = (0..config.lengths.len())
        .flat_map(|i| (0..config.repetitions).map(move |r| (i, r)))
        .collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(i, r)| -> Result<Outcome> {
            let t = config.lengths[i];
            let rep_seed = derive_seed(derive_seed(config.seed, t as u64), r as u64);
            let series = simulate(&config.truth, t, config.burn_in, rep_seed)?;
            let test = config.test_config(derive_seed(rep_seed, u64::MAX));
            match bootstrap_test_weights(&series, &test, &weights) {
                Ok(results) => Ok(Outcome::Done {
                    p_values: results.iter().map(|r| r.p_value).collect(),
                    redraws: results[0].diagnostics.redraws,
                    clamped: results[0].diagnostics.clamped_replicates,
                }),
                Err(e) if e.is_degenerate() => Ok(Outcome::Failed(e.to_string())),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let total_failed = outcomes
        .iter()
        .filter(|o| matches!(o, Outcome::Failed(_)))
        .count();
    if total_failed as f64 > MAX_FAILURE_RATE * outcomes.len() as f64 {
        return Err(Error::TooManyFailures {
            failed: total_failed,
            total: outcomes.len(),
        });
    }

    let mut blocks: Vec<LengthBlock> = config
        .lengths
        .iter()
        .map(|&t| LengthBlock {
            t,
            p_values: vec![Vec::with_capacity(config.repetitions); weights.len()],
            failures: Vec::new(),
            redraws: 0,
            clamped_replicates: 0,
        })
        .collect();
    for (&(i, r), outcome) in jobs.iter().zip(outcomes) {
        let block = &mut blocks[i];
        match outcome {
            Outcome::Done {
                p_values,
                redraws,
                clamped,
            } => {
                for (k, p) in p_values.into_iter().enumerate() {
                    block.p_values[k].push(p);
                }
                block.redraws += redraws;
                block.clamped_replicates += clamped;
            }
            Outcome::Failed(message) => block.failures.push(Failure {
                t: block.t,
                repetition: r,
                message,
            }),
        }
    }

    let mut cells = Vec::new();
    for block in &blocks {
        for (k, &a) in config.a.iter().enumerate() {
            for &alpha in &config.alpha {
                let (rate, se) = rejection_rate(&block.p_values[k], alpha);
                cells.push(MCCell {
                    t: block.t,
                    a,
                    alpha,
                    rejection_rate: rate,
                    se,
                });
            }
        }
    }
    Ok(MCResult {
        config: config.clone(),
        cells,
        blocks,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

/// Writes the rejection rates as CSV with header `T,a,alpha,rejection_rate,se`.
pub fn emit_power_curve(result: &MCResult, path: impl AsRef<Path>) -> Result<()> {
    if result.cells.is_empty() {
        return Err(Error::Config("no Monte Carlo cells to write".into()));
    }
    write_power_curve(&result.cells, std::fs::File::create(path)?)
}

pub fn write_power_curve<W: std::io::Write>(cells: &[MCCell], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for cell in cells {
        w.serialize(cell)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_power_curve(path: impl AsRef<Path>) -> Result<Vec<MCCell>> {
    let mut r = csv::Reader::from_path(path)?;
    let cells = r
        .deserialize()
        .collect::<std::result::Result<Vec<MCCell>, _>>()?;
    Ok(cells)
}

/// Writes the full result (configuration, cells, p-values, failures, timing)
/// as JSON.
pub fn write_summary(result: &MCResult, path: impl AsRef<Path>) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(file, result).map_err(|e| Error::Io(e.into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
        null = "poisson-inar1"
        lengths = [30, 50]
        a = [0.0, 2.0]
        alpha = [0.05, 0.1, 0.5]
        replicates = 19
        repetitions = 12
        seed = 5

        [truth]
        model = "inar1"
        p = 0.5
        innovation = { dist = "poisson", theta = 2.0 }
    "#;

    #[test]
    fn config_parses_and_validates() {
        let c = MCConfig::from_toml_str(SMALL).unwrap();
        assert_eq!(c.burn_in, DEFAULT_BURN_IN);
        assert_eq!(c.route, Route::Auto);
        assert_eq!(MCConfig::from_toml_str(&c.to_toml_string()).unwrap(), c);
        let bad = SMALL.replace("alpha = [0.05, 0.1, 0.5]", "alpha = [1.5]");
        assert!(MCConfig::from_toml_str(&bad).is_err());
        let bad = SMALL.replace("repetitions = 12", "repetitions = 0");
        assert!(MCConfig::from_toml_str(&bad).is_err());
        let bad = SMALL.replace("seed = 5", "seed = 5\nbogus = 1");
        assert!(MCConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn cells_cover_grid_and_are_monotone_in_alpha() {
        let c = MCConfig::from_toml_str(SMALL).unwrap();
        let r = run_experiment(&c).unwrap();
        assert_eq!(r.cells.len(), 2 * 2 * 3);
        for &t in &c.lengths {
            for &a in &c.a {
                let rates: Vec<f64> = c
                    .alpha
                    .iter()
                    .map(|&al| r.cell(t, a, al).unwrap().rejection_rate)
                    .collect();
                assert!(rates.windows(2).all(|w| w[0] <= w[1]));
            }
        }
        for cell in &r.cells {
            assert!((0.0..=1.0).contains(&cell.rejection_rate));
            let n = c.repetitions as f64;
            let se = (cell.rejection_rate * (1.0 - cell.rejection_rate) / n).sqrt();
            assert_eq!(cell.se, se);
        }
    }

    #[test]
    fn deterministic_regardless_of_threads() {
        let c = MCConfig::from_toml_str(SMALL).unwrap();
        let a = run_experiment(&c).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| run_experiment(&c)).unwrap();
        assert_eq!(a.cells, b.cells);
        assert_eq!(a.blocks, b.blocks);
    }

    #[test]
    fn rejection_rate_edges() {
        let p = [0.05, 0.2, 1.0];
        assert_eq!(rejection_rate(&p, 0.999_999).0, 2.0 / 3.0);
        assert_eq!(rejection_rate(&p, 0.05).0, 1.0 / 3.0);
        assert_eq!(rejection_rate(&[1.0, 0.5], 1.0).0, 1.0);
    }
}
