//! Data-generating processes for count time series and their simulation.

pub mod sampling;
mod series;

use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use sampling::{derive_seed, stream, StreamRng};
pub use series::{CountSeries, Histogram, MAX_COUNT};

pub const DEFAULT_BURN_IN: usize = 500;

/// Distribution of the INAR innovations `ε_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "kebab-case")]
pub enum InnovationSpec {
    Poisson {
        theta: f64,
    },
    /// Mean `theta`, dispersion `r`: variance `theta·(1 + theta/r)`.
    #[serde(rename = "negbinomial")]
    NegBinomial {
        theta: f64,
        r: f64,
    },
    /// `phi·Po(lambda1) + (1 - phi)·Po(lambda2)`.
    PoissonMixture {
        phi: f64,
        lambda1: f64,
        lambda2: f64,
    },
    /// `phi·δ_0 + (1 - phi)·Po(lambda)`.
    DiracZeroMixture {
        phi: f64,
        lambda: f64,
    },
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, v, "must be finite and > 0"))
    }
}

fn nonnegative(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, v, "must be finite and >= 0"))
    }
}

fn unit_closed(name: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(name, v, "must lie in [0, 1]"))
    }
}

fn unit_half_open(name: &'static str, v: f64) -> Result<()> {
    if (0.0..1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(name, v, "must lie in [0, 1)"))
    }
}

fn unit_open(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, v, "must lie in (0, 1)"))
    }
}

impl InnovationSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InnovationSpec::Poisson { theta } => positive("theta", theta),
            InnovationSpec::NegBinomial { theta, r } => {
                positive("theta", theta)?;
                positive("r", r)
            }
            InnovationSpec::PoissonMixture {
                phi,
                lambda1,
                lambda2,
            } => {
                unit_closed("phi", phi)?;
                positive("lambda1", lambda1)?;
                positive("lambda2", lambda2)
            }
            InnovationSpec::DiracZeroMixture { phi, lambda } => {
                unit_closed("phi", phi)?;
                positive("lambda", lambda)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            InnovationSpec::Poisson { theta } | InnovationSpec::NegBinomial { theta, .. } => theta,
            InnovationSpec::PoissonMixture {
                phi,
                lambda1,
                lambda2,
            } => phi * lambda1 + (1.0 - phi) * lambda2,
            InnovationSpec::DiracZeroMixture { phi, lambda } => (1.0 - phi) * lambda,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            InnovationSpec::Poisson { theta } => theta,
            InnovationSpec::NegBinomial { theta, r } => theta * (1.0 + theta / r),
            InnovationSpec::PoissonMixture {
                phi,
                lambda1,
                lambda2,
            } => {
                let m = self.mean();
                phi * (lambda1 + lambda1 * lambda1) + (1.0 - phi) * (lambda2 + lambda2 * lambda2)
                    - m * m
            }
            InnovationSpec::DiracZeroMixture { phi, lambda } => {
                (1.0 - phi) * lambda * (1.0 + phi * lambda)
            }
        }
    }

    /// Draws one innovation; parameters are assumed valid.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> u64 {
        match *self {
            InnovationSpec::Poisson { theta } => sampling::poisson(rng, theta),
            InnovationSpec::NegBinomial { theta, r } => sampling::negative_binomial(rng, theta, r),
            InnovationSpec::PoissonMixture {
                phi,
                lambda1,
                lambda2,
            } => {
                let lambda = if sampling::uniform(rng) < phi {
                    lambda1
                } else {
                    lambda2
                };
                sampling::poisson(rng, lambda)
            }
            InnovationSpec::DiracZeroMixture { phi, lambda } => {
                if sampling::uniform(rng) < phi {
                    0
                } else {
                    sampling::poisson(rng, lambda)
                }
            }
        }
    }
}

/// Draws one innovation from `spec`.
pub fn sample_innovation<R: RngCore + ?Sized>(spec: &InnovationSpec, rng: &mut R) -> u64 {
    spec.sample(rng)
}

/// A count data-generating process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ModelSpec {
    /// `Y_t = p ∘ Y_{t-1} + ε_t`.
    Inar1 { p: f64, innovation: InnovationSpec },
    /// `Y_t = p1 ∘ Y_{t-1} + p2 ∘ Y_{t-2} + ε_t`.
    Inar2 {
        p1: f64,
        p2: f64,
        innovation: InnovationSpec,
    },
    /// `Y_t | past ~ Po(λ_t)`, `λ_t = theta1 + theta2·Y_{t-1}`. With `r` set,
    /// the conditional law is negative binomial with mean `λ_t` and dispersion `r`.
    Inarch1 {
        theta1: f64,
        theta2: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r: Option<f64>,
    },
    /// `λ_t = theta1 + theta2·Y_{t-1} + delta·λ_{t-1}`.
    Ingarch11 {
        theta1: f64,
        theta2: f64,
        delta: f64,
    },
    /// `λ_t = theta1 + theta2·Y_{t-1} + delta·1[t >= ceil(phi·T)]`.
    Inarch1LevelShift {
        theta1: f64,
        theta2: f64,
        delta: f64,
        phi: f64,
    },
}

impl ModelSpec {
    pub fn poisson_inar1(p: f64, theta: f64) -> Result<Self> {
        let m = ModelSpec::Inar1 {
            p,
            innovation: InnovationSpec::Poisson { theta },
        };
        m.validate()?;
        Ok(m)
    }

    pub fn poisson_inar2(p1: f64, p2: f64, theta: f64) -> Result<Self> {
        let m = ModelSpec::Inar2 {
            p1,
            p2,
            innovation: InnovationSpec::Poisson { theta },
        };
        m.validate()?;
        Ok(m)
    }

    pub fn poisson_inarch1(theta1: f64, theta2: f64) -> Result<Self> {
        let m = ModelSpec::Inarch1 {
            theta1,
            theta2,
            r: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelSpec::Inar1 { p, ref innovation } => {
                unit_open("p", p)?;
                innovation.validate()
            }
            ModelSpec::Inar2 {
                p1,
                p2,
                ref innovation,
            } => {
                unit_half_open("p1", p1)?;
                unit_half_open("p2", p2)?;
                if p1 + p2 >= 1.0 {
                    return Err(Error::invalid("p1 + p2", p1 + p2, "must be < 1"));
                }
                innovation.validate()
            }
            ModelSpec::Inarch1 { theta1, theta2, r } => {
                positive("theta1", theta1)?;
                unit_half_open("theta2", theta2)?;
                match r {
                    Some(r) => positive("r", r),
                    None => Ok(()),
                }
            }
            ModelSpec::Ingarch11 {
                theta1,
                theta2,
                delta,
            } => {
                positive("theta1", theta1)?;
                nonnegative("theta2", theta2)?;
                nonnegative("delta", delta)?;
                if theta2 + delta >= 1.0 {
                    return Err(Error::invalid(
                        "theta2 + delta",
                        theta2 + delta,
                        "must be < 1",
                    ));
                }
                Ok(())
            }
            ModelSpec::Inarch1LevelShift {
                theta1,
                theta2,
                delta,
                phi,
            } => {
                positive("theta1", theta1)?;
                unit_half_open("theta2", theta2)?;
                nonnegative("delta", delta)?;
                unit_open("phi", phi)
            }
        }
    }

    /// Stationary mean of `Y_t`, when the process is stationary.
    pub fn stationary_mean(&self) -> Option<f64> {
        match *self {
            ModelSpec::Inar1 { p, ref innovation } => Some(innovation.mean() / (1.0 - p)),
            ModelSpec::Inar2 {
                p1,
                p2,
                ref innovation,
            } => Some(innovation.mean() / (1.0 - p1 - p2)),
            ModelSpec::Inarch1 { theta1, theta2, .. } => Some(theta1 / (1.0 - theta2)),
            ModelSpec::Ingarch11 {
                theta1,
                theta2,
                delta,
            } => Some(theta1 / (1.0 - theta2 - delta)),
            ModelSpec::Inarch1LevelShift { .. } => None,
        }
    }

    /// Parses the TOML form, e.g. `model = "inar1"`, `p = 0.6`,
    /// `innovation = { dist = "poisson", theta = 4.0 }`.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: ModelSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("model spec serializes to TOML")
    }
}

/// Change point of the level-shift model inside a retained window of length `t`.
pub fn level_shift_start(phi: f64, t: usize) -> usize {
    (phi * t as f64).ceil() as usize
}

fn cap(v: u64) -> u64 {
    v.min(MAX_COUNT as u64)
}

/// Simulates `t` observations after discarding `burn_in` initial steps.
/// The output is a pure function of `(model, t, burn_in, seed)`.
///
/// Start values: INAR lags are drawn from the innovation law; INARCH-type
/// models start at the stationary (pre-shift) mean intensity.
pub fn simulate(model: &ModelSpec, t: usize, burn_in: usize, seed: u64) -> Result<CountSeries> {
    let mut rng = stream(seed);
    simulate_with(model, t, burn_in, &mut rng)
}

pub fn simulate_with<R: RngCore + ?Sized>(
    model: &ModelSpec,
    t: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<CountSeries> {
    if t == 0 {
        return Err(Error::EmptySeries);
    }
    model.validate()?;
    let total = burn_in + t;
    let mut out = Vec::with_capacity(t);
    let mut keep = |step: usize, y: u64| {
        if step >= burn_in {
            out.push(y as u32);
        }
    };

    match *model {
        ModelSpec::Inar1 { p, ref innovation } => {
            let mut prev = cap(innovation.sample(rng));
            for step in 0..total {
                let y = cap(sampling::binomial(rng, prev, p) + innovation.sample(rng));
                keep(step, y);
                prev = y;
            }
        }
        ModelSpec::Inar2 {
            p1,
            p2,
            ref innovation,
        } => {
            let mut lag2 = cap(innovation.sample(rng));
            let mut lag1 = cap(innovation.sample(rng));
            for step in 0..total {
                let y = cap(sampling::binomial(rng, lag1, p1)
                    + sampling::binomial(rng, lag2, p2)
                    + innovation.sample(rng));
                keep(step, y);
                lag2 = lag1;
                lag1 = y;
            }
        }
        ModelSpec::Inarch1 { theta1, theta2, r } => {
            let draw = |rng: &mut R, lambda: f64| match r {
                Some(r) => sampling::negative_binomial(rng, lambda, r),
                None => sampling::poisson(rng, lambda),
            };
            let mut prev = cap(draw(rng, theta1 / (1.0 - theta2)));
            for step in 0..total {
                let lambda = theta1 + theta2 * prev as f64;
                let y = cap(draw(rng, lambda));
                keep(step, y);
                prev = y;
            }
        }
        ModelSpec::Ingarch11 {
            theta1,
            theta2,
            delta,
        } => {
            let mut lambda = theta1 / (1.0 - theta2 - delta);
            let mut prev = cap(sampling::poisson(rng, lambda));
            for step in 0..total {
                lambda = theta1 + theta2 * prev as f64 + delta * lambda;
                let y = cap(sampling::poisson(rng, lambda));
                keep(step, y);
                prev = y;
            }
        }
        ModelSpec::Inarch1LevelShift {
            theta1,
            theta2,
            delta,
            phi,
        } => {
            // retained observations are indexed 1..=t; the shift is active from tau0 on
            let tau0 = level_shift_start(phi, t);
            let mut prev = cap(sampling::poisson(rng, theta1 / (1.0 - theta2)));
            for step in 0..total {
                let shifted = step >= burn_in && step - burn_in + 1 >= tau0;
                let lambda = theta1 + theta2 * prev as f64 + if shifted { delta } else { 0.0 };
                let y = cap(sampling::poisson(rng, lambda));
                keep(step, y);
                prev = y;
            }
        }
    }
    CountSeries::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirac_mixture_with_full_weight_is_zero() {
        let spec = InnovationSpec::DiracZeroMixture {
            phi: 1.0,
            lambda: 4.0,
        };
        let mut rng = stream(8);
        assert!((0..10_000).all(|_| sample_innovation(&spec, &mut rng) == 0));
    }

    #[test]
    fn poisson_innovation_mean() {
        let spec = InnovationSpec::Poisson { theta: 4.0 };
        let mut rng = stream(2024);
        let n = 1_000_000;
        let mean = (0..n).map(|_| spec.sample(&mut rng) as f64).sum::<f64>() / n as f64;
        assert!((mean - 4.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn negbin_innovation_variance() {
        let spec = InnovationSpec::NegBinomial { theta: 4.0, r: 2.0 };
        assert!((spec.variance() - 12.0).abs() < 1e-12);
        let mut rng = stream(77);
        let n = 1_000_000;
        let draws: Vec<f64> = (0..n).map(|_| spec.sample(&mut rng) as f64).collect();
        let m = draws.iter().sum::<f64>() / n as f64;
        let v = draws.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((v - 12.0).abs() < 0.15, "{v}");
    }

    #[test]
    fn mixture_moments_match_closed_forms() {
        let specs = [
            InnovationSpec::PoissonMixture {
                phi: 0.3,
                lambda1: 6.0,
                lambda2: 22.0 / 7.0,
            },
            InnovationSpec::DiracZeroMixture {
                phi: 0.2,
                lambda: 5.0,
            },
        ];
        for spec in specs {
            assert!((spec.mean() - 4.0).abs() < 1e-12);
            let mut rng = stream(4);
            let n = 400_000;
            let d: Vec<f64> = (0..n).map(|_| spec.sample(&mut rng) as f64).collect();
            let m = d.iter().sum::<f64>() / n as f64;
            let v = d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
            assert!((m - 4.0).abs() < 0.02, "{spec:?}: {m}");
            assert!((v / spec.variance() - 1.0).abs() < 0.03, "{spec:?}: {v}");
        }
    }

    #[test]
    fn validation_rejects_out_of_range() {
        assert!(ModelSpec::poisson_inar1(1.5, 4.0).is_err());
        assert!(ModelSpec::poisson_inar1(0.0, 4.0).is_err());
        assert!(ModelSpec::poisson_inar1(0.5, 0.0).is_err());
        assert!(ModelSpec::poisson_inar2(0.6, 0.4, 1.0).is_err());
        assert!(ModelSpec::poisson_inar2(0.0, 0.4, 1.0).is_ok());
        assert!(ModelSpec::poisson_inarch1(1.0, 1.0).is_err());
        let g = ModelSpec::Ingarch11 {
            theta1: 0.1,
            theta2: 0.5,
            delta: 0.5,
        };
        assert!(g.validate().is_err());
        let ls = ModelSpec::Inarch1LevelShift {
            theta1: 4.0,
            theta2: 0.6,
            delta: 4.0,
            phi: 1.0,
        };
        assert!(ls.validate().is_err());
        let bad = InnovationSpec::PoissonMixture {
            phi: 1.2,
            lambda1: 1.0,
            lambda2: 1.0,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_innovations_give_zero_series() {
        let m = ModelSpec::Inar1 {
            p: 0.5,
            innovation: InnovationSpec::DiracZeroMixture {
                phi: 1.0,
                lambda: 3.0,
            },
        };
        for seed in 0..5 {
            let s = simulate(&m, 200, 10, seed).unwrap();
            assert!(s.values().iter().all(|&v| v == 0));
        }
    }

    #[test]
    fn simulation_replays_bitwise() {
        let m = ModelSpec::Ingarch11 {
            theta1: 0.1,
            theta2: 0.45,
            delta: 0.5,
        };
        let a = simulate(&m, 500, 100, 31).unwrap();
        let b = simulate(&m, 500, 100, 31).unwrap();
        let c = simulate(&m, 500, 100, 32).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn inarch_without_feedback_is_iid_poisson() {
        let m = ModelSpec::poisson_inarch1(4.0, 0.0).unwrap();
        let s = simulate(&m, 100_000, DEFAULT_BURN_IN, 5).unwrap();
        assert!((s.mean() - 4.0).abs() < 0.06, "{}", s.mean());
    }

    #[test]
    fn inar1_stationary_mean() {
        let m = ModelSpec::poisson_inar1(0.6, 4.0).unwrap();
        let s = simulate(&m, 100_000, DEFAULT_BURN_IN, 6).unwrap();
        assert!((s.mean() - 10.0).abs() < 0.2, "{}", s.mean());
        // Poisson marginal: dispersion index near 1
        assert!((s.variance() / s.mean() - 1.0).abs() < 0.05);
    }

    #[test]
    fn ingarch_stationary_mean() {
        for (theta2, delta) in [(0.45, 0.5), (0.25, 0.7)] {
            let m = ModelSpec::Ingarch11 {
                theta1: 0.1,
                theta2,
                delta,
            };
            assert!((m.stationary_mean().unwrap() - 2.0).abs() < 1e-12);
            let s = simulate(&m, 200_000, DEFAULT_BURN_IN, 9).unwrap();
            assert!((s.mean() - 2.0).abs() < 0.1, "{}", s.mean());
        }
    }

    #[test]
    fn level_shift_changes_level_after_tau0() {
        let m = ModelSpec::Inarch1LevelShift {
            theta1: 4.0,
            theta2: 0.6,
            delta: 8.0,
            phi: 0.3,
        };
        let t = 10_000;
        assert_eq!(level_shift_start(0.3, t), 3000);
        assert_eq!(level_shift_start(0.1, 55), 6);
        let s = simulate(&m, t, 500, 3).unwrap();
        let v = s.values();
        let before = v[..2999].iter().map(|&x| x as f64).sum::<f64>() / 2999.0;
        let after = v[3100..].iter().map(|&x| x as f64).sum::<f64>() / (t - 3100) as f64;
        assert!((before - 10.0).abs() < 0.5, "{before}");
        assert!((after - 30.0).abs() < 1.0, "{after}");
    }

    #[test]
    fn toml_round_trip() {
        let m = ModelSpec::Inar1 {
            p: 0.6,
            innovation: InnovationSpec::NegBinomial { theta: 4.0, r: 5.0 },
        };
        let text = m.to_toml_string();
        assert_eq!(ModelSpec::from_toml_str(&text).unwrap(), m);
        let parsed =
            ModelSpec::from_toml_str("model = \"inarch1\"\ntheta1 = 4.0\ntheta2 = 0.6\nr = 10.0\n")
                .unwrap();
        assert_eq!(
            parsed,
            ModelSpec::Inarch1 {
                theta1: 4.0,
                theta2: 0.6,
                r: Some(10.0)
            }
        );
        assert!(ModelSpec::from_toml_str(
            "model = \"inar1\"\np = 2.0\ninnovation = { dist = \"poisson\", theta = 1.0 }"
        )
        .is_err());
    }
}
