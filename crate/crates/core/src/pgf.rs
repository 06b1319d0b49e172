//! Empirical, model-implied and semiparametric null probability generating
//! functions. All evaluation points live in `[0, 1]` and `0^0 = 1`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{CountSeries, Histogram, InnovationSpec};

/// `u^n` by binary exponentiation.
#[inline]
pub fn pow_count(u: f64, n: u32) -> f64 {
    let mut base = u;
    let mut exp = n;
    let mut acc = 1.0;
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= base;
        }
        base *= base;
        exp >>= 1;
    }
    acc
}

fn check_point(name: &'static str, u: f64) -> Result<()> {
    if (0.0..=1.0).contains(&u) {
        Ok(())
    } else {
        Err(Error::invalid(name, u, "PGF argument must lie in [0, 1]"))
    }
}

/// `(1/T) Σ_t u^{Y_t}`.
pub fn empirical_pgf(series: &CountSeries, u: f64) -> Result<f64> {
    check_point("u", u)?;
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let sum: f64 = series.values().iter().map(|&y| pow_count(u, y)).sum();
    Ok(sum / series.len() as f64)
}

/// `(1/(T-1)) Σ_{t=2..T} u^{Y_t} v^{Y_{t-1}}`.
pub fn empirical_joint_pgf(series: &CountSeries, u: f64, v: f64) -> Result<f64> {
    check_point("u", u)?;
    check_point("v", v)?;
    let y = series.values();
    if y.len() < 2 {
        return Err(Error::SeriesTooShort {
            needed: 2,
            got: y.len(),
        });
    }
    let sum: f64 = y
        .windows(2)
        .map(|w| pow_count(u, w[1]) * pow_count(v, w[0]))
        .sum();
    Ok(sum / (y.len() - 1) as f64)
}

pub fn innovation_pgf(spec: &InnovationSpec, u: f64) -> f64 {
    let po = |mean: f64| (mean * (u - 1.0)).exp();
    match *spec {
        InnovationSpec::Poisson { theta } => po(theta),
        InnovationSpec::NegBinomial { theta, r } => (r / (r + theta * (1.0 - u))).powf(r),
        InnovationSpec::PoissonMixture {
            phi,
            lambda1,
            lambda2,
        } => phi * po(lambda1) + (1.0 - phi) * po(lambda2),
        InnovationSpec::DiracZeroMixture { phi, lambda } => phi + (1.0 - phi) * po(lambda),
    }
}

/// Histogram-backed empirical PGF for repeated evaluation.
#[derive(Debug, Clone)]
pub struct EmpiricalPgf {
    hist: Histogram,
}

impl EmpiricalPgf {
    pub fn new(series: &CountSeries) -> Self {
        Self {
            hist: series.histogram(),
        }
    }

    pub fn histogram(&self) -> &Histogram {
        &self.hist
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        let s: f64 = self.hist.iter().map(|(v, n)| n * pow_count(u, v)).sum();
        s / self.hist.total as f64
    }
}

/// Lag-pair histogram backing the joint empirical PGF.
#[derive(Debug, Clone)]
pub struct JointEmpiricalPgf {
    pairs: Vec<(u32, u32, f64)>,
    total: usize,
}

impl JointEmpiricalPgf {
    pub fn new(series: &CountSeries) -> Result<Self> {
        let y = series.values();
        if y.len() < 2 {
            return Err(Error::SeriesTooShort {
                needed: 2,
                got: y.len(),
            });
        }
        let mut map: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        for w in y.windows(2) {
            *map.entry((w[1], w[0])).or_insert(0.0) += 1.0;
        }
        Ok(Self {
            pairs: map.into_iter().map(|((a, b), n)| (a, b, n)).collect(),
            total: y.len() - 1,
        })
    }

    #[inline]
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        let s: f64 = self
            .pairs
            .iter()
            .map(|&(cur, lag, n)| n * pow_count(u, cur) * pow_count(v, lag))
            .sum();
        s / self.total as f64
    }
}

/// Null hypotheses supported by the test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NullFamily {
    PoissonInar1,
    PoissonInarch1,
    PoissonInar2,
}

impl NullFamily {
    pub const ALL: [NullFamily; 3] = [
        NullFamily::PoissonInar1,
        NullFamily::PoissonInarch1,
        NullFamily::PoissonInar2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NullFamily::PoissonInar1 => "poisson-inar1",
            NullFamily::PoissonInarch1 => "poisson-inarch1",
            NullFamily::PoissonInar2 => "poisson-inar2",
        }
    }
}

impl fmt::Display for NullFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NullFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NullFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown null family `{s}`")))
    }
}

/// Parameter record of a fitted null model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NullParams {
    PoissonInar1 { p: f64, theta: f64 },
    PoissonInarch1 { theta1: f64, theta2: f64 },
    PoissonInar2 { p1: f64, p2: f64, theta: f64 },
}

impl NullParams {
    pub fn family(&self) -> NullFamily {
        match self {
            NullParams::PoissonInar1 { .. } => NullFamily::PoissonInar1,
            NullParams::PoissonInarch1 { .. } => NullFamily::PoissonInarch1,
            NullParams::PoissonInar2 { .. } => NullFamily::PoissonInar2,
        }
    }

    /// Parameters in declaration order.
    pub fn as_vec(&self) -> Vec<f64> {
        match *self {
            NullParams::PoissonInar1 { p, theta } => vec![p, theta],
            NullParams::PoissonInarch1 { theta1, theta2 } => vec![theta1, theta2],
            NullParams::PoissonInar2 { p1, p2, theta } => vec![p1, p2, theta],
        }
    }

    /// The data-generating process these parameters describe.
    pub fn to_model(&self) -> crate::models::ModelSpec {
        use crate::models::ModelSpec;
        match *self {
            NullParams::PoissonInar1 { p, theta } => ModelSpec::Inar1 {
                p,
                innovation: InnovationSpec::Poisson { theta },
            },
            NullParams::PoissonInarch1 { theta1, theta2 } => ModelSpec::Inarch1 {
                theta1,
                theta2,
                r: None,
            },
            NullParams::PoissonInar2 { p1, p2, theta } => ModelSpec::Inar2 {
                p1,
                p2,
                innovation: InnovationSpec::Poisson { theta },
            },
        }
    }
}

/// A fitted null model together with the sample it conditions on.
#[derive(Debug, Clone, Copy)]
pub struct NullEstimate<'a> {
    pub params: NullParams,
    pub series: &'a CountSeries,
}

impl<'a> NullEstimate<'a> {
    pub fn new(params: NullParams, series: &'a CountSeries) -> Self {
        Self { params, series }
    }

    pub fn family(&self) -> NullFamily {
        self.params.family()
    }

    /// Semiparametric estimate of the marginal PGF at `u`.
    pub fn pgf(&self, u: f64) -> Result<f64> {
        match self.params {
            NullParams::PoissonInar1 { p, theta } => null_pgf_inar1(self.series, p, theta, u),
            NullParams::PoissonInarch1 { theta1, theta2 } => {
                null_pgf_inarch1(self.series, theta1, theta2, u)
            }
            NullParams::PoissonInar2 { p1, p2, theta } => {
                null_pgf_inar2(self.series, p1, p2, theta, u)
            }
        }
    }
}

/// `e^{θ(u-1)} · ĝ_T(1 + p(u-1))`.
pub fn null_pgf_inar1(series: &CountSeries, p: f64, theta: f64, u: f64) -> Result<f64> {
    check_point("u", u)?;
    let inner = (1.0 + p * (u - 1.0)).clamp(0.0, 1.0);
    Ok((theta * (u - 1.0)).exp() * empirical_pgf(series, inner)?)
}

/// `e^{θ1(u-1)} · ĝ_T(e^{θ2(u-1)})`.
pub fn null_pgf_inarch1(series: &CountSeries, theta1: f64, theta2: f64, u: f64) -> Result<f64> {
    check_point("u", u)?;
    let inner = (theta2 * (u - 1.0)).exp().min(1.0);
    Ok((theta1 * (u - 1.0)).exp() * empirical_pgf(series, inner)?)
}

/// `e^{θ(u-1)} · ĝ_T(1 + p1(u-1), 1 + p2(u-1))` with the joint lag-pair PGF.
pub fn null_pgf_inar2(series: &CountSeries, p1: f64, p2: f64, theta: f64, u: f64) -> Result<f64> {
    check_point("u", u)?;
    let a = (1.0 + p1 * (u - 1.0)).clamp(0.0, 1.0);
    let b = (1.0 + p2 * (u - 1.0)).clamp(0.0, 1.0);
    Ok((theta * (u - 1.0)).exp() * empirical_joint_pgf(series, a, b)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(v: &[u32]) -> CountSeries {
        CountSeries::new(v.to_vec()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn pow_count_edges() {
        assert_eq!(pow_count(0.0, 0), 1.0);
        assert_eq!(pow_count(0.0, 3), 0.0);
        assert_eq!(pow_count(0.5, 10), 0.5f64.powi(10));
        assert!(close(pow_count(0.999, 1000), 0.999f64.powf(1000.0), 1e-13));
    }

    #[test]
    fn empirical_examples() {
        assert_eq!(empirical_pgf(&s(&[4, 9, 1]), 1.0).unwrap(), 1.0);
        assert!(close(
            empirical_pgf(&s(&[0, 3, 5]), 0.0).unwrap(),
            1.0 / 3.0,
            1e-15
        ));
        assert!(close(
            empirical_pgf(&s(&[0, 1, 2]), 0.5).unwrap(),
            7.0 / 12.0,
            1e-15
        ));
        assert!(empirical_pgf(&s(&[1]), 1.5).is_err());
    }

    #[test]
    fn joint_examples() {
        assert_eq!(empirical_joint_pgf(&s(&[2, 5, 1]), 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(empirical_joint_pgf(&s(&[0, 0, 0]), 0.3, 0.0).unwrap(), 1.0);
        assert!(close(
            empirical_joint_pgf(&s(&[1, 2, 0]), 0.5, 0.5).unwrap(),
            0.1875,
            1e-15
        ));
        assert!(matches!(
            empirical_joint_pgf(&s(&[1]), 0.5, 0.5),
            Err(Error::SeriesTooShort { .. })
        ));
    }

    fn pmf_sum_pgf(pmf: impl Fn(u32) -> f64, u: f64) -> f64 {
        (0..400).map(|k| pmf(k) * u.powi(k as i32)).sum()
    }

    fn ln_fact(k: u32) -> f64 {
        (1..=k).map(|i| (i as f64).ln()).sum()
    }

    #[test]
    fn innovation_pgf_against_pmf_sums() {
        let po = |theta: f64| move |k: u32| (-theta + k as f64 * theta.ln() - ln_fact(k)).exp();
        let spec = InnovationSpec::Poisson { theta: 4.0 };
        assert_eq!(innovation_pgf(&spec, 1.0), 1.0);
        let oracle = pmf_sum_pgf(po(4.0), 0.5);
        assert!(close(innovation_pgf(&spec, 0.5), oracle, 1e-13));
        assert!(close(oracle, (-2.0f64).exp(), 1e-13));

        // NB(mean θ, dispersion r): pmf Γ(k+r)/(k! Γ(r)) (r/(r+θ))^r (θ/(r+θ))^k, here r = 2
        let nb = |k: u32| (k as f64 + 1.0) * (1.0f64 / 3.0).powi(2) * (2.0f64 / 3.0).powi(k as i32);
        let spec = InnovationSpec::NegBinomial { theta: 4.0, r: 2.0 };
        assert!(close(
            innovation_pgf(&spec, 0.5),
            pmf_sum_pgf(nb, 0.5),
            1e-13
        ));
        assert!(close(innovation_pgf(&spec, 0.5), 0.25, 1e-15));

        let mix = InnovationSpec::PoissonMixture {
            phi: 0.3,
            lambda1: 6.0,
            lambda2: 2.0,
        };
        let o = pmf_sum_pgf(|k| 0.3 * po(6.0)(k) + 0.7 * po(2.0)(k), 0.4);
        assert!(close(innovation_pgf(&mix, 0.4), o, 1e-13));
        let dz = InnovationSpec::DiracZeroMixture {
            phi: 0.2,
            lambda: 5.0,
        };
        let o = pmf_sum_pgf(|k| 0.8 * po(5.0)(k) + if k == 0 { 0.2 } else { 0.0 }, 0.7);
        assert!(close(innovation_pgf(&dz, 0.7), o, 1e-13));
    }

    #[test]
    fn null_inar1_examples() {
        let series = s(&[0, 1]);
        let v = null_pgf_inar1(&series, 0.5, 1.0, 0.0).unwrap();
        assert!(close(v, (-1.0f64).exp() * 0.75, 1e-15));
        assert!(close(v, 0.2759096, 1e-7));
        assert_eq!(null_pgf_inar1(&series, 0.5, 1.0, 1.0).unwrap(), 1.0);
        let limit = null_pgf_inar1(&s(&[3, 8, 2]), 0.0, 2.0, 0.3).unwrap();
        assert!(close(limit, (2.0f64 * -0.7).exp(), 1e-15));
    }

    #[test]
    fn null_inarch1_examples() {
        let series = s(&[1, 2]);
        assert_eq!(null_pgf_inarch1(&series, 1.0, 0.5, 1.0).unwrap(), 1.0);
        let v = null_pgf_inarch1(&series, 1.0, 0.5, 0.0).unwrap();
        let oracle = (-1.0f64).exp() * ((-0.5f64).exp() + (-1.0f64).exp()) / 2.0;
        assert!(close(v, oracle, 1e-15));
        assert!(close(v, 0.17924, 1e-5));
        let v = null_pgf_inarch1(&s(&[0, 5, 9]), 1.7, 0.0, 0.2).unwrap();
        assert_eq!(v, (1.7f64 * -0.8).exp());
    }

    #[test]
    fn null_inar2_examples() {
        let series = s(&[1, 2, 0]);
        assert_eq!(null_pgf_inar2(&series, 0.5, 0.5, 1.0, 1.0).unwrap(), 1.0);
        let v = null_pgf_inar2(&series, 0.5, 0.5, 1.0, 0.0).unwrap();
        assert!(close(v, (-1.0f64).exp() * 0.1875, 1e-15));
        assert!(close(v, 0.0689774, 1e-7));
        let v = null_pgf_inar2(&series, 0.0, 0.0, 2.0, 0.25).unwrap();
        assert!(close(v, (2.0f64 * -0.75).exp(), 1e-15));
        assert!(null_pgf_inar2(&s(&[3]), 0.1, 0.1, 1.0, 0.5).is_err());
    }

    #[test]
    fn fast_evaluators_agree() {
        let series = s(&[0, 4, 4, 1, 7, 0, 2, 2, 9, 3]);
        let e = EmpiricalPgf::new(&series);
        let j = JointEmpiricalPgf::new(&series).unwrap();
        for i in 0..=20 {
            let u = i as f64 / 20.0;
            assert!(close(e.eval(u), empirical_pgf(&series, u).unwrap(), 1e-15));
            let v = 1.0 - u * 0.5;
            assert!(close(
                j.eval(u, v),
                empirical_joint_pgf(&series, u, v).unwrap(),
                1e-15
            ));
        }
    }

    #[test]
    fn family_names_parse() {
        for f in NullFamily::ALL {
            assert_eq!(f.name().parse::<NullFamily>().unwrap(), f);
        }
        assert!("inar1".parse::<NullFamily>().is_err());
    }

    proptest! {
        #[test]
        fn pgfs_are_bounded_monotone_convex(
            values in proptest::collection::vec(0u32..40, 2..60),
            p in 0.0f64..0.99,
            theta in 0.01f64..10.0,
            theta2 in 0.0f64..0.99,
        ) {
            let series = CountSeries::new(values).unwrap();
            let grid: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
            let emp: Vec<f64> = grid.iter().map(|&u| empirical_pgf(&series, u).unwrap()).collect();
            for w in emp.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-15);
            }
            for w in emp.windows(3) {
                prop_assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-12);
            }
            prop_assert_eq!(emp[40], 1.0);
            let est = [
                NullParams::PoissonInar1 { p, theta },
                NullParams::PoissonInarch1 { theta1: theta, theta2 },
                NullParams::PoissonInar2 { p1: p * 0.5, p2: p * 0.5, theta },
            ];
            for params in est {
                let ne = NullEstimate::new(params, &series);
                prop_assert!((ne.pgf(1.0).unwrap() - 1.0).abs() < 1e-15);
                for &u in &grid {
                    let g = ne.pgf(u).unwrap();
                    prop_assert!((0.0..=1.0).contains(&g));
                }
            }
        }
    }
}
