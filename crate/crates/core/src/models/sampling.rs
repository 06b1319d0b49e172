//! Seeded random streams and the count samplers used by the simulators.
//!
//! Every stream is a xoshiro256++ generator seeded through SplitMix64
//! (`Xoshiro256PlusPlus::seed_from_u64`). All variate generators below are
//! implemented here rather than taken from a distributions crate, so a seed
//! reproduces the same draws regardless of dependency upgrades:
//!
//! * uniforms: top 53 bits of a 64-bit output, shifted to the open interval (0, 1);
//! * normals: Marsaglia polar method, second variate discarded;
//! * gamma: Marsaglia–Tsang squeeze, with the `U^(1/shape)` boost for shape < 1;
//! * Poisson: sequential inversion for mean <= 30, otherwise Hörmann's PTRS
//!   transformed rejection;
//! * binomial: inversion (BINV) when `n <= 64` or `n·min(p, 1-p) < 10`,
//!   otherwise Hörmann's BTRS transformed rejection.

use std::sync::OnceLock;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

/// The generator behind every simulation stream.
pub type StreamRng = Xoshiro256PlusPlus;

pub fn stream(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for stream `index` of `seed`: `seed ⊕ mix(index)`, remixed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_mul(0xD1B5_4A32_D192_ED03)))
}

/// Uniform on the open interval (0, 1).
#[inline]
pub fn uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

pub fn standard_normal<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let x = 2.0 * uniform(rng) - 1.0;
        let y = 2.0 * uniform(rng) - 1.0;
        let s = x * x + y * y;
        if s < 1.0 && s > 0.0 {
            return x * (-2.0 * s.ln() / s).sqrt();
        }
    }
}

/// Gamma variate with the given shape and scale (mean `shape * scale`).
pub fn gamma<R: RngCore + ?Sized>(rng: &mut R, shape: f64, scale: f64) -> f64 {
    if shape < 1.0 {
        let boost = uniform(rng).powf(1.0 / shape);
        return gamma(rng, shape + 1.0, scale) * boost;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = standard_normal(rng);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = uniform(rng);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v * scale;
        }
    }
}

const LN_FACT_TABLE: usize = 128;

fn ln_factorial_table() -> &'static [f64; LN_FACT_TABLE] {
    static TABLE: OnceLock<[f64; LN_FACT_TABLE]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0; LN_FACT_TABLE];
        for k in 1..LN_FACT_TABLE {
            t[k] = t[k - 1] + (k as f64).ln();
        }
        t
    })
}

/// `ln(k!)`: exact table below 128, Stirling series with four correction
/// terms above.
pub fn ln_factorial(k: u64) -> f64 {
    if (k as usize) < LN_FACT_TABLE {
        return ln_factorial_table()[k as usize];
    }
    let n = k as f64;
    let inv = 1.0 / n;
    let inv2 = inv * inv;
    (n + 0.5) * n.ln() - n
        + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

pub fn poisson<R: RngCore + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        0
    } else if mean <= 30.0 {
        poisson_inversion(rng, mean)
    } else {
        poisson_ptrs(rng, mean)
    }
}

fn poisson_inversion<R: RngCore + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    let u = uniform(rng);
    let mut k = 0u64;
    let mut pmf = (-mean).exp();
    let mut cdf = pmf;
    while u > cdf {
        k += 1;
        pmf *= mean / k as f64;
        cdf += pmf;
        // cdf can stall just below 1 through roundoff
        if pmf < 1e-300 || (k as f64 > mean && pmf < f64::EPSILON * cdf * 1e-3) {
            break;
        }
    }
    k
}

fn poisson_ptrs<R: RngCore + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    let slam = mean.sqrt();
    let loglam = mean.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = uniform(rng) - 0.5;
        let v = uniform(rng);
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -mean + k * loglam - ln_factorial(k as u64);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// Binomial(n, p) variate; this is the binomial thinning `p ∘ n`.
pub fn binomial<R: RngCore + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    if p > 0.5 {
        return n - binomial(rng, n, 1.0 - p);
    }
    if n <= 64 || (n as f64) * p < 10.0 {
        binomial_inversion(rng, n, p)
    } else {
        binomial_btrs(rng, n, p)
    }
}

fn binomial_inversion<R: RngCore + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    let q = 1.0 - p;
    let s = p / q;
    let a = (n as f64 + 1.0) * s;
    let mut r = ((n as f64) * (-p).ln_1p()).exp();
    let mut u = uniform(rng);
    let mut k = 0u64;
    while u > r {
        u -= r;
        k += 1;
        if k >= n {
            return n;
        }
        r *= a / k as f64 - s;
        if r <= 0.0 {
            break;
        }
    }
    k
}

fn binomial_btrs<R: RngCore + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    let nf = n as f64;
    let q = 1.0 - p;
    let spq = (nf * p * q).sqrt();
    let b = 1.15 + 2.53 * spq;
    let a = -0.0873 + 0.0248 * b + 0.01 * p;
    let c = nf * p + 0.5;
    let vr = 0.92 - 4.2 / b;
    let alpha = (2.83 + 5.1 / b) * spq;
    let lpq = (p / q).ln();
    let m = ((nf + 1.0) * p).floor();
    let h = ln_factorial(m as u64) + ln_factorial(n - m as u64);
    loop {
        let u = uniform(rng) - 0.5;
        let v = uniform(rng);
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + c).floor();
        if k < 0.0 || k > nf {
            continue;
        }
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        let lhs = (v * alpha / (a / (us * us) + b)).ln();
        let rhs = h - ln_factorial(k as u64) - ln_factorial(n - k as u64) + (k - m) * lpq;
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// Negative binomial with mean `mean` and dispersion `r` as a gamma–Poisson
/// mixture; variance `mean·(1 + mean/r)`.
pub fn negative_binomial<R: RngCore + ?Sized>(rng: &mut R, mean: f64, r: f64) -> u64 {
    let rate = gamma(rng, r, mean / r);
    poisson(rng, rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(draws: impl Iterator<Item = f64>) -> (f64, f64) {
        let v: Vec<f64> = draws.collect();
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, var)
    }

    #[test]
    fn ln_factorial_matches_direct_sum() {
        let mut acc = 0.0f64;
        for k in 1..400u64 {
            acc += (k as f64).ln();
            assert!(
                (ln_factorial(k) - acc).abs() < 1e-11 * acc.max(1.0),
                "k={k}"
            );
        }
    }

    #[test]
    fn poisson_moments_both_regimes() {
        for &mean in &[0.3, 4.0, 29.5, 30.5, 75.0, 1000.0] {
            let mut rng = stream(11);
            let (m, v) = moments((0..200_000).map(|_| poisson(&mut rng, mean) as f64));
            let se = (mean / 200_000.0).sqrt();
            assert!((m - mean).abs() < 5.0 * se, "mean {mean}: {m}");
            assert!((v / mean - 1.0).abs() < 0.03, "var {mean}: {v}");
        }
    }

    #[test]
    fn binomial_moments_both_regimes() {
        for &(n, p) in &[
            (10u64, 0.3),
            (64, 0.9),
            (200, 0.02),
            (200, 0.4),
            (5000, 0.7),
        ] {
            let mut rng = stream(5);
            let (m, v) = moments((0..200_000).map(|_| binomial(&mut rng, n, p) as f64));
            let mean = n as f64 * p;
            let var = mean * (1.0 - p);
            assert!(
                (m - mean).abs() < 5.0 * (var / 200_000.0).sqrt(),
                "n={n} p={p}: {m}"
            );
            assert!((v / var - 1.0).abs() < 0.03, "n={n} p={p}: {v}");
        }
    }

    #[test]
    fn binomial_edges() {
        let mut rng = stream(1);
        assert_eq!(binomial(&mut rng, 0, 0.5), 0);
        assert_eq!(binomial(&mut rng, 9, 0.0), 0);
        assert_eq!(binomial(&mut rng, 9, 1.0), 9);
        for _ in 0..1000 {
            assert!(binomial(&mut rng, 3, 0.999) <= 3);
        }
    }

    #[test]
    fn gamma_moments() {
        for &shape in &[0.4, 2.0, 40.0] {
            let mut rng = stream(3);
            let (m, v) = moments((0..200_000).map(|_| gamma(&mut rng, shape, 1.5)));
            assert!((m / (shape * 1.5) - 1.0).abs() < 0.02, "shape {shape}: {m}");
            assert!(
                (v / (shape * 2.25) - 1.0).abs() < 0.04,
                "shape {shape}: {v}"
            );
        }
    }

    #[test]
    fn derived_seeds_differ() {
        let a: Vec<u64> = (0..1000).map(|i| derive_seed(42, i)).collect();
        let mut b = a.clone();
        b.sort_unstable();
        b.dedup();
        assert_eq!(a.len(), b.len());
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }

    #[test]
    fn streams_replay() {
        let mut a = stream(99);
        let mut b = stream(99);
        for _ in 0..100 {
            assert_eq!(poisson(&mut a, 50.0), poisson(&mut b, 50.0));
        }
    }
}
