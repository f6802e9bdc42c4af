//! Poisson sampling and distribution functions.
//!
//! Sampling uses inversion by sequential search below rate 30 and Hörmann's
//! transformed rejection (PTRS) above, so draws are exact at every rate this
//! toolkit produces (up to 2^12 * 0.1 = 409.6 and beyond).

use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::rng::uniform_f64;

/// Rate at which sampling switches from inversion to rejection.
const REJECTION_THRESHOLD: f64 = 30.0;

/// Exact Poisson draw at `rate`, deterministic given the rng state.
pub fn sample_poisson<R: RngCore>(rate: f64, rng: &mut R) -> Result<u64> {
    if !rate.is_finite() || rate < 0.0 {
        return Err(Error::InvalidRate(rate));
    }
    if rate == 0.0 {
        return Ok(0);
    }
    if rate < REJECTION_THRESHOLD {
        Ok(sample_inversion(rate, rng))
    } else {
        Ok(sample_ptrs(rate, rng))
    }
}

/// Inversion by sequential search: walk the CDF until it exceeds a uniform.
fn sample_inversion<R: RngCore>(rate: f64, rng: &mut R) -> u64 {
    let u = uniform_f64(rng);
    let mut pmf = (-rate).exp();
    let mut cdf = pmf;
    let mut k = 0u64;
    // At rate < 30 the probability mass beyond the cap is far below 1e-15.
    let cap = (rate + 20.0 * rate.sqrt() + 60.0) as u64;
    while u > cdf && k < cap {
        k += 1;
        pmf *= rate / k as f64;
        cdf += pmf;
    }
    k
}

/// Transformed rejection with squeeze (Hörmann 1993, PTRS).
fn sample_ptrs<R: RngCore>(rate: f64, rng: &mut R) -> u64 {
    let log_rate = rate.ln();
    let b = 0.931 + 2.53 * rate.sqrt();
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);

    loop {
        let u = uniform_f64(rng) - 0.5;
        let v = uniform_f64(rng);
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + rate + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let accept = (v * inv_alpha / (a / (us * us) + b)).ln();
        if accept <= k * log_rate - rate - ln_gamma(k + 1.0) {
            return k as u64;
        }
    }
}

/// Natural log of the gamma function (Lanczos, g = 7), valid for z > 0.
pub fn ln_gamma(z: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if z < 0.5 {
        // Reflection keeps the trough rates (z in (0,0.5)) usable.
        let pi = std::f64::consts::PI;
        return (pi / (pi * z).sin()).ln() - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut x = 0.999_999_999_999_809_9;
    for (i, c) in COEFFS.iter().enumerate() {
        x += c / (z + (i + 1) as f64);
    }
    let t = z + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

/// log P(X = k) for X ~ Poisson(rate); rate 0 is the point mass at 0.
pub fn poisson_log_pmf(k: u64, rate: f64) -> f64 {
    if rate == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    k as f64 * rate.ln() - rate - ln_gamma(k as f64 + 1.0)
}

/// Smallest k with CDF(k) >= p (the exact inverse CDF used for forecast
/// quantiles). `p` must lie in (0, 1).
pub fn poisson_quantile(rate: f64, p: f64) -> u64 {
    debug_assert!((0.0..1.0).contains(&p) && p > 0.0);
    if rate == 0.0 {
        return 0;
    }
    let mut pmf = (-rate).exp();
    let mut cdf = pmf;
    let mut k = 0u64;
    let cap = (rate + 20.0 * rate.sqrt() + 60.0) as u64;
    while cdf < p && k < cap {
        k += 1;
        pmf *= rate / k as f64;
        cdf += pmf;
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;

    fn moments(rate: f64, n: usize, key: u64) -> (f64, f64) {
        let mut rng = StreamKey::new(key).with_f64(rate).rng();
        let draws: Vec<f64> = (0..n)
            .map(|_| sample_poisson(rate, &mut rng).unwrap() as f64)
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (mean, var)
    }

    #[test]
    fn zero_rate_is_point_mass_at_zero() {
        let mut rng = StreamKey::new(0).rng();
        for _ in 0..100 {
            assert_eq!(sample_poisson(0.0, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn rejects_negative_and_non_finite_rates() {
        let mut rng = StreamKey::new(0).rng();
        assert!(sample_poisson(-1.0, &mut rng).is_err());
        assert!(sample_poisson(f64::NAN, &mut rng).is_err());
        assert!(sample_poisson(f64::INFINITY, &mut rng).is_err());
    }

    #[test]
    fn inversion_branch_matches_poisson_moments() {
        // CLT bound on the mean, mean=variance for the second moment.
        let n = 100_000;
        let (mean, var) = moments(3.2, n, 11);
        assert!(
            (mean - 3.2).abs() < 3.0 * (3.2f64 / n as f64).sqrt(),
            "mean {mean}"
        );
        assert!((var - 3.2).abs() / 3.2 < 0.05, "variance {var}");
    }

    #[test]
    fn rejection_branch_matches_poisson_moments() {
        let n = 100_000;
        let rate = 409.6; // the largest rate the benchmark grid produces
        let (mean, var) = moments(rate, n, 13);
        assert!(
            (mean - rate).abs() < 3.0 * (rate / n as f64).sqrt(),
            "mean {mean}"
        );
        assert!((var - rate).abs() / rate < 0.05, "variance {var}");
    }

    #[test]
    fn ln_gamma_matches_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-12);
        assert!((ln_gamma(2.0)).abs() < 1e-12);
        assert!((ln_gamma(5.0) - 24.0f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-12);
    }

    #[test]
    fn quantile_is_exact_inverse_cdf() {
        // CDF(0) = e^-1 = 0.3679, CDF(1) = 0.7358, CDF(3) = 0.9810, CDF(4) = 0.9963
        assert_eq!(poisson_quantile(1.0, 0.3), 0);
        assert_eq!(poisson_quantile(1.0, 0.4), 1);
        assert_eq!(poisson_quantile(1.0, 0.99), 4);
        assert_eq!(poisson_quantile(0.0, 0.5), 0);
        // monotone in p
        let mut last = 0;
        for i in 1..100 {
            let q = poisson_quantile(7.5, i as f64 / 100.0);
            assert!(q >= last);
            last = q;
        }
    }

    #[test]
    fn log_pmf_sums_to_one() {
        for &rate in &[0.3f64, 3.2, 45.0] {
            let total: f64 = (0..((rate + 20.0 * rate.sqrt() + 40.0) as u64))
                .map(|k| poisson_log_pmf(k, rate).exp())
                .sum();
            assert!((total - 1.0).abs() < 1e-10, "rate {rate}: {total}");
        }
    }

    #[test]
    fn log_pmf_degenerate_rate() {
        assert_eq!(poisson_log_pmf(0, 0.0), 0.0);
        assert_eq!(poisson_log_pmf(3, 0.0), f64::NEG_INFINITY);
    }
}
