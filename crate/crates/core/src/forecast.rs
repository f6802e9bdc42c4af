//! Probabilistic forecasting detector: a pluggable one-step-ahead forecaster
//! plus three scoring functions (scaled absolute error, quantile score,
//! negative residual).
//!
//! The reference forecaster is a seasonal profile: a per-phase Poisson rate
//! estimated from the training prefix. Anything that produces [`Forecast`]
//! values can be plugged in instead.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poisson::poisson_quantile;
use crate::series::{CountSeries, ScoreSeries};

/// Floor applied to predictive standard deviations so trough phases score
/// impossible observations very high instead of dividing by zero.
pub const SIGMA_FLOOR: f64 = 1e-3;
/// Floor applied to the quantile-score denominator `q50 - q_l`.
pub const DENOM_FLOOR: f64 = 1e-3;
/// Default lower quantile level for the quantile score.
pub const DEFAULT_QUANTILE_LEVEL: f64 = 0.05;

/// One-step predictive summary: mean, standard deviation, and quantiles.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    pub mean: f64,
    pub std: f64,
    /// `(probability, value)` pairs sorted by probability.
    quantiles: Vec<(f64, f64)>,
}

impl Forecast {
    pub fn new(mean: f64, std: f64, mut quantiles: Vec<(f64, f64)>) -> Result<Self> {
        if std < 0.0 {
            return Err(Error::InvalidConfig(
                "forecast std must be non-negative".into(),
            ));
        }
        quantiles.sort_by(|a, b| a.0.total_cmp(&b.0));
        for pair in quantiles.windows(2) {
            if pair[1].1 < pair[0].1 {
                return Err(Error::InvalidConfig(
                    "forecast quantiles must be non-decreasing in probability".into(),
                ));
            }
        }
        Ok(Self {
            mean,
            std,
            quantiles,
        })
    }

    /// Value of the stored quantile whose probability is nearest to `p`.
    pub fn quantile(&self, p: f64) -> f64 {
        self.quantiles
            .iter()
            .min_by(|a, b| (a.0 - p).abs().total_cmp(&(b.0 - p).abs()))
            .map(|&(_, v)| v)
            .unwrap_or(self.mean)
    }
}

/// Which scoring function turns a forecast and an observation into a score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForecastScorer {
    AbsoluteError,
    Quantile,
    NegativeResidual,
}

/// Configuration of the reference seasonal-profile forecaster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecasterSpec {
    /// Samples per season.
    pub period: usize,
    /// Fraction of the series used as the training prefix.
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    /// Median (true) or mean (false) per-phase estimate.
    #[serde(default)]
    pub robust: bool,
}

pub fn default_train_fraction() -> f64 {
    0.3
}

impl ForecasterSpec {
    pub fn new(period: usize) -> Self {
        Self {
            period,
            train_fraction: default_train_fraction(),
            robust: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.period < 1 {
            return Err(Error::InvalidConfig(
                "forecaster period must be at least 1".into(),
            ));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidConfig(
                "train_fraction must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// A fitted seasonal profile: one Poisson rate estimate per phase.
#[derive(Debug, Clone, PartialEq)]
pub struct SeasonalProfile {
    profile: Vec<f64>,
    period: usize,
    train_len: usize,
}

/// Estimates the per-phase rate from the training prefix.
///
/// Steps carrying a ground-truth anomaly label are excluded from the
/// estimate; a phase whose training samples are all anomalous falls back to
/// the overall clean training mean.
pub fn fit_seasonal_profile(
    series: &CountSeries,
    spec: &ForecasterSpec,
) -> Result<SeasonalProfile> {
    spec.validate()?;
    if series.len() < 2 * spec.period {
        return Err(Error::SeriesTooShort {
            need: 2 * spec.period,
            got: series.len(),
        });
    }
    let train_len = ((series.len() as f64) * spec.train_fraction).floor() as usize;
    let train_len = train_len.max(spec.period.min(series.len()));
    let labels = series.labels();
    let clean = |t: usize| labels.is_none_or(|l| !l[t]);

    let mut by_phase: Vec<Vec<f64>> = vec![Vec::new(); spec.period];
    let mut all_clean: Vec<f64> = Vec::new();
    for t in 0..train_len {
        if clean(t) {
            let v = series.values()[t] as f64;
            by_phase[t % spec.period].push(v);
            all_clean.push(v);
        }
    }
    if all_clean.is_empty() {
        return Err(Error::InvalidConfig(
            "training prefix has no non-anomalous samples".into(),
        ));
    }
    let fallback = estimate(&all_clean, spec.robust);
    let profile = by_phase
        .into_iter()
        .map(|vs| {
            if vs.is_empty() {
                fallback
            } else {
                estimate(&vs, spec.robust)
            }
        })
        .collect();
    Ok(SeasonalProfile {
        profile,
        period: spec.period,
        train_len,
    })
}

fn estimate(values: &[f64], robust: bool) -> f64 {
    if robust {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        if sorted.len().is_multiple_of(2) {
            (sorted[mid - 1] + sorted[mid]) / 2.0
        } else {
            sorted[mid]
        }
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

impl SeasonalProfile {
    pub fn rate_at(&self, t: usize) -> f64 {
        self.profile[t % self.period]
    }

    pub fn train_len(&self) -> usize {
        self.train_len
    }

    /// Predictive distribution at step `t`: Poisson at the phase rate, with
    /// quantiles from the exact inverse CDF.
    pub fn forecast(&self, t: usize, lower_level: f64) -> Forecast {
        let rate = self.rate_at(t);
        let std = rate.sqrt().max(SIGMA_FLOOR);
        let quantiles = vec![
            (lower_level, poisson_quantile(rate, lower_level) as f64),
            (0.5, poisson_quantile(rate, 0.5) as f64),
        ];
        Forecast {
            mean: rate,
            std,
            quantiles,
        }
    }
}

/// Scaled absolute forecasting error `|x - mu| / sigma`.
pub fn score_absolute_error(x: u64, f: &Forecast) -> f64 {
    (x as f64 - f.mean).abs() / f.std.max(SIGMA_FLOOR)
}

/// Quantile score `max((|q50 - x| - (q50 - q_l)) / (q50 - q_l), 0)` with the
/// denominator floored.
pub fn score_quantile(x: u64, f: &Forecast, lower_level: f64) -> f64 {
    let q50 = f.quantile(0.5);
    let ql = f.quantile(lower_level);
    let spread = q50 - ql;
    (((q50 - x as f64).abs() - spread) / spread.max(DENOM_FLOOR)).max(0.0)
}

/// Negative residual `-(x - mu) / sigma`: positive for drops, negative for
/// spikes.
pub fn score_negative_residual(x: u64, f: &Forecast) -> f64 {
    -(x as f64 - f.mean) / f.std.max(SIGMA_FLOOR)
}

/// Fits the seasonal profile on the training prefix and scores every later
/// step with the chosen scoring function. `valid_from` is the end of the
/// training prefix.
pub fn detect(
    series: &CountSeries,
    spec: &ForecasterSpec,
    scorer: ForecastScorer,
    lower_level: f64,
) -> Result<ScoreSeries> {
    let fitted = fit_seasonal_profile(series, spec)?;
    let tail: Vec<f64> = (fitted.train_len..series.len())
        .map(|t| {
            let f = fitted.forecast(t, lower_level);
            let x = series.values()[t];
            match scorer {
                ForecastScorer::AbsoluteError => score_absolute_error(x, &f),
                ForecastScorer::Quantile => score_quantile(x, &f, lower_level),
                ForecastScorer::NegativeResidual => score_negative_residual(x, &f),
            }
        })
        .collect();
    ScoreSeries::from_tail(tail, fitted.train_len, series.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate, GeneratorConfig};
    use proptest::prelude::*;

    fn constant_series(value: u64, len: usize) -> CountSeries {
        CountSeries::new(vec![value; len], 0.1).unwrap()
    }

    #[test]
    fn constant_series_forecasts_poisson_moments() {
        let series = constant_series(4, 100);
        let fitted = fit_seasonal_profile(&series, &ForecasterSpec::new(10)).unwrap();
        for t in fitted.train_len()..100 {
            let f = fitted.forecast(t, 0.05);
            assert_eq!(f.mean, 4.0);
            assert_eq!(f.std, 2.0);
        }
    }

    #[test]
    fn zero_rate_phase_is_degenerate() {
        let series = constant_series(0, 100);
        let fitted = fit_seasonal_profile(&series, &ForecasterSpec::new(10)).unwrap();
        let f = fitted.forecast(50, 0.05);
        assert_eq!(f.mean, 0.0);
        assert_eq!(f.std, SIGMA_FLOOR);
        assert_eq!(f.quantile(0.5), 0.0);
        assert_eq!(f.quantile(0.05), 0.0);
        // q50 == q_l: any deviation is scored against the floor.
        assert!((score_quantile(2, &f, 0.05) - 2.0 / DENOM_FLOOR).abs() < 1e-9);
    }

    #[test]
    fn short_series_is_rejected() {
        let series = constant_series(1, 15);
        let err = fit_seasonal_profile(&series, &ForecasterSpec::new(10)).unwrap_err();
        assert!(matches!(err, Error::SeriesTooShort { .. }));
    }

    #[test]
    fn profile_recovers_true_rates_at_peak_phases() {
        let cfg = GeneratorConfig::new(4096.0, 0.1, 3);
        let (series, _) = generate(&cfg).unwrap();
        let fitted = fit_seasonal_profile(&series, &ForecasterSpec::new(cfg.period())).unwrap();
        let peak = cfg.amplitude * cfg.dt;
        for phase in 0..cfg.period() {
            let truth = cfg.seasonal_rate(phase);
            if truth < 0.5 * peak {
                continue;
            }
            let est = fitted.rate_at(phase);
            assert!(
                (est - truth).abs() / truth < 0.05,
                "phase {phase}: estimated {est}, true {truth}"
            );
        }
    }

    #[test]
    fn scorer_arithmetic() {
        let f = Forecast::new(4.0, 2.0, vec![(0.05, 1.0), (0.5, 4.0)]).unwrap();
        assert_eq!(score_absolute_error(0, &f), 2.0);
        assert_eq!(score_absolute_error(4, &f), 0.0);
        assert_eq!(score_negative_residual(0, &f), 2.0);
        assert_eq!(score_negative_residual(8, &f), -2.0);
        assert_eq!(score_negative_residual(4, &f), 0.0);

        let f = Forecast::new(3.2, 3.2f64.sqrt(), vec![(0.05, 1.0), (0.5, 3.0)]).unwrap();
        assert!((score_absolute_error(0, &f) - 3.2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn quantile_score_examples() {
        let f = Forecast::new(10.0, 3.0, vec![(0.05, 6.0), (0.5, 10.0)]).unwrap();
        assert_eq!(score_quantile(10, &f, 0.05), 0.0);
        assert_eq!(score_quantile(2, &f, 0.05), 1.0);
        // inside the band clamps to zero
        assert_eq!(score_quantile(8, &f, 0.05), 0.0);
    }

    #[test]
    fn detect_absolute_error_is_zero_on_self() {
        let series = constant_series(4, 200);
        let scores = detect(
            &series,
            &ForecasterSpec::new(10),
            ForecastScorer::AbsoluteError,
            0.05,
        )
        .unwrap();
        assert!(scores.evaluated().iter().all(|&s| s == 0.0));
        assert_eq!(scores.valid_from(), 60);
    }

    #[test]
    fn anomaly_free_high_count_rarely_exceeds_three_sigma() {
        // Gaussian tail at large rates: P(score > 3) ~ 0.13%.
        let mut cfg = GeneratorConfig::new(4096.0, 0.0, 8);
        cfg.transition = [[1.0, 0.0], [0.0, 1.0]]; // no anomalies
        cfg.len = 10_000;
        let (series, _) = generate(&cfg).unwrap();
        let scores = detect(
            &series,
            &ForecasterSpec::new(cfg.period()),
            ForecastScorer::NegativeResidual,
            0.05,
        )
        .unwrap();
        let n = scores.evaluated().len() as f64;
        let high = scores.evaluated().iter().filter(|&&s| s > 3.0).count() as f64;
        assert!(high / n < 0.01, "fraction above 3.0: {}", high / n);
    }

    #[test]
    fn full_drop_scores_root_rate_at_zero_observations() {
        // At x = 0 the negative residual equals sqrt of the fitted rate.
        let cfg = GeneratorConfig::new(32.0, 1.0, 21);
        let (series, _) = generate(&cfg).unwrap();
        let spec = ForecasterSpec::new(cfg.period());
        let fitted = fit_seasonal_profile(&series, &spec).unwrap();
        let scores = detect(&series, &spec, ForecastScorer::NegativeResidual, 0.05).unwrap();
        let labels = series.labels().unwrap();
        for (t, score) in scores.iter_evaluated() {
            if labels[t] && series.values()[t] == 0 && fitted.rate_at(t) > SIGMA_FLOOR {
                let expect = fitted.rate_at(t).sqrt();
                assert!(
                    (score - expect).abs() < 1e-12,
                    "step {t}: {score} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn detection_is_deterministic() {
        let cfg = GeneratorConfig::new(8.0, 0.5, 17);
        let (series, _) = generate(&cfg).unwrap();
        let spec = ForecasterSpec::new(10);
        let a = detect(&series, &spec, ForecastScorer::Quantile, 0.05).unwrap();
        let b = detect(&series, &spec, ForecastScorer::Quantile, 0.05).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn negative_residual_is_antisymmetric(half_mu in 1u64..100, dev in 0u64..40) {
            // half-integral mean keeps the mirrored count 2*mu - x integral
            let mu = half_mu as f64 / 2.0;
            let f = Forecast::new(mu, mu.sqrt(), vec![(0.05, 0.0), (0.5, mu)]).unwrap();
            prop_assume!(dev as f64 <= mu);
            let x_lo = (mu - dev as f64).floor() as u64;
            let x_hi = (2.0 * mu - x_lo as f64) as u64;
            let lo = score_negative_residual(x_lo, &f);
            let hi = score_negative_residual(x_hi, &f);
            prop_assert!((lo + hi).abs() < 1e-9);
        }

        #[test]
        fn drop_side_scores_are_monotone(mu in 1.0f64..60.0, a in 0u64..63, b in 0u64..63) {
            let f = Forecast::new(mu, mu.sqrt(), vec![(0.05, 0.0), (0.5, mu.round())]).unwrap();
            let (x_small, x_big) = (a.min(b), a.max(b));
            if (x_big as f64) > mu { return Ok(()); }
            // decreasing x never decreases any of the three scores
            prop_assert!(score_absolute_error(x_small, &f) >= score_absolute_error(x_big, &f));
            prop_assert!(score_negative_residual(x_small, &f) >= score_negative_residual(x_big, &f));
            prop_assert!(score_quantile(x_small, &f, 0.05) >= score_quantile(x_big, &f, 0.05));
        }

        #[test]
        fn absolute_and_quantile_scores_are_non_negative(
            mu in 0.0f64..50.0, x in 0u64..200
        ) {
            let f = Forecast::new(mu, mu.sqrt(), vec![(0.05, (mu * 0.5).floor()), (0.5, mu.round())]).unwrap();
            prop_assert!(score_absolute_error(x, &f) >= 0.0);
            prop_assert!(score_quantile(x, &f, 0.05) >= 0.0);
        }
    }
}
