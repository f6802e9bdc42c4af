//! Bayes optimal classifier: forward filtering of the true two-state hidden
//! Markov model with Poisson emissions.
//!
//! The score at `t` is the posterior probability of the anomalous state
//! given observations up to `t` (filtering, not smoothing, so the score is
//! causal like every other detector). Requires generator knowledge: the true
//! seasonal rates, reduction rate, and transition matrix.

use serde::{Deserialize, Serialize};

use crate::datagen::GeneratorConfig;
use crate::error::{Error, Result};
use crate::poisson::poisson_log_pmf;
use crate::series::{CountSeries, ScoreSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BocSpec {
    /// True seasonal rate per timestep (the normal-state emission rate).
    pub rates: Vec<f64>,
    pub reduction_rate: f64,
    pub transition: [[f64; 2]; 2],
    /// Prior over (normal, anomalous) at t = 0; defaults to the stationary
    /// distribution of the transition matrix.
    pub initial_dist: [f64; 2],
}

impl BocSpec {
    /// Builds the filter spec from full generator knowledge.
    pub fn from_generator(cfg: &GeneratorConfig) -> Self {
        let rates = (0..cfg.len).map(|t| cfg.seasonal_rate(t)).collect();
        let pi1 = cfg.stationary_anomalous();
        Self {
            rates,
            reduction_rate: cfg.reduction_rate,
            transition: cfg.transition,
            initial_dist: [1.0 - pi1, pi1],
        }
    }
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        hi + ((a - hi).exp() + (b - hi).exp()).ln()
    }
}

/// Online forward filter; `score(t) = P(S_t = anomalous | x_{1..t})`.
///
/// Runs in log space with log-sum-exp normalization. Degenerate emissions
/// (rate 0 is the point mass at 0) are exact; if both states assign zero
/// probability to an observation the posterior resets to the initial
/// distribution.
pub fn boc_score(series: &CountSeries, spec: &BocSpec) -> Result<ScoreSeries> {
    if spec.rates.len() != series.len() {
        return Err(Error::LengthMismatch {
            scores: spec.rates.len(),
            labels: series.len(),
        });
    }
    let log_t = spec.transition.map(|row| row.map(f64::ln));
    let log_init = spec.initial_dist.map(f64::ln);

    let mut log_post = [0.0f64; 2];
    let mut scores = Vec::with_capacity(series.len());
    for (t, &x) in series.values().iter().enumerate() {
        let rate = spec.rates[t];
        let log_lik = [
            poisson_log_pmf(x, rate),
            poisson_log_pmf(x, rate * (1.0 - spec.reduction_rate)),
        ];
        let log_pred = if t == 0 {
            log_init
        } else {
            [
                log_sum_exp(log_post[0] + log_t[0][0], log_post[1] + log_t[1][0]),
                log_sum_exp(log_post[0] + log_t[0][1], log_post[1] + log_t[1][1]),
            ]
        };
        let joint = [log_pred[0] + log_lik[0], log_pred[1] + log_lik[1]];
        let norm = log_sum_exp(joint[0], joint[1]);
        if norm == f64::NEG_INFINITY {
            // observation impossible in both states
            log_post = log_init;
        } else {
            log_post = [joint[0] - norm, joint[1] - norm];
        }
        scores.push(log_post[1].exp());
    }
    ScoreSeries::new(scores, 0)
}
