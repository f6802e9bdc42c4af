//! Post-hoc smoothing operators applied to raw anomaly scores.
//!
//! All operators are causal: the smoothed score at `t` depends only on raw
//! scores at or before `t`. Sliding windows are trailing and truncated at the
//! start of the evaluated region.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::ScoreSeries;

pub const DEFAULT_EMA_ALPHA: f64 = 0.125;
pub const DEFAULT_WINDOW: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmootherKind {
    None,
    Ema,
    SwAvg,
    SwMed,
    SwMax,
    SwMin,
}

impl SmootherKind {
    pub const ALL: [SmootherKind; 6] = [
        SmootherKind::None,
        SmootherKind::Ema,
        SmootherKind::SwAvg,
        SmootherKind::SwMed,
        SmootherKind::SwMax,
        SmootherKind::SwMin,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            SmootherKind::None => "none",
            SmootherKind::Ema => "ema",
            SmootherKind::SwAvg => "sw-avg",
            SmootherKind::SwMed => "sw-med",
            SmootherKind::SwMax => "sw-max",
            SmootherKind::SwMin => "sw-min",
        }
    }
}

impl std::str::FromStr for SmootherKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SmootherKind::ALL
            .iter()
            .copied()
            .find(|k| k.id() == s)
            .ok_or_else(|| {
                let valid: Vec<_> = SmootherKind::ALL.iter().map(|k| k.id()).collect();
                Error::UnknownSmoother(s.to_string(), valid.join(", "))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmootherSpec {
    pub kind: SmootherKind,
    /// EMA weight of the newest observation.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Trailing window width for the sliding-window kinds.
    #[serde(default = "default_window")]
    pub window: usize,
}

fn default_alpha() -> f64 {
    DEFAULT_EMA_ALPHA
}

fn default_window() -> usize {
    DEFAULT_WINDOW
}

impl SmootherSpec {
    pub fn new(kind: SmootherKind) -> Self {
        Self {
            kind,
            alpha: DEFAULT_EMA_ALPHA,
            window: DEFAULT_WINDOW,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidConfig("EMA alpha must lie in (0, 1]".into()));
        }
        if self.window < 1 {
            return Err(Error::InvalidConfig(
                "smoother window must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Applies the smoother over the evaluated region; length and `valid_from`
/// are preserved and the warm-up prefix is left untouched.
pub fn smooth(scores: &ScoreSeries, spec: &SmootherSpec) -> Result<ScoreSeries> {
    spec.validate()?;
    if spec.kind == SmootherKind::None {
        return Ok(scores.clone());
    }
    let raw = scores.evaluated();
    let out = match spec.kind {
        SmootherKind::None => unreachable!(),
        SmootherKind::Ema => {
            let mut out = Vec::with_capacity(raw.len());
            let mut state = f64::NAN;
            for (i, &a) in raw.iter().enumerate() {
                state = if i == 0 {
                    a
                } else {
                    (1.0 - spec.alpha) * state + spec.alpha * a
                };
                out.push(state);
            }
            out
        }
        SmootherKind::SwAvg => {
            windowed(raw, spec.window, |w| w.iter().sum::<f64>() / w.len() as f64)
        }
        SmootherKind::SwMed => windowed(raw, spec.window, |w| {
            let mut sorted = w.to_vec();
            sorted.sort_by(f64::total_cmp);
            let mid = sorted.len() / 2;
            if sorted.len() % 2 == 0 {
                (sorted[mid - 1] + sorted[mid]) / 2.0
            } else {
                sorted[mid]
            }
        }),
        SmootherKind::SwMax => windowed(raw, spec.window, |w| {
            w.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        }),
        SmootherKind::SwMin => windowed(raw, spec.window, |w| {
            w.iter().copied().fold(f64::INFINITY, f64::min)
        }),
    };
    ScoreSeries::from_tail(out, scores.valid_from(), scores.len())
}

fn windowed(raw: &[f64], width: usize, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    (0..raw.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(width);
            f(&raw[lo..=i])
        })
        .collect()
}
