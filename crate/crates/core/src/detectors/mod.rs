//! The detector suite: matrix profile, k-NN, windowed autoencoder, ECOD,
//! isolation forest, zero-run-length, the Bayes optimal classifier, and the
//! three forecast scorers, behind one spec/dispatch surface.
//!
//! Every detector is pure given its spec and seed: the same input produces a
//! bit-identical score series regardless of scheduling.

mod autoencoder;
mod boc;
mod ecod;
mod iforest;
mod knn;
mod matrix_profile;
mod window;
mod zero_run;

pub use autoencoder::{autoencoder_score, Autoencoder, AutoencoderSpec};
pub use boc::{boc_score, BocSpec};
pub use ecod::ecod_score;
pub use iforest::{isolation_forest_score, Forest, IsoForestSpec};
pub use knn::knn_distance;
pub use matrix_profile::{matrix_profile, HistoryFilter};
pub use window::WindowSpec;
pub use zero_run::zero_run_length_score;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::{detect, ForecastScorer, ForecasterSpec};
use crate::series::{CountSeries, ScoreSeries};

/// The pluggable forecaster family backing the forecast detectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForecasterKind {
    #[default]
    SeasonalProfile,
}

/// Shared knobs of the three forecast detectors.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ForecastParams {
    #[serde(default)]
    pub kind: ForecasterKind,
    /// Samples per season; defaults to the context's seasonal period.
    pub period: Option<usize>,
    pub train_fraction: Option<f64>,
    #[serde(default)]
    pub robust: bool,
    /// Lower quantile level for the quantile score.
    pub quantile_level: Option<f64>,
}

/// One detector configuration, tagged by its canonical string id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case")]
pub enum DetectorSpec {
    MatrixProfile {
        window: Option<usize>,
        #[serde(default)]
        history_filter: HistoryFilter,
    },
    Knn {
        window: Option<usize>,
        #[serde(default = "default_k")]
        k: usize,
    },
    AutoEncoder {
        window: Option<usize>,
        #[serde(default = "default_hidden")]
        hidden: usize,
        #[serde(default = "default_epochs")]
        epochs: usize,
        #[serde(default = "default_learning_rate")]
        learning_rate: f64,
        train_fraction: Option<f64>,
        seed: Option<u64>,
    },
    Ecod,
    IsolationForest {
        window: Option<usize>,
        #[serde(default = "default_n_trees")]
        n_trees: usize,
        #[serde(default = "default_subsample")]
        subsample: usize,
        seed: Option<u64>,
    },
    ZeroRunLength,
    Boc,
    ForecastAbsoluteError(ForecastParams),
    ForecastQuantile(ForecastParams),
    ForecastNegativeResidual(ForecastParams),
}

fn default_k() -> usize {
    5
}

fn default_hidden() -> usize {
    4
}

fn default_epochs() -> usize {
    500
}

fn default_learning_rate() -> f64 {
    0.01
}

fn default_n_trees() -> usize {
    100
}

fn default_subsample() -> usize {
    256
}

/// Canonical ids, in suite order.
pub const DETECTOR_IDS: [&str; 10] = [
    "matrix-profile",
    "knn",
    "auto-encoder",
    "ecod",
    "isolation-forest",
    "zero-run-length",
    "boc",
    "forecast-absolute-error",
    "forecast-quantile",
    "forecast-negative-residual",
];

impl DetectorSpec {
    pub fn id(&self) -> &'static str {
        match self {
            DetectorSpec::MatrixProfile { .. } => "matrix-profile",
            DetectorSpec::Knn { .. } => "knn",
            DetectorSpec::AutoEncoder { .. } => "auto-encoder",
            DetectorSpec::Ecod => "ecod",
            DetectorSpec::IsolationForest { .. } => "isolation-forest",
            DetectorSpec::ZeroRunLength => "zero-run-length",
            DetectorSpec::Boc => "boc",
            DetectorSpec::ForecastAbsoluteError(_) => "forecast-absolute-error",
            DetectorSpec::ForecastQuantile(_) => "forecast-quantile",
            DetectorSpec::ForecastNegativeResidual(_) => "forecast-negative-residual",
        }
    }

    /// Spec with defaults for a canonical id.
    pub fn from_id(id: &str) -> Result<Self> {
        let spec = match id {
            "matrix-profile" => DetectorSpec::MatrixProfile {
                window: None,
                history_filter: HistoryFilter::default(),
            },
            "knn" => DetectorSpec::Knn {
                window: None,
                k: default_k(),
            },
            "auto-encoder" => DetectorSpec::AutoEncoder {
                window: None,
                hidden: default_hidden(),
                epochs: default_epochs(),
                learning_rate: default_learning_rate(),
                train_fraction: None,
                seed: None,
            },
            "ecod" => DetectorSpec::Ecod,
            "isolation-forest" => DetectorSpec::IsolationForest {
                window: None,
                n_trees: default_n_trees(),
                subsample: default_subsample(),
                seed: None,
            },
            "zero-run-length" => DetectorSpec::ZeroRunLength,
            "boc" => DetectorSpec::Boc,
            "forecast-absolute-error" => {
                DetectorSpec::ForecastAbsoluteError(ForecastParams::default())
            }
            "forecast-quantile" => DetectorSpec::ForecastQuantile(ForecastParams::default()),
            "forecast-negative-residual" => {
                DetectorSpec::ForecastNegativeResidual(ForecastParams::default())
            }
            other => {
                return Err(Error::UnknownDetector(
                    other.to_string(),
                    DETECTOR_IDS.join(", "),
                ))
            }
        };
        Ok(spec)
    }

    /// All ten detectors with default settings.
    pub fn full_suite() -> Vec<DetectorSpec> {
        DETECTOR_IDS
            .iter()
            .map(|id| DetectorSpec::from_id(id).unwrap())
            .collect()
    }
}

/// Ambient settings a detector may fall back to: the per-run stream seed,
/// the seasonal period, evaluation defaults, and (for the BOC) generator
/// ground truth.
#[derive(Debug, Clone)]
pub struct DetectorContext<'a> {
    /// Seed for detectors that randomize, unless their spec pins one.
    pub seed: u64,
    /// Default window width / forecast period (one seasonal period).
    pub default_window: usize,
    pub train_fraction: f64,
    pub quantile_level: f64,
    pub truth: Option<&'a BocSpec>,
}

impl Default for DetectorContext<'_> {
    fn default() -> Self {
        Self {
            seed: 0,
            default_window: 10,
            train_fraction: crate::forecast::default_train_fraction(),
            quantile_level: crate::forecast::DEFAULT_QUANTILE_LEVEL,
            truth: None,
        }
    }
}

/// Runs one detector over a series.
pub fn run_detector(
    series: &CountSeries,
    spec: &DetectorSpec,
    ctx: &DetectorContext<'_>,
) -> Result<ScoreSeries> {
    let window_of = |w: &Option<usize>| WindowSpec::new(w.unwrap_or(ctx.default_window.max(2)));
    let forecast_spec = |p: &ForecastParams| ForecasterSpec {
        period: p.period.unwrap_or(ctx.default_window),
        train_fraction: p.train_fraction.unwrap_or(ctx.train_fraction),
        robust: p.robust,
    };
    let level_of = |p: &ForecastParams| p.quantile_level.unwrap_or(ctx.quantile_level);

    match spec {
        DetectorSpec::MatrixProfile {
            window,
            history_filter,
        } => matrix_profile(series, &window_of(window), *history_filter),
        DetectorSpec::Knn { window, k } => knn_distance(series, &window_of(window), *k),
        DetectorSpec::AutoEncoder {
            window,
            hidden,
            epochs,
            learning_rate,
            train_fraction,
            seed,
        } => {
            let ae = AutoencoderSpec {
                hidden: *hidden,
                epochs: *epochs,
                learning_rate: *learning_rate,
                seed: seed.unwrap_or(ctx.seed),
                train_fraction: train_fraction.unwrap_or(ctx.train_fraction),
            };
            autoencoder_score(series, &window_of(window), &ae)
        }
        DetectorSpec::Ecod => ecod_score(series),
        DetectorSpec::IsolationForest {
            window,
            n_trees,
            subsample,
            seed,
        } => {
            let forest = IsoForestSpec {
                n_trees: *n_trees,
                subsample: *subsample,
                seed: seed.unwrap_or(ctx.seed),
            };
            isolation_forest_score(series, &window_of(window), &forest)
        }
        DetectorSpec::ZeroRunLength => zero_run_length_score(series),
        DetectorSpec::Boc => {
            let truth = ctx.truth.ok_or(Error::MissingTruth("boc"))?;
            boc_score(series, truth)
        }
        DetectorSpec::ForecastAbsoluteError(p) => detect(
            series,
            &forecast_spec(p),
            ForecastScorer::AbsoluteError,
            level_of(p),
        ),
        DetectorSpec::ForecastQuantile(p) => detect(
            series,
            &forecast_spec(p),
            ForecastScorer::Quantile,
            level_of(p),
        ),
        DetectorSpec::ForecastNegativeResidual(p) => detect(
            series,
            &forecast_spec(p),
            ForecastScorer::NegativeResidual,
            level_of(p),
        ),
    }
}
