//! Benchmark toolkit for anomaly detection on low-count seasonal time series.
//!
//! The crate generates seasonal Poisson count series with injected drop
//! anomalies, runs a suite of anomaly detectors over them, applies post-hoc
//! anomaly-score smoothing, and evaluates detection quality (AUPRC, F1,
//! time-to-detection) across count levels and anomaly severities.

pub mod bench;
pub mod datagen;
pub mod detectors;
pub mod error;
pub mod forecast;
pub mod metrics;
pub mod plot;
pub mod poisson;
pub mod rng;
pub mod series;
pub mod smoothing;

pub use error::{Error, Result};
pub use series::{AnomalySegment, CountSeries, ScoreSeries};
