//! Left matrix profile: per-window minimum z-normalized Euclidean distance
//! to every earlier non-overlapping window.
//!
//! Brute force with incremental window statistics; at benchmark scale the
//! quadratic pair loop is well under a second per series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{CountSeries, ScoreSeries};

use super::window::{anomaly_prefix, window_is_clean, znorm_distance, WindowSpec, WindowStats};

/// Which history windows a score may be compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HistoryFilter {
    /// Every earlier non-overlapping window.
    None,
    /// Only earlier windows that overlap no labeled anomalous step.
    #[default]
    OracleLabels,
}

/// Score at index `i` = minimum z-normalized distance from the window ending
/// at `i` to every window ending at or before `i - w` (exclusion zone = w).
/// With no eligible history window the maximum-distance sentinel `2 sqrt(w)`
/// is used. `valid_from` is `2w - 1`, the first index with any history.
pub fn matrix_profile(
    series: &CountSeries,
    window: &WindowSpec,
    filter: HistoryFilter,
) -> Result<ScoreSeries> {
    window.validate()?;
    let w = window.width;
    let n = series.len();
    if n < 2 * w {
        return Err(Error::SeriesTooShort {
            need: 2 * w,
            got: n,
        });
    }
    let values = series.values();
    let stats = WindowStats::compute(values, w);
    let prefix = anomaly_prefix(series.labels(), n);
    let sentinel = 2.0 * (w as f64).sqrt();

    let tail: Vec<f64> = (2 * w - 1..n)
        .map(|i| {
            let mut best = f64::INFINITY;
            for j in w - 1..=i - w {
                if filter == HistoryFilter::OracleLabels && !window_is_clean(&prefix, w, j) {
                    continue;
                }
                let d = znorm_distance(values, &stats, w, i, j);
                if d < best {
                    best = d;
                }
            }
            if best.is_finite() {
                best
            } else {
                sentinel
            }
        })
        .collect();
    ScoreSeries::from_tail(tail, 2 * w - 1, n)
}
