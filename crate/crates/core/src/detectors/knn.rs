//! k-NN distance detector: mean raw Euclidean distance to the k nearest
//! preceding windows.

use crate::error::{Error, Result};
use crate::series::{CountSeries, ScoreSeries};

use super::window::{raw_distance, WindowSpec};

/// Score at `i` = mean of the k smallest raw Euclidean distances from the
/// window ending at `i` to all non-overlapping preceding windows. With fewer
/// than k predecessors all available ones are used; with none, the same
/// sentinel as the matrix profile (`2 sqrt(w)`).
pub fn knn_distance(series: &CountSeries, window: &WindowSpec, k: usize) -> Result<ScoreSeries> {
    window.validate()?;
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    let w = window.width;
    let n = series.len();
    if n < (k + 1) * w {
        return Err(Error::SeriesTooShort {
            need: (k + 1) * w,
            got: n,
        });
    }
    let values = series.values();
    let sentinel = 2.0 * (w as f64).sqrt();

    let tail: Vec<f64> = (2 * w - 1..n)
        .map(|i| {
            // keep the k smallest distances seen so far, ascending
            let mut nearest: Vec<f64> = Vec::with_capacity(k + 1);
            for j in w - 1..=i - w {
                let d = raw_distance(values, w, i, j);
                let pos = nearest.partition_point(|&x| x < d);
                if pos < k {
                    nearest.insert(pos, d);
                    if nearest.len() > k {
                        nearest.pop();
                    }
                }
            }
            if nearest.is_empty() {
                sentinel
            } else {
                nearest.iter().sum::<f64>() / nearest.len() as f64
            }
        })
        .collect();
    ScoreSeries::from_tail(tail, 2 * w - 1, n)
}
