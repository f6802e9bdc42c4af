//! Sliding-window plumbing shared by the segment-based detectors.
//!
//! Windows have stride 1 and their score is assigned to the window's last
//! index, so a score at `t` never looks at data after `t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Window geometry for segment-based detectors (stride fixed at 1, score
/// assigned to the last index of the window).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub width: usize,
}

impl WindowSpec {
    pub fn new(width: usize) -> Self {
        Self { width }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < 2 {
            return Err(Error::InvalidConfig(
                "window width must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

/// Per-window mean / standard deviation / constancy, computed once from
/// prefix sums (exact for integer counts).
pub(crate) struct WindowStats {
    width: usize,
    means: Vec<f64>,
    stds: Vec<f64>,
    constant: Vec<bool>,
}

impl WindowStats {
    pub fn compute(values: &[u64], width: usize) -> Self {
        let n = values.len();
        let count = n + 1 - width;
        let mut means = Vec::with_capacity(count);
        let mut stds = Vec::with_capacity(count);
        let mut constant = Vec::with_capacity(count);
        let mut sum = 0.0f64;
        let mut sum_sq = 0.0f64;
        for (i, &v) in values.iter().enumerate() {
            let v = v as f64;
            sum += v;
            sum_sq += v * v;
            if i + 1 >= width {
                let mean = sum / width as f64;
                let var = (sum_sq / width as f64 - mean * mean).max(0.0);
                let window = &values[i + 1 - width..=i];
                let is_const = window.iter().all(|&x| x == window[0]);
                means.push(mean);
                stds.push(if is_const { 0.0 } else { var.sqrt() });
                constant.push(is_const);
                let old = values[i + 1 - width] as f64;
                sum -= old;
                sum_sq -= old * old;
            }
        }
        Self {
            width,
            means,
            stds,
            constant,
        }
    }

    /// Index into the per-window vectors for the window ending at `end`.
    fn slot(&self, end: usize) -> usize {
        end + 1 - self.width
    }

    pub fn mean(&self, end: usize) -> f64 {
        self.means[self.slot(end)]
    }

    pub fn std(&self, end: usize) -> f64 {
        self.stds[self.slot(end)]
    }

    pub fn is_constant(&self, end: usize) -> bool {
        self.constant[self.slot(end)]
    }
}

/// z-normalized Euclidean distance between the windows ending at `i` and `j`.
///
/// Constant windows map to the zero vector: two constant windows are at
/// distance 0 and a constant window sits at distance sqrt(w) from any
/// non-constant one. The result never exceeds 2 sqrt(w).
pub(crate) fn znorm_distance(
    values: &[u64],
    stats: &WindowStats,
    width: usize,
    i: usize,
    j: usize,
) -> f64 {
    let w = width as f64;
    match (stats.is_constant(i), stats.is_constant(j)) {
        (true, true) => 0.0,
        (true, false) | (false, true) => w.sqrt(),
        (false, false) => {
            // explicit z-difference sum: identical windows cancel exactly,
            // unlike the correlation form which loses ~sqrt(eps) near zero
            let (mi, si) = (stats.mean(i), stats.std(i));
            let (mj, sj) = (stats.mean(j), stats.std(j));
            let sq: f64 = values[i + 1 - width..=i]
                .iter()
                .zip(&values[j + 1 - width..=j])
                .map(|(&a, &b)| {
                    let d = (a as f64 - mi) / si - (b as f64 - mj) / sj;
                    d * d
                })
                .sum();
            sq.sqrt().min(2.0 * w.sqrt())
        }
    }
}

/// Plain Euclidean distance between the raw windows ending at `i` and `j`.
pub(crate) fn raw_distance(values: &[u64], width: usize, i: usize, j: usize) -> f64 {
    values[i + 1 - width..=i]
        .iter()
        .zip(&values[j + 1 - width..=j])
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// True when the window ending at `end` overlaps no labeled anomalous step.
/// `anomaly_prefix[i]` counts labeled steps in `[0, i)`.
pub(crate) fn window_is_clean(anomaly_prefix: &[usize], width: usize, end: usize) -> bool {
    anomaly_prefix[end + 1] - anomaly_prefix[end + 1 - width] == 0
}

/// Prefix counts of anomalous labels; all-zero when labels are absent.
pub(crate) fn anomaly_prefix(labels: Option<&[bool]>, len: usize) -> Vec<usize> {
    let mut prefix = vec![0usize; len + 1];
    if let Some(labels) = labels {
        for (i, &l) in labels.iter().enumerate() {
            prefix[i + 1] = prefix[i] + l as usize;
        }
    }
    prefix
}
