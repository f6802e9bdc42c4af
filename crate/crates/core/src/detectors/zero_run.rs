//! Zero-run-length baseline: the score is the length of the run of
//! consecutive zeros ending at each step.

use crate::error::Result;
use crate::series::{CountSeries, ScoreSeries};

pub fn zero_run_length_score(series: &CountSeries) -> Result<ScoreSeries> {
    let mut run = 0u64;
    let scores = series
        .values()
        .iter()
        .map(|&v| {
            run = if v == 0 { run + 1 } else { 0 };
            run as f64
        })
        .collect();
    ScoreSeries::new(scores, 0)
}
