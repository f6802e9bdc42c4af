//! ECOD: empirical-CDF tail probabilities as outlier scores.
//!
//! Univariate, transductive (ECDFs are computed over the whole series), and
//! two-tailed via the max of the left and right negative log tail masses.

use crate::error::{Error, Result};
use crate::series::{CountSeries, ScoreSeries};

/// `score(x) = max(-ln F_left(x), -ln F_right(x))` with
/// `F_left(x) = #{x_i <= x}/n` and `F_right(x) = #{x_i >= x}/n`; both ECDFs
/// are at least 1/n, so scores stay finite.
pub fn ecod_score(series: &CountSeries) -> Result<ScoreSeries> {
    let n = series.len();
    if n < 10 {
        return Err(Error::SeriesTooShort { need: 10, got: n });
    }
    let mut sorted: Vec<u64> = series.values().to_vec();
    sorted.sort_unstable();
    let nf = n as f64;
    let scores = series
        .values()
        .iter()
        .map(|&x| {
            let le = sorted.partition_point(|&v| v <= x) as f64 / nf;
            let ge = (n - sorted.partition_point(|&v| v < x)) as f64 / nf;
            (-le.ln()).max(-ge.ln())
        })
        .collect();
    ScoreSeries::new(scores, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain(values: Vec<u64>) -> CountSeries {
        CountSeries::new(values, 1.0).unwrap()
    }

    #[test]
    fn extreme_value_scores_log_n() {
        let series = plain((1..=10).collect());
        let scores = ecod_score(&series).unwrap();
        // right tail of the maximum holds exactly one sample
        assert!((scores.scores()[9] - 10.0f64.ln()).abs() < 1e-12);
        // left tail of the minimum likewise
        assert!((scores.scores()[0] - 10.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn median_has_minimum_score() {
        let series = plain(vec![3, 9, 1, 7, 5, 11, 13, 15, 17, 19, 21]);
        let scores = ecod_score(&series).unwrap();
        let min_idx = scores
            .scores()
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        // 11 is the median of the 11 distinct values
        assert_eq!(series.values()[min_idx], 11);
    }

    #[test]
    fn constant_series_scores_zero_everywhere() {
        let scores = ecod_score(&plain(vec![4; 12])).unwrap();
        assert!(scores.scores().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn short_series_is_rejected() {
        assert!(matches!(
            ecod_score(&plain(vec![1; 9])),
            Err(Error::SeriesTooShort { .. })
        ));
    }
}
