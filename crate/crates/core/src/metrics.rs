//! Evaluation: precision-recall analysis, AUPRC, F1, time-to-detection, and
//! the smoothing improvement rate.
//!
//! All point-wise metrics are computed over the evaluated region of a score
//! series only (timesteps at or after `valid_from`), so detector warm-up
//! never biases precision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{AnomalySegment, ScoreSeries};

/// One precision-recall point per distinct score threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Precision-recall curve over decreasing thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    /// Fraction of evaluated timesteps labeled anomalous.
    pub prevalence: f64,
}

/// Builds the curve by sweeping every distinct score value as a threshold
/// (predict positive iff score >= threshold); tied scores collapse into a
/// single threshold.
pub fn pr_curve(scores: &ScoreSeries, labels: &[bool]) -> Result<PrCurve> {
    if labels.len() != scores.len() {
        return Err(Error::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    let mut pairs: Vec<(f64, bool)> = scores
        .iter_evaluated()
        .map(|(t, s)| (s, labels[t]))
        .collect();
    let positives = pairs.iter().filter(|(_, l)| *l).count();
    if positives == 0 {
        return Err(Error::DegenerateLabels("all-negative"));
    }
    if positives == pairs.len() {
        return Err(Error::DegenerateLabels("all-positive"));
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut points = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < pairs.len() {
        let threshold = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == threshold {
            if pairs[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(PrPoint {
            threshold,
            precision: tp as f64 / (tp + fp) as f64,
            recall: tp as f64 / positives as f64,
        });
    }
    Ok(PrCurve {
        points,
        prevalence: positives as f64 / pairs.len() as f64,
    })
}

/// Average precision: sum of (recall step) x (precision) over decreasing
/// thresholds.
pub fn auprc(curve: &PrCurve) -> f64 {
    let mut area = 0.0;
    let mut last_recall = 0.0;
    for p in &curve.points {
        area += (p.recall - last_recall) * p.precision;
        last_recall = p.recall;
    }
    area
}

/// Convenience: AUPRC straight from scores and labels.
pub fn auprc_of(scores: &ScoreSeries, labels: &[bool]) -> Result<f64> {
    Ok(auprc(&pr_curve(scores, labels)?))
}

/// Maximum F1 over curve points and the threshold achieving it; ties break
/// toward the higher threshold.
pub fn best_f1(scores: &ScoreSeries, labels: &[bool]) -> Result<(f64, f64)> {
    let curve = pr_curve(scores, labels)?;
    let mut best = (0.0f64, curve.points[0].threshold);
    for p in &curve.points {
        let f1 = f1_of(p.precision, p.recall);
        if f1 > best.0 {
            best = (f1, p.threshold);
        }
    }
    Ok(best)
}

fn f1_of(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Per-segment detection delays at a fixed threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtdReport {
    pub per_segment: Vec<(AnomalySegment, usize)>,
    pub mean_ttd: f64,
    pub detected_fraction: f64,
}

/// Delay per segment: first in-segment timestep whose score reaches the
/// threshold, minus the segment start. An undetected segment contributes its
/// full length and counts against `detected_fraction`.
pub fn time_to_detection(
    scores: &ScoreSeries,
    segments: &[AnomalySegment],
    threshold: f64,
) -> Result<TtdReport> {
    let mut per_segment = Vec::with_capacity(segments.len());
    let mut detected = 0usize;
    for seg in segments {
        if seg.start < scores.valid_from() || seg.end > scores.len() {
            return Err(Error::SegmentOutOfBounds {
                start: seg.start,
                end: seg.end,
                len: scores.len(),
            });
        }
        let hit = scores.scores()[seg.start..seg.end]
            .iter()
            .position(|&s| s >= threshold);
        let delay = match hit {
            Some(offset) => {
                detected += 1;
                offset
            }
            None => seg.len(),
        };
        per_segment.push((*seg, delay));
    }
    let mean_ttd = if per_segment.is_empty() {
        0.0
    } else {
        per_segment.iter().map(|(_, d)| *d as f64).sum::<f64>() / per_segment.len() as f64
    };
    let detected_fraction = if segments.is_empty() {
        0.0
    } else {
        detected as f64 / segments.len() as f64
    };
    Ok(TtdReport {
        per_segment,
        mean_ttd,
        detected_fraction,
    })
}

/// One point of the F1 / time-to-detection trade-off plot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub threshold: f64,
    pub f1: f64,
    pub mean_ttd: f64,
}

/// F1 and mean TTD at every distinct threshold, in decreasing-threshold
/// order. Zero-recall thresholds report F1 = 0.
pub fn f1_ttd_tradeoff(
    scores: &ScoreSeries,
    labels: &[bool],
    segments: &[AnomalySegment],
) -> Result<Vec<TradeoffPoint>> {
    let curve = pr_curve(scores, labels)?;
    curve
        .points
        .iter()
        .map(|p| {
            let ttd = time_to_detection(scores, segments, p.threshold)?;
            Ok(TradeoffPoint {
                threshold: p.threshold,
                f1: f1_of(p.precision, p.recall),
                mean_ttd: ttd.mean_ttd,
            })
        })
        .collect()
}

/// Percentage improvement of a smoothed AUPRC over the raw AUPRC.
pub fn improvement_rate(auprc_smoothed: f64, auprc_raw: f64) -> f64 {
    100.0 * (auprc_smoothed - auprc_raw) / auprc_raw.max(1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{uniform_f64, StreamKey};
    use proptest::prelude::*;

    fn series(scores: Vec<f64>) -> ScoreSeries {
        ScoreSeries::new(scores, 0).unwrap()
    }

    /// Independent oracle: test every distinct threshold by full rescan.
    fn brute_force_curve(scores: &[f64], labels: &[bool]) -> Vec<PrPoint> {
        let mut thresholds: Vec<f64> = scores.to_vec();
        thresholds.sort_by(|a, b| b.total_cmp(a));
        thresholds.dedup();
        let positives = labels.iter().filter(|&&l| l).count();
        thresholds
            .into_iter()
            .map(|threshold| {
                let tp = scores
                    .iter()
                    .zip(labels)
                    .filter(|&(&s, &l)| s >= threshold && l)
                    .count();
                let predicted = scores.iter().filter(|&&s| s >= threshold).count();
                PrPoint {
                    threshold,
                    precision: tp as f64 / predicted as f64,
                    recall: tp as f64 / positives as f64,
                }
            })
            .collect()
    }

    fn brute_force_ap(points: &[PrPoint]) -> f64 {
        let mut area = 0.0;
        let mut last = 0.0;
        for p in points {
            area += (p.recall - last) * p.precision;
            last = p.recall;
        }
        area
    }

    fn brute_force_best_f1(points: &[PrPoint]) -> (f64, f64) {
        let mut best = (0.0f64, points[0].threshold);
        for p in points {
            let f1 = if p.precision + p.recall == 0.0 {
                0.0
            } else {
                2.0 * p.precision * p.recall / (p.precision + p.recall)
            };
            if f1 > best.0 {
                best = (f1, p.threshold);
            }
        }
        best
    }

    #[test]
    fn hand_worked_four_point_curve() {
        let scores = series(vec![0.9, 0.8, 0.4, 0.3]);
        let labels = [true, false, true, false];
        let curve = pr_curve(&scores, &labels).unwrap();
        let precisions: Vec<f64> = curve.points.iter().map(|p| p.precision).collect();
        let recalls: Vec<f64> = curve.points.iter().map(|p| p.recall).collect();
        assert_eq!(precisions, vec![1.0, 0.5, 2.0 / 3.0, 0.5]);
        assert_eq!(recalls, vec![0.5, 0.5, 1.0, 1.0]);
        assert!((auprc(&curve) - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_ranking_scores_one() {
        let scores = series(vec![0.9, 0.8, 0.2, 0.1]);
        let labels = [true, true, false, false];
        let curve = pr_curve(&scores, &labels).unwrap();
        assert!(curve
            .points
            .iter()
            .any(|p| p.precision == 1.0 && p.recall == 1.0));
        assert_eq!(auprc(&curve), 1.0);
        assert_eq!(best_f1(&scores, &labels).unwrap().0, 1.0);
    }

    #[test]
    fn constant_scores_collapse_to_prevalence() {
        let scores = series(vec![0.5; 10]);
        let labels = [
            true, false, false, false, false, false, false, false, false, true,
        ];
        let curve = pr_curve(&scores, &labels).unwrap();
        assert_eq!(curve.points.len(), 1);
        assert_eq!(curve.points[0].precision, 0.2);
        assert_eq!(curve.points[0].recall, 1.0);
        assert!((auprc(&curve) - 0.2).abs() < 1e-12);
        // F1 = 2p/(1+p)
        let (f1, _) = best_f1(&scores, &labels).unwrap();
        assert!((f1 - 2.0 * 0.2 / 1.2).abs() < 1e-12);
    }

    #[test]
    fn degenerate_labels_are_rejected() {
        let scores = series(vec![0.1, 0.2]);
        assert!(matches!(
            pr_curve(&scores, &[true, true]),
            Err(Error::DegenerateLabels("all-positive"))
        ));
        assert!(matches!(
            pr_curve(&scores, &[false, false]),
            Err(Error::DegenerateLabels("all-negative"))
        ));
    }

    #[test]
    fn warmup_region_is_excluded() {
        // With valid_from = 2 the first two (mislabeled) steps must not count.
        let scores = ScoreSeries::new(vec![9.0, 9.0, 0.9, 0.1], 2).unwrap();
        let labels = [false, false, true, false];
        let curve = pr_curve(&scores, &labels).unwrap();
        assert_eq!(curve.prevalence, 0.5);
        assert_eq!(auprc(&curve), 1.0);
    }

    #[test]
    fn random_scores_score_near_prevalence() {
        let n = 10_000;
        let mut rng = StreamKey::new(5).with_str("metrics-random").rng();
        let scores: Vec<f64> = (0..n).map(|_| uniform_f64(&mut rng)).collect();
        let labels: Vec<bool> = (0..n).map(|_| uniform_f64(&mut rng) < 0.1).collect();
        let curve = pr_curve(&series(scores), &labels).unwrap();
        let ap = auprc(&curve);
        assert!(
            (ap - curve.prevalence).abs() < 0.02,
            "AP {ap} vs prevalence {}",
            curve.prevalence
        );
    }

    #[test]
    fn anti_correlated_scores_match_enumeration() {
        let scores = series(vec![0.1, 0.2, 0.3, 0.4]);
        let labels = [true, true, false, false];
        let points = brute_force_curve(scores.scores(), &labels);
        let (bf_f1, bf_thr) = brute_force_best_f1(&points);
        let (f1, thr) = best_f1(&scores, &labels).unwrap();
        assert_eq!(f1, bf_f1);
        assert_eq!(thr, bf_thr);
    }

    #[test]
    fn ttd_examples() {
        let mut raw = vec![0.0; 300];
        raw[105] = 1.0;
        let scores = series(raw);
        let seg = AnomalySegment {
            start: 100,
            end: 200,
        };
        let report = time_to_detection(&scores, &[seg], 0.5).unwrap();
        assert_eq!(report.per_segment[0].1, 5);
        assert_eq!(report.detected_fraction, 1.0);

        // crossing exactly at the segment start
        let mut raw = vec![0.0; 300];
        raw[100] = 1.0;
        let report = time_to_detection(&series(raw), &[seg], 0.5).unwrap();
        assert_eq!(report.per_segment[0].1, 0);

        // never crossing: full-length penalty
        let report = time_to_detection(&series(vec![0.0; 300]), &[seg], 0.5).unwrap();
        assert_eq!(report.per_segment[0].1, 100);
        assert_eq!(report.detected_fraction, 0.0);
        assert_eq!(report.mean_ttd, 100.0);
    }

    #[test]
    fn ttd_is_monotone_in_threshold() {
        let mut rng = StreamKey::new(8).with_str("ttd").rng();
        let raw: Vec<f64> = (0..200).map(|_| uniform_f64(&mut rng)).collect();
        let scores = series(raw);
        let segments = [
            AnomalySegment { start: 10, end: 40 },
            AnomalySegment {
                start: 90,
                end: 140,
            },
        ];
        let mut last = vec![0usize; segments.len()];
        for i in 0..=20 {
            let threshold = i as f64 / 20.0;
            let report = time_to_detection(&scores, &segments, threshold).unwrap();
            for (j, (_, d)) in report.per_segment.iter().enumerate() {
                assert!(*d >= last[j]);
                last[j] = *d;
            }
        }
    }

    #[test]
    fn tradeoff_is_rank_invariant() {
        let mut rng = StreamKey::new(3).with_str("tradeoff").rng();
        let raw: Vec<f64> = (0..120).map(|_| uniform_f64(&mut rng)).collect();
        let labels: Vec<bool> = (0..120).map(|t| (40..60).contains(&t)).collect();
        let segments = [AnomalySegment { start: 40, end: 60 }];
        let base = f1_ttd_tradeoff(&series(raw.clone()), &labels, &segments).unwrap();
        // strictly increasing transform preserves every (f1, ttd) pair
        let transformed: Vec<f64> = raw.iter().map(|s| s.exp()).collect();
        let mapped = f1_ttd_tradeoff(&series(transformed), &labels, &segments).unwrap();
        assert_eq!(base.len(), mapped.len());
        for (a, b) in base.iter().zip(&mapped) {
            assert_eq!(a.f1, b.f1);
            assert_eq!(a.mean_ttd, b.mean_ttd);
        }
    }

    #[test]
    fn single_threshold_tradeoff() {
        let scores = series(vec![1.0; 6]);
        let labels = [true, false, true, false, false, false];
        let segments = segments_of(&labels);
        let points = f1_ttd_tradeoff(&scores, &labels, &segments).unwrap();
        assert_eq!(points.len(), 1);
    }

    fn segments_of(labels: &[bool]) -> Vec<AnomalySegment> {
        crate::series::segments_from_mask(labels)
    }

    #[test]
    fn improvement_rate_examples() {
        assert!((improvement_rate(0.6, 0.5) - 20.0).abs() < 1e-9);
        assert_eq!(improvement_rate(0.5, 0.5), 0.0);
        assert!((improvement_rate(0.5, 0.6) + 16.666_666_666_666_668).abs() < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn matches_brute_force_enumeration(
            scores in proptest::collection::vec(0.0f64..1.0, 2..200),
            flips in proptest::collection::vec(any::<bool>(), 2..200),
        ) {
            let n = scores.len().min(flips.len());
            let scores = &scores[..n];
            // quantize so score ties actually occur
            let scores: Vec<f64> = scores.iter().map(|s| (s * 8.0).round() / 8.0).collect();
            let labels = &flips[..n];
            let positives = labels.iter().filter(|&&l| l).count();
            prop_assume!(positives > 0 && positives < n);

            let curve = pr_curve(&series(scores.clone()), labels).unwrap();
            let bf_points = brute_force_curve(&scores, labels);
            prop_assert_eq!(curve.points.len(), bf_points.len());
            for (a, b) in curve.points.iter().zip(&bf_points) {
                prop_assert_eq!(a.threshold, b.threshold);
                prop_assert!((a.precision - b.precision).abs() < 1e-12);
                prop_assert!((a.recall - b.recall).abs() < 1e-12);
            }
            prop_assert!((auprc(&curve) - brute_force_ap(&bf_points)).abs() < 1e-12);

            let (f1, thr) = best_f1(&series(scores.clone()), labels).unwrap();
            let (bf_f1, bf_thr) = brute_force_best_f1(&bf_points);
            prop_assert!((f1 - bf_f1).abs() < 1e-12);
            prop_assert_eq!(thr, bf_thr);
        }

        #[test]
        fn auprc_is_invariant_under_monotone_transforms(
            scores in proptest::collection::vec(0.0f64..1.0, 4..100),
            flips in proptest::collection::vec(any::<bool>(), 4..100),
        ) {
            let n = scores.len().min(flips.len());
            let scores = &scores[..n];
            let labels = &flips[..n];
            let positives = labels.iter().filter(|&&l| l).count();
            prop_assume!(positives > 0 && positives < n);
            let base = auprc_of(&series(scores.to_vec()), labels).unwrap();
            let squashed: Vec<f64> = scores.iter().map(|s| (3.0 * s).tanh()).collect();
            let mapped = auprc_of(&series(squashed), labels).unwrap();
            prop_assert!((base - mapped).abs() < 1e-9);
        }
    }
}
