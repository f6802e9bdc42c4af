//! Browser demo bindings: generate a synthetic low-count series, score it
//! with any detector, smooth the scores, and inspect threshold trade-offs.
//!
//! Everything crosses the JS boundary as JSON strings, so the same entry
//! points are testable on the host; `www/index.html` is the single static
//! page that drives them.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use lowcount::datagen::{self, GeneratorConfig};
use lowcount::detectors::{run_detector, BocSpec, DetectorContext, DetectorSpec};
use lowcount::metrics::{auprc, best_f1, pr_curve, time_to_detection};
use lowcount::series::{segments_from_mask, CountSeries, ScoreSeries};
use lowcount::smoothing::{smooth, SmootherSpec};

#[derive(Debug, Deserialize)]
struct GenerateRequest {
    amplitude: f64,
    reduction_rate: f64,
    seed: u64,
    #[serde(default = "default_len")]
    len: usize,
    #[serde(default = "default_t00")]
    t00: f64,
    #[serde(default = "default_t11")]
    t11: f64,
}

fn default_len() -> usize {
    2000
}

fn default_t00() -> f64 {
    0.995
}

fn default_t11() -> f64 {
    0.95
}

#[derive(Debug, Serialize)]
struct GenerateResponse {
    values: Vec<u64>,
    labels: Vec<bool>,
    seasonal_rates: Vec<f64>,
    segments: Vec<(usize, usize)>,
    dt: f64,
    period: usize,
}

fn generate_impl(params_json: &str) -> Result<String, String> {
    let req: GenerateRequest = serde_json::from_str(params_json).map_err(|e| e.to_string())?;
    let mut cfg = GeneratorConfig::new(req.amplitude, req.reduction_rate, req.seed);
    cfg.len = req.len;
    cfg.transition = [[req.t00, 1.0 - req.t00], [1.0 - req.t11, req.t11]];
    let (series, _path) = datagen::generate(&cfg).map_err(|e| e.to_string())?;
    let labels = series.labels().unwrap_or(&[]).to_vec();
    let response = GenerateResponse {
        seasonal_rates: (0..cfg.len).map(|t| cfg.seasonal_rate(t)).collect(),
        segments: series.segments().iter().map(|s| (s.start, s.end)).collect(),
        values: series.values().to_vec(),
        labels,
        dt: cfg.dt,
        period: cfg.period(),
    };
    serde_json::to_string(&response).map_err(|e| e.to_string())
}

#[derive(Debug, Deserialize)]
struct DetectRequest {
    values: Vec<u64>,
    #[serde(default)]
    labels: Option<Vec<bool>>,
    #[serde(default = "default_dt")]
    dt: f64,
    detector: DetectorSpec,
    smoother: SmootherSpec,
    /// Generator knowledge for the Bayes optimal classifier.
    #[serde(default)]
    truth: Option<TruthParams>,
}

fn default_dt() -> f64 {
    0.1
}

#[derive(Debug, Deserialize)]
struct TruthParams {
    amplitude: f64,
    reduction_rate: f64,
    #[serde(default = "default_t00")]
    t00: f64,
    #[serde(default = "default_t11")]
    t11: f64,
}

#[derive(Debug, Serialize)]
struct DetectResponse {
    scores: Vec<f64>,
    valid_from: usize,
    metrics: Option<ScoreMetrics>,
}

#[derive(Debug, Serialize)]
struct ScoreMetrics {
    auprc: f64,
    best_f1: f64,
    best_threshold: f64,
    prevalence: f64,
}

fn detect_impl(request_json: &str) -> Result<String, String> {
    let req: DetectRequest = serde_json::from_str(request_json).map_err(|e| e.to_string())?;
    let mut series = CountSeries::new(req.values, req.dt).map_err(|e| e.to_string())?;
    if let Some(labels) = req.labels.clone() {
        series = series.with_labels(labels).map_err(|e| e.to_string())?;
    }
    let truth = req.truth.as_ref().map(|t| {
        let mut cfg = GeneratorConfig::new(t.amplitude, t.reduction_rate, 0);
        cfg.len = series.len();
        cfg.dt = req.dt;
        cfg.transition = [[t.t00, 1.0 - t.t00], [1.0 - t.t11, t.t11]];
        BocSpec::from_generator(&cfg)
    });
    let ctx = DetectorContext {
        truth: truth.as_ref(),
        ..DetectorContext::default()
    };
    let raw = run_detector(&series, &req.detector, &ctx).map_err(|e| e.to_string())?;
    let smoothed = smooth(&raw, &req.smoother).map_err(|e| e.to_string())?;

    let metrics = req.labels.as_deref().and_then(|labels| {
        let curve = pr_curve(&smoothed, labels).ok()?;
        let (f1, threshold) = best_f1(&smoothed, labels).ok()?;
        Some(ScoreMetrics {
            auprc: auprc(&curve),
            best_f1: f1,
            best_threshold: threshold,
            prevalence: curve.prevalence,
        })
    });
    let response = DetectResponse {
        scores: smoothed.scores().to_vec(),
        valid_from: smoothed.valid_from(),
        metrics,
    };
    serde_json::to_string(&response).map_err(|e| e.to_string())
}

#[derive(Debug, Deserialize)]
struct ThresholdRequest {
    scores: Vec<f64>,
    valid_from: usize,
    labels: Vec<bool>,
    threshold: f64,
}

#[derive(Debug, Serialize)]
struct ThresholdResponse {
    f1: f64,
    precision: f64,
    recall: f64,
    mean_ttd: f64,
    detected_fraction: f64,
    flagged: Vec<(usize, usize)>,
}

fn threshold_metrics_impl(request_json: &str) -> Result<String, String> {
    let req: ThresholdRequest = serde_json::from_str(request_json).map_err(|e| e.to_string())?;
    let scores = ScoreSeries::new(req.scores, req.valid_from).map_err(|e| e.to_string())?;
    if req.labels.len() != scores.len() {
        return Err("labels and scores must have the same length".into());
    }
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    let mut flag_mask = vec![false; scores.len()];
    for (t, s) in scores.iter_evaluated() {
        let predicted = s >= req.threshold;
        flag_mask[t] = predicted;
        match (predicted, req.labels[t]) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if tp + fn_ == 0 {
        0.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let segments: Vec<_> = segments_from_mask(&req.labels)
        .into_iter()
        .filter(|s| s.start >= scores.valid_from())
        .collect();
    let ttd = time_to_detection(&scores, &segments, req.threshold).map_err(|e| e.to_string())?;
    let response = ThresholdResponse {
        f1,
        precision,
        recall,
        mean_ttd: ttd.mean_ttd,
        detected_fraction: ttd.detected_fraction,
        flagged: segments_from_mask(&flag_mask)
            .iter()
            .map(|s| (s.start, s.end))
            .collect(),
    };
    serde_json::to_string(&response).map_err(|e| e.to_string())
}

/// Generate a seasonal Poisson series with injected drop anomalies.
#[wasm_bindgen]
pub fn generate(params_json: &str) -> Result<String, JsError> {
    generate_impl(params_json).map_err(|e| JsError::new(&e))
}

/// Score a series with a detector, smooth the scores, and (when labels are
/// present) report AUPRC / best F1.
#[wasm_bindgen]
pub fn detect(request_json: &str) -> Result<String, JsError> {
    detect_impl(request_json).map_err(|e| JsError::new(&e))
}

/// Precision/recall/F1/TTD and flagged regions at one threshold.
#[wasm_bindgen]
pub fn threshold_metrics(request_json: &str) -> Result<String, JsError> {
    threshold_metrics_impl(request_json).map_err(|e| JsError::new(&e))
}

/// Detector ids the demo can offer, as a JSON array.
#[wasm_bindgen]
pub fn detector_ids() -> String {
    serde_json::to_string(&lowcount::detectors::DETECTOR_IDS).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn generated(amplitude: f64, r: f64) -> serde_json::Value {
        let req = format!(
            r#"{{"amplitude": {amplitude}, "reduction_rate": {r}, "seed": 1, "len": 1500}}"#
        );
        serde_json::from_str(&generate_impl(&req).unwrap()).unwrap()
    }

    #[test]
    fn generate_produces_labeled_series() {
        let out = generated(32.0, 0.5);
        assert_eq!(out["values"].as_array().unwrap().len(), 1500);
        assert_eq!(out["labels"].as_array().unwrap().len(), 1500);
        assert_eq!(out["period"], 10);
        assert!(!out["segments"].as_array().unwrap().is_empty());
    }

    #[test]
    fn detect_reports_metrics_for_labeled_input() {
        let gen = generated(64.0, 1.0);
        let req = serde_json::json!({
            "values": gen["values"],
            "labels": gen["labels"],
            "detector": {"id": "zero-run-length"},
            "smoother": {"kind": "ema", "alpha": 0.125, "window": 8},
        });
        let out: serde_json::Value =
            serde_json::from_str(&detect_impl(&req.to_string()).unwrap()).unwrap();
        assert_eq!(out["scores"].as_array().unwrap().len(), 1500);
        let auprc = out["metrics"]["auprc"].as_f64().unwrap();
        assert!(auprc > 0.2, "auprc {auprc}");
    }

    #[test]
    fn boc_runs_with_truth_and_fails_without() {
        let gen = generated(32.0, 1.0);
        let mut req = serde_json::json!({
            "values": gen["values"],
            "labels": gen["labels"],
            "detector": {"id": "boc"},
            "smoother": {"kind": "none"},
        });
        assert!(detect_impl(&req.to_string()).is_err());
        req["truth"] = serde_json::json!({"amplitude": 32.0, "reduction_rate": 1.0});
        let out: serde_json::Value =
            serde_json::from_str(&detect_impl(&req.to_string()).unwrap()).unwrap();
        assert!(out["metrics"]["auprc"].as_f64().unwrap() > 0.5);
    }

    #[test]
    fn threshold_metrics_flags_regions() {
        let labels: Vec<bool> = (0..100).map(|t| (40..60).contains(&t)).collect();
        let scores: Vec<f64> = (0..100)
            .map(|t| if (42..62).contains(&t) { 1.0 } else { 0.0 })
            .collect();
        let req = serde_json::json!({
            "scores": scores,
            "valid_from": 0,
            "labels": labels,
            "threshold": 0.5,
        });
        let out: serde_json::Value =
            serde_json::from_str(&threshold_metrics_impl(&req.to_string()).unwrap()).unwrap();
        assert_eq!(out["flagged"].as_array().unwrap().len(), 1);
        assert_eq!(out["mean_ttd"], 2.0);
        assert!(out["f1"].as_f64().unwrap() > 0.8);
    }

    #[test]
    fn detector_id_list_is_exposed() {
        let ids: Vec<String> = serde_json::from_str(&detector_ids()).unwrap();
        assert_eq!(ids.len(), 10);
        assert!(ids.contains(&"matrix-profile".to_string()));
    }
}
