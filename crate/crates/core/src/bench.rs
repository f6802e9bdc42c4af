//! Experiment orchestration: grid execution, metric rows, aggregation across
//! seeds, JSONL persistence, and external-data ingestion with count-level
//! binning and anomaly injection.

use std::io::{BufRead, Write};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::datagen::{generate, GridCell, GridSpec};
use crate::detectors::{run_detector, BocSpec, DetectorContext, DetectorSpec};
use crate::error::{Error, Result};
use crate::metrics::{auprc, best_f1, pr_curve, time_to_detection};
use crate::rng::{bernoulli, uniform_f64, StreamKey};
use crate::series::{read_series_csv, CountSeries};
use crate::smoothing::{smooth, SmootherSpec};

/// Evaluation defaults shared by detectors that train on a prefix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    #[serde(default = "crate::forecast::default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_quantile_level")]
    pub quantile_level: f64,
}

fn default_quantile_level() -> f64 {
    crate::forecast::DEFAULT_QUANTILE_LEVEL
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            train_fraction: crate::forecast::default_train_fraction(),
            quantile_level: default_quantile_level(),
        }
    }
}

/// The full experiment: grid, detectors, smoothers, evaluation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub grid: GridSpec,
    pub detectors: Vec<DetectorSpec>,
    pub smoothers: Vec<SmootherSpec>,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("bench-out")
}

fn default_parallelism() -> usize {
    1
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.detectors.is_empty() {
            return Err(Error::InvalidConfig("no detectors configured".into()));
        }
        if self.smoothers.is_empty() {
            return Err(Error::InvalidConfig("no smoothers configured".into()));
        }
        if self.parallelism < 1 {
            return Err(Error::InvalidConfig(
                "parallelism must be at least 1".into(),
            ));
        }
        for s in &self.smoothers {
            s.validate()?;
        }
        Ok(())
    }
}

/// Metrics for one (cell x detector x smoother) combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub cell: GridCell,
    pub detector: String,
    pub smoother: String,
    pub auprc: f64,
    pub best_f1: f64,
    pub mean_ttd_at_best_f1: f64,
    pub prevalence: f64,
    pub runtime_ms: u64,
}

/// A combination that failed; the sweep continues past it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchFailure {
    pub cell: GridCell,
    pub detector: String,
    pub smoother: String,
    pub error: String,
}

/// One line of the results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BenchRow {
    Result(BenchResult),
    Failure(BenchFailure),
}

impl BenchRow {
    pub fn as_result(&self) -> Option<&BenchResult> {
        match self {
            BenchRow::Result(r) => Some(r),
            BenchRow::Failure(_) => None,
        }
    }
}

/// Scores one generated cell with every detector and smoother.
fn run_cell(
    grid: &GridSpec,
    cell: GridCell,
    detectors: &[DetectorSpec],
    smoothers: &[SmootherSpec],
    eval: &EvalConfig,
) -> Vec<BenchRow> {
    let cfg = grid.config_for(&cell);
    let mut rows = Vec::with_capacity(detectors.len() * smoothers.len());
    let generated = generate(&cfg);
    let (series, _path) = match generated {
        Ok(pair) => pair,
        Err(e) => {
            for det in detectors {
                for sm in smoothers {
                    rows.push(BenchRow::Failure(BenchFailure {
                        cell,
                        detector: det.id().to_string(),
                        smoother: sm.kind.id().to_string(),
                        error: e.to_string(),
                    }));
                }
            }
            return rows;
        }
    };
    let truth = BocSpec::from_generator(&cfg);
    let labels = series.labels().expect("generated series are labeled");
    let all_segments = series.segments();

    for det in detectors {
        // stream keyed by (seed, A, r, detector) so adding or removing
        // detectors never changes other rows
        let stream_seed = StreamKey::new(cell.seed)
            .with_f64(cell.amplitude)
            .with_f64(cell.r)
            .with_str(det.id())
            .value();
        let ctx = DetectorContext {
            seed: stream_seed,
            default_window: cfg.period(),
            train_fraction: eval.train_fraction,
            quantile_level: eval.quantile_level,
            truth: Some(&truth),
        };
        let started = std::time::Instant::now();
        let raw = run_detector(&series, det, &ctx);
        let detector_ms = started.elapsed().as_millis() as u64;
        for sm in smoothers {
            let row = (|| -> Result<BenchResult> {
                let raw = raw.as_ref().map_err(clone_error)?;
                let started = std::time::Instant::now();
                let scores = smooth(raw, sm)?;
                let curve = pr_curve(&scores, labels)?;
                let (f1, threshold) = best_f1(&scores, labels)?;
                let segments: Vec<_> = all_segments
                    .iter()
                    .copied()
                    .filter(|s| s.start >= scores.valid_from())
                    .collect();
                let ttd = time_to_detection(&scores, &segments, threshold)?;
                Ok(BenchResult {
                    cell,
                    detector: det.id().to_string(),
                    smoother: sm.kind.id().to_string(),
                    auprc: auprc(&curve),
                    best_f1: f1,
                    mean_ttd_at_best_f1: ttd.mean_ttd,
                    prevalence: curve.prevalence,
                    runtime_ms: detector_ms + started.elapsed().as_millis() as u64,
                })
            })();
            rows.push(match row {
                Ok(result) => BenchRow::Result(result),
                Err(e) => BenchRow::Failure(BenchFailure {
                    cell,
                    detector: det.id().to_string(),
                    smoother: sm.kind.id().to_string(),
                    error: e.to_string(),
                }),
            });
        }
    }
    rows
}

fn clone_error(e: &Error) -> Error {
    Error::InvalidConfig(e.to_string())
}

/// Runs the experiment, forwarding rows to `sink` in canonical (cell,
/// detector, smoother) order as they become available.
///
/// Results are independent of the parallelism level: cells are processed in
/// deterministic chunks and every randomized detector draws from a stream
/// keyed by its own coordinates.
pub fn run_experiment_streaming(
    cfg: &ExperimentConfig,
    mut sink: impl FnMut(&BenchRow) -> Result<()>,
) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    let cells = cfg.grid.cells();
    let mut rows = Vec::with_capacity(cells.len() * cfg.detectors.len() * cfg.smoothers.len());

    let chunk_size = cfg.parallelism.max(1);
    for chunk in cells.chunks(chunk_size) {
        let produced = run_chunk(cfg, chunk);
        for row in produced {
            sink(&row)?;
            rows.push(row);
        }
    }
    Ok(rows)
}

#[cfg(feature = "parallel")]
fn run_chunk(cfg: &ExperimentConfig, chunk: &[GridCell]) -> Vec<BenchRow> {
    use rayon::prelude::*;
    if cfg.parallelism == 1 {
        return chunk
            .iter()
            .flat_map(|&cell| run_cell(&cfg.grid, cell, &cfg.detectors, &cfg.smoothers, &cfg.eval))
            .collect();
    }
    // collect preserves chunk order, so output is scheduling-independent
    chunk
        .par_iter()
        .map(|&cell| run_cell(&cfg.grid, cell, &cfg.detectors, &cfg.smoothers, &cfg.eval))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn run_chunk(cfg: &ExperimentConfig, chunk: &[GridCell]) -> Vec<BenchRow> {
    chunk
        .iter()
        .flat_map(|&cell| run_cell(&cfg.grid, cell, &cfg.detectors, &cfg.smoothers, &cfg.eval))
        .collect()
}

/// Runs the experiment and returns all rows.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<BenchRow>> {
    run_experiment_streaming(cfg, |_| Ok(()))
}

/// Mean/std of one metric over seeds for a (A, r, detector, smoother) group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    #[serde(rename = "A")]
    pub amplitude: f64,
    pub r: f64,
    pub detector: String,
    pub smoother: String,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

/// Metrics reported per aggregate group, in column order.
pub const AGGREGATE_METRICS: [&str; 4] = ["auprc", "best_f1", "mean_ttd_at_best_f1", "prevalence"];

/// Groups result rows by (A, r, detector, smoother) and reports the sample
/// mean and standard deviation (n-1 denominator; 0 when n = 1) of every
/// metric over seeds. Order-insensitive in the input.
pub fn aggregate(rows: &[BenchRow]) -> Vec<AggregateRow> {
    use std::collections::BTreeMap;
    type Key = (u64, u64, String, String);
    let mut groups: BTreeMap<Key, Vec<&BenchResult>> = BTreeMap::new();
    for row in rows.iter().filter_map(BenchRow::as_result) {
        let key = (
            row.cell.amplitude.to_bits(),
            row.cell.r.to_bits(),
            row.detector.clone(),
            row.smoother.clone(),
        );
        groups.entry(key).or_default().push(row);
    }
    let mut out = Vec::new();
    for ((a_bits, r_bits, detector, smoother), members) in groups {
        for metric in AGGREGATE_METRICS {
            let values: Vec<f64> = members
                .iter()
                .map(|m| match metric {
                    "auprc" => m.auprc,
                    "best_f1" => m.best_f1,
                    "mean_ttd_at_best_f1" => m.mean_ttd_at_best_f1,
                    "prevalence" => m.prevalence,
                    _ => unreachable!(),
                })
                .collect();
            let n = values.len();
            let mean = values.iter().sum::<f64>() / n as f64;
            let std = if n > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            out.push(AggregateRow {
                amplitude: f64::from_bits(a_bits),
                r: f64::from_bits(r_bits),
                detector: detector.clone(),
                smoother: smoother.clone(),
                metric: metric.to_string(),
                mean,
                std,
                n,
            });
        }
    }
    out.sort_by(|a, b| {
        a.amplitude
            .total_cmp(&b.amplitude)
            .then(a.r.total_cmp(&b.r))
            .then(a.detector.cmp(&b.detector))
            .then(a.smoother.cmp(&b.smoother))
            .then(a.metric.cmp(&b.metric))
    });
    out
}

/// Writes results as JSON lines, one row object per line.
pub fn write_results_jsonl(rows: &[BenchRow], mut out: impl Write) -> Result<()> {
    for row in rows {
        serde_json::to_writer(&mut out, row)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_results_jsonl(input: impl BufRead) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line)?);
    }
    Ok(rows)
}

/// Writes the aggregate CSV: `A,r,detector,smoother,metric,mean,std,n`.
pub fn write_aggregate_csv(rows: &[AggregateRow], mut out: impl Write) -> Result<()> {
    out.write_all(b"A,r,detector,smoother,metric,mean,std,n\n")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.amplitude, row.r, row.detector, row.smoother, row.metric, row.mean, row.std, row.n
        )?;
    }
    Ok(())
}

/// Parses the aggregate CSV back into rows.
pub fn read_aggregate_csv(input: impl BufRead) -> Result<Vec<AggregateRow>> {
    let mut rows = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if idx == 0 {
            if line.trim_end() != "A,r,detector,smoother,metric,mean,std,n" {
                return Err(Error::Csv {
                    line: 1,
                    message: format!("unexpected header `{line}`"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::Csv {
                line: idx + 1,
                message: "expected 8 columns".into(),
            });
        }
        let parse = |i: usize| -> Result<f64> {
            fields[i].parse().map_err(|_| Error::Csv {
                line: idx + 1,
                message: format!("cannot parse `{}`", fields[i]),
            })
        };
        rows.push(AggregateRow {
            amplitude: parse(0)?,
            r: parse(1)?,
            detector: fields[2].to_string(),
            smoother: fields[3].to_string(),
            metric: fields[4].to_string(),
            mean: parse(5)?,
            std: parse(6)?,
            n: fields[7].parse().map_err(|_| Error::Csv {
                line: idx + 1,
                message: format!("cannot parse `{}`", fields[7]),
            })?,
        });
    }
    Ok(rows)
}

/// Reads a series from the shared CSV format, enforcing the expected label
/// column presence.
pub fn ingest_csv(
    path: &std::path::Path,
    dt: f64,
    label_column_present: bool,
) -> Result<CountSeries> {
    let file = std::fs::File::open(path)?;
    let series = read_series_csv(std::io::BufReader::new(file), dt)?;
    if series.labels().is_some() != label_column_present {
        return Err(Error::Csv {
            line: 1,
            message: format!(
                "expected label column present = {label_column_present}, file disagrees"
            ),
        });
    }
    Ok(series)
}

/// Ranks series by mean count and splits them into `bins` quantile groups of
/// near-equal size (remainder spread over the lower bins). Returns indices
/// into the input, lowest count level first.
pub fn bin_by_count_level(series_set: &[CountSeries], bins: usize) -> Result<Vec<Vec<usize>>> {
    if bins == 0 {
        return Err(Error::InvalidConfig("need at least one bin".into()));
    }
    if series_set.len() < bins {
        return Err(Error::InvalidConfig(format!(
            "need at least {bins} series for {bins} bins, got {}",
            series_set.len()
        )));
    }
    let mut order: Vec<usize> = (0..series_set.len()).collect();
    order.sort_by(|&a, &b| {
        series_set[a]
            .mean()
            .total_cmp(&series_set[b].mean())
            .then(a.cmp(&b))
    });
    let base = series_set.len() / bins;
    let remainder = series_set.len() % bins;
    let mut out = Vec::with_capacity(bins);
    let mut cursor = 0;
    for bin in 0..bins {
        let size = base + usize::from(bin < remainder);
        out.push(order[cursor..cursor + size].to_vec());
        cursor += size;
    }
    Ok(out)
}

/// Independently replaces each value by zero with probability `p`; labels
/// and metadata are untouched.
pub fn binomial_zero_out(series: &CountSeries, p: f64, seed: u64) -> Result<CountSeries> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidConfig(format!(
            "zero-out probability {p} outside [0, 1]"
        )));
    }
    let mut rng = StreamKey::new(seed).with_str("zero-out").with_f64(p).rng();
    let values = series
        .values()
        .iter()
        .map(|&v| if bernoulli(&mut rng, p) { 0 } else { v })
        .collect();
    rebuild(series, values, series.labels().map(<[bool]>::to_vec))
}

/// Injects drop anomalies into a real series: samples a hidden state path
/// from the transition matrix and binomially thins the observed counts in
/// anomalous steps with keep-probability `1 - r`. Existing labels are
/// replaced by the sampled path.
pub fn inject_anomalies(
    series: &CountSeries,
    r: f64,
    transition: [[f64; 2]; 2],
    seed: u64,
) -> Result<CountSeries> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::InvalidConfig(format!(
            "reduction rate {r} outside [0, 1]"
        )));
    }
    for row in &transition {
        if !(row.iter().all(|p| (0.0..=1.0).contains(p)) && (row[0] + row[1] - 1.0).abs() <= 1e-12)
        {
            return Err(Error::InvalidConfig(
                "transition rows must be stochastic".into(),
            ));
        }
    }
    let mut rng = StreamKey::new(seed).with_str("inject").with_f64(r).rng();
    let mut state = 0u8;
    let mut values = Vec::with_capacity(series.len());
    let mut labels = Vec::with_capacity(series.len());
    for (t, &x) in series.values().iter().enumerate() {
        if t > 0 {
            let stay = transition[state as usize][state as usize];
            if uniform_f64(&mut rng) >= stay {
                state ^= 1;
            }
        }
        labels.push(state == 1);
        let value = if state == 1 {
            // binomial thinning: keep each of the x unit counts with
            // probability 1 - r
            match r {
                _ if r >= 1.0 => 0,
                _ if r <= 0.0 => x,
                _ => (0..x).filter(|_| bernoulli(&mut rng, 1.0 - r)).count() as u64,
            }
        } else {
            x
        };
        values.push(value);
    }
    rebuild(series, values, Some(labels))
}

fn rebuild(
    series: &CountSeries,
    values: Vec<u64>,
    labels: Option<Vec<bool>>,
) -> Result<CountSeries> {
    let mut out = CountSeries::new(values, series.dt())?;
    for (k, v) in series.meta() {
        out = out.with_meta(k, v);
    }
    match labels {
        Some(l) => out.with_labels(l),
        None => Ok(out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::GeneratorConfig;
    use crate::smoothing::SmootherKind;

    fn tiny_config() -> ExperimentConfig {
        let mut base = GeneratorConfig::new(1.0, 0.0, 0);
        base.len = 1200;
        ExperimentConfig {
            grid: GridSpec {
                amplitudes: vec![4.0, 64.0],
                reduction_rates: vec![1.0],
                seeds: vec![0],
                base,
            },
            detectors: vec![
                DetectorSpec::ZeroRunLength,
                DetectorSpec::Ecod,
                DetectorSpec::Boc,
            ],
            smoothers: vec![
                SmootherSpec::new(SmootherKind::None),
                SmootherSpec::new(SmootherKind::Ema),
            ],
            eval: EvalConfig::default(),
            output_dir: PathBuf::from("unused"),
            parallelism: 1,
        }
    }

    #[test]
    fn row_cardinality_is_the_product() {
        let cfg = tiny_config();
        let rows = run_experiment(&cfg).unwrap();
        assert_eq!(rows.len(), 2 * 3 * 2);
        assert!(rows.iter().all(|r| r.as_result().is_some()));
    }

    #[test]
    fn full_grid_cardinality() {
        // 15 amplitudes x 4 reduction rates x 5 seeds x 10 detectors x 2 smoothers
        let cells = GridSpec::full_default().cells().len();
        assert_eq!(cells * crate::detectors::DETECTOR_IDS.len() * 2, 6000);
    }

    #[test]
    fn reruns_are_identical_modulo_runtime() {
        let cfg = tiny_config();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            match (x, y) {
                (BenchRow::Result(x), BenchRow::Result(y)) => {
                    let mut y = y.clone();
                    y.runtime_ms = x.runtime_ms;
                    assert_eq!(x, &y);
                }
                other => panic!("unexpected rows {other:?}"),
            }
        }
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallelism_does_not_change_results() {
        let mut cfg = tiny_config();
        let sequential = run_experiment(&cfg).unwrap();
        cfg.parallelism = 4;
        let parallel = run_experiment(&cfg).unwrap();
        for (x, y) in sequential.iter().zip(&parallel) {
            match (x, y) {
                (BenchRow::Result(x), BenchRow::Result(y)) => {
                    let mut y = y.clone();
                    y.runtime_ms = x.runtime_ms;
                    assert_eq!(x, &y);
                }
                other => panic!("unexpected rows {other:?}"),
            }
        }
    }

    #[test]
    fn detector_failure_becomes_error_row_and_run_continues() {
        let mut cfg = tiny_config();
        // k-NN needs (k+1) * w samples; k = 999 cannot be satisfied
        cfg.detectors = vec![
            DetectorSpec::Knn {
                window: Some(10),
                k: 999,
            },
            DetectorSpec::ZeroRunLength,
        ];
        let rows = run_experiment(&cfg).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 2);
        let failures: Vec<_> = rows
            .iter()
            .filter(|r| matches!(r, BenchRow::Failure(_)))
            .collect();
        assert_eq!(failures.len(), 2 * 2);
        let ok: Vec<_> = rows.iter().filter_map(BenchRow::as_result).collect();
        assert!(ok.iter().all(|r| r.detector == "zero-run-length"));
    }

    #[test]
    fn adding_detectors_never_changes_other_rows() {
        // streams are keyed by (seed, A, r, detector), so the seeded
        // isolation forest must produce identical rows with or without
        // company
        let mut cfg = tiny_config();
        cfg.grid.base.len = 2000;
        cfg.detectors = vec![DetectorSpec::IsolationForest {
            window: Some(10),
            n_trees: 20,
            subsample: 64,
            seed: None,
        }];
        let alone = run_experiment(&cfg).unwrap();
        cfg.detectors.insert(0, DetectorSpec::ZeroRunLength);
        let together = run_experiment(&cfg).unwrap();
        let forest_rows: Vec<_> = together
            .iter()
            .filter_map(BenchRow::as_result)
            .filter(|r| r.detector == "isolation-forest")
            .collect();
        for (a, b) in alone
            .iter()
            .filter_map(BenchRow::as_result)
            .zip(forest_rows)
        {
            assert_eq!(a.auprc, b.auprc);
            assert_eq!(a.best_f1, b.best_f1);
        }
    }

    #[test]
    fn streaming_sink_sees_rows_in_order() {
        let cfg = tiny_config();
        let mut seen = Vec::new();
        let rows = run_experiment_streaming(&cfg, |row| {
            seen.push(row.clone());
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, rows);
    }

    #[test]
    fn aggregate_mean_and_std() {
        let mk = |seed: u64, auprc: f64| {
            BenchRow::Result(BenchResult {
                cell: GridCell {
                    amplitude: 4.0,
                    r: 0.5,
                    seed,
                },
                detector: "ecod".into(),
                smoother: "none".into(),
                auprc,
                best_f1: 0.5,
                mean_ttd_at_best_f1: 1.0,
                prevalence: 0.1,
                runtime_ms: 3,
            })
        };
        let rows = vec![mk(0, 0.4), mk(1, 0.6)];
        let agg = aggregate(&rows);
        let auprc_row = agg.iter().find(|a| a.metric == "auprc").unwrap();
        assert_eq!(auprc_row.n, 2);
        assert!((auprc_row.mean - 0.5).abs() < 1e-12);
        assert!((auprc_row.std - 0.141_421_356_237_309_5).abs() < 1e-12);

        let constant = vec![mk(0, 0.5), mk(1, 0.5), mk(2, 0.5), mk(3, 0.5), mk(4, 0.5)];
        let agg = aggregate(&constant);
        let auprc_row = agg.iter().find(|a| a.metric == "auprc").unwrap();
        assert_eq!(auprc_row.mean, 0.5);
        assert_eq!(auprc_row.std, 0.0);
        assert_eq!(auprc_row.n, 5);

        let single = vec![mk(7, 0.9)];
        let agg = aggregate(&single);
        assert!(agg.iter().all(|a| a.n == 1 && a.std == 0.0));
    }

    #[test]
    fn aggregate_is_permutation_invariant() {
        let cfg = tiny_config();
        let rows = run_experiment(&cfg).unwrap();
        let mut reversed = rows.clone();
        reversed.reverse();
        assert_eq!(aggregate(&rows), aggregate(&reversed));
    }

    #[test]
    fn jsonl_round_trip() {
        let cfg = tiny_config();
        let rows = run_experiment(&cfg).unwrap();
        let mut buf = Vec::new();
        write_results_jsonl(&rows, &mut buf).unwrap();
        let back = read_results_jsonl(buf.as_slice()).unwrap();
        assert_eq!(rows, back);
    }

    #[test]
    fn aggregate_csv_round_trip() {
        let cfg = tiny_config();
        let agg = aggregate(&run_experiment(&cfg).unwrap());
        let mut buf = Vec::new();
        write_aggregate_csv(&agg, &mut buf).unwrap();
        let back = read_aggregate_csv(buf.as_slice()).unwrap();
        assert_eq!(agg, back);
    }

    #[test]
    fn ingest_rejects_negative_values_with_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "t,value\n0,3\n1,-1\n").unwrap();
        let err = ingest_csv(&path, 0.1, false).unwrap_err();
        match err {
            Error::Csv { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ingest_parses_labels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ok.csv");
        std::fs::write(&path, "t,value,label\n0,3,0\n1,0,1\n2,2,0\n").unwrap();
        let series = ingest_csv(&path, 0.1, true).unwrap();
        assert_eq!(series.len(), 3);
        assert_eq!(series.labels().unwrap(), &[false, true, false]);
    }

    fn series_with_mean(mean: u64, len: usize) -> CountSeries {
        CountSeries::new(vec![mean; len], 1.0).unwrap()
    }

    #[test]
    fn binning_sizes_and_order() {
        let eight: Vec<CountSeries> = (1..=8).map(|m| series_with_mean(m, 10)).collect();
        let bins = bin_by_count_level(&eight, 4).unwrap();
        assert_eq!(
            bins.iter().map(Vec::len).collect::<Vec<_>>(),
            vec![2, 2, 2, 2]
        );

        let four: Vec<CountSeries> = [1u64, 2, 3, 4]
            .iter()
            .map(|&m| series_with_mean(m, 10))
            .collect();
        let bins = bin_by_count_level(&four, 2).unwrap();
        assert_eq!(bins[0], vec![0, 1]);
        assert_eq!(bins[1], vec![2, 3]);

        let five: Vec<CountSeries> = (1..=5).map(|m| series_with_mean(m, 10)).collect();
        let bins = bin_by_count_level(&five, 4).unwrap();
        assert_eq!(
            bins.iter().map(Vec::len).collect::<Vec<_>>(),
            vec![2, 1, 1, 1]
        );
    }

    #[test]
    fn zero_out_edge_probabilities() {
        let series = series_with_mean(9, 50);
        let identity = binomial_zero_out(&series, 0.0, 1).unwrap();
        assert_eq!(identity.values(), series.values());
        let zeroed = binomial_zero_out(&series, 1.0, 1).unwrap();
        assert!(zeroed.values().iter().all(|&v| v == 0));
    }

    #[test]
    fn zero_out_fraction_matches_probability() {
        let series = series_with_mean(5, 100_000);
        let out = binomial_zero_out(&series, 0.5, 3).unwrap();
        let zeroed = out.values().iter().filter(|&&v| v == 0).count() as f64;
        let frac = zeroed / out.len() as f64;
        assert!((frac - 0.5).abs() < 0.01, "fraction {frac}");
    }

    #[test]
    fn injection_edge_cases() {
        let series = series_with_mean(7, 3000);
        let t = [[0.95, 0.05], [0.1, 0.9]];
        let full = inject_anomalies(&series, 1.0, t, 5).unwrap();
        let labels = full.labels().unwrap();
        assert!(labels.iter().any(|&l| l));
        for (v, &l) in full.values().iter().zip(labels) {
            if l {
                assert_eq!(*v, 0);
            } else {
                assert_eq!(*v, 7);
            }
        }
        let none = inject_anomalies(&series, 0.0, t, 5).unwrap();
        assert_eq!(none.values(), series.values());
    }

    #[test]
    fn injection_thins_counts_by_half() {
        let series = series_with_mean(20, 100_000);
        let t = [[0.95, 0.05], [0.1, 0.9]];
        let out = inject_anomalies(&series, 0.5, t, 9).unwrap();
        let labels = out.labels().unwrap();
        let anomalous: Vec<f64> = out
            .values()
            .iter()
            .zip(labels)
            .filter(|&(_, &l)| l)
            .map(|(&v, _)| v as f64)
            .collect();
        assert!(anomalous.len() > 1000);
        let mean = anomalous.iter().sum::<f64>() / anomalous.len() as f64;
        // normal steps stay at exactly 20, so the target ratio is 0.5
        assert!(
            (mean / 20.0 - 0.5).abs() / 0.5 < 0.10,
            "ratio {}",
            mean / 20.0
        );
    }
}
