use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use lowcount::bench::{
    aggregate, read_aggregate_csv, run_experiment_streaming, write_aggregate_csv,
    write_results_jsonl, BenchRow, ExperimentConfig,
};
use lowcount::datagen::{generate_grid, GridSpec, SeriesSidecar};
use lowcount::detectors::{run_detector, BocSpec, DetectorContext, DetectorSpec};
use lowcount::metrics::{
    auprc, best_f1, f1_ttd_tradeoff, improvement_rate, pr_curve, time_to_detection,
};
use lowcount::plot::{
    plot_f1_ttd, plot_improvement_heatmap, plot_metric_vs_count, plot_series_with_anomalies,
    HeatmapCell, PlotOptions,
};
use lowcount::rng::StreamKey;
use lowcount::series::{
    read_scores_csv, read_series_csv, write_scores_csv, write_series_csv, CountSeries,
};
use lowcount::smoothing::{smooth, SmootherKind, SmootherSpec};
use lowcount::ScoreSeries;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or an invalid configuration document: exit code 1.
    Usage(String),
    /// A failure while doing the work: exit code 2.
    Runtime(String),
}

type CliResult<T = ()> = Result<T, CliError>;

trait IntoCli<T> {
    fn or_usage(self) -> CliResult<T>;
    fn or_runtime(self) -> CliResult<T>;
}

impl<T, E: std::fmt::Display> IntoCli<T> for Result<T, E> {
    fn or_usage(self) -> CliResult<T> {
        self.map_err(|e| CliError::Usage(e.to_string()))
    }

    fn or_runtime(self) -> CliResult<T> {
        self.map_err(|e| CliError::Runtime(e.to_string()))
    }
}

#[derive(Parser)]
#[command(
    name = "lowcount",
    version,
    about = "Low-count time series anomaly detection benchmark"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the benchmark grid: one CSV + sidecar JSON per series.
    Generate {
        /// Grid config JSON: amplitudes, reduction_rates, seeds, base.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
    /// Score one series with a detector and optional smoother.
    Detect {
        /// Series CSV in the `t,value[,label]` format.
        #[arg(long)]
        series: PathBuf,
        /// Detector id (see --detector help for the list).
        #[arg(long)]
        detector: String,
        /// Optional JSON file with a full detector spec fragment.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Smoother id: none, ema, sw-avg, sw-med, sw-max, sw-min.
        #[arg(long, default_value = "none")]
        smoother: String,
        /// EMA weight of the newest observation.
        #[arg(long)]
        alpha: Option<f64>,
        /// Sliding-window width for the sw-* smoothers.
        #[arg(long)]
        smoother_window: Option<usize>,
        /// Sampling interval of the series.
        #[arg(long, default_value_t = 0.1)]
        dt: f64,
        /// Output directory; defaults to the series' directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a score file against a labeled series.
    Evaluate {
        /// Scores CSV (`t,score`) produced by `detect`.
        #[arg(long)]
        scores: PathBuf,
        /// Labeled series CSV the scores belong to.
        #[arg(long)]
        series: PathBuf,
        /// Evaluate TTD/F1 at this threshold instead of the best-F1 one.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        dt: f64,
        /// Report JSON output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full benchmark sweep from an experiment config.
    Bench {
        /// Experiment config JSON (grid, detectors, smoothers, eval, output_dir).
        #[arg(long)]
        config: PathBuf,
    },
    /// Render an SVG figure.
    Plot {
        /// series-with-anomalies, metric-vs-count, f1-vs-ttd, improvement-heatmap.
        #[arg(long)]
        kind: String,
        /// Series CSV (series/trade-off kinds) or aggregates CSV (metric/heatmap kinds).
        #[arg(long)]
        input: PathBuf,
        /// SVG output path.
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        title: Option<String>,
        /// Optional scores CSV overlaid on a series plot.
        #[arg(long)]
        scores: Option<PathBuf>,
        /// Metric column for aggregate-based plots.
        #[arg(long, default_value = "auprc")]
        metric: String,
        /// Reduction rate to select from aggregates.
        #[arg(long, default_value_t = 0.5)]
        r: f64,
        /// Smoother to select (metric-vs-count) or compare to raw (heatmap).
        #[arg(long, default_value = "none")]
        smoother: String,
        /// Detector used by the f1-vs-ttd kind.
        #[arg(long, default_value = "forecast-negative-residual")]
        detector: String,
        #[arg(long, default_value_t = 0.1)]
        dt: f64,
        /// Label the count axis in log2 units.
        #[arg(long)]
        log_x: bool,
    },
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Generate { config, out } => cmd_generate(&config, &out),
        Command::Detect {
            series,
            detector,
            spec,
            smoother,
            alpha,
            smoother_window,
            dt,
            out,
        } => cmd_detect(
            &series,
            &detector,
            spec.as_deref(),
            &smoother,
            alpha,
            smoother_window,
            dt,
            out.as_deref(),
        ),
        Command::Evaluate {
            scores,
            series,
            threshold,
            dt,
            out,
        } => cmd_evaluate(&scores, &series, threshold, dt, &out),
        Command::Bench { config } => cmd_bench(&config),
        Command::Plot {
            kind,
            input,
            output,
            title,
            scores,
            metric,
            r,
            smoother,
            detector,
            dt,
            log_x,
        } => cmd_plot(PlotArgs {
            kind,
            input,
            output,
            title,
            scores,
            metric,
            r,
            smoother,
            detector,
            dt,
            log_x,
        }),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid JSON in {}: {e}", path.display())))
}

fn load_series(path: &Path, dt: f64) -> CliResult<CountSeries> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::Runtime(format!("cannot open {}: {e}", path.display())))?;
    read_series_csv(BufReader::new(file), dt).or_runtime()
}

/// The sidecar JSON written by `generate`, looked up next to a series CSV.
fn sidecar_for(series_path: &Path) -> Option<SeriesSidecar> {
    let sidecar = series_path.with_extension("json");
    let text = fs::read_to_string(sidecar).ok()?;
    serde_json::from_str(&text).ok()
}

fn cmd_generate(config: &Path, out: &Path) -> CliResult {
    // accept either a bare grid config or a full experiment config
    let grid: GridSpec = match read_json::<GridSpec>(config) {
        Ok(grid) => grid,
        Err(grid_err) => match read_json::<ExperimentConfig>(config) {
            Ok(cfg) => cfg.grid,
            Err(_) => return Err(grid_err),
        },
    };
    grid.validate().or_usage()?;
    fs::create_dir_all(out)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out.display())))?;
    let generated = generate_grid(&grid).or_runtime()?;
    let mut manifest = Vec::new();
    for (cell, series, _path) in &generated {
        let base = cell.id();
        let csv_path = out.join(format!("{base}.csv"));
        let json_path = out.join(format!("{base}.json"));
        let mut csv = BufWriter::new(fs::File::create(&csv_path).or_runtime()?);
        write_series_csv(series, &mut csv).or_runtime()?;
        csv.flush().or_runtime()?;
        let sidecar = SeriesSidecar {
            cell: *cell,
            config: grid.config_for(cell),
            segments: series.segments(),
        };
        fs::write(
            &json_path,
            serde_json::to_string_pretty(&sidecar).or_runtime()?,
        )
        .or_runtime()?;
        manifest.push(base);
    }
    fs::write(
        out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).or_runtime()?,
    )
    .or_runtime()?;
    for entry in &manifest {
        println!("{entry}.csv");
    }
    eprintln!("wrote {} series to {}", manifest.len(), out.display());
    Ok(())
}

fn detector_context<'a>(
    series: &CountSeries,
    sidecar: Option<&'a SeriesSidecar>,
    truth_slot: &'a mut Option<BocSpec>,
    detector_id: &str,
) -> DetectorContext<'a> {
    let mut ctx = DetectorContext::default();
    if let Some(sidecar) = sidecar {
        let mut cfg = sidecar.config.clone();
        cfg.len = series.len();
        ctx.default_window = cfg.period();
        ctx.seed = StreamKey::new(sidecar.cell.seed)
            .with_f64(sidecar.cell.amplitude)
            .with_f64(sidecar.cell.r)
            .with_str(detector_id)
            .value();
        *truth_slot = Some(BocSpec::from_generator(&cfg));
        ctx.truth = truth_slot.as_ref();
    }
    ctx
}

#[allow(clippy::too_many_arguments)]
fn cmd_detect(
    series_path: &Path,
    detector: &str,
    spec_path: Option<&Path>,
    smoother: &str,
    alpha: Option<f64>,
    smoother_window: Option<usize>,
    dt: f64,
    out: Option<&Path>,
) -> CliResult {
    let spec = match spec_path {
        Some(path) => read_json::<DetectorSpec>(path)?,
        None => DetectorSpec::from_id(detector).or_usage()?,
    };
    let kind: SmootherKind = smoother.parse().or_usage()?;
    let mut smoother_spec = SmootherSpec::new(kind);
    if let Some(alpha) = alpha {
        smoother_spec.alpha = alpha;
    }
    if let Some(window) = smoother_window {
        smoother_spec.window = window;
    }
    smoother_spec.validate().or_usage()?;

    let series = load_series(series_path, dt)?;
    let sidecar = sidecar_for(series_path);
    if matches!(spec, DetectorSpec::Boc) && sidecar.is_none() {
        return Err(CliError::Usage(format!(
            "boc needs the generator sidecar JSON next to {} (true rates and transitions)",
            series_path.display()
        )));
    }
    let mut truth_slot = None;
    let ctx = detector_context(&series, sidecar.as_ref(), &mut truth_slot, spec.id());
    let raw = run_detector(&series, &spec, &ctx).or_runtime()?;
    let smoothed = smooth(&raw, &smoother_spec).or_runtime()?;

    let stem = series_path
        .file_stem()
        .unwrap_or_default()
        .to_string_lossy();
    let dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| series_path.parent().unwrap_or(Path::new(".")).to_path_buf());
    fs::create_dir_all(&dir).or_runtime()?;
    let out_path = dir.join(format!("{stem}.{}.{}.scores.csv", spec.id(), kind.id()));
    let mut file = BufWriter::new(fs::File::create(&out_path).or_runtime()?);
    write_scores_csv(&smoothed, &mut file).or_runtime()?;
    file.flush().or_runtime()?;
    println!("{}", out_path.display());
    Ok(())
}

#[derive(serde::Serialize)]
struct EvalReport {
    auprc: f64,
    best_f1: f64,
    best_threshold: f64,
    prevalence: f64,
    threshold_used: f64,
    mean_ttd: f64,
    detected_fraction: f64,
    segments_evaluated: usize,
}

fn cmd_evaluate(
    scores_path: &Path,
    series_path: &Path,
    threshold: Option<f64>,
    dt: f64,
    out: &Path,
) -> CliResult {
    let series = load_series(series_path, dt)?;
    let labels = series
        .labels()
        .ok_or_else(|| CliError::Usage("evaluate needs a labeled series (t,value,label)".into()))?
        .to_vec();
    let file = fs::File::open(scores_path)
        .map_err(|e| CliError::Runtime(format!("cannot open {}: {e}", scores_path.display())))?;
    let scores: ScoreSeries = read_scores_csv(BufReader::new(file), series.len()).or_runtime()?;

    let curve = pr_curve(&scores, &labels).or_runtime()?;
    let (f1, best_thr) = best_f1(&scores, &labels).or_runtime()?;
    let threshold_used = threshold.unwrap_or(best_thr);
    let segments: Vec<_> = lowcount::series::segments_from_mask(&labels)
        .into_iter()
        .filter(|s| s.start >= scores.valid_from())
        .collect();
    let ttd = time_to_detection(&scores, &segments, threshold_used).or_runtime()?;
    let report = EvalReport {
        auprc: auprc(&curve),
        best_f1: f1,
        best_threshold: best_thr,
        prevalence: curve.prevalence,
        threshold_used,
        mean_ttd: ttd.mean_ttd,
        detected_fraction: ttd.detected_fraction,
        segments_evaluated: segments.len(),
    };
    fs::write(out, serde_json::to_string_pretty(&report).or_runtime()?).or_runtime()?;
    eprintln!(
        "auprc {:.4}, best F1 {:.4} at threshold {:.4}",
        report.auprc, report.best_f1, report.best_threshold
    );
    Ok(())
}

fn cmd_bench(config: &Path) -> CliResult {
    let cfg: ExperimentConfig = read_json(config)?;
    cfg.validate().or_usage()?;
    fs::create_dir_all(&cfg.output_dir).map_err(|e| {
        CliError::Runtime(format!("cannot create {}: {e}", cfg.output_dir.display()))
    })?;
    let results_path = cfg.output_dir.join("results.jsonl");
    let mut results_file = BufWriter::new(fs::File::create(&results_path).or_runtime()?);

    let rows = run_experiment_streaming(&cfg, |row| {
        write_results_jsonl(std::slice::from_ref(row), &mut results_file)?;
        Ok(())
    })
    .or_runtime()?;
    results_file.flush().or_runtime()?;

    let ok = rows.iter().filter(|r| r.as_result().is_some()).count();
    let failures = rows.len() - ok;
    for row in &rows {
        if let BenchRow::Failure(f) = row {
            eprintln!(
                "failed: {} {} {}: {}",
                f.cell.id(),
                f.detector,
                f.smoother,
                f.error
            );
        }
    }
    let agg = aggregate(&rows);
    let agg_path = cfg.output_dir.join("aggregates.csv");
    let mut agg_file = BufWriter::new(fs::File::create(&agg_path).or_runtime()?);
    write_aggregate_csv(&agg, &mut agg_file).or_runtime()?;
    agg_file.flush().or_runtime()?;
    eprintln!(
        "{ok} result rows ({failures} failures) -> {} and {}",
        results_path.display(),
        agg_path.display()
    );
    if ok == 0 {
        return Err(CliError::Runtime("no result rows produced".into()));
    }
    Ok(())
}

struct PlotArgs {
    kind: String,
    input: PathBuf,
    output: PathBuf,
    title: Option<String>,
    scores: Option<PathBuf>,
    metric: String,
    r: f64,
    smoother: String,
    detector: String,
    dt: f64,
    log_x: bool,
}

fn cmd_plot(args: PlotArgs) -> CliResult {
    let opts = PlotOptions {
        title: args.title.clone().unwrap_or_default(),
        log_x: args.log_x,
    };
    let svg = match args.kind.as_str() {
        "series-with-anomalies" => {
            let series = load_series(&args.input, args.dt)?;
            let overlay = match &args.scores {
                Some(path) => {
                    let file = fs::File::open(path).or_runtime()?;
                    Some(read_scores_csv(BufReader::new(file), series.len()).or_runtime()?)
                }
                None => None,
            };
            plot_series_with_anomalies(&series, overlay.as_ref(), &opts).or_runtime()?
        }
        "metric-vs-count" => {
            let file = fs::File::open(&args.input).or_runtime()?;
            let rows = read_aggregate_csv(BufReader::new(file)).or_runtime()?;
            plot_metric_vs_count(&rows, &args.metric, args.r, &args.smoother, &opts).or_runtime()?
        }
        "f1-vs-ttd" => {
            let series = load_series(&args.input, args.dt)?;
            let labels = series
                .labels()
                .ok_or_else(|| CliError::Usage("f1-vs-ttd needs a labeled series".into()))?
                .to_vec();
            let spec = DetectorSpec::from_id(&args.detector).or_usage()?;
            let sidecar = sidecar_for(&args.input);
            if matches!(spec, DetectorSpec::Boc) && sidecar.is_none() {
                return Err(CliError::Usage(
                    "boc needs the generator sidecar JSON next to the series".into(),
                ));
            }
            let mut truth_slot = None;
            let ctx = detector_context(&series, sidecar.as_ref(), &mut truth_slot, spec.id());
            let raw = run_detector(&series, &spec, &ctx).or_runtime()?;
            let mut per_smoother = Vec::new();
            for kind in SmootherKind::ALL {
                let smoothed = smooth(&raw, &SmootherSpec::new(kind)).or_runtime()?;
                let segments: Vec<_> = series
                    .segments()
                    .into_iter()
                    .filter(|s| s.start >= smoothed.valid_from())
                    .collect();
                let points = f1_ttd_tradeoff(&smoothed, &labels, &segments).or_runtime()?;
                per_smoother.push((kind.id().to_string(), points));
            }
            plot_f1_ttd(&per_smoother, &opts).or_runtime()?
        }
        "improvement-heatmap" => {
            let file = fs::File::open(&args.input).or_runtime()?;
            let rows = read_aggregate_csv(BufReader::new(file)).or_runtime()?;
            let smoother = if args.smoother == "none" { "ema".to_string() } else { args.smoother.clone() };
            let mut cells = Vec::new();
            for row in rows.iter().filter(|x| {
                x.metric == args.metric && x.r == args.r && x.smoother == smoother
            }) {
                let raw = rows.iter().find(|x| {
                    x.metric == args.metric
                        && x.r == args.r
                        && x.smoother == "none"
                        && x.detector == row.detector
                        && x.amplitude == row.amplitude
                });
                if let Some(raw) = raw {
                    cells.push(HeatmapCell {
                        detector: row.detector.clone(),
                        amplitude: row.amplitude,
                        percent: improvement_rate(row.mean, raw.mean),
                    });
                }
            }
            plot_improvement_heatmap(&cells, &opts).or_runtime()?
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown plot kind `{other}` (valid: series-with-anomalies, metric-vs-count, f1-vs-ttd, improvement-heatmap)"
            )))
        }
    };
    fs::write(&args.output, svg).or_runtime()?;
    println!("{}", args.output.display());
    Ok(())
}
