//! Self-contained SVG figures: series with shaded anomalies, metric curves
//! across count levels, F1/TTD trade-off scatters, and the smoothing
//! improvement heatmap.
//!
//! Everything is emitted by hand so the toolchain needs no plotting
//! dependency; these are benchmark artifacts, not publication graphics.

use std::fmt::Write as _;

use crate::bench::AggregateRow;
use crate::error::{Error, Result};
use crate::metrics::TradeoffPoint;
use crate::series::{CountSeries, ScoreSeries};

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 180.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 48.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

#[derive(Debug, Clone, Default)]
pub struct PlotOptions {
    pub title: String,
    /// Label the x axis as log2(A) for count-level plots.
    pub log_x: bool,
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    body: String,
}

impl Frame {
    fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        let pad = |lo: f64, hi: f64| {
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        let (x_min, x_max) = pad(x_min, x_max);
        let (y_min, y_max) = pad(y_min, y_max);
        Self {
            x_min,
            x_max,
            y_min,
            y_max,
            body: String::new(),
        }
    }

    fn x(&self, v: f64) -> f64 {
        MARGIN_LEFT
            + (v - self.x_min) / (self.x_max - self.x_min) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT
            - MARGIN_BOTTOM
            - (v - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }

    fn axes(&mut self, title: &str, x_label: &str, y_label: &str) {
        let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
        let (y0, y1) = (HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
        let _ = write!(
            self.body,
            r##"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="#333"/><line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="#333"/>"##
        );
        let _ = write!(
            self.body,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            (x0 + x1) / 2.0,
            escape(title)
        );
        let _ = write!(
            self.body,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 10.0,
            escape(x_label)
        );
        let _ = write!(
            self.body,
            r#"<text x="16" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(y_label)
        );
        for i in 0..=4 {
            let fx = self.x_min + (self.x_max - self.x_min) * i as f64 / 4.0;
            let fy = self.y_min + (self.y_max - self.y_min) * i as f64 / 4.0;
            let _ = write!(
                self.body,
                r#"<text x="{}" y="{}" text-anchor="middle" font-size="10">{}</text>"#,
                self.x(fx),
                y0 + 16.0,
                trim_tick(fx)
            );
            let _ = write!(
                self.body,
                r#"<text x="{}" y="{}" text-anchor="end" font-size="10">{}</text>"#,
                x0 - 6.0,
                self.y(fy) + 3.0,
                trim_tick(fy)
            );
        }
    }

    fn polyline(&mut self, points: &[(f64, f64)], color: &str) {
        let coords: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", self.x(x), self.y(y)))
            .collect();
        let _ = write!(
            self.body,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
    }

    fn finish(self) -> String {
        format!(
            concat!(
                r#"<?xml version="1.0" encoding="UTF-8"?>"#,
                r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" "#,
                r#"font-family="sans-serif">"#,
                r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>{body}</svg>"#
            ),
            w = WIDTH,
            h = HEIGHT,
            body = self.body
        )
    }
}

fn trim_tick(v: f64) -> String {
    if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn legend(frame: &mut Frame, entries: &[(String, &str)]) {
    let x = WIDTH - MARGIN_RIGHT + 12.0;
    for (i, (label, color)) in entries.iter().enumerate() {
        let y = MARGIN_TOP + 16.0 * i as f64;
        let _ = write!(
            frame.body,
            r#"<rect x="{x}" y="{}" width="10" height="10" fill="{color}"/><text x="{}" y="{}" font-size="11">{}</text>"#,
            y,
            x + 14.0,
            y + 9.0,
            escape(label)
        );
    }
}

/// Count series as a step line with labeled anomalous segments shaded in
/// red; an optional score series is drawn on a secondary scale.
pub fn plot_series_with_anomalies(
    series: &CountSeries,
    scores: Option<&ScoreSeries>,
    opts: &PlotOptions,
) -> Result<String> {
    if series.is_empty() {
        return Err(Error::InvalidConfig("cannot plot an empty series".into()));
    }
    let max_v = series.values().iter().copied().max().unwrap_or(1).max(1) as f64;
    let mut frame = Frame::new(0.0, (series.len() - 1) as f64, 0.0, max_v);
    for seg in series.segments() {
        let x0 = frame.x(seg.start as f64);
        let x1 = frame.x((seg.end - 1) as f64);
        let _ = write!(
            frame.body,
            r##"<rect x="{:.2}" y="{}" width="{:.2}" height="{}" fill="#d62728" opacity="0.18"/>"##,
            x0,
            MARGIN_TOP,
            (x1 - x0).max(1.0),
            HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
        );
    }
    let points: Vec<(f64, f64)> = series
        .values()
        .iter()
        .enumerate()
        .map(|(t, &v)| (t as f64, v as f64))
        .collect();
    frame.polyline(&points, PALETTE[0]);
    let mut entries = vec![("counts".to_string(), PALETTE[0])];
    if let Some(scores) = scores {
        let max_s = scores
            .evaluated()
            .iter()
            .copied()
            .fold(f64::MIN, f64::max)
            .max(1e-9);
        let scaled: Vec<(f64, f64)> = scores
            .iter_evaluated()
            .map(|(t, s)| (t as f64, s.max(0.0) / max_s * max_v))
            .collect();
        frame.polyline(&scaled, PALETTE[1]);
        entries.push(("score (rescaled)".to_string(), PALETTE[1]));
    }
    frame.axes(&opts.title, "t", "count");
    legend(&mut frame, &entries);
    Ok(frame.finish())
}

/// Mean metric per detector across count levels at a fixed reduction rate
/// and smoother, with +-std error bars; one polyline per detector.
pub fn plot_metric_vs_count(
    rows: &[AggregateRow],
    metric: &str,
    r: f64,
    smoother: &str,
    opts: &PlotOptions,
) -> Result<String> {
    let mut detectors: Vec<String> = Vec::new();
    let mut selected: Vec<&AggregateRow> = Vec::new();
    for row in rows {
        if row.metric == metric && row.r == r && row.smoother == smoother {
            selected.push(row);
            if !detectors.contains(&row.detector) {
                detectors.push(row.detector.clone());
            }
        }
    }
    if selected.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no aggregate rows for metric {metric}, r={r}, smoother {smoother}"
        )));
    }
    let xs: Vec<f64> = selected.iter().map(|r| r.amplitude.log2()).collect();
    let y_hi = selected
        .iter()
        .map(|r| r.mean + r.std)
        .fold(f64::MIN, f64::max);
    let mut frame = Frame::new(
        xs.iter().copied().fold(f64::MAX, f64::min),
        xs.iter().copied().fold(f64::MIN, f64::max),
        0.0,
        y_hi.max(1e-9),
    );
    let mut entries = Vec::new();
    for (i, det) in detectors.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut pts: Vec<(f64, f64, f64)> = selected
            .iter()
            .filter(|r| &r.detector == det)
            .map(|r| (r.amplitude.log2(), r.mean, r.std))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &(x, mean, std) in &pts {
            let (px, y0, y1) = (frame.x(x), frame.y(mean - std), frame.y(mean + std));
            let _ = write!(
                frame.body,
                r#"<line x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{y1:.2}" stroke="{color}" stroke-width="1" opacity="0.6"/>"#
            );
        }
        let line: Vec<(f64, f64)> = pts.iter().map(|&(x, m, _)| (x, m)).collect();
        frame.polyline(&line, color);
        entries.push((det.clone(), color));
    }
    let x_label = if opts.log_x {
        "log2(A)"
    } else {
        "A (log2 scale)"
    };
    frame.axes(&opts.title, x_label, metric);
    legend(&mut frame, &entries);
    Ok(frame.finish())
}

/// F1 against mean time-to-detection; one dot per threshold, one group per
/// smoother.
pub fn plot_f1_ttd(
    per_smoother: &[(String, Vec<TradeoffPoint>)],
    opts: &PlotOptions,
) -> Result<String> {
    if per_smoother.iter().all(|(_, pts)| pts.is_empty()) {
        return Err(Error::InvalidConfig("no trade-off points to plot".into()));
    }
    let all = per_smoother.iter().flat_map(|(_, pts)| pts);
    let max_ttd = all.clone().map(|p| p.mean_ttd).fold(0.0f64, f64::max);
    let max_f1 = all.map(|p| p.f1).fold(0.0f64, f64::max);
    let mut frame = Frame::new(0.0, max_ttd.max(1e-9), 0.0, max_f1.max(1e-9));
    let mut entries = Vec::new();
    for (i, (smoother, pts)) in per_smoother.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut group = format!(r#"<g fill="{color}" opacity="0.75">"#);
        for p in pts {
            let _ = write!(
                group,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5"/>"#,
                frame.x(p.mean_ttd),
                frame.y(p.f1)
            );
        }
        group.push_str("</g>");
        frame.body.push_str(&group);
        entries.push((smoother.clone(), color));
    }
    frame.axes(&opts.title, "mean time-to-detection (steps)", "F1");
    legend(&mut frame, &entries);
    Ok(frame.finish())
}

/// One heatmap cell: percent AUPRC improvement of a smoother over raw.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapCell {
    pub detector: String,
    pub amplitude: f64,
    pub percent: f64,
}

/// Detector x count-level grid of improvement percentages; green for gains,
/// red for losses.
pub fn plot_improvement_heatmap(cells: &[HeatmapCell], opts: &PlotOptions) -> Result<String> {
    if cells.is_empty() {
        return Err(Error::InvalidConfig("no heatmap cells to plot".into()));
    }
    let mut detectors: Vec<String> = Vec::new();
    let mut amplitudes: Vec<f64> = Vec::new();
    for c in cells {
        if !detectors.contains(&c.detector) {
            detectors.push(c.detector.clone());
        }
        if !amplitudes.contains(&c.amplitude) {
            amplitudes.push(c.amplitude);
        }
    }
    amplitudes.sort_by(f64::total_cmp);
    let limit = cells
        .iter()
        .map(|c| c.percent.abs())
        .fold(0.0f64, f64::max)
        .max(1e-9);

    let cell_w = (WIDTH - MARGIN_LEFT - 40.0) / amplitudes.len() as f64;
    let cell_h = (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM) / detectors.len() as f64;
    let mut body = String::new();
    let _ = write!(
        body,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(&opts.title)
    );
    for cell in cells {
        let row = detectors.iter().position(|d| d == &cell.detector).unwrap();
        let col = amplitudes
            .iter()
            .position(|&a| a == cell.amplitude)
            .unwrap();
        let x = MARGIN_LEFT + col as f64 * cell_w;
        let y = MARGIN_TOP + row as f64 * cell_h;
        let intensity = (cell.percent.abs() / limit).min(1.0);
        let shade = (230.0 - 150.0 * intensity) as u8;
        let color = if cell.percent >= 0.0 {
            format!("rgb({shade},230,{shade})")
        } else {
            format!("rgb(230,{shade},{shade})")
        };
        let _ = write!(
            body,
            r##"<rect x="{x:.1}" y="{y:.1}" width="{:.1}" height="{:.1}" fill="{color}" stroke="#999"/><text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="10">{:+.1}%</text>"##,
            cell_w - 1.0,
            cell_h - 1.0,
            x + cell_w / 2.0,
            y + cell_h / 2.0 + 3.0,
            cell.percent
        );
    }
    for (row, det) in detectors.iter().enumerate() {
        let _ = write!(
            body,
            r#"<text x="{}" y="{:.1}" text-anchor="end" font-size="10">{}</text>"#,
            MARGIN_LEFT - 6.0,
            MARGIN_TOP + row as f64 * cell_h + cell_h / 2.0 + 3.0,
            escape(det)
        );
    }
    for (col, a) in amplitudes.iter().enumerate() {
        let _ = write!(
            body,
            r#"<text x="{:.1}" y="{}" text-anchor="middle" font-size="10">2^{}</text>"#,
            MARGIN_LEFT + col as f64 * cell_w + cell_w / 2.0,
            HEIGHT - MARGIN_BOTTOM + 16.0,
            trim_tick(a.log2())
        );
    }
    Ok(format!(
        concat!(
            r#"<?xml version="1.0" encoding="UTF-8"?>"#,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" "#,
            r#"font-family="sans-serif">"#,
            r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>{body}</svg>"#
        ),
        w = WIDTH,
        h = HEIGHT,
        body = body
    ))
}

/// Minimal structural XML check: balanced tags, quoted attributes consumed,
/// single root. Good enough to catch malformed output in tests and the CLI.
pub fn is_well_formed_xml(doc: &str) -> bool {
    let mut rest = doc.trim();
    if let Some(end) = rest
        .strip_prefix("<?xml")
        .and_then(|r| r.find("?>").map(|i| &r[i + 2..]))
    {
        rest = end.trim_start();
    }
    let mut stack: Vec<String> = Vec::new();
    let mut roots = 0;
    let bytes = rest.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] != b'<' {
            i += 1;
            continue;
        }
        let close = match rest[i..].find('>') {
            Some(off) => i + off,
            None => return false,
        };
        let tag = &rest[i + 1..close];
        if let Some(name) = tag.strip_prefix('/') {
            match stack.pop() {
                Some(open) if open == name.trim() => {}
                _ => return false,
            }
            if stack.is_empty() {
                roots += 1;
            }
        } else if tag.ends_with('/') {
            if stack.is_empty() {
                roots += 1;
            }
        } else {
            let name: String = tag
                .split_whitespace()
                .next()
                .unwrap_or("")
                .trim_end_matches('/')
                .to_string();
            if name.is_empty() {
                return false;
            }
            stack.push(name);
        }
        i = close + 1;
    }
    stack.is_empty() && roots == 1
}
