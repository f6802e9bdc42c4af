//! Shared domain types: count series, anomaly labels, and score series.
//!
//! A [`CountSeries`] is an integer-valued series sampled at a fixed interval,
//! optionally carrying per-timestep ground-truth anomaly labels. Labels are
//! stored as a boolean mask; [`AnomalySegment`]s are a derived view used by
//! time-to-detection. A [`ScoreSeries`] holds per-timestep anomaly scores
//! aligned to a source series, with a warm-up prefix excluded from
//! evaluation via `valid_from`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Timestamped non-negative integer counts with optional anomaly labels.
///
/// Immutable after construction; cheap to clone and safe to share across
/// worker threads.
#[derive(Debug, Clone, PartialEq)]
pub struct CountSeries {
    values: Vec<u64>,
    dt: f64,
    labels: Option<Vec<bool>>,
    meta: BTreeMap<String, String>,
}

impl CountSeries {
    pub fn new(values: Vec<u64>, dt: f64) -> Result<Self> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "dt must be positive, got {dt}"
            )));
        }
        Ok(Self {
            values,
            dt,
            labels: None,
            meta: BTreeMap::new(),
        })
    }

    pub fn with_labels(mut self, labels: Vec<bool>) -> Result<Self> {
        if labels.len() != self.values.len() {
            return Err(Error::LengthMismatch {
                scores: self.values.len(),
                labels: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_meta(mut self, key: &str, value: &str) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn labels(&self) -> Option<&[bool]> {
        self.labels.as_deref()
    }

    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    /// Labeled anomalous runs as sorted, disjoint segments.
    pub fn segments(&self) -> Vec<AnomalySegment> {
        self.labels
            .as_deref()
            .map(segments_from_mask)
            .unwrap_or_default()
    }

    /// Mean count over all timesteps.
    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().map(|&v| v as f64).sum::<f64>() / self.values.len() as f64
    }
}

/// Half-open anomalous index range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AnomalySegment {
    pub start: usize,
    pub end: usize,
}

impl AnomalySegment {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start >= end {
            return Err(Error::InvalidConfig(format!(
                "segment start {start} must be before end {end}"
            )));
        }
        Ok(Self { start, end })
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Per-timestep anomaly scores aligned to a source series.
///
/// Scores at indices below `valid_from` are warm-up placeholders and are
/// ignored by every metric; evaluated scores are guaranteed finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSeries {
    scores: Vec<f64>,
    valid_from: usize,
}

impl ScoreSeries {
    /// Placeholder stored in the warm-up prefix.
    pub const WARMUP: f64 = 0.0;

    pub fn new(scores: Vec<f64>, valid_from: usize) -> Result<Self> {
        if valid_from > scores.len() {
            return Err(Error::InvalidConfig(format!(
                "valid_from {valid_from} exceeds score length {}",
                scores.len()
            )));
        }
        if let Some(bad) = scores[valid_from..].iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "non-finite score at evaluated index {}",
                valid_from + bad
            )));
        }
        Ok(Self { scores, valid_from })
    }

    /// Builds a full-length series from scores starting at `valid_from`,
    /// padding the warm-up prefix with the placeholder value.
    pub fn from_tail(tail: Vec<f64>, valid_from: usize, total_len: usize) -> Result<Self> {
        if valid_from + tail.len() != total_len {
            return Err(Error::InvalidConfig(format!(
                "tail of {} scores from {valid_from} does not cover length {total_len}",
                tail.len()
            )));
        }
        let mut scores = vec![Self::WARMUP; valid_from];
        scores.extend(tail);
        Self::new(scores, valid_from)
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn valid_from(&self) -> usize {
        self.valid_from
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Evaluated scores, i.e. everything at or after `valid_from`.
    pub fn evaluated(&self) -> &[f64] {
        &self.scores[self.valid_from..]
    }

    /// `(index, score)` pairs over the evaluated region.
    pub fn iter_evaluated(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.scores
            .iter()
            .enumerate()
            .skip(self.valid_from)
            .map(|(i, &s)| (i, s))
    }
}

/// Maximal runs of `true` as sorted, disjoint half-open segments.
pub fn segments_from_mask(mask: &[bool]) -> Vec<AnomalySegment> {
    let mut segments = Vec::new();
    let mut start = None;
    for (i, &flag) in mask.iter().enumerate() {
        match (flag, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                segments.push(AnomalySegment { start: s, end: i });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        segments.push(AnomalySegment {
            start: s,
            end: mask.len(),
        });
    }
    segments
}

/// Inverse of [`segments_from_mask`] for sorted, non-overlapping segments.
pub fn mask_from_segments(segments: &[AnomalySegment], length: usize) -> Result<Vec<bool>> {
    let mut mask = vec![false; length];
    for seg in segments {
        if seg.end > length {
            return Err(Error::SegmentOutOfBounds {
                start: seg.start,
                end: seg.end,
                len: length,
            });
        }
        for slot in &mut mask[seg.start..seg.end] {
            *slot = true;
        }
    }
    Ok(mask)
}

/// Writes the `t,value[,label]` CSV form (UTF-8, LF line endings).
pub fn write_series_csv<W: Write>(series: &CountSeries, mut out: W) -> Result<()> {
    match series.labels() {
        Some(labels) => {
            out.write_all(b"t,value,label\n")?;
            for (t, (&v, &l)) in series.values().iter().zip(labels).enumerate() {
                writeln!(out, "{t},{v},{}", l as u8)?;
            }
        }
        None => {
            out.write_all(b"t,value\n")?;
            for (t, &v) in series.values().iter().enumerate() {
                writeln!(out, "{t},{v}")?;
            }
        }
    }
    Ok(())
}

/// Parses the `t,value[,label]` CSV form. Errors carry the 1-based line number.
pub fn read_series_csv<R: BufRead>(input: R, dt: f64) -> Result<CountSeries> {
    let mut lines = input.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Csv {
            line: 1,
            message: "empty file".into(),
        })
        .and_then(|(i, r)| r.map(|l| (i, l)).map_err(Error::Io))?;
    let has_label = match header.trim_end() {
        "t,value" => false,
        "t,value,label" => true,
        other => {
            return Err(Error::Csv {
                line: 1,
                message: format!("expected header `t,value` or `t,value,label`, got `{other}`"),
            })
        }
    };

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let t: usize = parse_field(fields.next(), "t", line_no)?;
        if t != values.len() {
            return Err(Error::Csv {
                line: line_no,
                message: format!("expected t={}, got t={t}", values.len()),
            });
        }
        let value: u64 = parse_field(fields.next(), "value", line_no)?;
        if has_label {
            let label: u8 = parse_field(fields.next(), "label", line_no)?;
            if label > 1 {
                return Err(Error::Csv {
                    line: line_no,
                    message: format!("label must be 0 or 1, got {label}"),
                });
            }
            labels.push(label == 1);
        }
        if fields.next().is_some() {
            return Err(Error::Csv {
                line: line_no,
                message: "too many columns".into(),
            });
        }
        values.push(value);
    }

    let series = CountSeries::new(values, dt)?;
    if has_label {
        series.with_labels(labels)
    } else {
        Ok(series)
    }
}

/// Writes scores as `t,score`, one row per evaluated timestep.
pub fn write_scores_csv<W: Write>(scores: &ScoreSeries, mut out: W) -> Result<()> {
    out.write_all(b"t,score\n")?;
    for (t, s) in scores.iter_evaluated() {
        writeln!(out, "{t},{s}")?;
    }
    Ok(())
}

/// Parses a `t,score` file back into a score series aligned to a source
/// series of length `total_len`; the first row's `t` becomes `valid_from`.
pub fn read_scores_csv<R: BufRead>(input: R, total_len: usize) -> Result<ScoreSeries> {
    let mut lines = input.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Csv {
            line: 1,
            message: "empty file".into(),
        })
        .and_then(|(i, r)| r.map(|l| (i, l)).map_err(Error::Io))?;
    if header.trim_end() != "t,score" {
        return Err(Error::Csv {
            line: 1,
            message: format!("expected header `t,score`, got `{header}`"),
        });
    }
    let mut valid_from = None;
    let mut tail = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let t: usize = parse_field(fields.next(), "t", line_no)?;
        let score: f64 = parse_field(fields.next(), "score", line_no)?;
        let start = *valid_from.get_or_insert(t);
        if t != start + tail.len() {
            return Err(Error::Csv {
                line: line_no,
                message: format!("non-contiguous t {t}"),
            });
        }
        tail.push(score);
    }
    let valid_from = valid_from.unwrap_or(total_len);
    ScoreSeries::from_tail(tail, valid_from, total_len)
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, name: &str, line: usize) -> Result<T> {
    let raw = field.ok_or_else(|| Error::Csv {
        line,
        message: format!("missing {name} column"),
    })?;
    raw.trim().parse().map_err(|_| Error::Csv {
        line,
        message: format!("cannot parse {name} from `{raw}`"),
    })
}
