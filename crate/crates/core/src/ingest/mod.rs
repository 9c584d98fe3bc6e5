//! Turning high-frequency prediction streams and annotation files into
//! canonical tracks.
//!
//! Consecutive predictions are merged into one longer block while they stay
//! close in time and do not drift, in score or any attribute, beyond a
//! tolerance measured against the *first* prediction of the current block.

mod csv;
mod timestamp;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AttrValue, Attrs, Event, EventPayload, Interval, ModelError};

pub use self::csv::{export_csv, import_csv};
pub use self::timestamp::{format_seconds, parse_timestamp};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("prediction {index} starts before its predecessor")]
    UnsortedStream { index: usize },
    #[error("prediction {index} overlaps its predecessor")]
    OverlappingPredictions { index: usize },
    #[error("prediction {index} has score {score} outside [0, 1]")]
    BadScore { index: usize, score: f64 },
    #[error("compression tolerances must be finite and non-negative")]
    BadConfig,
    #[error("missing required column {0:?}")]
    MissingColumn(String),
    #[error("unexpected column {0:?} (attribute columns need the \"attr:\" prefix)")]
    UnknownColumn(String),
    #[error("row {row}: cannot parse timestamp {value:?}")]
    BadTimestamp { row: u64, value: String },
    #[error("row {row}: {reason}")]
    BadRow { row: u64, reason: String },
    #[error("protocol label {0:?} appears more than once")]
    ProtocolDuplicateLabel(String),
    #[error("cannot import {0} tracks from CSV")]
    UnsupportedKind(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl IngestError {
    pub fn code(&self) -> &'static str {
        match self {
            IngestError::UnsortedStream { .. } => "unsorted_stream",
            IngestError::OverlappingPredictions { .. } => "overlapping_predictions",
            IngestError::BadScore { .. } => "bad_score",
            IngestError::BadConfig => "bad_config",
            IngestError::MissingColumn(_) => "missing_column",
            IngestError::UnknownColumn(_) => "unknown_column",
            IngestError::BadTimestamp { .. } => "bad_timestamp",
            IngestError::BadRow { .. } => "bad_row",
            IngestError::ProtocolDuplicateLabel(_) => "protocol_duplicate_label",
            IngestError::UnsupportedKind(_) => "unsupported_kind",
            IngestError::Csv(_) => "csv_error",
            IngestError::Model(_) => "model_error",
        }
    }
}

/// One classifier output `p_i`: its window, confidence and attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct RawPrediction {
    pub interval: Interval,
    pub score: f64,
    pub attrs: Attrs,
}

impl RawPrediction {
    pub fn new(interval: Interval, score: f64) -> Self {
        Self {
            interval,
            score,
            attrs: Attrs::new(),
        }
    }
}

/// Maximum gap between a prediction and the end of the block it extends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapTolerance {
    /// Twice the median start-to-start spacing of the stream, so a single
    /// dropped sample does not split a block.
    #[default]
    Auto,
    Fixed(i64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionConfig {
    pub eps_t: GapTolerance,
    /// Maximum `|s_i - s_1|`.
    pub eps_s: f64,
    /// Per-attribute maximum `|a_ij - a_1j|`; attributes not listed must
    /// match exactly.
    pub eps_a: BTreeMap<String, f64>,
}

impl Default for CompressionConfig {
    fn default() -> Self {
        Self {
            eps_t: GapTolerance::Auto,
            eps_s: 0.05,
            eps_a: BTreeMap::new(),
        }
    }
}

impl CompressionConfig {
    /// Merges only gapless predictions with identical payloads.
    pub fn exact() -> Self {
        Self {
            eps_t: GapTolerance::Fixed(0),
            eps_s: 0.0,
            eps_a: BTreeMap::new(),
        }
    }

    fn validate(&self) -> Result<(), IngestError> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        let gap_ok = match self.eps_t {
            GapTolerance::Fixed(t) => t >= 0,
            GapTolerance::Auto => true,
        };
        if gap_ok && ok(self.eps_s) && self.eps_a.values().all(|&v| ok(v)) {
            Ok(())
        } else {
            Err(IngestError::BadConfig)
        }
    }

    /// The gap tolerance in ticks for this stream.
    pub fn resolve_gap(&self, stream: &[RawPrediction]) -> i64 {
        match self.eps_t {
            GapTolerance::Fixed(t) => t,
            GapTolerance::Auto => {
                let mut spacing: Vec<i64> = stream
                    .windows(2)
                    .map(|w| w[1].interval.start() - w[0].interval.start())
                    .collect();
                if spacing.is_empty() {
                    return 0;
                }
                let mid = spacing.len() / 2;
                let (_, median, _) = spacing.select_nth_unstable(mid);
                2 * *median
            }
        }
    }

    fn attr_tolerance(&self, key: &str) -> f64 {
        self.eps_a.get(key).copied().unwrap_or(0.0)
    }
}

fn check_stream(stream: &[RawPrediction]) -> Result<(), IngestError> {
    for (index, p) in stream.iter().enumerate() {
        if !(0.0..=1.0).contains(&p.score) {
            return Err(IngestError::BadScore {
                index,
                score: p.score,
            });
        }
        if index > 0 {
            let prev = &stream[index - 1].interval;
            if p.interval.start() < prev.start() {
                return Err(IngestError::UnsortedStream { index });
            }
            if p.interval.start() < prev.end() {
                return Err(IngestError::OverlappingPredictions { index });
            }
        }
    }
    Ok(())
}

/// Running block of merged predictions. Sums are of deviations from the
/// first member so a constant run reproduces its value exactly.
struct Run<'a> {
    first: &'a RawPrediction,
    end: crate::model::Tick,
    count: usize,
    score_dev: f64,
    attr_dev: BTreeMap<&'a str, f64>,
}

impl<'a> Run<'a> {
    fn start(first: &'a RawPrediction) -> Self {
        Self {
            first,
            end: first.interval.end(),
            count: 1,
            score_dev: 0.0,
            attr_dev: BTreeMap::new(),
        }
    }

    fn accepts(&self, p: &RawPrediction, gap_tol: i64, cfg: &CompressionConfig) -> bool {
        if p.interval.start() - self.end > gap_tol {
            return false;
        }
        if (p.score - self.first.score).abs() > cfg.eps_s {
            return false;
        }
        let first = &self.first.attrs;
        first.len() == p.attrs.len()
            && first.iter().all(|(k, a1)| match (a1, p.attrs.get(k)) {
                (AttrValue::Number(x1), Some(AttrValue::Number(x))) => {
                    (x - x1).abs() <= cfg.attr_tolerance(k)
                }
                (AttrValue::Text(t1), Some(AttrValue::Text(t))) => t1 == t,
                _ => false,
            })
    }

    fn push(&mut self, p: &'a RawPrediction) {
        self.end = p.interval.end();
        self.count += 1;
        self.score_dev += p.score - self.first.score;
        for (k, v) in &p.attrs {
            if let (AttrValue::Number(x), Some(AttrValue::Number(x1))) =
                (v, self.first.attrs.get(k))
            {
                *self.attr_dev.entry(k.as_str()).or_insert(0.0) += x - x1;
            }
        }
    }

    fn finish(self) -> Event {
        let n = self.count as f64;
        let score = (self.first.score + self.score_dev / n).clamp(0.0, 1.0);
        let attrs = self
            .first
            .attrs
            .iter()
            .map(|(k, v)| {
                let merged = match v {
                    AttrValue::Number(x1) => {
                        let dev = self.attr_dev.get(k.as_str()).copied().unwrap_or(0.0);
                        AttrValue::Number(x1 + dev / n)
                    }
                    text => text.clone(),
                };
                (k.clone(), merged)
            })
            .collect();
        Event::new(
            Interval::new_unchecked(self.first.interval.start(), self.end),
            EventPayload {
                score: Some(score),
                label: None,
                attrs,
            },
        )
    }
}

/// Greedy left-to-right merge of a sorted prediction stream.
///
/// A prediction joins the current block iff its gap to the block end is at
/// most the gap tolerance and its score and every attribute lie within
/// tolerance of the block's first prediction. The merged event spans the
/// whole block; its score and numeric attributes are member means, text
/// attributes keep the first value.
pub fn compress(
    stream: &[RawPrediction],
    cfg: &CompressionConfig,
) -> Result<Vec<Event>, IngestError> {
    cfg.validate()?;
    check_stream(stream)?;
    let gap_tol = cfg.resolve_gap(stream);
    let mut out = Vec::new();
    let mut iter = stream.iter();
    let Some(first) = iter.next() else {
        return Ok(out);
    };
    let mut run = Run::start(first);
    for p in iter {
        if run.accepts(p, gap_tol, cfg) {
            run.push(p);
        } else {
            out.push(std::mem::replace(&mut run, Run::start(p)).finish());
        }
    }
    out.push(run.finish());
    Ok(out)
}
