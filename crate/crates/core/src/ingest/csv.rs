use std::collections::{BTreeSet, HashSet};

use super::timestamp::{format_seconds, parse_timestamp};
use super::{compress, CompressionConfig, IngestError, RawPrediction};
use crate::model::{
    is_attr_key, normalize, AttrValue, Attrs, Event, EventPayload, Interval, OverlapPolicy, Track,
    TrackId, TrackKind,
};

const ATTR_PREFIX: &str = "attr:";

struct Columns {
    start: usize,
    end: usize,
    score: Option<usize>,
    label: Option<usize>,
    attrs: Vec<(String, usize)>,
}

impl Columns {
    fn from_header(header: &::csv::StringRecord) -> Result<Self, IngestError> {
        let (mut start, mut end, mut score, mut label) = (None, None, None, None);
        let mut attrs = Vec::new();
        for (i, name) in header.iter().enumerate() {
            match name {
                "start" => start = Some(i),
                "end" => end = Some(i),
                "score" => score = Some(i),
                "label" => label = Some(i),
                other => match other.strip_prefix(ATTR_PREFIX) {
                    Some(key) if is_attr_key(key) => attrs.push((key.to_owned(), i)),
                    _ => return Err(IngestError::UnknownColumn(other.to_owned())),
                },
            }
        }
        let missing = |c: &str| IngestError::MissingColumn(c.to_owned());
        Ok(Self {
            start: start.ok_or_else(|| missing("start"))?,
            end: end.ok_or_else(|| missing("end"))?,
            score,
            label,
            attrs,
        })
    }
}

fn attr_value(raw: &str) -> AttrValue {
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => AttrValue::Number(v),
        _ => AttrValue::Text(raw.to_owned()),
    }
}

/// Imports a classifier, label or protocol track from CSV.
///
/// Required columns are `start` and `end` (decimal epoch seconds or
/// ISO-8601); classifiers also need `score`, label and protocol tracks need
/// `label`. Any number of `attr:<name>` columns may follow. Classifier rows
/// go through [`compress`]; label rows must not overlap.
pub fn import_csv(
    bytes: &[u8],
    kind: TrackKind,
    id: TrackId,
    cfg: &CompressionConfig,
) -> Result<Track, IngestError> {
    if !matches!(
        kind,
        TrackKind::Classifier | TrackKind::Label | TrackKind::Protocol
    ) {
        return Err(IngestError::UnsupportedKind(kind.as_str().to_owned()));
    }
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(::csv::Trim::All)
        .from_reader(bytes);
    let header = reader
        .headers()
        .map_err(|e| IngestError::Csv(e.to_string()))?
        .clone();
    let cols = Columns::from_header(&header)?;
    let score_col = match (kind, cols.score) {
        (TrackKind::Classifier, None) => return Err(IngestError::MissingColumn("score".into())),
        (_, c) => c,
    };
    if kind != TrackKind::Classifier && cols.label.is_none() {
        return Err(IngestError::MissingColumn("label".into()));
    }

    let mut predictions = Vec::new();
    let mut events = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| IngestError::Csv(e.to_string()))?;
        let row = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("");
        let time = |i: usize| {
            parse_timestamp(field(i)).ok_or_else(|| IngestError::BadTimestamp {
                row,
                value: field(i).to_owned(),
            })
        };
        let bad_row = |reason: String| IngestError::BadRow { row, reason };

        let interval = Interval::new(time(cols.start)?, time(cols.end)?)
            .map_err(|e| bad_row(e.to_string()))?;
        let score = match score_col.map(field).filter(|s| !s.is_empty()) {
            Some(s) => Some(
                s.parse::<f64>()
                    .ok()
                    .filter(|v| (0.0..=1.0).contains(v))
                    .ok_or_else(|| bad_row(format!("score {s:?} is not a number in [0, 1]")))?,
            ),
            None if kind == TrackKind::Classifier => return Err(bad_row("empty score".into())),
            None => None,
        };
        let attrs: Attrs = cols
            .attrs
            .iter()
            .filter(|(_, i)| !field(*i).is_empty())
            .map(|(k, i)| (k.clone(), attr_value(field(*i))))
            .collect();

        if kind == TrackKind::Classifier {
            predictions.push(RawPrediction {
                interval,
                score: score.expect("checked above"),
                attrs,
            });
        } else {
            let label = cols
                .label
                .map(field)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| bad_row("empty label".into()))?;
            events.push(Event::new(
                interval,
                EventPayload {
                    score,
                    label: Some(label.to_owned()),
                    attrs,
                },
            ));
        }
    }

    let events = if kind == TrackKind::Classifier {
        compress(&predictions, cfg)?
    } else {
        let events = normalize(events, OverlapPolicy::Reject)?;
        if kind == TrackKind::Protocol {
            let mut seen = HashSet::new();
            if let Some(dup) = events
                .iter()
                .filter_map(Event::label)
                .find(|l| !seen.insert(*l))
            {
                return Err(IngestError::ProtocolDuplicateLabel(dup.to_owned()));
            }
        }
        events
    };
    Ok(Track::with_defaults(id, kind, events)?)
}

/// Writes a track's events in the import format (epoch-second timestamps).
pub fn export_csv(track: &Track) -> String {
    let events = track.events();
    let has_score = events.iter().any(|e| e.score().is_some());
    let has_label = events.iter().any(|e| e.label().is_some());
    let keys: BTreeSet<&str> = events
        .iter()
        .flat_map(|e| e.payload.attrs.keys().map(String::as_str))
        .collect();

    let mut writer = ::csv::Writer::from_writer(Vec::new());
    let mut header = vec!["start".to_owned(), "end".to_owned()];
    if has_score {
        header.push("score".into());
    }
    if has_label {
        header.push("label".into());
    }
    header.extend(keys.iter().map(|k| format!("{ATTR_PREFIX}{k}")));
    writer.write_record(&header).expect("in-memory write");

    for e in events {
        let mut row = vec![format_seconds(e.start()), format_seconds(e.end())];
        if has_score {
            row.push(e.score().map(|s| s.to_string()).unwrap_or_default());
        }
        if has_label {
            row.push(e.label().unwrap_or_default().to_owned());
        }
        row.extend(keys.iter().map(|k| {
            e.payload
                .attrs
                .get(*k)
                .map(|v| v.to_string())
                .unwrap_or_default()
        }));
        writer.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}
