//! Ticks, intervals, events, tracks and sessions.
//!
//! All time is integer microseconds relative to a session epoch; intervals are
//! half-open `[start, end)` with strictly positive length. A [`Track`] is an
//! ordered run of non-overlapping [`Event`]s and checks its invariants on
//! construction, so every `Track` value in the engine is canonical.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::interval_set::IntervalSet;
use crate::version::{BadVersionString, Version};

pub const TICKS_PER_SECOND: i64 = 1_000_000;

/// Default threshold given to classifier tracks that arrive without one.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Unknown JSON fields carried through a load/save cycle.
pub type Extra = serde_json::Map<String, serde_json::Value>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid interval [{start}, {end}): end must be greater than start")]
    InvalidInterval { start: i64, end: i64 },
    #[error("overlapping events [{}, {}) and [{}, {})", .first.start().0, .first.end().0, .second.start().0, .second.end().0)]
    Overlap { first: Interval, second: Interval },
    #[error("track {id}: {reason}")]
    InvalidTrack { id: String, reason: String },
    #[error("cannot parse track id {0:?}")]
    BadTrackId(String),
    #[error("track id {0} already exists in the session")]
    DuplicateTrack(String),
    #[error("session domain does not cover track {0}")]
    OutsideDomain(String),
    #[error("bad color {0:?}")]
    BadColor(String),
    #[error(transparent)]
    BadVersion(#[from] BadVersionString),
}

/// A point on the session timeline, in microseconds.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Tick(pub i64);

impl Tick {
    pub fn as_seconds(self) -> f64 {
        self.0 as f64 / TICKS_PER_SECOND as f64
    }
}

impl From<i64> for Tick {
    fn from(v: i64) -> Self {
        Tick(v)
    }
}

impl Add<i64> for Tick {
    type Output = Tick;
    fn add(self, rhs: i64) -> Tick {
        Tick(self.0 + rhs)
    }
}

impl Sub<i64> for Tick {
    type Output = Tick;
    fn sub(self, rhs: i64) -> Tick {
        Tick(self.0 - rhs)
    }
}

impl Sub for Tick {
    type Output = i64;
    fn sub(self, rhs: Tick) -> i64 {
        self.0 - rhs.0
    }
}

/// Half-open `[start, end)` with `end > start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "(i64, i64)", into = "(i64, i64)")]
pub struct Interval {
    start: Tick,
    end: Tick,
}

impl Interval {
    pub fn new(start: impl Into<Tick>, end: impl Into<Tick>) -> Result<Self, ModelError> {
        let (start, end) = (start.into(), end.into());
        if end > start {
            Ok(Self { start, end })
        } else {
            Err(ModelError::InvalidInterval {
                start: start.0,
                end: end.0,
            })
        }
    }

    /// Caller guarantees `end > start`.
    pub(crate) fn new_unchecked(start: Tick, end: Tick) -> Self {
        debug_assert!(end > start, "empty interval [{}, {})", start.0, end.0);
        Self { start, end }
    }

    pub fn start(&self) -> Tick {
        self.start
    }

    pub fn end(&self) -> Tick {
        self.end
    }

    /// Length in microseconds; always positive.
    pub fn len(&self) -> i64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Length of the shared part, 0 when disjoint.
    pub fn overlap(&self, other: &Interval) -> i64 {
        (self.end.min(other.end) - self.start.max(other.start)).max(0)
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn contains(&self, other: &Interval) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn contains_tick(&self, t: Tick) -> bool {
        self.start <= t && t < self.end
    }

    pub fn intersection(&self, other: &Interval) -> Option<Interval> {
        let start = self.start.max(other.start);
        let end = self.end.min(other.end);
        (end > start).then(|| Interval::new_unchecked(start, end))
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval::new_unchecked(self.start.min(other.start), self.end.max(other.end))
    }
}

impl TryFrom<(i64, i64)> for Interval {
    type Error = ModelError;
    fn try_from((s, e): (i64, i64)) -> Result<Self, Self::Error> {
        Interval::new(s, e)
    }
}

impl From<Interval> for (i64, i64) {
    fn from(iv: Interval) -> Self {
        (iv.start.0, iv.end.0)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start.0, self.end.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Number(f64),
    Text(String),
}

impl AttrValue {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            AttrValue::Number(v) => Some(*v),
            AttrValue::Text(_) => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            AttrValue::Text(s) => Some(s),
            AttrValue::Number(_) => None,
        }
    }
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Number(v) => write!(f, "{v}"),
            AttrValue::Text(s) => f.write_str(s),
        }
    }
}

pub type Attrs = BTreeMap<String, AttrValue>;

/// Attribute keys are ASCII identifiers: `[A-Za-z_][A-Za-z0-9_]*`.
pub fn is_attr_key(key: &str) -> bool {
    let mut bytes = key.bytes();
    matches!(bytes.next(), Some(b) if b.is_ascii_alphabetic() || b == b'_')
        && bytes.all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventPayload {
    pub score: Option<f64>,
    pub label: Option<String>,
    pub attrs: Attrs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub interval: Interval,
    pub payload: EventPayload,
}

impl Event {
    pub fn new(interval: Interval, payload: EventPayload) -> Self {
        Self { interval, payload }
    }

    pub fn bare(interval: Interval) -> Self {
        Self::new(interval, EventPayload::default())
    }

    pub fn scored(interval: Interval, score: f64) -> Self {
        Self::new(
            interval,
            EventPayload {
                score: Some(score),
                ..Default::default()
            },
        )
    }

    pub fn labeled(interval: Interval, label: impl Into<String>) -> Self {
        Self::new(
            interval,
            EventPayload {
                label: Some(label.into()),
                ..Default::default()
            },
        )
    }

    pub fn with_attr(mut self, key: impl Into<String>, value: AttrValue) -> Self {
        self.payload.attrs.insert(key.into(), value);
        self
    }

    pub fn start(&self) -> Tick {
        self.interval.start()
    }

    pub fn end(&self) -> Tick {
        self.interval.end()
    }

    pub fn score(&self) -> Option<f64> {
        self.payload.score
    }

    pub fn label(&self) -> Option<&str> {
        self.payload.label.as_deref()
    }
}

/// Identity of a track: predicted class, author and model version.
///
/// The canonical string is the three parts concatenated with no separator
/// (`SleepingJohn1.0`), which is only unambiguous given the set of known
/// authors; see [`TrackId::parse`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TrackId {
    pub class_label: String,
    pub author: String,
    pub version: Version,
}

impl TrackId {
    pub fn new(
        class_label: impl Into<String>,
        author: impl Into<String>,
        version: &str,
    ) -> Result<Self, ModelError> {
        let class_label = class_label.into();
        if class_label.is_empty() {
            return Err(ModelError::BadTrackId(class_label));
        }
        Ok(Self {
            class_label,
            author: author.into(),
            version: Version::parse(version)?,
        })
    }

    pub fn canonical(&self) -> String {
        self.to_string()
    }

    /// Splits a concatenated id using the registry of known authors.
    ///
    /// Succeeds only when exactly one (class_label, author, version) split
    /// exists with a non-empty class label and a valid dotted version.
    pub fn parse<S: AsRef<str>>(text: &str, authors: &[S]) -> Result<Self, ModelError> {
        let mut found: Vec<TrackId> = Vec::new();
        for author in authors {
            let author = author.as_ref();
            if author.is_empty() {
                continue;
            }
            for (pos, _) in text.match_indices(author) {
                if pos == 0 {
                    continue;
                }
                let class_label = &text[..pos];
                let version = &text[pos + author.len()..];
                if let Ok(v) = Version::parse(version) {
                    let id = TrackId {
                        class_label: class_label.to_owned(),
                        author: author.to_owned(),
                        version: v,
                    };
                    if !found.contains(&id) {
                        found.push(id);
                    }
                }
            }
        }
        match found.len() {
            1 => Ok(found.pop().unwrap()),
            _ => Err(ModelError::BadTrackId(text.to_owned())),
        }
    }

    /// Same class and author, i.e. another version of the same model.
    pub fn same_lineage(&self, other: &TrackId) -> bool {
        self.class_label == other.class_label && self.author == other.author
    }
}

impl fmt::Display for TrackId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.class_label, self.author, self.version)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackKind {
    Classifier,
    Label,
    Protocol,
    Container,
    Diff,
}

impl TrackKind {
    /// Kinds whose events carry text labels (everything but classifiers).
    pub fn is_label_like(self) -> bool {
        !matches!(self, TrackKind::Classifier)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TrackKind::Classifier => "classifier",
            TrackKind::Label => "label",
            TrackKind::Protocol => "protocol",
            TrackKind::Container => "container",
            TrackKind::Diff => "diff",
        }
    }
}

impl FromStr for TrackKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "classifier" => Ok(TrackKind::Classifier),
            "label" => Ok(TrackKind::Label),
            "protocol" => Ok(TrackKind::Protocol),
            "container" => Ok(TrackKind::Container),
            "diff" => Ok(TrackKind::Diff),
            other => Err(format!("unknown track kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rgb(pub [u8; 3]);

impl Rgb {
    pub const CLASSIFIER_BLUE: Rgb = Rgb([0x1f, 0x77, 0xb4]);
    pub const LABEL_GREEN: Rgb = Rgb([0x2c, 0xa0, 0x2c]);
    pub const DERIVED_GREY: Rgb = Rgb([0x7f, 0x7f, 0x7f]);

    pub fn default_for(kind: TrackKind) -> Rgb {
        match kind {
            TrackKind::Classifier => Self::CLASSIFIER_BLUE,
            TrackKind::Label | TrackKind::Protocol => Self::LABEL_GREEN,
            TrackKind::Container | TrackKind::Diff => Self::DERIVED_GREY,
        }
    }
}

const NAMED_COLORS: &[(&str, [u8; 3])] = &[
    ("black", [0, 0, 0]),
    ("white", [255, 255, 255]),
    ("red", [255, 0, 0]),
    ("green", [0, 128, 0]),
    ("blue", [0, 0, 255]),
    ("yellow", [255, 255, 0]),
    ("orange", [255, 165, 0]),
    ("purple", [128, 0, 128]),
    ("magenta", [255, 0, 255]),
    ("cyan", [0, 255, 255]),
    ("grey", [128, 128, 128]),
    ("gray", [128, 128, 128]),
    ("brown", [165, 42, 42]),
    ("pink", [255, 192, 203]),
];

impl FromStr for Rgb {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ModelError::BadColor(s.to_owned());
        if let Some(hex) = s.strip_prefix('#') {
            if hex.len() != 6 || !hex.is_ascii() {
                return Err(bad());
            }
            let mut rgb = [0u8; 3];
            for (i, c) in rgb.iter_mut().enumerate() {
                *c = u8::from_str_radix(&hex[2 * i..2 * i + 2], 16).map_err(|_| bad())?;
            }
            return Ok(Rgb(rgb));
        }
        NAMED_COLORS
            .iter()
            .find(|(name, _)| name.eq_ignore_ascii_case(s))
            .map(|&(_, rgb)| Rgb(rgb))
            .ok_or_else(bad)
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [r, g, b] = self.0;
        write!(f, "#{r:02x}{g:02x}{b:02x}")
    }
}

impl Serialize for Rgb {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rgb {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenderMode {
    #[default]
    Blocks,
    Area,
}

/// Model metadata taken from the version manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    #[serde(default)]
    pub sensors: Vec<String>,
    #[serde(default)]
    pub window_seconds: f64,
    #[serde(default)]
    pub params: BTreeMap<String, AttrValue>,
    #[serde(default)]
    pub commit_hash: String,
    #[serde(default)]
    pub commit_message: String,
    pub committed_at: DateTime<Utc>,
}

impl ModelMeta {
    pub fn commit_hash_is_valid(&self) -> bool {
        self.commit_hash.bytes().all(|b| b.is_ascii_hexdigit())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackMeta {
    pub display_name: String,
    pub color: Rgb,
    pub visible: bool,
    pub render_mode: RenderMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelMeta>,
    #[serde(flatten)]
    pub extra: Extra,
}

impl TrackMeta {
    pub fn for_track(id: &TrackId, kind: TrackKind) -> Self {
        Self {
            display_name: id.to_string(),
            color: Rgb::default_for(kind),
            visible: true,
            render_mode: RenderMode::Blocks,
            threshold: (kind == TrackKind::Classifier).then_some(DEFAULT_THRESHOLD),
            model: None,
            extra: Extra::new(),
        }
    }
}

/// An ordered sequence of non-overlapping events of a single kind.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    id: TrackId,
    kind: TrackKind,
    events: Vec<Event>,
    pub meta: TrackMeta,
    pub extra: Extra,
}

impl Track {
    pub fn new(
        id: TrackId,
        kind: TrackKind,
        events: Vec<Event>,
        meta: TrackMeta,
    ) -> Result<Self, ModelError> {
        let track = Self {
            id,
            kind,
            events,
            meta,
            extra: Extra::new(),
        };
        track.validate()?;
        Ok(track)
    }

    /// Builds a track with default display metadata for its kind.
    pub fn with_defaults(
        id: TrackId,
        kind: TrackKind,
        events: Vec<Event>,
    ) -> Result<Self, ModelError> {
        let meta = TrackMeta::for_track(&id, kind);
        Self::new(id, kind, events, meta)
    }

    pub fn id(&self) -> &TrackId {
        &self.id
    }

    pub fn kind(&self) -> TrackKind {
        self.kind
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    pub fn threshold(&self) -> Option<f64> {
        self.meta.threshold
    }

    pub fn set_threshold(&mut self, value: f64) -> Result<(), ModelError> {
        if self.kind != TrackKind::Classifier {
            return Err(self.invalid("threshold applies to classifier tracks only"));
        }
        if !(0.0..=1.0).contains(&value) {
            return Err(self.invalid(format!("threshold {value} outside [0, 1]")));
        }
        self.meta.threshold = Some(value);
        Ok(())
    }

    /// Sum of event durations.
    pub fn duration(&self) -> i64 {
        duration(&self.events)
    }

    /// `[first start, last end)`, if any events exist.
    pub fn span(&self) -> Option<Interval> {
        let first = self.events.first()?;
        let last = self.events.last()?;
        Some(Interval::new_unchecked(first.start(), last.end()))
    }

    /// The covered point set, with classifier tracks thresholded at their
    /// current threshold.
    pub fn interval_set(&self) -> IntervalSet {
        match (self.kind, self.meta.threshold) {
            (TrackKind::Classifier, Some(theta)) => IntervalSet::from_sorted_iter(
                self.events
                    .iter()
                    .filter(|e| e.score().is_some_and(|s| s >= theta))
                    .map(|e| e.interval),
            ),
            _ => IntervalSet::from_sorted_iter(self.events.iter().map(|e| e.interval)),
        }
    }

    fn invalid(&self, reason: impl Into<String>) -> ModelError {
        ModelError::InvalidTrack {
            id: self.id.to_string(),
            reason: reason.into(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for pair in self.events.windows(2) {
            if pair[0].end() > pair[1].start() {
                return Err(self.invalid(format!(
                    "events {} and {} overlap or are out of order",
                    pair[0].interval, pair[1].interval
                )));
            }
        }
        for e in &self.events {
            match e.payload.score {
                Some(s) if !(0.0..=1.0).contains(&s) => {
                    return Err(self.invalid(format!("score {s} at {} outside [0, 1]", e.interval)))
                }
                None if self.kind == TrackKind::Classifier => {
                    return Err(
                        self.invalid(format!("classifier event {} has no score", e.interval))
                    )
                }
                _ => {}
            }
            if self.kind.is_label_like() && e.payload.label.is_none() {
                return Err(self.invalid(format!("event {} has no label", e.interval)));
            }
            if let Some(bad) = e.payload.attrs.keys().find(|k| !is_attr_key(k)) {
                return Err(self.invalid(format!("attribute key {bad:?} is not an identifier")));
            }
        }
        if self.kind == TrackKind::Protocol {
            let mut seen = std::collections::HashSet::new();
            for label in self.events.iter().filter_map(Event::label) {
                if !seen.insert(label) {
                    return Err(self.invalid(format!("protocol label {label:?} repeats")));
                }
            }
        }
        match (self.kind, self.meta.threshold) {
            (TrackKind::Classifier, Some(t)) if (0.0..=1.0).contains(&t) => {}
            (TrackKind::Classifier, _) => {
                return Err(self.invalid("classifier tracks need a threshold in [0, 1]"))
            }
            (_, Some(_)) => return Err(self.invalid("only classifier tracks carry a threshold")),
            (_, None) => {}
        }
        if let Some(model) = &self.meta.model {
            if !model.commit_hash_is_valid() {
                return Err(self.invalid(format!(
                    "commit hash {:?} is not hexadecimal",
                    model.commit_hash
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoBinding {
    pub uri: String,
    /// Session tick at which the video's first frame was recorded.
    pub offset: Tick,
    /// Video length in microseconds, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<i64>,
}

/// Unknown fields found at document level and inside the session object of a
/// loaded file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SessionExtra {
    pub document: Extra,
    pub session: Extra,
}

/// The analysis workspace: a time domain plus tracks in display order.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub domain: Interval,
    tracks: Vec<Track>,
    pub cursor: Option<Tick>,
    pub video: Option<VideoBinding>,
    /// Tracks promoted by the last smart ordering, in display order.
    pub promoted: Vec<TrackId>,
    pub extra: SessionExtra,
}

impl Session {
    pub fn new(domain: Interval) -> Self {
        Self {
            domain,
            tracks: Vec::new(),
            cursor: None,
            video: None,
            promoted: Vec::new(),
            extra: SessionExtra::default(),
        }
    }

    /// A session whose domain is the hull of the given tracks' events.
    pub fn from_tracks(tracks: Vec<Track>) -> Result<Self, ModelError> {
        let domain = tracks
            .iter()
            .filter_map(Track::span)
            .reduce(|a, b| a.hull(&b))
            .unwrap_or_else(|| Interval::new_unchecked(Tick(0), Tick(1)));
        let mut session = Self::new(domain);
        for t in tracks {
            session.add_track(t)?;
        }
        Ok(session)
    }

    /// Tracks in display order.
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn add_track(&mut self, track: Track) -> Result<(), ModelError> {
        if self.tracks.iter().any(|t| t.id == track.id) {
            return Err(ModelError::DuplicateTrack(track.id.to_string()));
        }
        if let Some(span) = track.span() {
            if !self.domain.contains(&span) {
                return Err(ModelError::OutsideDomain(track.id.to_string()));
            }
        }
        self.tracks.push(track);
        Ok(())
    }

    pub fn remove_track(&mut self, id: &TrackId) -> Option<Track> {
        let idx = self.index_of(id)?;
        self.promoted.retain(|p| p != id);
        Some(self.tracks.remove(idx))
    }

    pub fn index_of(&self, id: &TrackId) -> Option<usize> {
        self.tracks.iter().position(|t| &t.id == id)
    }

    pub fn get(&self, id: &TrackId) -> Option<&Track> {
        self.tracks.iter().find(|t| &t.id == id)
    }

    pub fn get_mut(&mut self, id: &TrackId) -> Option<&mut Track> {
        self.tracks.iter_mut().find(|t| &t.id == id)
    }

    /// Lookup by canonical id string.
    pub fn find(&self, canonical: &str) -> Option<&Track> {
        self.tracks.iter().find(|t| t.id.to_string() == canonical)
    }

    pub fn find_mut(&mut self, canonical: &str) -> Option<&mut Track> {
        self.tracks
            .iter_mut()
            .find(|t| t.id.to_string() == canonical)
    }

    /// Distinct authors, the registry used to split canonical ids.
    pub fn authors(&self) -> Vec<&str> {
        let mut authors: Vec<&str> = self.tracks.iter().map(|t| t.id.author.as_str()).collect();
        authors.sort_unstable();
        authors.dedup();
        authors
    }

    /// Applies a new display order. `order` must be a permutation of the
    /// current track indices.
    pub fn reorder(&mut self, order: &[usize]) {
        assert_eq!(order.len(), self.tracks.len(), "order is not a permutation");
        let mut slots: Vec<Option<Track>> = self.tracks.drain(..).map(Some).collect();
        self.tracks = order
            .iter()
            .map(|&i| slots[i].take().expect("order is not a permutation"))
            .collect();
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let mut seen = std::collections::HashSet::new();
        for t in &self.tracks {
            t.validate()?;
            if !seen.insert(&t.id) {
                return Err(ModelError::DuplicateTrack(t.id.to_string()));
            }
            if t.span().is_some_and(|s| !self.domain.contains(&s)) {
                return Err(ModelError::OutsideDomain(t.id.to_string()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapPolicy {
    Reject,
    MergeMaxScore,
    Clip,
}

/// Sorts events and removes overlaps according to `policy`.
///
/// Touching events (`a.end == b.start`) never overlap and are kept apart.
pub fn normalize(mut events: Vec<Event>, policy: OverlapPolicy) -> Result<Vec<Event>, ModelError> {
    events.sort_by_key(|e| (e.start(), e.end()));
    let mut out: Vec<Event> = Vec::with_capacity(events.len());
    for ev in events {
        let Some(last) = out.last_mut() else {
            out.push(ev);
            continue;
        };
        if ev.start() >= last.end() {
            out.push(ev);
            continue;
        }
        match policy {
            OverlapPolicy::Reject => {
                return Err(ModelError::Overlap {
                    first: last.interval,
                    second: ev.interval,
                })
            }
            OverlapPolicy::MergeMaxScore => {
                if ev.end() > last.end() {
                    last.interval = Interval::new_unchecked(last.start(), ev.end());
                }
                last.payload.score = match (last.payload.score, ev.payload.score) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    (a, b) => a.or(b),
                };
                if last.payload.label.is_none() {
                    last.payload.label = ev.payload.label;
                }
            }
            OverlapPolicy::Clip => {
                if ev.end() > last.end() {
                    let start = last.end();
                    out.push(Event {
                        interval: Interval::new_unchecked(start, ev.end()),
                        payload: ev.payload,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Sum of `end - start` over the events.
pub fn duration(events: &[Event]) -> i64 {
    events.iter().map(|e| e.interval.len()).sum()
}
