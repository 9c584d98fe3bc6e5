//! Track algebra: thresholding, boolean set operations, the match operator
//! (`~`) and the version variation operator (`∂`).
//!
//! Binary operators work on [`IntervalSet`]s. Classifier operands are first
//! thresholded at their current threshold (see [`Track::interval_set`]);
//! results are materialized as label tracks by [`materialize`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::interval_set::IntervalSet;
use crate::model::{
    AttrValue, Event, EventPayload, Interval, ModelError, Session, Track, TrackId, TrackKind,
    TrackMeta,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("track {0} is not a classifier track")]
    NotAClassifierTrack(String),
    #[error("threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("interval set extends outside the domain {0}")]
    OutOfDomain(Interval),
    #[error("track {0} has no earlier version in the session")]
    NoPredecessorVersion(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Intervals of events scoring at least `theta`, touching survivors merged.
pub fn threshold_intervals(track: &Track, theta: f64) -> Result<IntervalSet, AlgebraError> {
    if track.kind() != TrackKind::Classifier {
        return Err(AlgebraError::NotAClassifierTrack(track.id().to_string()));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(AlgebraError::InvalidThreshold(theta));
    }
    Ok(IntervalSet::from_sorted_iter(
        track
            .events()
            .iter()
            .filter(|e| e.score().is_some_and(|s| s >= theta))
            .map(|e| e.interval),
    ))
}

/// `domain ∖ a`; `a` must lie inside `domain`.
pub fn negate(a: &IntervalSet, domain: &Interval) -> Result<IntervalSet, AlgebraError> {
    if a.span().is_some_and(|s| !domain.contains(&s)) {
        return Err(AlgebraError::OutOfDomain(*domain));
    }
    Ok(a.complement_within(domain))
}

pub fn union(a: &IntervalSet, b: &IntervalSet) -> IntervalSet {
    a.union(b)
}

pub fn intersect(a: &IntervalSet, b: &IntervalSet) -> IntervalSet {
    a.intersect(b)
}

pub fn subtract(a: &IntervalSet, b: &IntervalSet) -> IntervalSet {
    a.subtract(b)
}

/// Symmetric difference: ticks covered by exactly one operand.
pub fn errors(a: &IntervalSet, b: &IntervalSet) -> IntervalSet {
    a.symmetric_difference(b)
}

/// Whole events of `a` that share no tick with `b`.
///
/// Events touched by `b` anywhere are dropped entirely; boundaries of the
/// surviving events are never trimmed.
pub fn match_subtract(a: &[Event], b: &IntervalSet) -> Vec<Event> {
    a.iter()
        .filter(|e| !b.intersects(&e.interval))
        .cloned()
        .collect()
}

/// Signed difference between two tracks' covered intervals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffTrack {
    /// Covered by the new track only.
    pub added: IntervalSet,
    /// Covered by the old track only.
    pub removed: IntervalSet,
}

impl DiffTrack {
    pub fn to_track(&self, id: TrackId, new: &TrackId, old: &TrackId) -> Track {
        let src = AttrValue::Text(format!("{new},{old}"));
        let mut events: Vec<Event> = self
            .added
            .iter()
            .map(|iv| Event::labeled(*iv, "added"))
            .chain(self.removed.iter().map(|iv| Event::labeled(*iv, "removed")))
            .map(|e| e.with_attr("src", src.clone()))
            .collect();
        events.sort_by_key(|e| e.start());
        Track::with_defaults(id, TrackKind::Diff, events).expect("diff events are disjoint")
    }
}

pub fn variation(new: &Track, old: &Track) -> DiffTrack {
    let (n, o) = (new.interval_set(), old.interval_set());
    DiffTrack {
        added: n.subtract(&o),
        removed: o.subtract(&n),
    }
}

/// Highest version of the same class and author that is lower than `id`'s.
pub fn predecessor<'a>(session: &'a Session, id: &TrackId) -> Option<&'a Track> {
    session
        .tracks()
        .iter()
        .filter(|t| t.id().same_lineage(id) && t.id().version < id.version)
        .max_by(|a, b| a.id().version.cmp(&b.id().version))
}

/// Variation against an explicit old track, or against the predecessor
/// version found in the session.
pub fn variation_in(
    session: &Session,
    new: &Track,
    old: Option<&Track>,
) -> Result<(DiffTrack, TrackId), AlgebraError> {
    let old = match old {
        Some(t) => t,
        None => predecessor(session, new.id())
            .ok_or_else(|| AlgebraError::NoPredecessorVersion(new.id().to_string()))?,
    };
    Ok((variation(new, old), old.id().clone()))
}

/// The blocks a track displays: threshold survivors for classifiers (touching
/// survivors merged), the raw events otherwise.
pub fn display_blocks(track: &Track) -> Vec<Event> {
    match (track.kind(), track.threshold()) {
        (TrackKind::Classifier, Some(theta)) => {
            let mut out: Vec<Event> = Vec::new();
            for e in track
                .events()
                .iter()
                .filter(|e| e.score().is_some_and(|s| s >= theta))
            {
                match out.last_mut() {
                    Some(last) if last.end() == e.start() => {
                        last.interval = last.interval.hull(&e.interval);
                        let s = last
                            .payload
                            .score
                            .unwrap_or(0.0)
                            .max(e.score().unwrap_or(0.0));
                        last.payload.score = Some(s);
                    }
                    _ => out.push(Event::scored(e.interval, e.score().unwrap_or(theta))),
                }
            }
            out
        }
        _ => track.events().to_vec(),
    }
}

/// Turns an algebra result into a label track.
///
/// Each event is labelled with the distinct labels of the source events it
/// overlaps, joined by `+` (classifier events contribute their track's class
/// label), and carries a `src` attribute listing the contributing track ids.
/// Intervals no source event touches (e.g. from negation) get the result
/// track's class label.
pub fn materialize(id: TrackId, set: &IntervalSet, sources: &[&Track]) -> Track {
    let blocks: Vec<Vec<Event>> = sources.iter().map(|t| display_blocks(t)).collect();
    let events = set
        .iter()
        .map(|iv| {
            let mut labels: Vec<&str> = Vec::new();
            let mut src: Vec<String> = Vec::new();
            for (track, evs) in sources.iter().zip(&blocks) {
                let from = evs.partition_point(|e| e.end() <= iv.start());
                let mut hit = false;
                for e in evs[from..].iter().take_while(|e| e.start() < iv.end()) {
                    hit = true;
                    let label = e.label().unwrap_or(&track.id().class_label);
                    if !labels.contains(&label) {
                        labels.push(label);
                    }
                }
                if hit {
                    let tid = track.id().to_string();
                    if !src.contains(&tid) {
                        src.push(tid);
                    }
                }
            }
            let label = if labels.is_empty() {
                id.class_label.clone()
            } else {
                labels.join("+")
            };
            let mut payload = EventPayload {
                label: Some(label),
                ..Default::default()
            };
            if !src.is_empty() {
                payload
                    .attrs
                    .insert("src".into(), AttrValue::Text(src.join(",")));
            }
            Event::new(*iv, payload)
        })
        .collect();
    let meta = TrackMeta::for_track(&id, TrackKind::Label);
    Track::new(id, TrackKind::Label, events, meta).expect("materialized events are canonical")
}
