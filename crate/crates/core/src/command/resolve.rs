use serde::Serialize;

use super::{CommandError, Op, TrackType};
use crate::model::{Session, Track, TrackId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    ExactId,
    Positional,
    Wildcard,
    Prefix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub ids: Vec<TrackId>,
    pub how: Resolution,
}

impl Resolved {
    /// The single resolved track of a one-track slot.
    pub fn id(&self) -> &TrackId {
        &self.ids[0]
    }
}

/// Operators for which one reference may stand for several tracks.
pub(crate) fn allows_many(op: Op) -> bool {
    matches!(op, Op::Show | Op::Hide | Op::Author)
}

/// Resolves a track reference for an operand of type `want`.
///
/// Tried in order: canonical id (exact, then case-insensitive), 1-based
/// position among visible tracks, `%substring` of the class label, and
/// case-insensitive prefix of the canonical id. Wildcard and prefix
/// candidates are narrowed to tracks of the wanted type first.
pub fn resolve(
    session: &Session,
    raw: &str,
    op: Op,
    want: TrackType,
) -> Result<Resolved, CommandError> {
    let tracks = session.tracks();
    let one = |t: &Track, how| -> Result<Resolved, CommandError> {
        if !want.accepts(t.kind()) {
            return Err(mismatch(op, t));
        }
        Ok(Resolved {
            ids: vec![t.id().clone()],
            how,
        })
    };

    if let Some(t) = session.find(raw) {
        return one(t, Resolution::ExactId);
    }
    let folded: Vec<&Track> = tracks
        .iter()
        .filter(|t| t.id().to_string().eq_ignore_ascii_case(raw))
        .collect();
    if let [t] = folded[..] {
        return one(t, Resolution::ExactId);
    }

    if !raw.is_empty() && raw.bytes().all(|b| b.is_ascii_digit()) {
        let n: usize = raw
            .parse()
            .map_err(|_| CommandError::NoMatch(raw.to_owned()))?;
        let visible = tracks.iter().filter(|t| t.meta.visible);
        return match n.checked_sub(1).and_then(|i| visible.clone().nth(i)) {
            Some(t) => one(t, Resolution::Positional),
            None => Err(CommandError::NoMatch(raw.to_owned())),
        };
    }

    let lower = raw.to_lowercase();
    let (candidates, how): (Vec<&Track>, _) = match lower.strip_prefix('%') {
        Some(needle) => (
            tracks
                .iter()
                .filter(|t| t.id().class_label.to_lowercase().contains(needle))
                .collect(),
            Resolution::Wildcard,
        ),
        None => (
            tracks
                .iter()
                .filter(|t| t.id().to_string().to_lowercase().starts_with(&lower))
                .collect(),
            Resolution::Prefix,
        ),
    };
    pick(raw, op, want, candidates, how)
}

fn pick(
    raw: &str,
    op: Op,
    want: TrackType,
    candidates: Vec<&Track>,
    how: Resolution,
) -> Result<Resolved, CommandError> {
    let Some(first) = candidates.first() else {
        return Err(CommandError::NoMatch(raw.to_owned()));
    };
    let typed: Vec<&Track> = candidates
        .iter()
        .copied()
        .filter(|t| want.accepts(t.kind()))
        .collect();
    match typed[..] {
        [] => Err(mismatch(op, first)),
        [t] => Ok(Resolved {
            ids: vec![t.id().clone()],
            how,
        }),
        _ if allows_many(op) => Ok(Resolved {
            ids: typed.iter().map(|t| t.id().clone()).collect(),
            how,
        }),
        _ => Err(CommandError::AmbiguousRef {
            raw: raw.to_owned(),
            candidates: typed.iter().map(|t| t.id().to_string()).collect(),
        }),
    }
}

fn mismatch(op: Op, t: &Track) -> CommandError {
    CommandError::TypeMismatch {
        op,
        track: t.id().to_string(),
        kind: t.kind().as_str().to_owned(),
    }
}
