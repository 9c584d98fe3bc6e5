use serde::Serialize;

use super::parse::tokens;
use super::resolve::allows_many;
use super::{Op, Slot, TrackType};
use crate::model::{Session, Track};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Suggestion {
    /// The whole command line with the completion applied.
    pub text: String,
    /// The completed token.
    pub token: String,
}

fn suggestion(prefix: &str, token: &str) -> Suggestion {
    Suggestion {
        text: format!("{prefix}{token}"),
        token: token.to_owned(),
    }
}

/// Visible tracks first, then display order.
fn ranked<'a>(tracks: impl Iterator<Item = &'a Track>) -> Vec<&'a Track> {
    let mut v: Vec<&Track> = tracks.collect();
    v.sort_by_key(|t| !t.meta.visible);
    v
}

fn track_candidates<'a>(session: &'a Session, partial: &str, want: TrackType) -> Vec<&'a Track> {
    let typed = session.tracks().iter().filter(|t| want.accepts(t.kind()));
    let lower = partial.to_lowercase();
    if let Some(needle) = lower.strip_prefix('%') {
        return ranked(typed.filter(|t| t.id().class_label.to_lowercase().contains(needle)));
    }
    if !partial.is_empty() && partial.bytes().all(|b| b.is_ascii_digit()) {
        let pos: usize = partial.parse().unwrap_or(0);
        return session
            .tracks()
            .iter()
            .filter(|t| t.meta.visible)
            .nth(pos.wrapping_sub(1))
            .filter(|t| want.accepts(t.kind()))
            .into_iter()
            .collect();
    }
    let typed: Vec<&Track> = typed.collect();
    let prefixed = typed
        .iter()
        .filter(|t| t.id().to_string().to_lowercase().starts_with(&lower));
    let inner = typed.iter().filter(|t| {
        !t.id().to_string().to_lowercase().starts_with(&lower)
            && t.id().class_label.to_lowercase().contains(&lower)
    });
    let mut out = ranked(prefixed.copied());
    out.extend(ranked(inner.copied()));
    out
}

/// Ranked completions for a partially typed command line.
///
/// While the operator is being typed, operator names are offered. Afterwards
/// the token under the cursor is completed according to its slot: track
/// references only offer tracks of the operand type the operator expects.
/// A trailing space after a `%wildcard` that names several tracks for a
/// one-track slot expands the wildcard into its candidates.
pub fn autocomplete(session: &Session, partial: &str) -> Vec<Suggestion> {
    let toks = tokens(partial);
    let trailing_space = partial.ends_with(char::is_whitespace);
    let Some(&(_, head)) = toks.first() else {
        return Op::ALL.iter().map(|op| suggestion("", op.name())).collect();
    };
    if toks.len() == 1 && !trailing_space {
        let lower = head.to_lowercase();
        let mut names: Vec<&str> = Vec::new();
        for op in Op::ALL {
            for name in std::iter::once(op.name()).chain(op.aliases().iter().copied()) {
                if name.starts_with(&lower) && !names.contains(&op.name()) {
                    names.push(op.name());
                }
            }
        }
        return names.into_iter().map(|n| suggestion("", n)).collect();
    }
    let Some(op) = Op::from_name(head) else {
        return Vec::new();
    };
    let slots = op.slots();
    let args = &toks[1..];

    // expansion of an ambiguous wildcard just typed
    if trailing_space {
        if let Some(&(offset, last)) = args.last() {
            if let Some(Slot::Track(want) | Slot::OptionalTrack(want)) = slots.get(args.len() - 1) {
                if last.starts_with('%') && !allows_many(op) {
                    let found = track_candidates(session, last, *want);
                    if found.len() > 1 {
                        let prefix = &partial[..offset];
                        return found
                            .iter()
                            .map(|t| suggestion(prefix, &t.id().to_string()))
                            .collect();
                    }
                }
            }
        }
    }

    let (index, prefix, current) = if trailing_space {
        (args.len(), partial, "")
    } else {
        let &(offset, tok) = args.last().expect("at least one argument token");
        (args.len() - 1, &partial[..offset], tok)
    };
    match slots.get(index) {
        Some(Slot::Track(want) | Slot::OptionalTrack(want)) => {
            track_candidates(session, current, *want)
                .iter()
                .map(|t| suggestion(prefix, &t.id().to_string()))
                .collect()
        }
        Some(Slot::Tracks) => {
            let mut out: Vec<Suggestion> = track_candidates(session, current, TrackType::Any)
                .iter()
                .map(|t| suggestion(prefix, &t.id().to_string()))
                .collect();
            if current.starts_with('%') && out.len() > 1 {
                out.insert(0, suggestion(prefix, current));
            }
            out
        }
        Some(Slot::Author) => {
            let lower = current.to_lowercase();
            session
                .authors()
                .into_iter()
                .filter(|a| a.to_lowercase().starts_with(&lower))
                .map(|a| suggestion(prefix, a))
                .collect()
        }
        _ => Vec::new(),
    }
}
