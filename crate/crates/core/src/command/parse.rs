use super::filter::FilterExpr;
use super::{CommandError, Op, Slot};
use crate::model::Rgb;

/// A parsed argument. Track references stay raw until resolved against a
/// session.
#[derive(Debug, Clone, PartialEq)]
pub enum Arg {
    Track(String),
    Tracks(String),
    Number(f64),
    Color(Rgb),
    Text(String),
    Author(String),
    Filter(FilterExpr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Command {
    pub op: Op,
    pub args: Vec<Arg>,
}

/// Whitespace-separated tokens with their byte offsets.
pub(crate) fn tokens(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s, &text[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, &text[s..]));
    }
    out
}

fn arity(op: Op) -> String {
    let slots = op.slots();
    let required = slots
        .iter()
        .filter(|s| !matches!(s, Slot::OptionalTrack(_)))
        .count();
    if required == slots.len() {
        required.to_string()
    } else {
        format!("{required}-{}", slots.len())
    }
}

pub fn parse(text: &str) -> Result<Command, CommandError> {
    let toks = tokens(text);
    let (_, head) = *toks.first().ok_or(CommandError::Empty)?;
    let op = Op::from_name(head).ok_or_else(|| CommandError::UnknownOperator(head.to_owned()))?;
    let rest = &toks[1..];
    let arity_error = || CommandError::ArityError {
        op,
        expected: arity(op),
        got: rest.len(),
    };

    let mut args = Vec::new();
    let mut next = 0;
    for slot in op.slots() {
        let Some(&(offset, tok)) = rest.get(next) else {
            if matches!(slot, Slot::OptionalTrack(_)) {
                break;
            }
            return Err(arity_error());
        };
        next += 1;
        let bad = |reason: &str| CommandError::BadArgument {
            raw: tok.to_owned(),
            reason: reason.to_owned(),
        };
        let arg = match slot {
            Slot::Track(_) | Slot::OptionalTrack(_) => Arg::Track(tok.to_owned()),
            Slot::Tracks => Arg::Tracks(tok.to_owned()),
            Slot::Author => Arg::Author(tok.to_owned()),
            Slot::Number => Arg::Number(
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| bad("expected a number"))?,
            ),
            Slot::Color => Arg::Color(
                tok.parse()
                    .map_err(|_| bad("expected #rrggbb or a color name"))?,
            ),
            Slot::Text => {
                next = rest.len();
                Arg::Text(text[offset..].trim_end().to_owned())
            }
            Slot::Filter => {
                next = rest.len();
                Arg::Filter(FilterExpr::parse(&text[offset..], offset)?)
            }
        };
        args.push(arg);
    }
    if next < rest.len() {
        return Err(arity_error());
    }
    Ok(Command { op, args })
}
