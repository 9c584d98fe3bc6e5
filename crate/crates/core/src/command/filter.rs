use std::fmt;

use super::CommandError;
use crate::model::{Event, TICKS_PER_SECOND};

/// Built-in attribute: event length in seconds.
pub const DURATION: &str = "duration";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }

    pub fn eval(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conjunct {
    pub attr: String,
    pub op: CmpOp,
    pub rhs: f64,
}

/// Conjunction of numeric comparisons over event attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterExpr {
    pub conjuncts: Vec<Conjunct>,
}

impl FilterExpr {
    /// Parses `text`; error positions are byte offsets plus `base`.
    pub fn parse(text: &str, base: usize) -> Result<Self, CommandError> {
        let err = |pos: usize, reason: &str| CommandError::FilterSyntaxError {
            position: base + pos,
            reason: reason.to_owned(),
        };
        let bytes = text.as_bytes();
        let mut i = 0;
        let skip_ws = |i: &mut usize| {
            while *i < bytes.len() && bytes[*i].is_ascii_whitespace() {
                *i += 1;
            }
        };
        let mut conjuncts = Vec::new();
        loop {
            skip_ws(&mut i);
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            if i == start || bytes[start].is_ascii_digit() {
                return Err(err(start, "expected an attribute name"));
            }
            let attr = &text[start..i];
            skip_ws(&mut i);

            let rest = &bytes[i..];
            let (op, width) = match rest {
                [b'<', b'=', ..] => (CmpOp::Le, 2),
                [b'>', b'=', ..] => (CmpOp::Ge, 2),
                [b'=', b'=', ..] => (CmpOp::Eq, 2),
                [b'!', b'=', ..] => (CmpOp::Ne, 2),
                [b'<', ..] => (CmpOp::Lt, 1),
                [b'>', ..] => (CmpOp::Gt, 1),
                _ => return Err(err(i, "expected one of < <= > >= == !=")),
            };
            i += width;
            skip_ws(&mut i);

            let num_start = i;
            while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'&' {
                i += 1;
            }
            let rhs = text[num_start..i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(num_start, "expected a number"))?;
            conjuncts.push(Conjunct {
                attr: attr.to_owned(),
                op,
                rhs,
            });

            skip_ws(&mut i);
            match bytes.get(i) {
                None => break,
                Some(b'&') => i += 1,
                Some(_) => return Err(err(i, "expected '&' or end of filter")),
            }
        }
        Ok(Self { conjuncts })
    }

    /// True when every conjunct holds. An attribute the event lacks, or a
    /// text attribute, fails its conjunct.
    pub fn matches(&self, event: &Event) -> bool {
        self.conjuncts.iter().all(|c| {
            let lhs = if c.attr == DURATION {
                Some(event.interval.len() as f64 / TICKS_PER_SECOND as f64)
            } else {
                event.payload.attrs.get(&c.attr).and_then(|v| v.as_number())
            };
            lhs.is_some_and(|v| c.op.eval(v, c.rhs))
        })
    }
}

impl fmt::Display for FilterExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.conjuncts.iter().enumerate() {
            if i > 0 {
                f.write_str("&")?;
            }
            write!(f, "{}{}{}", c.attr, c.op.symbol(), c.rhs)?;
        }
        Ok(())
    }
}
