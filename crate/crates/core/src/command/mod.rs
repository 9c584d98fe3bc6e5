//! The command line: operators over tracks, typed by the kind of operand
//! each slot accepts.
//!
//! ```text
//! command  := op (WS arg)*
//! arg      := track-ref | number | color | text | filter
//! track-ref:= canonical id | 1-based position | %substring | prefix
//! filter   := conjunct ('&' conjunct)*      e.g. angle>60&duration>2
//! ```

mod complete;
mod execute;
mod filter;
mod order;
mod parse;
mod resolve;

use std::fmt;

use thiserror::Error;

use crate::algebra::AlgebraError;
use crate::metrics::MetricsError;
use crate::model::ModelError;
use crate::store::StoreError;

pub use self::complete::{autocomplete, Suggestion};
pub use self::execute::{
    execute, run, track_info, Effect, ExecContext, MetricResult, Outcome, TrackInfo,
};
pub use self::filter::{CmpOp, Conjunct, FilterExpr};
pub use self::order::smart_order;
pub use self::parse::{parse, Arg, Command};
pub use self::resolve::{resolve, Resolution, Resolved};

/// Operand types accepted by a track slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackType {
    Any,
    Classifier,
    LabelLike,
}

impl TrackType {
    pub fn accepts(self, kind: crate::model::TrackKind) -> bool {
        match self {
            TrackType::Any => true,
            TrackType::Classifier => kind == crate::model::TrackKind::Classifier,
            TrackType::LabelLike => kind.is_label_like(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Track(TrackType),
    OptionalTrack(TrackType),
    /// One or more tracks (wildcards may match several).
    Tracks,
    Number,
    Color,
    /// The rest of the line.
    Text,
    Author,
    Filter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Negate,
    Union,
    Intersection,
    Errors,
    Subtract,
    Match,
    Variation,
    Play,
    Threshold,
    Show,
    Hide,
    Transform,
    Rename,
    Color,
    Author,
    Filter,
    Order,
    Info,
    Jaccard,
    Roc,
    Report,
    Score,
}

impl Op {
    pub const ALL: [Op; 22] = [
        Op::Negate,
        Op::Union,
        Op::Intersection,
        Op::Errors,
        Op::Subtract,
        Op::Match,
        Op::Variation,
        Op::Play,
        Op::Threshold,
        Op::Show,
        Op::Hide,
        Op::Transform,
        Op::Rename,
        Op::Color,
        Op::Author,
        Op::Filter,
        Op::Order,
        Op::Info,
        Op::Jaccard,
        Op::Roc,
        Op::Report,
        Op::Score,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Op::Negate => "negate",
            Op::Union => "union",
            Op::Intersection => "intersection",
            Op::Errors => "errors",
            Op::Subtract => "subtract",
            Op::Match => "match",
            Op::Variation => "variation",
            Op::Play => "play",
            Op::Threshold => "threshold",
            Op::Show => "show",
            Op::Hide => "hide",
            Op::Transform => "transform",
            Op::Rename => "rename",
            Op::Color => "color",
            Op::Author => "author",
            Op::Filter => "filter",
            Op::Order => "order",
            Op::Info => "info",
            Op::Jaccard => "jaccard",
            Op::Roc => "roc",
            Op::Report => "report",
            Op::Score => "score",
        }
    }

    /// Accepted spellings besides [`Op::name`].
    pub fn aliases(self) -> &'static [&'static str] {
        match self {
            Op::Union => &["add"],
            Op::Intersection => &["intersect"],
            _ => &[],
        }
    }

    pub fn from_name(name: &str) -> Option<Op> {
        let name = name.to_ascii_lowercase();
        Op::ALL
            .into_iter()
            .find(|op| op.name() == name || op.aliases().contains(&name.as_str()))
    }

    pub fn slots(self) -> &'static [Slot] {
        use Slot::*;
        use TrackType::*;
        match self {
            Op::Negate | Op::Play | Op::Info => &[Track(Any)],
            Op::Union | Op::Intersection | Op::Errors | Op::Subtract | Op::Match | Op::Jaccard => {
                &[Track(Any), Track(Any)]
            }
            Op::Variation => &[Track(Any), OptionalTrack(Any)],
            Op::Threshold => &[Track(Classifier), Number],
            Op::Show | Op::Hide => &[Tracks],
            Op::Transform => &[Track(Classifier)],
            Op::Rename => &[Track(Any), Text],
            Op::Color => &[Track(Any), Color],
            Op::Author => &[Author],
            Op::Filter => &[Track(Any), Filter],
            Op::Order => &[],
            Op::Roc => &[Track(Classifier), Track(LabelLike)],
            Op::Report => &[Track(Any), Track(LabelLike)],
            Op::Score => &[Track(Any), OptionalTrack(LabelLike)],
        }
    }

    /// Whether the command adds a track to the session.
    pub fn generates_track(self) -> bool {
        matches!(
            self,
            Op::Negate
                | Op::Union
                | Op::Intersection
                | Op::Errors
                | Op::Subtract
                | Op::Match
                | Op::Variation
                | Op::Transform
                | Op::Filter
        )
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CommandError {
    #[error("empty command")]
    Empty,
    #[error("unknown operator {0:?}")]
    UnknownOperator(String),
    #[error("{op} expects {expected} argument(s), got {got}")]
    ArityError {
        op: Op,
        expected: String,
        got: usize,
    },
    #[error("filter syntax error at position {position}: {reason}")]
    FilterSyntaxError { position: usize, reason: String },
    #[error("bad argument {raw:?}: {reason}")]
    BadArgument { raw: String, reason: String },
    #[error("no track matches {0:?}")]
    NoMatch(String),
    #[error("{raw:?} is ambiguous: {}", .candidates.join(", "))]
    AmbiguousRef {
        raw: String,
        candidates: Vec<String>,
    },
    #[error("{op} cannot take track {track} ({kind}) here")]
    TypeMismatch { op: Op, track: String, kind: String },
    #[error("no cursor is set")]
    NoCursor,
    #[error("no ground-truth label track found for {0}")]
    NoGroundTruth(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl CommandError {
    pub fn code(&self) -> &'static str {
        match self {
            CommandError::Empty => "empty_command",
            CommandError::UnknownOperator(_) => "unknown_operator",
            CommandError::ArityError { .. } => "arity_error",
            CommandError::FilterSyntaxError { .. } => "filter_syntax_error",
            CommandError::BadArgument { .. } => "bad_argument",
            CommandError::NoMatch(_) => "no_match",
            CommandError::AmbiguousRef { .. } => "ambiguous_ref",
            CommandError::TypeMismatch { .. } => "type_mismatch",
            CommandError::NoCursor => "no_cursor",
            CommandError::NoGroundTruth(_) => "no_ground_truth",
            CommandError::Algebra(e) => match e {
                AlgebraError::NotAClassifierTrack(_) => "not_a_classifier_track",
                AlgebraError::InvalidThreshold(_) => "invalid_threshold",
                AlgebraError::OutOfDomain(_) => "out_of_domain",
                AlgebraError::NoPredecessorVersion(_) => "no_predecessor_version",
                AlgebraError::Model(_) => "model_error",
            },
            CommandError::Metrics(e) => match e {
                MetricsError::DegenerateTruth => "degenerate_truth",
                MetricsError::NotAClassifierTrack(_) => "not_a_classifier_track",
            },
            CommandError::Store(e) => e.code(),
            CommandError::Model(_) => "model_error",
        }
    }
}
