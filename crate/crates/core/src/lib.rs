//! Engine for evaluating temporal classifier predictions against
//! ground-truth label tracks.
//!
//! Tracks are sequences of non-overlapping events on an integer microsecond
//! timeline. Classifier tracks carry scores and are thresholded into interval
//! sets; everything else in the crate (set algebra, metrics, the command
//! language) works on those interval sets.

pub mod algebra;
pub mod command;
pub mod ingest;
pub mod interval_set;
pub mod metrics;
pub mod model;
pub mod store;
pub mod version;

pub use crate::interval_set::IntervalSet;
pub use crate::model::{
    AttrValue, Attrs, Event, EventPayload, Interval, ModelError, ModelMeta, Rgb, Session, Tick,
    Track, TrackId, TrackKind, TrackMeta, VideoBinding, TICKS_PER_SECOND,
};
pub use crate::version::Version;
