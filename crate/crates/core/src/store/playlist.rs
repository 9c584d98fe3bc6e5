use serde::{Deserialize, Serialize};

use super::StoreError;
use crate::algebra::display_blocks;
use crate::model::{Interval, Session, Track, TICKS_PER_SECOND};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaylistSegment {
    pub video_uri: String,
    pub start_seconds: f64,
    pub end_seconds: f64,
    /// The block this segment plays, in session ticks.
    pub source: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Playlist {
    pub segments: Vec<PlaylistSegment>,
    /// Blocks lying entirely outside the video.
    pub dropped: usize,
}

/// Maps each displayed block of `track` to a segment of the session video.
///
/// Blocks partially outside the video are clamped to its extent; blocks
/// entirely outside are dropped and counted.
pub fn playlist(track: &Track, session: &Session) -> Result<Playlist, StoreError> {
    let video = session.video.as_ref().ok_or(StoreError::NoVideoBound)?;
    let first = video.offset.0;
    let last = video.duration.map(|d| first.saturating_add(d));
    let seconds = |t: i64| (t - first) as f64 / TICKS_PER_SECOND as f64;

    let mut segments = Vec::new();
    let mut dropped = 0;
    for block in display_blocks(track) {
        let start = block.start().0.max(first);
        let end = last.map_or(block.end().0, |l| block.end().0.min(l));
        if end <= start {
            dropped += 1;
            continue;
        }
        segments.push(PlaylistSegment {
            video_uri: video.uri.clone(),
            start_seconds: seconds(start),
            end_seconds: seconds(end),
            source: block.interval,
        });
    }
    Ok(Playlist { segments, dropped })
}
