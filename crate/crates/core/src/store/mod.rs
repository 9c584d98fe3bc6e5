//! Persistence and presentation helpers: BSX session files, model manifests,
//! video playlists and render-ready binning.

mod assemble;
mod bsx;
mod manifest;
mod playlist;
mod render;

use thiserror::Error;

use crate::version::BadVersionString;

pub use self::assemble::{assemble, parse_track_id, AssembleError, CsvSource};
pub use self::bsx::{bsx_read, bsx_write, bsx_write_plain, FORMAT_VERSION};
pub use self::manifest::{apply_manifest, load_manifest, Manifest, ManifestEntry, ManifestWarning};
pub use self::playlist::{playlist, Playlist, PlaylistSegment};
pub use self::render::{bin_events, RenderBin, RenderBuffer};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StoreError {
    #[error("not a BSX document (expected gzip magic 1f 8b or a JSON object)")]
    BadMagic,
    #[error("cannot decode BSX document: {0}")]
    Decode(String),
    #[error("unsupported BSX format version {0}")]
    SchemaVersionUnsupported(u64),
    #[error("invariant violated in {0}")]
    InvariantViolation(String),
    #[error("session has no bound video")]
    NoVideoBound,
    #[error("bad manifest: {0}")]
    BadManifest(String),
    #[error(transparent)]
    BadVersionString(#[from] BadVersionString),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::BadMagic => "bad_magic",
            StoreError::Decode(_) => "decode_error",
            StoreError::SchemaVersionUnsupported(_) => "schema_version_unsupported",
            StoreError::InvariantViolation(_) => "invariant_violation",
            StoreError::NoVideoBound => "no_video_bound",
            StoreError::BadManifest(_) => "bad_manifest",
            StoreError::BadVersionString(_) => "bad_version_string",
        }
    }
}
