use thiserror::Error;

use super::{apply_manifest, Manifest, ManifestWarning, StoreError};
use crate::ingest::{import_csv, CompressionConfig, IngestError};
use crate::model::{ModelError, Session, TrackId, TrackKind};

/// One CSV file destined to become a track.
#[derive(Debug, Clone)]
pub struct CsvSource {
    /// Canonical id (`WalkAnn1.0`) or an explicit `class:author:version`.
    pub id: String,
    pub kind: TrackKind,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Error)]
pub enum AssembleError {
    #[error("{id}: {source}")]
    Ingest {
        id: String,
        #[source]
        source: IngestError,
    },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl AssembleError {
    pub fn code(&self) -> &'static str {
        match self {
            AssembleError::Ingest { source, .. } => source.code(),
            AssembleError::Store(e) => e.code(),
            AssembleError::Model(ModelError::BadTrackId(_)) => "bad_track_id",
            AssembleError::Model(ModelError::DuplicateTrack(_)) => "duplicate_track",
            AssembleError::Model(_) => "model_error",
        }
    }
}

/// Splits a track id. Canonical ids need the author registry, which is the
/// given authors plus every author named in the manifest.
pub fn parse_track_id(
    text: &str,
    authors: &[String],
    manifest: Option<&Manifest>,
) -> Result<TrackId, ModelError> {
    let parts: Vec<&str> = text.split(':').collect();
    if let [class, author, version] = parts[..] {
        return TrackId::new(class, author, version);
    }
    let mut registry: Vec<&str> = authors.iter().map(String::as_str).collect();
    if let Some(m) = manifest {
        registry.extend(m.entries().iter().map(|(id, _)| id.author.as_str()));
    }
    registry.sort_unstable();
    registry.dedup();
    TrackId::parse(text, &registry)
}

/// Imports every CSV, spans the session domain over all events and attaches
/// manifest metadata.
pub fn assemble(
    sources: &[CsvSource],
    manifest: Option<&Manifest>,
    authors: &[String],
    cfg: &CompressionConfig,
) -> Result<(Session, Vec<ManifestWarning>), AssembleError> {
    let mut tracks = Vec::with_capacity(sources.len());
    for src in sources {
        let id = parse_track_id(&src.id, authors, manifest)?;
        let track =
            import_csv(&src.bytes, src.kind, id, cfg).map_err(|source| AssembleError::Ingest {
                id: src.id.clone(),
                source,
            })?;
        tracks.push(track);
    }
    let mut session = Session::from_tracks(tracks)?;
    let warnings = match manifest {
        Some(m) => apply_manifest(&mut session, m),
        None => Vec::new(),
    };
    Ok((session, warnings))
}
