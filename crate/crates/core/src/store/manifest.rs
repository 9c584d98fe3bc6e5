//! Model metadata manifests: one entry per (class_label, author, version)
//! with the commit and training parameters behind that model version.

use serde::{Deserialize, Serialize};

use super::StoreError;
use crate::model::{ModelMeta, Session, TrackId};
use crate::version::Version;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub class_label: String,
    pub author: String,
    pub version: String,
    #[serde(flatten)]
    pub meta: ModelMeta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    entries: Vec<(TrackId, ModelMeta)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "track", rename_all = "snake_case")]
pub enum ManifestWarning {
    UnknownTrack(String),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ManifestDoc {
    List(Vec<ManifestEntry>),
    Wrapped { models: Vec<ManifestEntry> },
}

/// Parses a manifest: a JSON array of entries, or `{"models": [...]}`.
pub fn load_manifest(bytes: &[u8]) -> Result<Manifest, StoreError> {
    // Probe versions first so a bad version string is reported as such rather
    // than as a generic decode failure.
    let raw: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| StoreError::BadManifest(e.to_string()))?;
    let doc: ManifestDoc =
        serde_json::from_value(raw).map_err(|e| StoreError::BadManifest(e.to_string()))?;
    let list = match doc {
        ManifestDoc::List(l) | ManifestDoc::Wrapped { models: l } => l,
    };
    let mut entries: Vec<(TrackId, ModelMeta)> = Vec::with_capacity(list.len());
    for e in list {
        let version = Version::parse(&e.version)?;
        if e.class_label.is_empty() {
            return Err(StoreError::BadManifest("empty class_label".into()));
        }
        if !e.meta.commit_hash_is_valid() {
            return Err(StoreError::BadManifest(format!(
                "commit hash {:?} is not hexadecimal",
                e.meta.commit_hash
            )));
        }
        let id = TrackId {
            class_label: e.class_label,
            author: e.author,
            version,
        };
        if entries.iter().any(|(seen, _)| *seen == id) {
            return Err(StoreError::BadManifest(format!("duplicate entry for {id}")));
        }
        entries.push((id, e.meta));
    }
    Ok(Manifest { entries })
}

impl Manifest {
    pub fn entries(&self) -> &[(TrackId, ModelMeta)] {
        &self.entries
    }

    pub fn get(&self, id: &TrackId) -> Option<&ModelMeta> {
        self.entries.iter().find(|(i, _)| i == id).map(|(_, m)| m)
    }

    /// Versions known for one model, oldest first.
    pub fn versions(&self, class_label: &str, author: &str) -> Vec<&TrackId> {
        let mut out: Vec<&TrackId> = self
            .entries
            .iter()
            .map(|(id, _)| id)
            .filter(|id| id.class_label == class_label && id.author == author)
            .collect();
        out.sort_by(|a, b| a.version.cmp(&b.version));
        out
    }
}

/// Attaches metadata to matching tracks. Entries with no track in the session
/// are reported and skipped.
pub fn apply_manifest(session: &mut Session, manifest: &Manifest) -> Vec<ManifestWarning> {
    let mut warnings = Vec::new();
    for (id, meta) in &manifest.entries {
        match session.get_mut(id) {
            Some(track) => track.meta.model = Some(meta.clone()),
            None => warnings.push(ManifestWarning::UnknownTrack(id.to_string())),
        }
    }
    warnings
}
