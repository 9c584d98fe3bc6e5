//! `POST /sessions`: a multipart upload of either one BSX file or a set of
//! CSV files, optionally with a model manifest.
//!
//! Parts:
//! - `bsx`: a session file
//! - `classifier`, `label`, `protocol`: one CSV each; the file name without
//!   `.csv` is the track id
//! - `manifest`: manifest JSON
//! - `authors`: comma-separated author names used to split canonical ids
//! - `video`: JSON `{uri, offset, duration?}`
//! - `compression`: JSON compression settings for classifier CSVs

use std::sync::Arc;

use axum::extract::{Multipart, State};
use axum::http::StatusCode;
use axum::Json;
use serde::Serialize;
use trackx_core::ingest::CompressionConfig;
use trackx_core::store::{
    apply_manifest, assemble, bsx_read, load_manifest, CsvSource, ManifestWarning,
};
use trackx_core::{TrackKind, VideoBinding};

use crate::api::{summary, Summary};
use crate::{ApiError, AppState};

#[derive(Debug, Serialize)]
pub struct Created {
    #[serde(flatten)]
    pub summary: Summary,
    pub warnings: Vec<ManifestWarning>,
}

#[derive(Default)]
struct Parts {
    bsx: Option<Vec<u8>>,
    csvs: Vec<CsvSource>,
    manifest: Option<Vec<u8>>,
    authors: Vec<String>,
    video: Option<VideoBinding>,
    compression: Option<CompressionConfig>,
}

fn bad(code: &str, message: impl Into<String>) -> ApiError {
    ApiError::bad_request(code, message)
}

fn json_part<T: serde::de::DeserializeOwned>(name: &str, bytes: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| bad("bad_part", format!("{name}: {e}")))
}

async fn read_parts(mut multipart: Multipart) -> Result<Parts, ApiError> {
    let mut parts = Parts::default();
    while let Some(field) = multipart
        .next_field()
        .await
        .map_err(|e| bad("bad_multipart", e.to_string()))?
    {
        let name = field.name().unwrap_or_default().to_owned();
        let file_name = field.file_name().map(str::to_owned);
        let bytes = field
            .bytes()
            .await
            .map_err(|e| bad("bad_multipart", e.to_string()))?
            .to_vec();
        match name.as_str() {
            "bsx" => parts.bsx = Some(bytes),
            "manifest" => parts.manifest = Some(bytes),
            "authors" => {
                let text = String::from_utf8_lossy(&bytes);
                parts.authors.extend(
                    text.split(',')
                        .map(str::trim)
                        .filter(|a| !a.is_empty())
                        .map(str::to_owned),
                );
            }
            "video" => parts.video = Some(json_part(&name, &bytes)?),
            "compression" => parts.compression = Some(json_part(&name, &bytes)?),
            "classifier" | "label" | "protocol" => {
                let kind: TrackKind = name.parse().expect("matched above");
                let file_name = file_name
                    .ok_or_else(|| bad("bad_part", format!("{name} part needs a file name")))?;
                let id = file_name.rsplit(['/', '\\']).next().unwrap_or(&file_name);
                let id = id.strip_suffix(".csv").unwrap_or(id).to_owned();
                parts.csvs.push(CsvSource { id, kind, bytes });
            }
            other => return Err(bad("bad_part", format!("unexpected part {other:?}"))),
        }
    }
    Ok(parts)
}

pub async fn create_session(
    State(state): State<Arc<AppState>>,
    multipart: Multipart,
) -> Result<(StatusCode, Json<Created>), ApiError> {
    let parts = read_parts(multipart).await?;
    let manifest = parts.manifest.as_deref().map(load_manifest).transpose()?;
    let (mut session, warnings) = match (parts.bsx, parts.csvs.is_empty()) {
        (Some(_), false) => {
            return Err(bad(
                "mixed_upload",
                "send either a BSX file or CSV files, not both",
            ))
        }
        (None, true) => return Err(bad("empty_upload", "no BSX or CSV parts")),
        (Some(bytes), true) => {
            let mut session = bsx_read(&bytes)?;
            let warnings = match &manifest {
                Some(m) => apply_manifest(&mut session, m),
                None => Vec::new(),
            };
            (session, warnings)
        }
        (None, false) => assemble(
            &parts.csvs,
            manifest.as_ref(),
            &parts.authors,
            &parts.compression.unwrap_or_default(),
        )?,
    };
    if parts.video.is_some() {
        session.video = parts.video;
    }
    let id = state.insert(session);
    let shared = state.get(&id).expect("just inserted");
    let summary = summary(&id, &shared.read());
    Ok((StatusCode::CREATED, Json(Created { summary, warnings })))
}
