use std::collections::HashSet;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::header;
use axum::response::IntoResponse;
use axum::Json;
use serde::{Deserialize, Serialize};
use trackx_core::command::{
    self, execute, resolve, run, track_info, Arg, Command, CommandError, ExecContext, Op, Outcome,
    Suggestion, TrackInfo, TrackType,
};
use trackx_core::metrics::{self, Report, RocCurve};
use trackx_core::model::RenderMode;
use trackx_core::store::{self, bin_events, bsx_write, Playlist, RenderBuffer};
use trackx_core::{AttrValue, Event, Interval, Rgb, Session, Tick, Track, VideoBinding};

use crate::{ApiError, AppState, SharedSession};

type AppStateRef = State<Arc<AppState>>;

const DEFAULT_BINS: usize = 1000;
const MAX_BINS: usize = 100_000;

fn session(state: &AppState, id: &str) -> Result<SharedSession, ApiError> {
    state.get(id).ok_or_else(|| ApiError::session_not_found(id))
}

fn track<'a>(s: &'a Session, tid: &str) -> Result<&'a Track, ApiError> {
    s.find(tid).ok_or_else(|| ApiError::track_not_found(tid))
}

fn referenced<'a>(
    s: &'a Session,
    raw: &str,
    op: Op,
    want: TrackType,
) -> Result<&'a Track, ApiError> {
    let r = resolve(s, raw, op, want)?;
    Ok(s.get(r.id()).expect("resolved ids exist"))
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub id: String,
    pub domain: Interval,
    pub cursor: Option<Tick>,
    pub video: Option<VideoBinding>,
    pub tracks: usize,
    /// Every track in display order.
    pub order: Vec<String>,
    pub visible: Vec<String>,
    pub promoted: Vec<String>,
    pub authors: Vec<String>,
}

pub(crate) fn summary(id: &str, s: &Session) -> Summary {
    let ids = |pred: &dyn Fn(&Track) -> bool| {
        s.tracks()
            .iter()
            .filter(|t| pred(t))
            .map(|t| t.id().to_string())
            .collect()
    };
    Summary {
        id: id.to_owned(),
        domain: s.domain,
        cursor: s.cursor,
        video: s.video.clone(),
        tracks: s.tracks().len(),
        order: ids(&|_| true),
        visible: ids(&|t| t.meta.visible),
        promoted: s.promoted.iter().map(ToString::to_string).collect(),
        authors: s.authors().into_iter().map(str::to_owned).collect(),
    }
}

pub async fn list_sessions(State(state): AppStateRef) -> Json<serde_json::Value> {
    Json(serde_json::json!({ "sessions": state.ids() }))
}

pub async fn session_summary(
    State(state): AppStateRef,
    Path(id): Path<String>,
) -> Result<Json<Summary>, ApiError> {
    let shared = session(&state, &id)?;
    let s = shared.read();
    Ok(Json(summary(&id, &s)))
}

pub async fn download_bsx(
    State(state): AppStateRef,
    Path(id): Path<String>,
) -> Result<impl IntoResponse, ApiError> {
    let shared = session(&state, &id)?;
    let bytes = bsx_write(&shared.read());
    Ok(([(header::CONTENT_TYPE, "application/gzip")], bytes))
}

#[derive(Debug, Serialize)]
pub struct TrackView {
    #[serde(flatten)]
    pub info: TrackInfo,
    pub color: Rgb,
    pub render_mode: RenderMode,
}

pub async fn list_tracks(
    State(state): AppStateRef,
    Path(id): Path<String>,
) -> Result<Json<Vec<TrackView>>, ApiError> {
    let shared = session(&state, &id)?;
    let s = shared.read();
    let views = s
        .tracks()
        .iter()
        .map(|t| TrackView {
            info: track_info(&s, t),
            color: t.meta.color,
            render_mode: t.meta.render_mode,
        })
        .collect();
    Ok(Json(views))
}

#[derive(Debug, Deserialize)]
pub struct WindowQuery {
    pub from: Option<i64>,
    pub to: Option<i64>,
    pub bins: Option<usize>,
}

impl WindowQuery {
    fn window(&self, domain: &Interval) -> Result<Interval, ApiError> {
        let from = self.from.unwrap_or(domain.start().0);
        let to = self.to.unwrap_or(domain.end().0);
        Interval::new(from, to).map_err(|e| ApiError::bad_request("bad_window", e.to_string()))
    }
}

#[derive(Debug, Serialize)]
struct EventView<'a> {
    start: Tick,
    end: Tick,
    #[serde(skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<&'a str>,
    #[serde(skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    attrs: &'a std::collections::BTreeMap<String, AttrValue>,
}

impl<'a> From<&'a Event> for EventView<'a> {
    fn from(e: &'a Event) -> Self {
        Self {
            start: e.start(),
            end: e.end(),
            score: e.score(),
            label: e.label(),
            attrs: &e.payload.attrs,
        }
    }
}

/// Raw events intersecting the window, for client-side caching.
pub async fn track_events(
    State(state): AppStateRef,
    Path((id, tid)): Path<(String, String)>,
    Query(q): Query<WindowQuery>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let shared = session(&state, &id)?;
    let s = shared.read();
    let t = track(&s, &tid)?;
    let window = q.window(&s.domain)?;
    let events = t.events();
    let first = events.partition_point(|e| e.end() <= window.start());
    let views: Vec<EventView> = events[first..]
        .iter()
        .take_while(|e| e.start() < window.end())
        .map(EventView::from)
        .collect();
    Ok(Json(serde_json::json!({
        "id": t.id().to_string(),
        "kind": t.kind(),
        "threshold": t.threshold(),
        "events": views,
    })))
}

pub async fn render(
    State(state): AppStateRef,
    Path((id, tid)): Path<(String, String)>,
    Query(q): Query<WindowQuery>,
) -> Result<Json<RenderBuffer>, ApiError> {
    let bins = q.bins.unwrap_or(DEFAULT_BINS);
    if !(1..=MAX_BINS).contains(&bins) {
        return Err(ApiError::bad_request(
            "bad_bins",
            format!("bins must be between 1 and {MAX_BINS}"),
        ));
    }
    let shared = session(&state, &id)?;
    let s = shared.read();
    let t = track(&s, &tid)?;
    let window = q.window(&s.domain)?;
    Ok(Json(bin_events(t, window, bins, &s.domain)))
}

#[derive(Debug, Deserialize)]
pub struct ThresholdBody {
    pub value: f64,
}

pub async fn set_threshold(
    State(state): AppStateRef,
    Path((id, tid)): Path<(String, String)>,
    Json(body): Json<ThresholdBody>,
) -> Result<Json<Outcome>, ApiError> {
    let shared = session(&state, &id)?;
    let mut s = shared.write();
    track(&s, &tid)?;
    let cmd = Command {
        op: Op::Threshold,
        args: vec![Arg::Track(tid), Arg::Number(body.value)],
    };
    Ok(Json(execute(&mut s, &cmd, &ExecContext::default())?))
}

#[derive(Debug, Deserialize)]
pub struct CommandBody {
    pub text: String,
    pub user: Option<String>,
}

pub async fn command(
    State(state): AppStateRef,
    Path(id): Path<String>,
    Json(body): Json<CommandBody>,
) -> Result<Json<Outcome>, ApiError> {
    let shared = session(&state, &id)?;
    let mut ctx = ExecContext::default();
    if let Some(user) = body.user.filter(|u| !u.is_empty()) {
        ctx.user = user;
    }
    let mut s = shared.write();
    Ok(Json(run(&mut s, &body.text, &ctx)?))
}

#[derive(Debug, Deserialize)]
pub struct CompleteQuery {
    #[serde(default)]
    pub q: String,
}

pub async fn autocomplete(
    State(state): AppStateRef,
    Path(id): Path<String>,
    Query(q): Query<CompleteQuery>,
) -> Result<Json<Vec<Suggestion>>, ApiError> {
    let shared = session(&state, &id)?;
    let s = shared.read();
    Ok(Json(command::autocomplete(&s, &q.q)))
}

#[derive(Debug, Deserialize)]
pub struct CursorBody {
    pub t: Option<i64>,
}

pub async fn set_cursor(
    State(state): AppStateRef,
    Path(id): Path<String>,
    Json(body): Json<CursorBody>,
) -> Result<Json<Summary>, ApiError> {
    let shared = session(&state, &id)?;
    let mut s = shared.write();
    if let Some(t) = body.t {
        if !s.domain.contains_tick(Tick(t)) {
            return Err(ApiError::bad_request(
                "out_of_domain",
                format!("cursor {t} outside the session domain"),
            ));
        }
    }
    s.cursor = body.t.map(Tick);
    Ok(Json(summary(&id, &s)))
}

#[derive(Debug, Deserialize)]
pub struct OrderBody {
    pub order: Vec<String>,
}

/// Rearranges the listed tracks among the display slots they occupy; other
/// tracks keep their positions.
pub async fn set_order(
    State(state): AppStateRef,
    Path(id): Path<String>,
    Json(body): Json<OrderBody>,
) -> Result<Json<Summary>, ApiError> {
    let shared = session(&state, &id)?;
    let mut s = shared.write();
    let mut indices = Vec::with_capacity(body.order.len());
    let mut seen = HashSet::new();
    for tid in &body.order {
        let t = track(&s, tid)?;
        if !seen.insert(tid.as_str()) {
            return Err(ApiError::bad_request(
                "bad_order",
                format!("track {tid:?} listed twice"),
            ));
        }
        indices.push(s.index_of(t.id()).expect("found above"));
    }
    let mut slots = indices.clone();
    slots.sort_unstable();
    let mut perm: Vec<usize> = (0..s.tracks().len()).collect();
    for (slot, idx) in slots.into_iter().zip(indices) {
        perm[slot] = idx;
    }
    s.reorder(&perm);
    Ok(Json(summary(&id, &s)))
}

#[derive(Debug, Deserialize)]
pub struct RocQuery {
    pub c: String,
    pub g: String,
}

#[derive(Debug, Serialize)]
pub struct RocResponse {
    pub c: String,
    pub g: String,
    #[serde(flatten)]
    pub curve: RocCurve,
}

pub async fn roc(
    State(state): AppStateRef,
    Path(id): Path<String>,
    Query(q): Query<RocQuery>,
) -> Result<Json<RocResponse>, ApiError> {
    let shared = session(&state, &id)?;
    let s = shared.read();
    let c = referenced(&s, &q.c, Op::Roc, TrackType::Classifier)?;
    let g = referenced(&s, &q.g, Op::Roc, TrackType::LabelLike)?;
    let curve = metrics::roc(c, &g.interval_set(), &s.domain).map_err(CommandError::from)?;
    Ok(Json(RocResponse {
        c: c.id().to_string(),
        g: g.id().to_string(),
        curve,
    }))
}

#[derive(Debug, Deserialize)]
pub struct ReportQuery {
    pub p: String,
    pub g: String,
}

#[derive(Debug, Serialize)]
pub struct ReportResponse {
    pub p: String,
    pub g: String,
    #[serde(flatten)]
    pub report: Report,
}

pub async fn report(
    State(state): AppStateRef,
    Path(id): Path<String>,
    Query(q): Query<ReportQuery>,
) -> Result<Json<ReportResponse>, ApiError> {
    let shared = session(&state, &id)?;
    let s = shared.read();
    let p = referenced(&s, &q.p, Op::Report, TrackType::Any)?;
    let g = referenced(&s, &q.g, Op::Report, TrackType::LabelLike)?;
    Ok(Json(ReportResponse {
        p: p.id().to_string(),
        g: g.id().to_string(),
        report: metrics::report(&p.interval_set(), &g.interval_set(), &s.domain),
    }))
}

#[derive(Debug, Deserialize)]
pub struct PlaylistQuery {
    pub t: String,
}

pub async fn playlist(
    State(state): AppStateRef,
    Path(id): Path<String>,
    Query(q): Query<PlaylistQuery>,
) -> Result<Json<Playlist>, ApiError> {
    let shared = session(&state, &id)?;
    let s = shared.read();
    let t = referenced(&s, &q.t, Op::Play, TrackType::Any)?;
    Ok(Json(store::playlist(t, &s)?))
}
