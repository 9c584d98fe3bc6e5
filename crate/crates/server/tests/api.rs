use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use trackx_core::algebra::threshold_intervals;
use trackx_core::store::{bsx_read, bsx_write};
use trackx_core::{
    AttrValue, Event, Interval, IntervalSet, Session, Tick, Track, TrackId, TrackKind, VideoBinding,
};
use trackx_server::{router, AppState};

const S: i64 = 1_000_000;

fn iv(a: i64, b: i64) -> Interval {
    Interval::new(a, b).unwrap()
}

fn tid(c: &str, a: &str, v: &str) -> TrackId {
    TrackId::new(c, a, v).unwrap()
}

/// Walking predictions against one rater, a second model version and a
/// turning classifier with angle attributes; video starts at 10 s.
fn scenario() -> Session {
    let mut s = Session::new(iv(0, 100 * S));
    let scored = |a: i64, b: i64, p: f64| Event::scored(iv(a * S, b * S), p);
    s.add_track(
        Track::with_defaults(
            tid("Walk", "Ann", "1.0"),
            TrackKind::Classifier,
            vec![
                scored(10, 20, 0.9),
                scored(30, 40, 0.6),
                scored(60, 62, 0.3),
            ],
        )
        .unwrap(),
    )
    .unwrap();
    s.add_track(
        Track::with_defaults(
            tid("Walk", "Rater", "1.0"),
            TrackKind::Label,
            vec![
                Event::labeled(iv(15 * S, 25 * S), "Walk"),
                Event::labeled(iv(61 * S, 70 * S), "Walk"),
            ],
        )
        .unwrap(),
    )
    .unwrap();
    s.add_track(
        Track::with_defaults(
            tid("Turn", "Erhan", "1.2"),
            TrackKind::Classifier,
            vec![
                scored(0, 1, 0.8).with_attr("angle", AttrValue::Number(90.0)),
                scored(2, 5, 0.8).with_attr("angle", AttrValue::Number(75.0)),
            ],
        )
        .unwrap(),
    )
    .unwrap();
    s.video = Some(VideoBinding {
        uri: "file:///v.mp4".into(),
        offset: Tick(10 * S),
        duration: None,
    });
    s
}

fn app_with(session: Session) -> (Router, Arc<AppState>, String) {
    let state = AppState::new();
    let id = state.insert(session);
    (router(state.clone()), state, id)
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp
        .into_body()
        .collect()
        .await
        .unwrap()
        .to_bytes()
        .to_vec();
    (status, bytes)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let (status, bytes) = send(app, req.body(body).unwrap()).await;
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    call(app, "GET", uri, None).await
}

fn assert_error(status: StatusCode, body: &Value, want_status: StatusCode, code: &str) {
    assert_eq!(status, want_status, "{body}");
    assert_eq!(body["code"], code, "{body}");
    assert!(body["message"].as_str().is_some_and(|m| !m.is_empty()));
}

const BOUNDARY: &str = "x-test-boundary";

fn multipart(parts: &[(&str, Option<&str>, &[u8])]) -> Request<Body> {
    let mut body = Vec::new();
    for (name, file, bytes) in parts {
        body.extend_from_slice(format!("--{BOUNDARY}\r\n").as_bytes());
        let disposition = match file {
            Some(f) => {
                format!("Content-Disposition: form-data; name=\"{name}\"; filename=\"{f}\"\r\n")
            }
            None => format!("Content-Disposition: form-data; name=\"{name}\"\r\n"),
        };
        body.extend_from_slice(disposition.as_bytes());
        body.extend_from_slice(b"\r\n");
        body.extend_from_slice(bytes);
        body.extend_from_slice(b"\r\n");
    }
    body.extend_from_slice(format!("--{BOUNDARY}--\r\n").as_bytes());
    Request::builder()
        .method("POST")
        .uri("/sessions")
        .header(
            "content-type",
            format!("multipart/form-data; boundary={BOUNDARY}"),
        )
        .body(Body::from(body))
        .unwrap()
}

#[tokio::test]
async fn upload_csvs_with_manifest() {
    let app = router(AppState::new());
    let manifest = br#"{"models":[
        {"class_label":"Walk","author":"Ann","version":"1.0","commit_hash":"9f3c",
         "committed_at":"2024-05-01T08:00:00Z","sensors":["wrist"],"window_seconds":2.0},
        {"class_label":"Walk","author":"Ann","version":"0.9","commit_hash":"77aa",
         "committed_at":"2024-04-01T08:00:00Z"}]}"#;
    let req = multipart(&[
        (
            "classifier",
            Some("WalkAnn1.0.csv"),
            b"start,end,score\n10,11,0.9\n11,12,0.92\n20,21,0.4\n",
        ),
        (
            "label",
            Some("WalkRater1.0.csv"),
            b"start,end,label\n10.5,12,Walk\n",
        ),
        ("authors", None, b"Rater"),
        ("manifest", None, manifest),
        (
            "video",
            None,
            br#"{"uri":"file:///v.mp4","offset":10000000}"#,
        ),
    ]);
    let (status, bytes) = send(&app, req).await;
    let body: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(status, StatusCode::CREATED, "{body}");
    assert_eq!(body["order"], json!(["WalkAnn1.0", "WalkRater1.0"]));
    assert_eq!(body["domain"], json!([10 * S, 21 * S]));
    assert_eq!(
        body["warnings"],
        json!([{"kind": "unknown_track", "track": "WalkAnn0.9"}])
    );

    let id = body["id"].as_str().unwrap();
    let (status, tracks) = get(&app, &format!("/sessions/{id}/tracks")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(tracks[0]["events"], 2, "touching high scores merge");
    assert_eq!(tracks[0]["model"]["commit_hash"], "9f3c");
    assert_eq!(tracks[0]["threshold"], 0.5);
    assert_eq!(tracks[1]["kind"], "label");
    assert_eq!(tracks[1]["color"], "#2ca02c");

    let (status, summary) = get(&app, &format!("/sessions/{id}")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(summary["video"]["offset"], 10 * S);
    assert_eq!(summary["authors"], json!(["Ann", "Rater"]));
}

#[tokio::test]
async fn upload_and_download_bsx() {
    let app = router(AppState::new());
    let original = scenario();
    let (status, bytes) = send(
        &app,
        multipart(&[("bsx", Some("s.bsx"), &bsx_write(&original))]),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED);
    let body: Value = serde_json::from_slice(&bytes).unwrap();
    let id = body["id"].as_str().unwrap();

    let (_, listed) = get(&app, "/sessions").await;
    assert_eq!(listed["sessions"], json!([id]));

    let req = Request::get(format!("/sessions/{id}/bsx"))
        .body(Body::empty())
        .unwrap();
    let (status, bytes) = send(&app, req).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(bsx_read(&bytes).unwrap(), original);
}

#[tokio::test]
async fn upload_failures() {
    let app = router(AppState::new());
    let (status, bytes) = send(&app, multipart(&[("bsx", Some("s.bsx"), b"not a session")])).await;
    assert_error(
        status,
        &serde_json::from_slice(&bytes).unwrap(),
        StatusCode::BAD_REQUEST,
        "bad_magic",
    );

    let bsx = bsx_write(&scenario());
    let req = multipart(&[
        ("bsx", Some("s.bsx"), &bsx),
        (
            "label",
            Some("Walk:Bob:1.0.csv"),
            b"start,end,label\n1,2,Walk\n",
        ),
    ]);
    let (status, bytes) = send(&app, req).await;
    assert_error(
        status,
        &serde_json::from_slice(&bytes).unwrap(),
        StatusCode::BAD_REQUEST,
        "mixed_upload",
    );

    let (status, bytes) = send(&app, multipart(&[])).await;
    assert_error(
        status,
        &serde_json::from_slice(&bytes).unwrap(),
        StatusCode::BAD_REQUEST,
        "empty_upload",
    );

    let req = multipart(&[(
        "classifier",
        Some("Walk:Bob:1.0.csv"),
        b"start,end,score\n1,2,1.5\n",
    )]);
    let (status, bytes) = send(&app, req).await;
    assert_error(
        status,
        &serde_json::from_slice(&bytes).unwrap(),
        StatusCode::BAD_REQUEST,
        "bad_row",
    );

    let req = multipart(&[(
        "label",
        Some("WalkBob1.0.csv"),
        b"start,end,label\n1,2,Walk\n",
    )]);
    let (status, bytes) = send(&app, req).await;
    assert_error(
        status,
        &serde_json::from_slice(&bytes).unwrap(),
        StatusCode::BAD_REQUEST,
        "bad_track_id",
    );

    let (_, listed) = get(&app, "/sessions").await;
    assert_eq!(listed["sessions"], json!([]));
}

#[tokio::test]
async fn unknown_session_and_track() {
    let (app, _, id) = app_with(scenario());
    let (status, body) = get(&app, "/sessions/nope").await;
    assert_error(status, &body, StatusCode::NOT_FOUND, "session_not_found");
    let (status, body) = get(&app, &format!("/sessions/{id}/tracks/NopeAnn1.0/render")).await;
    assert_error(status, &body, StatusCode::NOT_FOUND, "track_not_found");
}

#[tokio::test]
async fn render_buffers() {
    let (app, _, id) = app_with(scenario());
    let uri = format!(
        "/sessions/{id}/tracks/WalkAnn1.0/render?from=0&to={}&bins=10",
        50 * S
    );
    let (status, buf) = get(&app, &uri).await;
    assert_eq!(status, StatusCode::OK);
    let bins = buf["bins"].as_array().unwrap();
    assert_eq!(bins.len(), 10);
    assert_eq!(bins[2]["coverage"], 1.0);
    assert_eq!(bins[2]["max_score"], 0.9);
    assert_eq!(bins[1]["coverage"], 0.0);
    let covered: i64 = bins.iter().map(|b| b["covered"].as_i64().unwrap()).sum();
    assert_eq!(covered, 20 * S);

    let (_, whole) = get(&app, &format!("/sessions/{id}/tracks/WalkAnn1.0/render")).await;
    assert_eq!(whole["bins"].as_array().unwrap().len(), 1000);
    assert_eq!(whole["window"], json!([0, 100 * S]));

    let (status, body) = get(
        &app,
        &format!("/sessions/{id}/tracks/WalkAnn1.0/render?bins=0"),
    )
    .await;
    assert_error(status, &body, StatusCode::BAD_REQUEST, "bad_bins");
    let (status, body) = get(
        &app,
        &format!("/sessions/{id}/tracks/WalkAnn1.0/render?from=5&to=5"),
    )
    .await;
    assert_error(status, &body, StatusCode::BAD_REQUEST, "bad_window");
}

#[tokio::test]
async fn events_window() {
    let (app, _, id) = app_with(scenario());
    let uri = format!(
        "/sessions/{id}/tracks/WalkAnn1.0/events?from={}&to={}",
        35 * S,
        61 * S
    );
    let (status, body) = get(&app, &uri).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        body["events"],
        json!([{"start": 30 * S, "end": 40 * S, "score": 0.6},
               {"start": 60 * S, "end": 62 * S, "score": 0.3}])
    );
    let (_, body) = get(&app, &format!("/sessions/{id}/tracks/TurnErhan1.2/events")).await;
    assert_eq!(body["events"][1]["attrs"], json!({"angle": 75.0}));
}

/// Client-side thresholding of the fetched events must agree with the
/// server's thresholded view after the threshold is persisted.
#[tokio::test]
async fn threshold_round_trip_matches_client_recompute() {
    let (app, state, id) = app_with(scenario());
    for theta in [0.7, 0.5, 0.3, 0.95] {
        let (status, out) = call(
            &app,
            "POST",
            &format!("/sessions/{id}/tracks/WalkAnn1.0/threshold"),
            Some(json!({"value": theta})),
        )
        .await;
        assert_eq!(status, StatusCode::OK, "{out}");
        assert_eq!(out["effect"]["type"], "meta_updated");

        let (_, ev) = get(&app, &format!("/sessions/{id}/tracks/WalkAnn1.0/events")).await;
        assert_eq!(ev["threshold"], theta);
        let client: IntervalSet = ev["events"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|e| e["score"].as_f64().unwrap() >= theta)
            .map(|e| iv(e["start"].as_i64().unwrap(), e["end"].as_i64().unwrap()))
            .collect();
        let shared = state.get(&id).unwrap();
        let s = shared.read();
        let server = threshold_intervals(s.find("WalkAnn1.0").unwrap(), theta).unwrap();
        assert_eq!(client, server);
        assert_eq!(s.find("WalkAnn1.0").unwrap().interval_set(), server);
    }

    let uri = format!("/sessions/{id}/tracks/WalkAnn1.0/threshold");
    let (status, body) = call(&app, "POST", &uri, Some(json!({"value": 1.5}))).await;
    assert_error(
        status,
        &body,
        StatusCode::UNPROCESSABLE_ENTITY,
        "invalid_threshold",
    );
    let uri = format!("/sessions/{id}/tracks/WalkRater1.0/threshold");
    let (status, body) = call(&app, "POST", &uri, Some(json!({"value": 0.5}))).await;
    assert_error(
        status,
        &body,
        StatusCode::UNPROCESSABLE_ENTITY,
        "type_mismatch",
    );
}

#[tokio::test]
async fn commands_return_effects() {
    let (app, _, id) = app_with(scenario());
    let uri = format!("/sessions/{id}/command");
    let (status, out) = call(
        &app,
        "POST",
        &uri,
        Some(json!({"text": "errors 1 2", "user": "Erhan"})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{out}");
    assert_eq!(out["op"], "errors");
    assert_eq!(out["operands"], json!(["WalkAnn1.0", "WalkRater1.0"]));
    assert_eq!(out["effect"]["type"], "new_track");
    let new_id = out["effect"]["id"].as_str().unwrap().to_owned();
    assert_eq!(new_id, "errors(WalkAnn1.0,WalkRater1.0)Erhan1.0");

    let (_, tracks) = get(&app, &format!("/sessions/{id}/tracks")).await;
    assert!(tracks
        .as_array()
        .unwrap()
        .iter()
        .any(|t| t["id"] == new_id.as_str()));

    let (status, out) = call(
        &app,
        "POST",
        &uri,
        Some(json!({"text": "jaccard WalkAnn1.0 WalkRater1.0"})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(out["effect"]["result"]["metric"], "jaccard");

    let (status, out) = call(&app, "POST", &uri, Some(json!({"text": "hide %walk"}))).await;
    assert_eq!(status, StatusCode::OK);
    let (_, summary) = get(&app, &format!("/sessions/{id}")).await;
    assert_eq!(summary["visible"], json!(["TurnErhan1.2"]), "{out}");

    for (text, want, code) in [
        ("frobnicate 1", StatusCode::BAD_REQUEST, "unknown_operator"),
        ("", StatusCode::BAD_REQUEST, "empty_command"),
        ("union 1", StatusCode::BAD_REQUEST, "arity_error"),
        (
            "filter TurnErhan1.2 angle>>3",
            StatusCode::BAD_REQUEST,
            "filter_syntax_error",
        ),
        ("negate %zzz", StatusCode::NOT_FOUND, "no_match"),
        (
            "threshold WalkRater1.0 0.3",
            StatusCode::UNPROCESSABLE_ENTITY,
            "type_mismatch",
        ),
        ("order", StatusCode::UNPROCESSABLE_ENTITY, "no_cursor"),
    ] {
        let (status, body) = call(&app, "POST", &uri, Some(json!({ "text": text }))).await;
        assert_error(status, &body, want, code);
    }
}

#[tokio::test]
async fn metrics_endpoints() {
    let (app, _, id) = app_with(scenario());
    let (status, roc) = get(
        &app,
        &format!("/sessions/{id}/metrics/roc?c=WalkAnn1.0&g=WalkRater1.0"),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{roc}");
    assert_eq!(roc["c"], "WalkAnn1.0");
    let points = roc["points"].as_array().unwrap();
    assert_eq!(points.first().unwrap()["fpr"], 0.0);
    assert_eq!(points.last().unwrap()["tpr"], 1.0);
    assert_eq!(points.first().unwrap()["threshold"], "+inf");
    let auc = roc["auc"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&auc));

    let (status, rep) = get(
        &app,
        &format!("/sessions/{id}/metrics/report?p=walka&g=WalkRater1.0"),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{rep}");
    // WalkAnn1.0 at 0.5 covers [10,20) and [30,40); truth [15,25) and [61,70)
    assert_eq!(
        rep["confusion"],
        json!({"tp": 5 * S, "fp": 15 * S, "fn": 14 * S, "tn": 66 * S})
    );
    assert_eq!(rep["precision"], 0.25);
    assert_eq!(rep["containers"].as_array().unwrap().len(), 4);

    let (status, body) = get(
        &app,
        &format!("/sessions/{id}/metrics/roc?c=WalkRater1.0&g=WalkRater1.0"),
    )
    .await;
    assert_error(
        status,
        &body,
        StatusCode::UNPROCESSABLE_ENTITY,
        "type_mismatch",
    );
    let (status, body) = get(
        &app,
        &format!("/sessions/{id}/metrics/roc?c=%25&g=WalkRater1.0"),
    )
    .await;
    assert_error(
        status,
        &body,
        StatusCode::UNPROCESSABLE_ENTITY,
        "ambiguous_ref",
    );
}

#[tokio::test]
async fn report_with_empty_prediction_is_undefined() {
    let mut s = scenario();
    s.add_track(
        Track::with_defaults(tid("Walk", "Bob", "1.0"), TrackKind::Classifier, vec![]).unwrap(),
    )
    .unwrap();
    let (app, _, id) = app_with(s);
    let (status, rep) = get(
        &app,
        &format!("/sessions/{id}/metrics/report?p=WalkBob1.0&g=WalkRater1.0"),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(rep["precision"], "undefined");
    assert_eq!(rep["recall"], 0.0);
}

#[tokio::test]
async fn degenerate_truth_is_reported() {
    let mut s = scenario();
    s.add_track(
        Track::with_defaults(tid("Sit", "Rater", "1.0"), TrackKind::Label, vec![]).unwrap(),
    )
    .unwrap();
    let (app, _, id) = app_with(s);
    let (status, body) = get(
        &app,
        &format!("/sessions/{id}/metrics/roc?c=WalkAnn1.0&g=SitRater1.0"),
    )
    .await;
    assert_error(
        status,
        &body,
        StatusCode::UNPROCESSABLE_ENTITY,
        "degenerate_truth",
    );
}

#[tokio::test]
async fn playlists() {
    let (app, _, id) = app_with(scenario());
    let (status, pl) = get(&app, &format!("/sessions/{id}/playlist?t=WalkAnn1.0")).await;
    assert_eq!(status, StatusCode::OK, "{pl}");
    let segs = pl["segments"].as_array().unwrap();
    assert_eq!(segs.len(), 2);
    assert_eq!(segs[0]["start_seconds"], 0.0);
    assert_eq!(segs[0]["end_seconds"], 10.0);
    assert_eq!(segs[1]["start_seconds"], 20.0);
    // TurnErhan1.2 lies entirely before the video starts
    let (_, pl) = get(&app, &format!("/sessions/{id}/playlist?t=TurnErhan1.2")).await;
    assert_eq!(pl["segments"], json!([]));
    assert_eq!(pl["dropped"], 2);

    let mut s = scenario();
    s.video = None;
    let (app, _, id) = app_with(s);
    let (status, body) = get(&app, &format!("/sessions/{id}/playlist?t=WalkAnn1.0")).await;
    assert_error(
        status,
        &body,
        StatusCode::UNPROCESSABLE_ENTITY,
        "no_video_bound",
    );
}

#[tokio::test]
async fn cursor_and_ordering() {
    let (app, _, id) = app_with(scenario());
    let uri = format!("/sessions/{id}/cursor");
    let (status, body) = call(&app, "PUT", &uri, Some(json!({"t": 200 * S}))).await;
    assert_error(status, &body, StatusCode::BAD_REQUEST, "out_of_domain");
    let (status, summary) = call(&app, "PUT", &uri, Some(json!({"t": 62 * S}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(summary["cursor"], 62 * S);

    let (status, out) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/command"),
        Some(json!({"text": "order"})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{out}");
    assert_eq!(out["effect"]["order"][0], "WalkRater1.0");

    let order_uri = format!("/sessions/{id}/order");
    let (status, summary) = call(
        &app,
        "POST",
        &order_uri,
        Some(json!({"order": ["TurnErhan1.2", "WalkRater1.0"]})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        summary["order"],
        json!(["TurnErhan1.2", "WalkAnn1.0", "WalkRater1.0"])
    );
    let (status, body) = call(
        &app,
        "POST",
        &order_uri,
        Some(json!({"order": ["WalkAnn1.0", "WalkAnn1.0"]})),
    )
    .await;
    assert_error(status, &body, StatusCode::BAD_REQUEST, "bad_order");

    let (status, summary) = call(&app, "PUT", &uri, Some(json!({"t": null}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(summary["cursor"], Value::Null);
}

#[tokio::test]
async fn autocomplete_suggestions() {
    let (app, _, id) = app_with(scenario());
    let (status, body) = get(&app, &format!("/sessions/{id}/autocomplete?q=thr")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body[0]["text"], "threshold");
    let (_, body) = get(
        &app,
        &format!("/sessions/{id}/autocomplete?q=threshold%20tu"),
    )
    .await;
    assert_eq!(body[0]["text"], "threshold TurnErhan1.2");
}

/// Readers running alongside writers always see a consistent session.
#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_commands_and_reads() {
    let (app, _, id) = app_with(scenario());
    let mut handles = Vec::new();
    for k in 0..16 {
        let app = app.clone();
        let id = id.clone();
        handles.push(tokio::spawn(async move {
            if k % 2 == 0 {
                let (status, _) = call(
                    &app,
                    "POST",
                    &format!("/sessions/{id}/command"),
                    Some(json!({"text": "union WalkAnn1.0 WalkRater1.0"})),
                )
                .await;
                assert_eq!(status, StatusCode::OK);
            } else {
                let (_, summary) = get(&app, &format!("/sessions/{id}")).await;
                assert_eq!(
                    summary["tracks"],
                    summary["order"].as_array().unwrap().len()
                );
            }
        }));
    }
    for h in handles {
        h.await.unwrap();
    }
    let (_, summary) = get(&app, &format!("/sessions/{id}")).await;
    assert_eq!(summary["tracks"], 3 + 8);
    let ids: std::collections::HashSet<_> = summary["order"].as_array().unwrap().iter().collect();
    assert_eq!(ids.len(), 11);
}
