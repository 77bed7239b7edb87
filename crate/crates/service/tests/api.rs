mod common;

use std::sync::Arc;

use axum::http::StatusCode;
use chasepi_service::journal::Journal;
use chasepi_service::{router, AppState};
use common::*;
use serde_json::{json as j, Value};

fn app_with(engine: bool, journal: Option<Journal>) -> (Arc<AppState>, axum::Router) {
    let st = Arc::new(AppState::new(engine.then(test_engine), None, journal));
    (st.clone(), router(st))
}

async fn create(app: &axum::Router, target: u32, venue: &str) -> String {
    let (s, b) = call(app, "POST", "/sessions", Some(j!({"target": target, "venue": venue}))).await;
    assert_eq!(s, StatusCode::CREATED, "{}", String::from_utf8_lossy(&b));
    json(&b)["session_id"].as_str().unwrap().to_string()
}

async fn replay_fixture(app: &axum::Router) -> (String, Vec<Vec<u8>>) {
    let m = load_fixture("pak_v_wi_2018.json");
    let (entries, _) = over_entries(&m);
    let venue = serde_json::to_value(venue_of(&m)).unwrap();
    let venue = venue.as_str().unwrap();
    let id = create(app, m.target, venue).await;
    let mut bodies = Vec::new();
    for e in &entries {
        let (s, b) = call(app, "POST", &format!("/sessions/{id}/overs"), Some(serde_json::to_value(e).unwrap())).await;
        assert_eq!(s, StatusCode::OK, "{}", String::from_utf8_lossy(&b));
        bodies.push(b.to_vec());
    }
    (id, bodies)
}

#[tokio::test]
async fn fixture_replay_matches_core_pi() {
    let (_, app) = app_with(true, None);
    let m = load_fixture("pak_v_wi_2018.json");
    let (_, states) = over_entries(&m);
    let expected = default_calc().sequence(&m.context().unwrap(), &states).unwrap();
    let (id, bodies) = replay_fixture(&app).await;
    assert_eq!(bodies.len(), expected.len());
    for (b, e) in bodies.iter().zip(&expected) {
        let v: Value = serde_json::from_slice(b).unwrap();
        assert_eq!(v["current_pi"].as_f64().unwrap(), e.value());
    }
    let last: Value = serde_json::from_slice(bodies.last().unwrap()).unwrap();
    assert_eq!(last["current_pi"].as_f64().unwrap(), 0.0);
    assert_eq!(last["terminal"], true);
    assert_eq!(last["result"], "won");
    assert_eq!(last["recommendation"]["status"], "target_achieved");
    assert_eq!(last["recommendation"]["message"], "target achieved");

    let (s, b) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    let view = json(&b);
    assert_eq!(view["trajectory"].as_array().unwrap().len(), expected.len());
    assert_eq!(view["won"], true);
    assert_eq!(view["venue_class"], "home");
    let fell: Vec<u64> = view["trajectory"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|p| p["wicket_fell"] == true)
        .map(|p| p["over"].as_u64().unwrap())
        .collect();
    assert_eq!(fell, vec![6, 13]);
}

#[tokio::test]
async fn replays_are_byte_identical() {
    let (_, a) = app_with(true, None);
    let (_, b) = app_with(true, None);
    let (_, first) = replay_fixture(&a).await;
    let (_, second) = replay_fixture(&b).await;
    assert_eq!(first, second);
}

#[tokio::test]
async fn predictions_start_once_the_history_fills_the_order() {
    let (_, app) = app_with(true, None);
    let id = create(&app, 160, "away").await;
    let mut statuses = Vec::new();
    for (over, runs) in [(1, 6), (2, 14), (3, 20), (4, 27)] {
        let (s, b) = call(&app, "POST", &format!("/sessions/{id}/overs"), Some(j!({"over": over, "runs": runs}))).await;
        assert_eq!(s, StatusCode::OK);
        statuses.push(json(&b)["recommendation"]["status"].as_str().unwrap().to_string());
    }
    assert_eq!(statuses, ["insufficient_history", "insufficient_history", "predicted", "predicted"]);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn racing_appends_have_one_winner() {
    for _ in 0..20 {
        let (_, app) = app_with(true, None);
        let id = create(&app, 150, "home").await;
        let uri = format!("/sessions/{id}/overs");
        let body = j!({"over": 1, "runs": 8});
        let (a, b) = tokio::join!(
            tokio::spawn({
                let (app, uri, body) = (app.clone(), uri.clone(), body.clone());
                async move { call(&app, "POST", &uri, Some(body)).await.0 }
            }),
            tokio::spawn({
                let (app, uri, body) = (app.clone(), uri.clone(), body.clone());
                async move { call(&app, "POST", &uri, Some(body)).await.0 }
            })
        );
        let mut got = [a.unwrap(), b.unwrap()];
        got.sort();
        assert_eq!(got, [StatusCode::OK, StatusCode::CONFLICT]);
        let (_, v) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
        assert_eq!(json(&v)["trajectory"].as_array().unwrap().len(), 1);
    }
}

#[tokio::test]
async fn error_codes() {
    let (_, app) = app_with(true, None);
    let id = create(&app, 150, "home").await;
    let overs = format!("/sessions/{id}/overs");

    let (s, b) = call(&app, "POST", &overs, Some(j!({"over": 2, "runs": 8}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(json(&b)["code"], "conflict");

    let (s, _) = call(&app, "POST", &overs, Some(j!({"over": 1, "runs": 8, "balls": 7}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = call(&app, "POST", &overs, Some(j!({"over": 1, "runs": 8, "balls": 4}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = call(&app, "POST", &overs, Some(j!({"over": 1, "runs": 8, "dismissed": [12]}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = call(&app, "POST", &overs, Some(j!({"over": "one"}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let (s, _) = call(&app, "POST", &overs, Some(j!({"over": 1, "runs": 10}))).await;
    assert_eq!(s, StatusCode::OK);
    let (s, _) = call(&app, "POST", &overs, Some(j!({"over": 2, "runs": 9}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let (s, b) = call(&app, "POST", "/sessions", Some(j!({"target": 150, "total_balls": 121, "venue": "home"}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(json(&b)["code"], "bad_request");
    let (s, _) = call(&app, "POST", "/sessions", Some(j!({"target": 150, "venue": "moon"}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let (s, b) = call(&app, "GET", "/sessions/nope", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(json(&b)["code"], "not_found");
    let (s, _) = call(&app, "POST", "/sessions/nope/overs", Some(j!({"over": 1, "runs": 1}))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = call(&app, "GET", "/no/such/route", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn no_further_overs_after_the_chase_ends() {
    let (_, app) = app_with(true, None);
    let id = create(&app, 20, "home").await;
    let overs = format!("/sessions/{id}/overs");
    let (s, b) = call(&app, "POST", &overs, Some(j!({"over": 1, "runs": 12}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(json(&b)["terminal"], false);
    let (s, b) = call(&app, "POST", &overs, Some(j!({"over": 2, "runs": 21, "balls": 3}))).await;
    assert_eq!(s, StatusCode::OK);
    let v = json(&b);
    assert_eq!((v["terminal"].clone(), v["result"].clone()), (j!(true), j!("won")));
    let (s, _) = call(&app, "POST", &overs, Some(j!({"over": 3, "runs": 25}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
}

#[tokio::test]
async fn all_out_ends_the_innings() {
    let (_, app) = app_with(true, None);
    let id = create(&app, 200, "away").await;
    let overs = format!("/sessions/{id}/overs");
    let (s, _) = call(&app, "POST", &overs, Some(j!({"over": 1, "runs": 4, "dismissed": [1, 2, 3, 4, 5]}))).await;
    assert_eq!(s, StatusCode::OK);
    let (s, b) = call(&app, "POST", &overs, Some(j!({"over": 2, "runs": 9, "dismissed": [6, 7, 8, 9, 10], "balls": 5}))).await;
    assert_eq!(s, StatusCode::OK, "{}", String::from_utf8_lossy(&b));
    let v = json(&b);
    assert_eq!(v["result"], "lost");
    assert_eq!(v["recommendation"]["status"], "innings_complete");
}

#[tokio::test]
async fn missing_models_are_reported() {
    let (_, app) = app_with(false, None);
    let (s, b) = call(&app, "POST", "/sessions", Some(j!({"target": 150, "venue": "home"}))).await;
    assert_eq!(s, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(json(&b)["code"], "model_missing");
    let (s, _) = call(&app, "GET", "/models", None).await;
    assert_eq!(s, StatusCode::SERVICE_UNAVAILABLE);
    let (s, _) = call(&app, "POST", "/models/reload", None).await;
    assert_eq!(s, StatusCode::SERVICE_UNAVAILABLE);
    let (s, b) = call(&app, "GET", "/healthz", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(json(&b)["models_loaded"], false);
}

#[tokio::test]
async fn fresh_session_starts_at_unit_pressure() {
    let (_, app) = app_with(true, None);
    let (s, b) = call(&app, "POST", "/sessions", Some(j!({"target": 150, "venue": "neutral"}))).await;
    assert_eq!(s, StatusCode::CREATED);
    let v = json(&b);
    assert_eq!(v["current_pi"], 1.0);
    assert_eq!(v["origin_pi"], 1.0);
    assert_eq!(v["trajectory"], j!([]));
    assert_eq!(v["venue_class"], "away");
    assert_eq!(v["total_balls"], 120);
    assert_eq!(v["session_id"].as_str().unwrap().len(), 32);
}

#[tokio::test]
async fn what_if_leaves_the_session_alone() {
    let (_, app) = app_with(true, None);
    let id = create(&app, 170, "home").await;
    for (over, runs) in [(1, 7), (2, 15), (3, 22)] {
        call(&app, "POST", &format!("/sessions/{id}/overs"), Some(j!({"over": over, "runs": runs}))).await;
    }
    let (_, before) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    let hypo = j!({"over": 4, "runs": 40, "dismissed": [1]});
    let (s, w) = call(&app, "POST", &format!("/sessions/{id}/what-if"), Some(hypo.clone())).await;
    assert_eq!(s, StatusCode::OK);
    let (_, after) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(before, after);
    let (_, real) = call(&app, "POST", &format!("/sessions/{id}/overs"), Some(hypo)).await;
    assert_eq!(w, real);
}

#[tokio::test]
async fn zones_models_and_health() {
    let (_, app) = app_with(true, None);
    let (s, b) = call(&app, "GET", "/zones", None).await;
    assert_eq!(s, StatusCode::OK);
    let z = json(&b);
    assert_eq!(z["rows"].as_array().unwrap().len(), 30);
    let band = z["target_bands"]
        .as_array()
        .unwrap()
        .iter()
        .find(|b| b["phase"] == "death_overs" && b["venue_class"] == "away")
        .unwrap()
        .clone();
    assert_eq!(band["band"], j!({"lo": 0.0, "hi": 2.5}));

    let (s, b) = call(&app, "GET", "/models", None).await;
    assert_eq!(s, StatusCode::OK);
    let m = json(&b);
    assert_eq!(m["order"], 3);
    assert_eq!(m["models"].as_array().unwrap().len(), 4);
    assert_eq!(m["fallback"].as_array().unwrap().len(), 3);

    create(&app, 150, "home").await;
    let (_, b) = call(&app, "GET", "/healthz", None).await;
    assert_eq!(json(&b), j!({"status": "ok", "models_loaded": true, "sessions": 1}));
}

#[tokio::test]
async fn reload_swaps_models_for_new_sessions_only() {
    let dir = tempfile::tempdir().unwrap();
    test_models(7).save_dir(dir.path()).unwrap();
    let cfg = chasepi_service::EngineConfig {
        model_dir: dir.path().to_path_buf(),
        ..Default::default()
    };
    let st = Arc::new(AppState::new(Some(test_engine()), Some(cfg), None));
    let app = router(st.clone());
    let id = create(&app, 150, "home").await;
    let old = st.engine().unwrap();

    test_models(99).save_dir(dir.path()).unwrap();
    let (s, _) = call(&app, "POST", "/models/reload", None).await;
    assert_eq!(s, StatusCode::OK);
    let new = st.engine().unwrap();
    assert!(!Arc::ptr_eq(&old, &new));
    assert_ne!(old.models.summaries(), new.models.summaries());

    let (s, _) = call(&app, "POST", &format!("/sessions/{id}/overs"), Some(j!({"over": 1, "runs": 8}))).await;
    assert_eq!(s, StatusCode::OK);

    std::fs::remove_file(dir.path().join("global.json")).unwrap();
    std::fs::write(dir.path().join("powerplay.json"), "not json").unwrap();
    let (s, b) = call(&app, "POST", "/models/reload", None).await;
    assert_eq!(s, StatusCode::SERVICE_UNAVAILABLE);
    assert!(json(&b)["detail"].is_string());
    assert!(Arc::ptr_eq(&st.engine().unwrap(), &new));
}

#[tokio::test]
async fn journal_replay_restores_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("journal.jsonl");
    let (_, app) = app_with(true, Some(Journal::open(&path).unwrap()));
    let (id, _) = replay_fixture(&app).await;
    let other = create(&app, 140, "away").await;
    call(&app, "POST", &format!("/sessions/{other}/overs"), Some(j!({"over": 1, "runs": 3}))).await;
    // rejected overs are not journaled
    call(&app, "POST", &format!("/sessions/{other}/overs"), Some(j!({"over": 5, "runs": 3}))).await;
    let (_, a) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    let (_, b) = call(&app, "GET", &format!("/sessions/{other}"), None).await;

    let mut text = std::fs::read_to_string(&path).unwrap();
    text.push_str("{\"event\":\"over\",\"sess");
    std::fs::write(&path, text).unwrap();

    let st = Arc::new(AppState::new(Some(test_engine()), None, None));
    let n = st.recover(Journal::read(&path).unwrap()).unwrap();
    assert_eq!(n, 2 + 17 + 1);
    let app2 = router(st);
    let (_, a2) = call(&app2, "GET", &format!("/sessions/{id}"), None).await;
    let (_, b2) = call(&app2, "GET", &format!("/sessions/{other}"), None).await;
    assert_eq!(a, a2);
    assert_eq!(b, b2);
}
