#![allow(dead_code)]

use std::path::PathBuf;

use axum::body::{to_bytes, Body, Bytes};
use axum::http::{Request, StatusCode};
use axum::Router;
use chasepi_core::distfit::{Gamma, PhaseFits};
use chasepi_core::ingest::{load_match_file, HomeAway, MatchFormat, MatchRecord, PiSequence};
use chasepi_core::markov::Discretizer;
use chasepi_core::models::ModelSet;
use chasepi_core::phase::{Phase, PhaseScheme};
use chasepi_core::pi::{InningsState, PiCalculator};
use chasepi_service::{Engine, OverEntry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tower::ServiceExt;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data").join(name)
}

pub fn load_fixture(name: &str) -> MatchRecord {
    load_match_file(fixture(name), MatchFormat::Json).unwrap()
}

/// Random-walk PI trajectories, enough to populate every phase model.
pub fn synthetic_corpus(n: usize, seed: u64) -> Vec<PiSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let mut pi = 1.0f64;
            let values = (0..20)
                .map(|_| {
                    pi = (pi + rng.random_range(-0.3..0.35)).max(0.05);
                    pi
                })
                .collect();
            PiSequence::from_values(format!("syn{i}"), values)
        })
        .collect()
}

pub fn test_fits() -> PhaseFits {
    let g = Gamma::new(4.0, 3.0).unwrap();
    PhaseFits::from_gammas(PhaseScheme::default(), &Phase::ALL.map(|p| (p, g)))
}

pub fn test_models(seed: u64) -> ModelSet {
    let corpus = synthetic_corpus(300, seed);
    let refs: Vec<_> = corpus.iter().collect();
    ModelSet::train(&refs, 3, Discretizer::default(), PhaseScheme::default(), true, true, test_fits()).unwrap()
}

pub fn test_engine() -> Engine {
    Engine::new(test_models(7))
}

/// The fixture's innings as API over entries plus the cumulative states.
pub fn over_entries(m: &MatchRecord) -> (Vec<OverEntry>, Vec<InningsState>) {
    let states: Vec<InningsState> = m.over_end_states().unwrap().into_iter().map(|(_, s)| s).collect();
    let mut prev = InningsState::default();
    let entries = states
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let e = OverEntry {
                over: i as u32 + 1,
                runs: s.runs_scored,
                dismissed: s.dismissed_positions[prev.dismissed_positions.len()..].to_vec(),
                balls: Some(s.balls_faced - prev.balls_faced),
            };
            prev = s.clone();
            e
        })
        .collect();
    (entries, states)
}

pub fn venue_of(m: &MatchRecord) -> HomeAway {
    HomeAway::classify(m)
}

pub fn default_calc() -> PiCalculator {
    PiCalculator::default()
}

pub async fn call(app: &Router, method: &str, uri: &str, body: Option<serde_json::Value>) -> (StatusCode, Bytes) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(serde_json::to_vec(&b).unwrap()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, to_bytes(resp.into_body(), usize::MAX).await.unwrap())
}

pub fn json(b: &Bytes) -> serde_json::Value {
    serde_json::from_slice(b).unwrap()
}
