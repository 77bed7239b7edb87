//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use chasepi_core::distfit::{bootstrap_ks, fit_family, fit_phases, Distribution, Family};
use chasepi_core::evaluate::{calibration, evaluate_predictions, precision_sweep};
use chasepi_core::ingest::{build_sequence, load_match_file, HomeAway, MatchFormat, MatchRecord, PiSequence};
use chasepi_core::markov::{build_transitions, select_order, Discretizer, PRECISION_SWEEP};
use chasepi_core::models::ModelSet;
use chasepi_core::phase::{Phase, PhaseScheme};
use chasepi_core::pi::{ChaseContext, InningsState, PiCalculator, ResourceTable};
use chasepi_core::strategy::{default_zone_table, VenueClass, Zone};
use chasepi_service::{router, AppState, Engine, OverEntry};
use chasepi_validation::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution as _;
use tower::ServiceExt;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(start: Instant, budget: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < budget, || format!("took {:.1}s, budget {:.0}s", t.as_secs_f64(), budget.as_secs_f64()))
}

fn fixture(name: &str) -> MatchRecord {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data").join(name);
    load_match_file(p, MatchFormat::Json).expect("fixture parses")
}

fn random_dismissed(rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
    let mut pos: Vec<u8> = (1..=11).collect();
    pos.shuffle(rng);
    pos.truncate(n);
    pos
}

fn pi_identities() -> Check {
    let start = Instant::now();
    let calc = PiCalculator::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let ctx = ChaseContext::new(rng.random_range(1..400), 6 * rng.random_range(1..=20)).unwrap();
        let pi = calc.pi(&ctx, &InningsState::default()).unwrap().value();
        ensure((pi - 1.0).abs() < 1e-12, || format!("start PI {pi} for {ctx:?}"))?;
    }
    for _ in 0..1000 {
        let target = rng.random_range(1..300);
        let ctx = ChaseContext::t20(target).unwrap();
        let w = rng.random_range(0..=9);
        let st = InningsState::new(target + rng.random_range(0..6), rng.random_range(0..=120), random_dismissed(&mut rng, w));
        let pi = calc.pi(&ctx, &st).unwrap().value();
        ensure(pi == 0.0, || format!("PI {pi} after reaching the target"))?;
    }
    for _ in 0..10_000 {
        let target = rng.random_range(2..300);
        let ctx = ChaseContext::t20(target).unwrap();
        let runs = rng.random_range(1..target);
        let balls = rng.random_range(0..120);
        let w = rng.random_range(0..=9);
        let d = random_dismissed(&mut rng, w + 1);
        let base = InningsState::new(runs, balls, d[..w].to_vec());
        let p0 = calc.pi(&ctx, &base).unwrap().value();
        let more_wickets = calc.pi(&ctx, &InningsState::new(runs, balls, d.clone())).unwrap().value();
        let fewer_runs = calc.pi(&ctx, &InningsState::new(runs - 1, balls, base.dismissed_positions.clone())).unwrap().value();
        ensure(more_wickets >= p0, || format!("extra wicket lowered PI {p0} -> {more_wickets}"))?;
        ensure(fewer_runs >= p0, || format!("larger deficit lowered PI {p0} -> {fewer_runs}"))?;
    }
    within_budget(start, Duration::from_secs(5))?;
    Ok("1000 starts at 1, 1000 reached targets at 0, 10^4 monotone pairs".into())
}

fn formula_oracle() -> Check {
    let calc = PiCalculator::default();
    let table = ResourceTable::bundled();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let target = rng.random_range(1..300);
        let runs = rng.random_range(0..target + 10);
        let balls = rng.random_range(0..120);
        let w = rng.random_range(0..=10);
        let d = random_dismissed(&mut rng, w);
        let ctx = ChaseContext::t20(target).unwrap();
        let got = calc.pi(&ctx, &InningsState::new(runs, balls, d.clone())).unwrap().value();
        let want = literal_pi(target, runs, balls, &d, &table).unwrap();
        let rel = if want == 0.0 { got.abs() } else { ((got - want) / want).abs() };
        worst = worst.max(rel);
    }
    ensure(worst <= 1e-12, || format!("max relative difference {worst:e}"))?;
    Ok(format!("10^4 states, max relative difference {worst:.1e}"))
}

fn replay(name: &str, published: &[(u32, u32, u32, f64)], skip_last: bool) -> Check {
    let m = fixture(name);
    let seq = build_sequence(&m, &PiCalculator::default()).map_err(|e| e.to_string())?;
    ensure(seq.values.len() == published.len(), || {
        format!("{} overs in the fixture, {} published", seq.values.len(), published.len())
    })?;
    let states = m.over_end_states().map_err(|e| e.to_string())?;
    for ((_, st), &(over, runs, wkts, _)) in states.iter().zip(published) {
        ensure(st.runs_scored == runs && st.wickets_lost() == wkts as usize, || {
            format!("fixture over {over} is {}/{}, published {runs}/{wkts}", st.runs_scored, st.wickets_lost())
        })?;
    }
    let last = *seq.values.last().unwrap();
    ensure(last == 0.0, || format!("terminal PI {last}"))?;
    let n = if skip_last { published.len() - 1 } else { published.len() };
    let mut misses = Vec::new();
    let mut worst = 0.0f64;
    for (v, &(over, _, _, want)) in seq.values.iter().zip(published).take(n) {
        let dev = (v - want).abs();
        worst = worst.max(dev);
        if dev > 0.05 {
            misses.push(format!("over {over}: {v:.3} vs {want}"));
        }
    }
    ensure(misses.is_empty(), || {
        format!("{} of {n} overs beyond 0.05 (max {worst:.3}); {}", misses.len(), misses.join(", "))
    })?;
    Ok(format!("{n} overs within 0.05 (max {worst:.3}), terminal 0"))
}

fn order_recovery() -> Check {
    let start = Instant::now();
    let mut tally = Vec::new();
    for k in 1..=3 {
        let mut hits = 0;
        for seed in 0..20u64 {
            let corpus = order_k_corpus(k, 2000, 20, 3, 0.75, 1000 * k as u64 + seed);
            let r = select_order(&corpus, 5, Discretizer::default(), 0.8, seed).map_err(|e| e.to_string())?;
            if r.recommended == Some(k) {
                hits += 1;
            }
        }
        tally.push((k, hits));
    }
    let summary = tally.iter().map(|(k, h)| format!("k={k}: {h}/20")).collect::<Vec<_>>().join(", ");
    ensure(tally.iter().all(|&(_, h)| h >= 18), || summary.clone())?;
    within_budget(start, Duration::from_secs(120))?;
    Ok(format!("{summary} in {:.1}s", start.elapsed().as_secs_f64()))
}

fn random_corpus(rng: &mut ChaCha8Rng, n: usize) -> Vec<PiSequence> {
    (0..n)
        .map(|i| {
            let len = rng.random_range(1..=20);
            let values = (0..len)
                .map(|_| if rng.random_bool(0.08) { 0.0 } else { rng.random_range(0.0..3.0) })
                .collect();
            PiSequence::from_values(format!("r{i}"), values)
        })
        .collect()
}

fn brute_force() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut cases = 0;
    for _ in 0..40 {
        let n = rng.random_range(1..=50);
        let seqs = random_corpus(&mut rng, n);
        for k in 1..=3 {
            for &delta in &PRECISION_SWEEP {
                let naive = naive_counts(&seqs, k, delta);
                let model = match build_transitions(&seqs, k, Discretizer::new(delta).unwrap(), None) {
                    Ok(m) => m,
                    Err(_) => {
                        ensure(naive.is_empty(), || "model refused a corpus with transitions".into())?;
                        continue;
                    }
                };
                cases += 1;
                let mut seen = 0;
                for (state, row) in model.rows() {
                    let naive_total: u64 = naive.iter().filter(|((s, _), _)| s == state).map(|(_, c)| c).sum();
                    ensure(row.total == naive_total, || format!("row total of {state:?}"))?;
                    let mut sum = 0.0;
                    for (&next, &c) in &row.next {
                        let want = naive.get(&(state.clone(), next)).copied().unwrap_or(0);
                        ensure(c == want, || format!("count {state:?} -> {next}: {c} vs {want}"))?;
                        let p = model.probability(state, next);
                        ensure(p == c as f64 / naive_total as f64, || format!("probability {state:?} -> {next}"))?;
                        sum += p;
                        seen += 1;
                    }
                    ensure((sum - 1.0).abs() <= 1e-12, || format!("row {state:?} sums to {sum}"))?;
                }
                ensure(seen == naive.len(), || format!("{seen} stored transitions, {} counted", naive.len()))?;
            }
        }
    }
    Ok(format!("{cases} corpus/order/grid combinations match the nested-loop recount"))
}

fn absorption() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let scheme = PhaseScheme::default();
    let mut rows = 0;
    for _ in 0..200 {
        let seqs = random_corpus(&mut rng, 40);
        for k in 1..=3 {
            for &delta in &PRECISION_SWEEP {
                let d = Discretizer::new(delta).unwrap();
                let mut phases: Vec<Option<(Phase, PhaseScheme)>> = Phase::ALL.iter().map(|&p| Some((p, scheme))).collect();
                phases.push(None);
                for phase in phases {
                    let Ok(m) = build_transitions(&seqs, k, d, phase) else { continue };
                    for (state, row) in m.rows() {
                        rows += 1;
                        if state.last() == Some(&0) {
                            ensure(row.next.keys().all(|&n| n == 0), || format!("{state:?} leaves zero"))?;
                        }
                    }
                }
            }
        }
    }
    Ok(format!("{rows} stored rows scanned, none leaves zero"))
}

fn sparsity_trend() -> Check {
    let corpus = continuous_corpus(3000, 11);
    let rows = precision_sweep(&corpus, 3, &PRECISION_SWEEP, 0.8, 5).map_err(|e| e.to_string())?;
    let line = rows
        .iter()
        .map(|r| format!("{}: {:.1}%/{:.1}%", r.precision, r.singleton_pct, r.coverage_pct))
        .collect::<Vec<_>>()
        .join(", ");
    for w in rows.windows(2) {
        ensure(w[1].singleton_pct <= w[0].singleton_pct, || format!("singletons rose: {line}"))?;
        ensure(w[1].coverage_pct >= w[0].coverage_pct, || format!("coverage fell: {line}"))?;
    }
    Ok(format!("singletons/coverage {line}"))
}

fn gamma_recovery() -> Check {
    let mut notes = Vec::new();
    for (i, &(name, shape, rate)) in GAMMA_PARAMS.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(50 + i as u64);
        let g = rand_distr::Gamma::new(shape, 1.0 / rate).unwrap();
        let x: Vec<f64> = (0..100_000).map(|_| g.sample(&mut rng)).collect();
        let fit = fit_family(&x, Family::Gamma).map_err(|e| e.to_string())?;
        let Distribution::Gamma(h) = fit.distribution else {
            return Err("gamma fit returned another family".into());
        };
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let mean_ln = x.iter().map(|v| v.ln()).sum::<f64>() / n;
        let da = (h.shape / shape - 1.0).abs();
        let db = (h.rate / rate - 1.0).abs();
        ensure(da <= 0.02 && db <= 0.02, || format!("{name}: shape {:.3} rate {:.3}", h.shape, h.rate))?;
        let se = sd / n.sqrt();
        ensure((h.shape / h.rate - mean).abs() <= 3.0 * se, || format!("{name}: fitted mean off the sample mean"))?;
        let grad_shape = h.rate.ln() - statrs::function::gamma::digamma(h.shape) + mean_ln;
        let grad_rate = h.shape / h.rate - mean;
        let grad = grad_shape.abs().max(grad_rate.abs());
        ensure(grad < 1e-6, || format!("{name}: per-sample gradient {grad:e}"))?;
        notes.push(format!("{name} {:.3}/{:.3} grad {grad:.0e}", h.shape, h.rate));
    }
    Ok(notes.join(", "))
}

fn published_means() -> Check {
    let mut notes = Vec::new();
    for (&(name, shape, rate), &mean) in GAMMA_PARAMS.iter().zip(&PHASE_MEANS) {
        let m = shape / rate;
        ensure((m - mean).abs() <= 0.01, || format!("{name}: {m:.4} vs {mean}"))?;
        notes.push(format!("{name} {m:.3} vs {mean}"));
    }
    Ok(notes.join(", "))
}

fn bootstrap_validity() -> Check {
    let start = Instant::now();
    let (shape, rate) = (GAMMA_PARAMS[2].1, GAMMA_PARAMS[2].2);
    let g = rand_distr::Gamma::new(shape, 1.0 / rate).unwrap();
    let mut rejected = 0;
    let runs = 200;
    for run in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(9000 + run);
        let x: Vec<f64> = (0..500).map(|_| g.sample(&mut rng)).collect();
        let r = bootstrap_ks(&x, Family::Gamma, 500, run).map_err(|e| e.to_string())?;
        if r.p_value < 0.05 {
            rejected += 1;
        }
    }
    let rate_hat = rejected as f64 / runs as f64;
    ensure((0.02..=0.09).contains(&rate_hat), || format!("rejection rate {rate_hat:.3}"))?;
    within_budget(start, Duration::from_secs(180))?;
    Ok(format!("rejection rate {rate_hat:.3} in {:.1}s", start.elapsed().as_secs_f64()))
}

fn calibration_arithmetic() -> Check {
    let perfect = calibration(&[0.0, 1.0, 1.0, 0.0], &[false, true, true, false], 10).map_err(|e| e.to_string())?;
    ensure(perfect.brier == 0.0 && perfect.ece == 0.0, || "perfect forecast not scored 0".into())?;
    let pair = calibration(&[0.2, 0.8], &[false, true], 10).map_err(|e| e.to_string())?;
    ensure((pair.brier - 0.04).abs() < 1e-12, || format!("pair Brier {}", pair.brier))?;
    ensure((pair.ece - 0.2).abs() < 1e-12, || format!("pair ECE {}", pair.ece))?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let coin: Vec<bool> = (0..10_000).map(|_| rng.random_bool(0.5)).collect();
    let rate = coin.iter().filter(|&&c| c).count() as f64 / coin.len() as f64;
    let half = calibration(&vec![0.5; coin.len()], &coin, 10).map_err(|e| e.to_string())?;
    ensure((half.brier - 0.25).abs() <= 0.01, || format!("coin Brier {}", half.brier))?;
    ensure((half.ece - (0.5 - rate).abs()).abs() < 1e-12, || format!("coin ECE {}", half.ece))?;
    Ok(format!("perfect 0/0, pair 0.04/0.2, coin Brier {:.4}", half.brier))
}

fn phase_beats_global() -> Check {
    let train = phase_corpus(600, 1, "tr");
    let test = phase_corpus(200, 2, "te");
    let scheme = PhaseScheme::default();
    let fits = fit_phases(&train, &scheme, 0, 1).map_err(|e| e.to_string())?;
    let refs: Vec<_> = train.iter().collect();
    let d = Discretizer::default();
    let global = ModelSet::train(&refs, 3, d, scheme, false, true, fits.clone()).map_err(|e| e.to_string())?;
    let phased = ModelSet::train(&refs, 3, d, scheme, true, false, fits).map_err(|e| e.to_string())?;
    let test: Vec<_> = test.iter().collect();
    let g = evaluate_predictions(&global, &test, 0.95).map_err(|e| e.to_string())?;
    let p = evaluate_predictions(&phased, &test, 0.95).map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    for ph in Phase::ALL {
        let (mg, mp) = (g.by_phase[&ph].mae, p.by_phase[&ph].mae);
        ensure(mp < mg, || format!("{ph}: phase-wise {mp:.4} vs global {mg:.4}"))?;
        notes.push(format!("{ph} {mp:.3} < {mg:.3}"));
    }
    Ok(notes.join(", "))
}

fn zone_fidelity() -> Check {
    let t = default_zone_table();
    ensure(t.rows().len() == 30, || format!("{} rows", t.rows().len()))?;
    for &(phase, lo, hi, hw, hz, aw, az) in &ZONE_TABLE {
        let phase: Phase = phase.parse()?;
        for (venue, win, zone) in [(VenueClass::Home, hw, hz), (VenueClass::Away, aw, az)] {
            let zone: Zone = zone.parse()?;
            let row = t
                .section(phase, venue)
                .find(|r| r.interval.lo == lo)
                .ok_or_else(|| format!("{phase}/{venue:?} has no row at {lo}"))?;
            let want_hi = (hi >= 0.0).then_some(hi);
            ensure(row.interval.hi == want_hi, || format!("{phase}/{venue:?} [{lo}, ..) upper bound"))?;
            ensure(row.win_rate == win, || format!("{phase}/{venue:?} [{lo}, ..) win rate {}", row.win_rate))?;
            ensure(row.zone == zone, || format!("{phase}/{venue:?} [{lo}, ..) zone {:?}", row.zone))?;
        }
    }
    Ok("30 of 30 rows".into())
}

fn over_entries(m: &MatchRecord) -> Vec<OverEntry> {
    let mut prev = InningsState::default();
    m.over_end_states()
        .unwrap()
        .into_iter()
        .map(|(over, s)| {
            let e = OverEntry {
                over,
                runs: s.runs_scored,
                dismissed: s.dismissed_positions[prev.dismissed_positions.len()..].to_vec(),
                balls: Some(s.balls_faced - prev.balls_faced),
            };
            prev = s;
            e
        })
        .collect()
}

async fn post(app: &axum::Router, uri: &str, body: String) -> (StatusCode, Vec<u8>) {
    let req = Request::builder()
        .method("POST")
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec())
}

async fn new_session(app: &axum::Router, target: u32, venue: HomeAway) -> String {
    let body = serde_json::json!({"target": target, "venue": venue}).to_string();
    let (s, b) = post(app, "/sessions", body).await;
    assert_eq!(s, StatusCode::CREATED);
    let v: serde_json::Value = serde_json::from_slice(&b).unwrap();
    v["session_id"].as_str().unwrap().to_string()
}

fn service_determinism() -> Check {
    let corpus = continuous_corpus(500, 21);
    let refs: Vec<_> = corpus.iter().collect();
    let fits = fit_phases(&corpus, &PhaseScheme::default(), 0, 1).map_err(|e| e.to_string())?;
    let models = ModelSet::train(&refs, 3, Discretizer::default(), PhaseScheme::default(), true, true, fits)
        .map_err(|e| e.to_string())?;
    let engine = Engine::new(models);
    let rt = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()
        .map_err(|e| e.to_string())?;
    rt.block_on(async {
        let m = fixture("pak_v_wi_2018.json");
        let entries = over_entries(&m);
        let mut runs = Vec::new();
        for _ in 0..2 {
            let app = router(Arc::new(AppState::new(Some(engine.clone()), None, None)));
            let id = new_session(&app, m.target, HomeAway::classify(&m)).await;
            let mut bodies = Vec::new();
            for e in &entries {
                let (s, b) = post(&app, &format!("/sessions/{id}/overs"), serde_json::to_string(e).unwrap()).await;
                ensure(s == StatusCode::OK, || format!("over {} rejected: {s}", e.over))?;
                bodies.push(b);
            }
            runs.push(bodies);
        }
        ensure(runs[0] == runs[1], || "replays differ".into())?;

        let trials = 50;
        for _ in 0..trials {
            let app = router(Arc::new(AppState::new(Some(engine.clone()), None, None)));
            let id = new_session(&app, 150, HomeAway::Home).await;
            let uri = format!("/sessions/{id}/overs");
            let body = serde_json::json!({"over": 1, "runs": 7}).to_string();
            let tasks: Vec<_> = (0..4)
                .map(|_| {
                    let (app, uri, body) = (app.clone(), uri.clone(), body.clone());
                    tokio::spawn(async move { post(&app, &uri, body).await.0 })
                })
                .collect();
            let mut ok = 0;
            for t in tasks {
                match t.await.unwrap() {
                    StatusCode::OK => ok += 1,
                    StatusCode::CONFLICT => {}
                    other => return Err(format!("racing append got {other}")),
                }
            }
            ensure(ok == 1, || format!("{ok} racing appends accepted"))?;
        }
        Ok(format!("{} byte-identical replies per replay, {trials} races of 4 with one winner each", entries.len()))
    })
}

fn main() {
    let criteria: Vec<(&str, fn() -> Check)> = vec![
        ("PI identity suite", pi_identities),
        ("PI formula oracle equivalence", formula_oracle),
        ("Pakistan v West Indies replay", || replay("pak_v_wi_2018.json", &PAK_V_WI, false)),
        ("Chennai v Delhi replay", || replay("csk_v_dc_2021.json", &CSK_V_DC, true)),
        ("order recovery", order_recovery),
        ("transition table brute-force equivalence", brute_force),
        ("censored absorption", absorption),
        ("sparsity trend", sparsity_trend),
        ("gamma MLE recovery", gamma_recovery),
        ("published gamma means", published_means),
        ("bootstrap K-S validity", bootstrap_validity),
        ("calibration arithmetic", calibration_arithmetic),
        ("phase-wise beats global", phase_beats_global),
        ("zone table fidelity", zone_fidelity),
        ("service replay determinism", service_determinism),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.2}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} [{secs:.2}s]");
            }
        }
    }
    println!("acceptance: {failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
