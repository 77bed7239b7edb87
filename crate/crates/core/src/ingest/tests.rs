use proptest::prelude::*;

use super::*;

fn data(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn native(deliveries: &str, outcome: &str) -> String {
    format!(
        r#"{{"schema":"chasepi.match/1","match_id":"m1","competition":"Test Cup",
        "date":"2020-01-01","venue":"Ground","teams":["A","B"],"target":20,
        "outcome":{outcome},"innings2":[{deliveries}]}}"#
    )
}

fn over(o: u32, runs: [u32; 6]) -> String {
    runs.iter()
        .enumerate()
        .map(|(i, r)| format!(r#"{{"over":{o},"ball":{},"runs":{r}}}"#, i + 1))
        .collect::<Vec<_>>()
        .join(",")
}

fn record(outcome: Outcome, legal_balls: u32) -> MatchRecord {
    MatchRecord {
        match_id: format!("m{legal_balls}"),
        competition: "c".into(),
        date: chrono::NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
        venue: "v".into(),
        home_side: None,
        teams: ["A".into(), "B".into()],
        target: 150,
        total_balls: 120,
        outcome,
        innings2: (0..legal_balls)
            .map(|b| Delivery {
                over: b / 6 + 1,
                ball: b % 6 + 1,
                runs: 1,
                extra: None,
                dismissed_position: None,
            })
            .collect(),
    }
}

#[test]
fn minimal_one_over_native() {
    let text = native(&over(1, [1, 0, 4, 0, 2, 1]), r#"{"type":"lost_by_runs","margin":11}"#);
    let m = parse_match(text.as_bytes(), MatchFormat::Json, None).unwrap();
    assert_eq!(m.innings2.len(), 6);
    assert_eq!(m.legal_balls(), 6);
    assert_eq!(m.runs(), 8);
}

#[test]
fn wide_adds_runs_not_balls() {
    let d = format!(
        r#"{},{{"over":2,"ball":1,"runs":1,"extra":"wide"}},{{"over":2,"ball":2,"runs":1,"extra":"leg_bye"}}"#,
        over(1, [1; 6])
    );
    let m = parse_match(native(&d, r#"{"type":"no_result"}"#).as_bytes(), MatchFormat::Json, None)
        .unwrap();
    let states = m.over_end_states().unwrap();
    assert_eq!(states[1].1.balls_faced, 7);
    assert_eq!(states[1].1.runs_scored, 8);
}

#[test]
fn truncated_file_is_parse_error() {
    let text = native(&over(1, [1; 6]), r#"{"type":"tie"}"#);
    let cut = &text.as_bytes()[..text.len() / 2];
    assert!(matches!(
        parse_match(cut, MatchFormat::Json, None),
        Err(IngestError::Parse(_))
    ));
}

#[test]
fn missing_field_is_schema_error() {
    let text = r#"{"match_id":"x","date":"2020-01-01","innings2":[]}"#;
    assert!(matches!(
        parse_match(text.as_bytes(), MatchFormat::Json, None),
        Err(IngestError::Schema(_))
    ));
}

#[test]
fn negative_runs_and_extra_wickets_are_illegal() {
    let d = r#"{"over":1,"ball":1,"runs":-1}"#;
    assert!(matches!(
        parse_match(native(d, r#"{"type":"tie"}"#).as_bytes(), MatchFormat::Json, None),
        Err(IngestError::IllegalInnings(_))
    ));
    let d = (1..=11)
        .map(|p| format!(r#"{{"over":1,"ball":{p},"runs":0,"dismissed_position":{p}}}"#))
        .collect::<Vec<_>>()
        .join(",");
    assert!(matches!(
        parse_match(native(&d, r#"{"type":"tie"}"#).as_bytes(), MatchFormat::Json, None),
        Err(IngestError::IllegalInnings(_))
    ));
}

#[test]
fn csv_reader_matches_json() {
    let header = "match_id,competition,date,venue,home_side,batting_team,bowling_team,target,total_balls,outcome,margin,innings,ball,striker,non_striker,runs_off_bat,extras,wides,noballs,byes,legbyes,player_dismissed";
    let mut rows = vec![header.to_string()];
    rows.push("c1,Cup,2021-05-01,G,B,A,B,10,120,lost,3,1,0.1,x,y,1,0,,,,,".into());
    for (i, (bat, ext, wd, out)) in [(1, 0, "", ""), (0, 1, "1", ""), (4, 0, "", ""), (0, 0, "", "b1")]
        .iter()
        .enumerate()
    {
        rows.push(format!(
            "c1,Cup,2021-05-01,G,B,B,A,10,120,lost,3,2,0.{},b1,b2,{bat},{ext},{wd},,,,{out}",
            i + 1
        ));
    }
    let m = parse_match(rows.join("\n").as_bytes(), MatchFormat::Csv, None).unwrap();
    assert_eq!(m.innings2.len(), 4);
    assert_eq!(m.legal_balls(), 3);
    assert_eq!(m.runs(), 6);
    assert_eq!(m.innings2[3].dismissed_position, Some(1));
    assert_eq!(m.outcome, Outcome::LostByRuns { margin: 3 });
    assert_eq!(HomeAway::classify(&m), HomeAway::Home);
}

#[test]
fn cricsheet_fixture_positions() {
    let m = load_match_file(data("csk_v_dc_2021.json"), MatchFormat::Json).unwrap();
    let order: Vec<u8> = m.innings2.iter().filter_map(|d| d.dismissed_position).collect();
    assert_eq!(order, vec![1, 3, 4, 5, 2, 6]);
    assert_eq!(m.target, 173);
    assert!(m.outcome.won());
    assert_eq!(HomeAway::classify(&m), HomeAway::Neutral);
}

#[test]
fn filter_rules() {
    let f = CorpusFilter::default();
    assert_eq!(f.decide(&record(Outcome::ChasedWithBallsLeft, 17 * 6 + 2)), FilterDecision::Excluded);
    assert_eq!(f.decide(&record(Outcome::ChasedWithBallsLeft, 18 * 6)), FilterDecision::Excluded);
    assert_eq!(f.decide(&record(Outcome::ChasedWithBallsLeft, 19 * 6)), FilterDecision::Retained);
    assert_eq!(f.decide(&record(Outcome::LostByRuns { margin: 10 }, 120)), FilterDecision::Retained);
    assert_eq!(f.decide(&record(Outcome::LostByRuns { margin: 11 }, 120)), FilterDecision::Excluded);
    assert_eq!(f.decide(&record(Outcome::Tie, 120)), FilterDecision::Retained);
    assert_eq!(f.decide(&record(Outcome::NoResult, 60)), FilterDecision::DroppedNoResult);
}

#[test]
fn table10_fixture_sequence() {
    let m = load_match_file(data("pak_v_wi_2018.json"), MatchFormat::Json).unwrap();
    let seqs = build_sequences(&[m], &PiCalculator::default());
    assert_eq!(seqs.len(), 1);
    let s = &seqs[0];
    assert_eq!(s.len(), 17);
    assert_eq!(*s.values.last().unwrap(), 0.0);
    assert_eq!(s.wicket_overs(), vec![6, 13]);
    assert_eq!(s.home_away, HomeAway::Home);
    assert!(s.won);
}

#[test]
fn losing_chase_has_twenty_positive_entries() {
    let mut m = record(Outcome::LostByRuns { margin: 30 }, 120);
    m.target = 150;
    let s = build_sequence(&m, &PiCalculator::default()).unwrap();
    assert_eq!(s.len(), 20);
    assert!(s.values[19] > 0.0);
    // 120 needed off 0 balls: rate evaluated over one ball, no wickets, all resources used
    let expected = (30.0 * 6.0 / 1.0) / 7.5 * 0.5 * (1f64.exp() + 1.0);
    assert!((s.values[19] - expected).abs() < 1e-12);
}

#[test]
fn empty_corpus() {
    assert!(build_sequences(&[], &PiCalculator::default()).is_empty());
}

#[test]
fn no_result_truncates_partial_over() {
    let m = record(Outcome::NoResult, 10 * 6 + 3);
    let s = build_sequence(&m, &PiCalculator::default()).unwrap();
    assert_eq!(s.len(), 10);
    assert!(s.truncated);
}

#[test]
fn corpus_round_trip_and_hash_check() {
    let m = load_match_file(data("pak_v_wi_2018.json"), MatchFormat::Json).unwrap();
    let corpus = Corpus::new(build_sequences(&[m], &PiCalculator::default()));
    let mut buf = Vec::new();
    corpus.write_to(&mut buf).unwrap();
    let back = Corpus::read_from(buf.as_slice()).unwrap();
    assert_eq!(back, corpus);
    let text = String::from_utf8(buf).unwrap().replace("\"won\":true", "\"won\":false");
    assert!(matches!(
        Corpus::read_from(text.as_bytes()),
        Err(CorpusError::HashMismatch { .. })
    ));
}

fn arb_record() -> impl Strategy<Value = MatchRecord> {
    let delivery = (0u32..7, prop::option::of(0usize..5), any::<bool>());
    (prop::collection::vec(delivery, 1..40), 1u32..250, 0u32..4, any::<bool>()).prop_map(
        |(ds, target, outcome, home)| {
            let mut over = 1;
            let mut legal = 0;
            let mut next_pos = 1u8;
            let mut innings2 = Vec::new();
            for (i, (runs, extra, out)) in ds.into_iter().enumerate() {
                let extra = extra.map(|e| {
                    [ExtraKind::Wide, ExtraKind::NoBall, ExtraKind::Bye, ExtraKind::LegBye, ExtraKind::Penalty][e]
                });
                let d = Delivery {
                    over,
                    ball: i as u32 + 1,
                    runs,
                    extra,
                    dismissed_position: (out && next_pos <= 10).then(|| {
                        next_pos += 1;
                        next_pos - 1
                    }),
                };
                if d.is_legal() {
                    legal += 1;
                    if legal % 6 == 0 {
                        over += 1;
                    }
                }
                innings2.push(d);
            }
            MatchRecord {
                match_id: "p".into(),
                competition: "Cup".into(),
                date: chrono::NaiveDate::from_ymd_opt(2019, 4, 1).unwrap(),
                venue: "Ground".into(),
                home_side: home.then(|| "B".to_string()),
                teams: ["A".into(), "B".into()],
                target,
                total_balls: 120,
                outcome: [
                    Outcome::ChasedWithBallsLeft,
                    Outcome::LostByRuns { margin: 4 },
                    Outcome::Tie,
                    Outcome::NoResult,
                ][outcome as usize],
                innings2,
            }
        },
    )
}

proptest! {
    #[test]
    fn native_round_trip_is_stable(rec in arb_record()) {
        let once = parse_match(to_native_json(&rec).as_bytes(), MatchFormat::Json, None).unwrap();
        prop_assert_eq!(&once, &rec);
        let twice = parse_match(to_native_json(&once).as_bytes(), MatchFormat::Json, None).unwrap();
        prop_assert_eq!(to_native_json(&twice), to_native_json(&once));
    }

    #[test]
    fn filter_partitions_input(recs in prop::collection::vec(arb_record(), 0..30)) {
        let n = recs.len();
        let (kept, summary) = filter_corpus(recs, &CorpusFilter::default());
        prop_assert_eq!(kept.len(), summary.retained);
        prop_assert_eq!(summary.retained + summary.excluded + summary.dropped_no_result, n);
    }

    #[test]
    fn sequence_length_tracks_overs(rec in arb_record()) {
        prop_assume!(rec.outcome != Outcome::NoResult);
        if let Ok(s) = build_sequence(&rec, &PiCalculator::default()) {
            let states = rec.over_end_states().unwrap();
            prop_assert_eq!(s.len(), states.len());
            if let Some(first_zero) = s.values.iter().position(|&v| v == 0.0) {
                prop_assert!(s.values[first_zero..].iter().all(|&v| v == 0.0));
            }
        }
    }
}
