//! Readers for ball-by-ball match files.
//!
//! Two JSON shapes are accepted:
//!
//! * the native schema, which is the serialised [`MatchRecord`] with a
//!   `"schema": "chasepi.match/1"` tag;
//! * cricsheet-style documents (`info` + `innings[].overs[].deliveries[]`).
//!   Cricsheet has no home-side field; an optional `info.home_side` and
//!   `info.match_id` are honoured when present.
//!
//! The flat CSV format has one row per delivery with the columns
//! `match_id, competition, date, venue, home_side, batting_team,
//! bowling_team, target, total_balls, outcome, margin, innings, ball,
//! striker, non_striker, runs_off_bat, extras, wides, noballs, byes,
//! legbyes, player_dismissed`. `ball` is `over.ball` with a 0-based over
//! (cricsheet convention), `outcome` is one of `chased`, `lost`, `tie`,
//! `no_result`, and rows whose `innings` is not 2 are ignored.

use std::collections::HashMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::record::{Delivery, ExtraKind, MatchRecord, Outcome};
use super::IngestError;

pub const NATIVE_SCHEMA: &str = "chasepi.match/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchFormat {
    Json,
    Csv,
}

impl std::str::FromStr for MatchFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(MatchFormat::Json),
            "csv" => Ok(MatchFormat::Csv),
            other => Err(format!("unknown match format '{other}'")),
        }
    }
}

impl MatchFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MatchFormat::Json => "json",
            MatchFormat::Csv => "csv",
        }
    }
}

/// Parses and validates one match. `fallback_id` names the match when the
/// file itself carries no identifier (cricsheet files are named by id).
pub fn parse_match(
    bytes: &[u8],
    format: MatchFormat,
    fallback_id: Option<&str>,
) -> Result<MatchRecord, IngestError> {
    let rec = match format {
        MatchFormat::Json => parse_json(bytes, fallback_id)?,
        MatchFormat::Csv => parse_csv(bytes, fallback_id)?,
    };
    rec.validate()?;
    Ok(rec)
}

/// Native JSON serialisation of a record.
pub fn to_native_json(rec: &MatchRecord) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        schema: &'static str,
        #[serde(flatten)]
        record: &'a MatchRecord,
    }
    serde_json::to_string_pretty(&Doc {
        schema: NATIVE_SCHEMA,
        record: rec,
    })
    .expect("match record serialises")
}

fn json_err(e: serde_json::Error) -> IngestError {
    use serde_json::error::Category;
    match e.classify() {
        Category::Data => IngestError::Schema(e.to_string()),
        Category::Io | Category::Syntax | Category::Eof => IngestError::Parse(e.to_string()),
    }
}

fn parse_json(bytes: &[u8], fallback_id: Option<&str>) -> Result<MatchRecord, IngestError> {
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(json_err)?;
    let obj = value
        .as_object()
        .ok_or_else(|| IngestError::Schema("top-level JSON value must be an object".into()))?;
    if obj.contains_key("info") && obj.contains_key("innings") {
        let doc: CsDoc = serde_json::from_value(value).map_err(json_err)?;
        from_cricsheet(doc, fallback_id)
    } else {
        if let Some(schema) = obj.get("schema").and_then(|s| s.as_str()) {
            if schema != NATIVE_SCHEMA {
                return Err(IngestError::Schema(format!("unsupported schema '{schema}'")));
            }
        }
        reject_negative_runs(&value)?;
        serde_json::from_value(value).map_err(json_err)
    }
}

fn reject_negative_runs(v: &serde_json::Value) -> Result<(), IngestError> {
    if let Some(ds) = v.get("innings2").and_then(|d| d.as_array()) {
        for d in ds {
            if d.get("runs").and_then(|r| r.as_i64()).is_some_and(|r| r < 0) {
                return Err(IngestError::IllegalInnings("negative runs on a delivery".into()));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct CsDoc {
    info: CsInfo,
    innings: Vec<CsInnings>,
}

#[derive(Debug, Deserialize)]
struct CsInfo {
    #[serde(default)]
    match_id: Option<String>,
    teams: Vec<String>,
    #[serde(default)]
    venue: Option<String>,
    #[serde(default)]
    city: Option<String>,
    dates: Vec<String>,
    #[serde(default)]
    event: Option<CsEvent>,
    #[serde(default)]
    outcome: Option<CsOutcome>,
    #[serde(default)]
    overs: Option<u32>,
    #[serde(default)]
    home_side: Option<String>,
}

#[derive(Debug, Deserialize)]
struct CsEvent {
    name: String,
}

#[derive(Debug, Default, Deserialize)]
struct CsOutcome {
    #[serde(default)]
    winner: Option<String>,
    #[serde(default)]
    by: Option<CsBy>,
    #[serde(default)]
    result: Option<String>,
}

#[derive(Debug, Deserialize)]
struct CsBy {
    #[serde(default)]
    runs: Option<u32>,
}

#[derive(Debug, Deserialize)]
struct CsInnings {
    team: String,
    #[serde(default)]
    overs: Vec<CsOver>,
    #[serde(default)]
    target: Option<CsTarget>,
    #[serde(default)]
    super_over: bool,
}

#[derive(Debug, Deserialize)]
struct CsTarget {
    #[serde(default)]
    overs: Option<f64>,
    runs: u32,
}

#[derive(Debug, Deserialize)]
struct CsOver {
    over: u32,
    deliveries: Vec<CsDelivery>,
}

#[derive(Debug, Deserialize)]
struct CsDelivery {
    batter: String,
    non_striker: String,
    runs: CsRuns,
    #[serde(default)]
    extras: Option<CsExtras>,
    #[serde(default)]
    wickets: Vec<CsWicket>,
}

#[derive(Debug, Deserialize)]
struct CsRuns {
    batter: i64,
    extras: i64,
    total: i64,
}

#[derive(Debug, Default, Deserialize)]
struct CsExtras {
    #[serde(default)]
    wides: Option<u32>,
    #[serde(default)]
    noballs: Option<u32>,
    #[serde(default)]
    byes: Option<u32>,
    #[serde(default)]
    legbyes: Option<u32>,
    #[serde(default)]
    penalty: Option<u32>,
}

#[derive(Debug, Deserialize)]
struct CsWicket {
    player_out: String,
    #[serde(default)]
    kind: Option<String>,
}

fn counts_as_wicket(kind: Option<&str>) -> bool {
    !matches!(kind, Some("retired hurt") | Some("retired not out"))
}

fn classify_extra(
    wides: bool,
    noballs: bool,
    byes: bool,
    legbyes: bool,
    penalty: bool,
) -> Option<ExtraKind> {
    if wides {
        Some(ExtraKind::Wide)
    } else if noballs {
        Some(ExtraKind::NoBall)
    } else if byes {
        Some(ExtraKind::Bye)
    } else if legbyes {
        Some(ExtraKind::LegBye)
    } else if penalty {
        Some(ExtraKind::Penalty)
    } else {
        None
    }
}

/// Assigns batting positions by order of first appearance at the crease.
#[derive(Default)]
struct BattingOrder {
    positions: HashMap<String, u8>,
}

impl BattingOrder {
    fn see(&mut self, name: &str) -> u8 {
        let next = self.positions.len() as u8 + 1;
        *self.positions.entry(name.to_string()).or_insert(next)
    }
}

fn parse_date(s: &str) -> Result<NaiveDate, IngestError> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map_err(|e| IngestError::Schema(format!("date '{s}': {e}")))
}

fn from_cricsheet(doc: CsDoc, fallback_id: Option<&str>) -> Result<MatchRecord, IngestError> {
    let match_id = doc
        .info
        .match_id
        .clone()
        .or_else(|| fallback_id.map(str::to_string))
        .ok_or_else(|| IngestError::Schema("match has no identifier".into()))?;
    let regular: Vec<&CsInnings> = doc.innings.iter().filter(|i| !i.super_over).collect();
    if regular.len() < 2 {
        return Err(IngestError::Schema("second innings missing".into()));
    }
    let (first, second) = (regular[0], regular[1]);
    let target = match &second.target {
        Some(t) => t.runs,
        None => {
            let mut total: i64 = 0;
            for o in &first.overs {
                for d in &o.deliveries {
                    total += d.runs.total;
                }
            }
            u32::try_from(total + 1)
                .map_err(|_| IngestError::IllegalInnings("negative first-innings total".into()))?
        }
    };
    let total_balls = second
        .target
        .as_ref()
        .and_then(|t| t.overs)
        .map(|o| (o * 6.0).round() as u32)
        .or(doc.info.overs.map(|o| o * 6))
        .unwrap_or(120);

    let mut order = BattingOrder::default();
    let mut deliveries = Vec::new();
    for over in &second.overs {
        for (i, d) in over.deliveries.iter().enumerate() {
            if d.runs.batter < 0 || d.runs.extras < 0 || d.runs.total < 0 {
                return Err(IngestError::IllegalInnings("negative runs on a delivery".into()));
            }
            order.see(&d.batter);
            order.see(&d.non_striker);
            let ex = d.extras.as_ref();
            let extra = classify_extra(
                ex.and_then(|e| e.wides).is_some(),
                ex.and_then(|e| e.noballs).is_some(),
                ex.and_then(|e| e.byes).is_some(),
                ex.and_then(|e| e.legbyes).is_some(),
                ex.and_then(|e| e.penalty).is_some(),
            );
            let mut dismissed = None;
            for w in d.wickets.iter().filter(|w| counts_as_wicket(w.kind.as_deref())) {
                if dismissed.is_some() {
                    return Err(IngestError::IllegalInnings(
                        "two dismissals on one delivery".into(),
                    ));
                }
                dismissed = Some(order.see(&w.player_out));
            }
            deliveries.push(Delivery {
                over: over.over + 1,
                ball: i as u32 + 1,
                runs: d.runs.total as u32,
                extra,
                dismissed_position: dismissed,
            });
        }
    }
    if order.positions.len() > 11 {
        return Err(IngestError::IllegalInnings("more than eleven batters".into()));
    }

    let chasing = second.team.clone();
    let other = doc
        .info
        .teams
        .iter()
        .find(|t| **t != chasing)
        .cloned()
        .unwrap_or_else(|| first.team.clone());
    let runs: u32 = deliveries.iter().map(|d| d.runs).sum();
    let outcome = cricsheet_outcome(doc.info.outcome.as_ref(), &chasing, target, runs);
    let date = doc
        .info
        .dates
        .first()
        .ok_or_else(|| IngestError::Schema("match has no date".into()))?;
    Ok(MatchRecord {
        match_id,
        competition: doc.info.event.map(|e| e.name).unwrap_or_default(),
        date: parse_date(date)?,
        venue: doc.info.venue.or(doc.info.city).unwrap_or_default(),
        home_side: doc.info.home_side,
        teams: [other, chasing],
        target,
        total_balls,
        outcome,
        innings2: deliveries,
    })
}

fn cricsheet_outcome(o: Option<&CsOutcome>, chasing: &str, target: u32, runs: u32) -> Outcome {
    let computed = || {
        if runs >= target {
            Outcome::ChasedWithBallsLeft
        } else if runs + 1 == target {
            Outcome::Tie
        } else {
            Outcome::LostByRuns {
                margin: target - 1 - runs,
            }
        }
    };
    let Some(o) = o else {
        return computed();
    };
    match o.result.as_deref() {
        Some("no result") | Some("abandoned") => return Outcome::NoResult,
        Some("tie") => return Outcome::Tie,
        _ => {}
    }
    match &o.winner {
        Some(w) if w == chasing => Outcome::ChasedWithBallsLeft,
        Some(_) => match o.by.as_ref().and_then(|b| b.runs) {
            Some(margin) => Outcome::LostByRuns { margin },
            None => computed(),
        },
        None => computed(),
    }
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    #[serde(default)]
    match_id: Option<String>,
    #[serde(default)]
    competition: String,
    date: String,
    #[serde(default)]
    venue: String,
    #[serde(default)]
    home_side: Option<String>,
    batting_team: String,
    bowling_team: String,
    target: u32,
    #[serde(default)]
    total_balls: Option<u32>,
    outcome: String,
    #[serde(default)]
    margin: Option<u32>,
    innings: u32,
    ball: String,
    striker: String,
    non_striker: String,
    runs_off_bat: i64,
    extras: i64,
    #[serde(default)]
    wides: Option<u32>,
    #[serde(default)]
    noballs: Option<u32>,
    #[serde(default)]
    byes: Option<u32>,
    #[serde(default)]
    legbyes: Option<u32>,
    #[serde(default)]
    player_dismissed: Option<String>,
}

fn csv_err(e: csv::Error) -> IngestError {
    match e.kind() {
        csv::ErrorKind::Deserialize { .. } => IngestError::Schema(e.to_string()),
        _ => IngestError::Parse(e.to_string()),
    }
}

fn parse_csv(bytes: &[u8], fallback_id: Option<&str>) -> Result<MatchRecord, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut rows = Vec::new();
    for r in rdr.deserialize::<CsvRow>() {
        let r = r.map_err(csv_err)?;
        if r.innings == 2 {
            rows.push(r);
        }
    }
    let first = rows
        .first()
        .ok_or_else(|| IngestError::Schema("no second-innings rows".into()))?;
    let match_id = first
        .match_id
        .clone()
        .filter(|s| !s.is_empty())
        .or_else(|| fallback_id.map(str::to_string))
        .ok_or_else(|| IngestError::Schema("match has no identifier".into()))?;
    let outcome = match first.outcome.as_str() {
        "chased" | "won" => Outcome::ChasedWithBallsLeft,
        "lost" => Outcome::LostByRuns {
            margin: first
                .margin
                .ok_or_else(|| IngestError::Schema("lost outcome without margin".into()))?,
        },
        "tie" => Outcome::Tie,
        "no_result" => Outcome::NoResult,
        other => return Err(IngestError::Schema(format!("unknown outcome '{other}'"))),
    };

    let mut order = BattingOrder::default();
    let mut deliveries = Vec::with_capacity(rows.len());
    let mut last_over = None;
    let mut ball_in_over = 0;
    for r in &rows {
        if r.runs_off_bat < 0 || r.extras < 0 {
            return Err(IngestError::IllegalInnings("negative runs on a delivery".into()));
        }
        let over_idx: u32 = r
            .ball
            .split('.')
            .next()
            .and_then(|o| o.parse().ok())
            .ok_or_else(|| IngestError::Parse(format!("bad ball label '{}'", r.ball)))?;
        if last_over != Some(over_idx) {
            ball_in_over = 0;
            last_over = Some(over_idx);
        }
        ball_in_over += 1;
        order.see(&r.striker);
        order.see(&r.non_striker);
        let extra = classify_extra(
            r.wides.unwrap_or(0) > 0,
            r.noballs.unwrap_or(0) > 0,
            r.byes.unwrap_or(0) > 0,
            r.legbyes.unwrap_or(0) > 0,
            false,
        );
        let dismissed = r
            .player_dismissed
            .as_deref()
            .filter(|p| !p.is_empty())
            .map(|p| order.see(p));
        deliveries.push(Delivery {
            over: over_idx + 1,
            ball: ball_in_over,
            runs: (r.runs_off_bat + r.extras) as u32,
            extra,
            dismissed_position: dismissed,
        });
    }
    if order.positions.len() > 11 {
        return Err(IngestError::IllegalInnings("more than eleven batters".into()));
    }
    Ok(MatchRecord {
        match_id,
        competition: first.competition.clone(),
        date: parse_date(&first.date)?,
        venue: first.venue.clone(),
        home_side: first.home_side.clone().filter(|s| !s.is_empty()),
        teams: [first.bowling_team.clone(), first.batting_team.clone()],
        target: first.target,
        total_balls: first.total_balls.unwrap_or(120),
        outcome,
        innings2: deliveries,
    })
}
