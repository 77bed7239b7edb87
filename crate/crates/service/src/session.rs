//! Live chase sessions.
//!
//! A session records cumulative over-end states as the coach enters them,
//! one over at a time. Each accepted over yields the current PI and the
//! recommendation for the next over. The session keeps the engine it was
//! created with, so reloading models never changes the numbers of a match
//! already in progress.

use std::sync::Arc;

use chasepi_core::ingest::HomeAway;
use chasepi_core::pi::{terminal_pi, ChaseContext, InningsState, PiError};
use chasepi_core::strategy::{recommend, MatchState, Recommendation, VenueClass, Zone};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::Engine;

pub const BALLS_PER_OVER: u32 = 6;

#[derive(Debug, Error, PartialEq)]
pub enum SessionError {
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Internal(String),
}

fn default_total_balls() -> u32 {
    120
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateSession {
    pub target: u32,
    #[serde(default = "default_total_balls")]
    pub total_balls: u32,
    pub venue: HomeAway,
}

/// One over as entered by the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverEntry {
    /// 1-based over number; must follow the last accepted over.
    pub over: u32,
    /// Cumulative runs at the end of the over.
    pub runs: u32,
    /// Batting positions dismissed during this over.
    #[serde(default)]
    pub dismissed: Vec<u8>,
    /// Legal balls bowled in the over; fewer than six only when the
    /// innings ended inside it.
    #[serde(default)]
    pub balls: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChaseResult {
    Won,
    Lost,
    Tied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverRecord {
    pub entry: OverEntry,
    pub state: InningsState,
    pub pi: f64,
    pub recommendation: Recommendation,
}

/// Reply to an accepted (or hypothetical) over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverResponse {
    pub over: u32,
    pub runs: u32,
    pub wickets: usize,
    pub current_pi: f64,
    pub terminal: bool,
    pub result: Option<ChaseResult>,
    pub recommendation: Recommendation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub over: u32,
    pub runs: u32,
    pub wickets: usize,
    pub pi: f64,
    pub wicket_fell: bool,
    pub zone: Zone,
}

/// Read-only snapshot of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub target: u32,
    pub total_balls: u32,
    pub venue: HomeAway,
    pub venue_class: VenueClass,
    pub created_at: DateTime<Utc>,
    /// PI before the first ball.
    pub origin_pi: f64,
    pub current_pi: f64,
    pub trajectory: Vec<TrajectoryPoint>,
    pub recommendations: Vec<Recommendation>,
    pub terminal: bool,
    pub result: Option<ChaseResult>,
    pub won: bool,
}

#[derive(Debug, Clone)]
pub struct LiveSession {
    pub id: String,
    pub context: ChaseContext,
    pub venue: HomeAway,
    pub created_at: DateTime<Utc>,
    engine: Arc<Engine>,
    overs: Vec<OverRecord>,
    result: Option<ChaseResult>,
}

impl LiveSession {
    pub fn new(
        id: String,
        req: &CreateSession,
        engine: Arc<Engine>,
        created_at: DateTime<Utc>,
    ) -> Result<Self, SessionError> {
        let context = ChaseContext::new(req.target, req.total_balls)
            .map_err(|e| SessionError::BadRequest(e.to_string()))?;
        Ok(Self {
            id,
            context,
            venue: req.venue,
            created_at,
            engine,
            overs: Vec::new(),
            result: None,
        })
    }

    pub fn engine(&self) -> &Arc<Engine> {
        &self.engine
    }

    pub fn overs(&self) -> &[OverRecord] {
        &self.overs
    }

    pub fn is_terminal(&self) -> bool {
        self.result.is_some()
    }

    fn last_state(&self) -> InningsState {
        self.overs.last().map(|o| o.state.clone()).unwrap_or_default()
    }

    /// Scores an over against the current history without storing it.
    fn score(&self, entry: &OverEntry) -> Result<(OverRecord, Option<ChaseResult>), SessionError> {
        if let Some(r) = self.result {
            return Err(SessionError::Conflict(format!(
                "innings is over ({r:?}); no further overs accepted"
            )));
        }
        let expected = self.overs.len() as u32 + 1;
        if entry.over != expected {
            return Err(SessionError::Conflict(format!(
                "expected over {expected}, got {}",
                entry.over
            )));
        }
        let prev = self.last_state();
        if entry.runs < prev.runs_scored {
            return Err(SessionError::BadRequest(format!(
                "cumulative runs fell from {} to {}",
                prev.runs_scored, entry.runs
            )));
        }
        let balls = entry.balls.unwrap_or(BALLS_PER_OVER);
        if balls > BALLS_PER_OVER {
            return Err(SessionError::BadRequest(format!("{balls} legal balls in one over")));
        }
        let mut dismissed = prev.dismissed_positions.clone();
        dismissed.extend_from_slice(&entry.dismissed);
        let state = InningsState::new(entry.runs, prev.balls_faced + balls, dismissed);
        state
            .validate(&self.context)
            .map_err(|e| SessionError::BadRequest(e.to_string()))?;

        let ctx = &self.context;
        let reached = state.runs_scored >= ctx.target();
        let exhausted = state.balls_faced >= ctx.total_balls();
        let all_out = state.wickets_lost() >= 10;
        if balls < BALLS_PER_OVER && !(reached || all_out) {
            return Err(SessionError::BadRequest(
                "a short over must end the innings".into(),
            ));
        }
        let calc = &self.engine.calc;
        let pi = match calc.pi(ctx, &state) {
            Ok(v) => v.value(),
            Err(PiError::BallsExhausted) => terminal_pi(ctx, &state, &calc.weights, &calc.resources)
                .map_err(|e| SessionError::Internal(e.to_string()))?
                .value(),
            Err(e) => return Err(SessionError::BadRequest(e.to_string())),
        };
        let result = if reached {
            Some(ChaseResult::Won)
        } else if exhausted || all_out {
            if state.runs_scored + 1 == ctx.target() {
                Some(ChaseResult::Tied)
            } else {
                Some(ChaseResult::Lost)
            }
        } else {
            None
        };
        let mut history: Vec<f64> = self.overs.iter().map(|o| o.pi).collect();
        history.push(pi);
        let engine = &self.engine;
        let recommendation = recommend(
            &MatchState::from_history(*ctx, VenueClass::from(self.venue), history, Some(state.clone())),
            &engine.models,
            &engine.zones,
            calc,
            engine.confidence,
        )
        .map_err(|e| SessionError::Internal(e.to_string()))?;
        Ok((
            OverRecord {
                entry: entry.clone(),
                state,
                pi,
                recommendation,
            },
            result,
        ))
    }

    fn response(rec: &OverRecord, result: Option<ChaseResult>) -> OverResponse {
        OverResponse {
            over: rec.entry.over,
            runs: rec.state.runs_scored,
            wickets: rec.state.wickets_lost(),
            current_pi: rec.pi,
            terminal: result.is_some(),
            result,
            recommendation: rec.recommendation.clone(),
        }
    }

    pub fn append(&mut self, entry: &OverEntry) -> Result<OverResponse, SessionError> {
        let (rec, result) = self.score(entry)?;
        let resp = Self::response(&rec, result);
        self.overs.push(rec);
        self.result = result;
        Ok(resp)
    }

    /// What the session would answer for `entry`, leaving it unchanged.
    pub fn what_if(&self, entry: &OverEntry) -> Result<OverResponse, SessionError> {
        let (rec, result) = self.score(entry)?;
        Ok(Self::response(&rec, result))
    }

    pub fn view(&self) -> SessionView {
        let mut prev_w = 0;
        let trajectory = self
            .overs
            .iter()
            .map(|o| {
                let w = o.state.wickets_lost();
                let p = TrajectoryPoint {
                    over: o.entry.over,
                    runs: o.state.runs_scored,
                    wickets: w,
                    pi: o.pi,
                    wicket_fell: w > prev_w,
                    zone: o.recommendation.zone,
                };
                prev_w = w;
                p
            })
            .collect();
        SessionView {
            session_id: self.id.clone(),
            target: self.context.target(),
            total_balls: self.context.total_balls(),
            venue: self.venue,
            venue_class: VenueClass::from(self.venue),
            created_at: self.created_at,
            origin_pi: 1.0,
            current_pi: self.overs.last().map_or(1.0, |o| o.pi),
            trajectory,
            recommendations: self.overs.iter().map(|o| o.recommendation.clone()).collect(),
            terminal: self.is_terminal(),
            result: self.result,
            won: self.result == Some(ChaseResult::Won),
        }
    }
}
