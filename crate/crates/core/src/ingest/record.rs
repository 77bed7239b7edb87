use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::pi::{ChaseContext, InningsState, BALLS_PER_OVER, MAX_WICKETS};

/// Result of the second innings from the chasing side's point of view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Outcome {
    #[serde(rename = "chased")]
    ChasedWithBallsLeft,
    LostByRuns { margin: u32 },
    Tie,
    NoResult,
}

impl Outcome {
    pub fn won(self) -> bool {
        matches!(self, Outcome::ChasedWithBallsLeft)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtraKind {
    Wide,
    NoBall,
    Bye,
    LegBye,
    Penalty,
}

/// One delivery of the chase, already normalised.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delivery {
    /// 1-based over number.
    pub over: u32,
    /// 1-based index of the delivery within its over, counting illegal balls.
    pub ball: u32,
    /// Total runs off the delivery, extras included.
    pub runs: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extra: Option<ExtraKind>,
    /// Batting position of the batter dismissed on this delivery.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dismissed_position: Option<u8>,
}

impl Delivery {
    /// Wides and no-balls do not count toward the balls faced.
    pub fn is_legal(&self) -> bool {
        !matches!(self.extra, Some(ExtraKind::Wide | ExtraKind::NoBall))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub match_id: String,
    pub competition: String,
    pub date: NaiveDate,
    pub venue: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub home_side: Option<String>,
    /// Side batting first, then the chasing side.
    pub teams: [String; 2],
    pub target: u32,
    #[serde(default = "default_total_balls")]
    pub total_balls: u32,
    pub outcome: Outcome,
    pub innings2: Vec<Delivery>,
}

fn default_total_balls() -> u32 {
    120
}

impl MatchRecord {
    pub fn chasing_team(&self) -> &str {
        &self.teams[1]
    }

    pub fn context(&self) -> Result<ChaseContext, IngestError> {
        ChaseContext::new(self.target, self.total_balls)
            .map_err(|e| IngestError::Schema(e.to_string()))
    }

    pub fn legal_balls(&self) -> u32 {
        self.innings2.iter().filter(|d| d.is_legal()).count() as u32
    }

    pub fn runs(&self) -> u32 {
        self.innings2.iter().map(|d| d.runs).sum()
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        self.context()?;
        let mut last_over = 0;
        let mut dismissed = Vec::new();
        for d in &self.innings2 {
            if d.over < last_over {
                return Err(IngestError::IllegalInnings(format!(
                    "over {} follows over {last_over}",
                    d.over
                )));
            }
            if d.over == 0 {
                return Err(IngestError::IllegalInnings("over numbers are 1-based".into()));
            }
            last_over = d.over;
            if let Some(p) = d.dismissed_position {
                if !(1..=11).contains(&p) || dismissed.contains(&p) {
                    return Err(IngestError::IllegalInnings(format!(
                        "invalid or repeated dismissed position {p}"
                    )));
                }
                dismissed.push(p);
            }
        }
        if dismissed.len() > MAX_WICKETS {
            return Err(IngestError::IllegalInnings(format!(
                "{} dismissals",
                dismissed.len()
            )));
        }
        if self.legal_balls() > self.total_balls {
            return Err(IngestError::IllegalInnings(format!(
                "{} legal balls exceeds the {} available",
                self.legal_balls(),
                self.total_balls
            )));
        }
        Ok(())
    }

    /// Cumulative state at the end of every over that was started, in order.
    /// An innings that ends mid-over contributes its partial final over.
    pub fn over_end_states(&self) -> Result<Vec<(u32, InningsState)>, IngestError> {
        let mut out: Vec<(u32, InningsState)> = Vec::new();
        let mut st = InningsState::default();
        let mut current: Option<u32> = None;
        for d in &self.innings2 {
            if current.is_some_and(|o| o != d.over) {
                out.push((current.unwrap(), st.clone()));
            }
            current = Some(d.over);
            st.runs_scored += d.runs;
            if d.is_legal() {
                st.balls_faced += 1;
            }
            if let Some(p) = d.dismissed_position {
                st.dismissed_positions.push(p);
            }
        }
        if let Some(o) = current {
            out.push((o, st));
        }
        for (i, (over, _)) in out.iter().enumerate() {
            if *over != i as u32 + 1 {
                return Err(IngestError::IllegalInnings(format!(
                    "over {} missing from the ball-by-ball record",
                    i + 1
                )));
            }
        }
        Ok(out)
    }

    /// Overs batted as `(complete overs, balls into the next)`.
    pub fn overs_batted(&self) -> (u32, u32) {
        let b = self.legal_balls();
        (b / BALLS_PER_OVER, b % BALLS_PER_OVER)
    }
}
