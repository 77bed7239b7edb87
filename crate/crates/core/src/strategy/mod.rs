//! Zone-based recommendations for the chasing side.
//!
//! After over `t` the last `k` over-end PI values predict the PI at the end
//! of over `t + 1`. The expected value is looked up in the zone table for
//! that over's phase and the chasing side's venue class, and the zone picks
//! one of four coaching scripts. Deep in the Avoid zone the recommendation
//! also carries the runs needed next over to pull PI back to the edge of
//! the Acceptable band.

mod table;

pub use table::{default_zone_table, VenueClass, Zone, ZoneRow, ZoneTable};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::Interval;
use crate::markov::Prediction;
use crate::models::{ModelSet, ModelSetError};
use crate::phase::Phase;
use crate::pi::{compute_irrr, pressure_factor, ChaseContext, InningsState, PiCalculator, PiError};

pub const MSG_TARGET: &str = "Target Zone - Maintain aggressive scoring";
pub const MSG_ACCEPTABLE: &str = "Acceptable Zone - Continue current approach";
pub const MSG_CAREFUL: &str = "Acceptable/Risky - Accelerate carefully";
pub const MSG_AVOID: &str = "Avoid Zone - High risk, need immediate acceleration";
pub const MSG_ACHIEVED: &str = "target achieved";

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("zone table: {0}")]
    Table(String),
    #[error("invalid match state: {0}")]
    State(String),
    #[error(transparent)]
    Model(#[from] ModelSetError),
    #[error(transparent)]
    Pi(#[from] PiError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Why a recommendation does or does not carry a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecommendationStatus {
    Predicted,
    InsufficientHistory,
    TargetAchieved,
    InningsComplete,
}

/// Coaching script for a zone. Acceptable rows above 1.5 in the death
/// overs read as a call to accelerate carefully.
pub fn zone_message(zone: Zone, phase: Phase, pi: f64) -> &'static str {
    match zone {
        Zone::Target => MSG_TARGET,
        Zone::Acceptable if phase == Phase::DeathOvers && pi >= 1.5 => MSG_CAREFUL,
        Zone::Acceptable => MSG_ACCEPTABLE,
        Zone::Risky => MSG_CAREFUL,
        Zone::Avoid => MSG_AVOID,
    }
}

/// State of a live chase after `over` completed overs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchState {
    pub context: ChaseContext,
    pub venue: VenueClass,
    /// Completed overs.
    pub over: u32,
    /// Over-end PI of the most recent completed overs, oldest first; the
    /// last entry belongs to `over`. Only the last `k` are used.
    pub history: Vec<f64>,
    /// Cumulative innings state at the end of `over`, needed for the
    /// run-rate hint.
    pub innings: Option<InningsState>,
}

impl MatchState {
    /// A state holding the full over-by-over history.
    pub fn from_history(context: ChaseContext, venue: VenueClass, history: Vec<f64>, innings: Option<InningsState>) -> Self {
        Self {
            context,
            venue,
            over: history.len() as u32,
            history,
            innings,
        }
    }

    pub fn current_pi(&self) -> f64 {
        self.history.last().copied().unwrap_or(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub status: RecommendationStatus,
    /// Completed overs.
    pub over: u32,
    /// Phase whose table row was used.
    pub phase: Phase,
    pub venue: VenueClass,
    pub current_pi: f64,
    pub predicted: Option<Prediction>,
    pub zone: Zone,
    pub message: String,
    pub target_band: Interval,
    /// Runs needed in the next over to bring PI down to the upper edge of
    /// the target band, given only when the predicted zone is Avoid.
    pub required_run_rate_hint: Option<f64>,
}

/// Builds the recommendation for the next over.
pub fn recommend(
    state: &MatchState,
    models: &ModelSet,
    table: &ZoneTable,
    calc: &PiCalculator,
    confidence: f64,
) -> Result<Recommendation, StrategyError> {
    let t = state.over;
    let current_pi = state.current_pi();
    let scheme = models.scheme();
    let k = models.order();
    let venue = state.venue;
    if state.history.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(StrategyError::State("PI values must be finite and non-negative".into()));
    }
    if state.history.len() > t as usize {
        return Err(StrategyError::State(format!(
            "{} PI values for {t} completed overs",
            state.history.len()
        )));
    }
    if t > 0 && current_pi == 0.0 {
        let phase = scheme.phase_of(t);
        return Ok(Recommendation {
            status: RecommendationStatus::TargetAchieved,
            over: t,
            phase,
            venue,
            current_pi,
            predicted: None,
            zone: Zone::Target,
            message: MSG_ACHIEVED.into(),
            target_band: Interval::new(0.0, 0.0),
            required_run_rate_hint: None,
        });
    }
    let complete = t >= state.context.total_overs()
        || state.innings.as_ref().is_some_and(|s| {
            s.wickets_lost() >= 10 || s.balls_faced >= state.context.total_balls()
        });
    if state.history.len() < k || complete {
        let phase = scheme.phase_of(t.max(1));
        let zone = table.classify(phase, venue, current_pi);
        let status = if complete {
            RecommendationStatus::InningsComplete
        } else {
            RecommendationStatus::InsufficientHistory
        };
        return Ok(Recommendation {
            status,
            over: t,
            phase,
            venue,
            current_pi,
            predicted: None,
            zone,
            message: zone_message(zone, phase, current_pi).into(),
            target_band: table.target_band(phase, venue),
            required_run_rate_hint: None,
        });
    }
    let next = t + 1;
    let phase = scheme.phase_of(next);
    let recent = &state.history[state.history.len() - k..];
    let p = models.predict(recent, next, confidence)?;
    let zone = table.classify(phase, venue, p.expected_pi);
    let band = table.target_band(phase, venue);
    let hint = match (zone, &state.innings, band.hi) {
        (Zone::Avoid, Some(st), Some(edge)) => Some(required_runs_next_over(&state.context, st, calc, edge)?),
        _ => None,
    };
    Ok(Recommendation {
        status: RecommendationStatus::Predicted,
        over: t,
        phase,
        venue,
        current_pi,
        message: zone_message(zone, phase, p.expected_pi).into(),
        predicted: Some(p),
        zone,
        target_band: band,
        required_run_rate_hint: hint,
    })
}

/// PI after scoring `runs` (possibly fractional) more in the next over with
/// no further wickets.
pub fn pi_after_next_over(ctx: &ChaseContext, st: &InningsState, calc: &PiCalculator, runs: f64) -> f64 {
    let total = f64::from(st.runs_scored) + runs;
    let needed = f64::from(ctx.target()) - total;
    if needed <= 0.0 {
        return 0.0;
    }
    let balls = (st.balls_faced + 6).min(ctx.total_balls());
    let balls_left = ctx.total_balls() - balls;
    let crrr = needed * 6.0 / f64::from(balls_left.max(1));
    let factor = pressure_factor(ctx, balls_left, &st.dismissed_positions, &calc.weights, &calc.resources);
    (crrr / compute_irrr(ctx) * factor).max(0.0)
}

/// Runs in the next over, holding wickets fixed, at which PI falls to `edge`.
pub fn required_runs_next_over(
    ctx: &ChaseContext,
    st: &InningsState,
    calc: &PiCalculator,
    edge: f64,
) -> Result<f64, StrategyError> {
    st.validate(ctx)?;
    if st.runs_scored >= ctx.target() {
        return Ok(0.0);
    }
    if st.balls_faced >= ctx.total_balls() {
        return Err(PiError::BallsExhausted.into());
    }
    let f = |r: f64| pi_after_next_over(ctx, st, calc, r) - edge;
    if f(0.0) <= 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, f64::from(ctx.target() - st.runs_scored));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 {
            break;
        }
    }
    Ok(hi)
}
