//! Pressure Index for the side batting second.
//!
//! The index combines the ratio of current to initial required run rate with
//! the batting resources consumed (from a Duckworth-Lewis style resource
//! table) and the position-weighted wickets lost:
//!
//! ```text
//! PI = (CRRR / IRRR) * 1/2 * (exp(RU / 100) + exp(sum(w_i) / 11))
//! ```
//!
//! PI is exactly 1 at the start of a chase and is censored to 0 once the
//! target has been reached.

mod resources;
mod weights;

pub use resources::{ResourceTable, ResourceTableError};
pub use weights::{WicketWeights, WeightsError, LEMMER_WEIGHTS};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const BALLS_PER_OVER: u32 = 6;
pub const MAX_WICKETS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PiError {
    #[error("invalid chase context: {0}")]
    InvalidContext(String),
    #[error("invalid innings state: {0}")]
    InvalidState(String),
    #[error("all balls bowled without reaching the target; required rate is undefined")]
    BallsExhausted,
    #[error("target already reached")]
    TargetReached,
    #[error("cumulative innings state decreased at over {over}")]
    NonMonotoneInnings { over: usize },
}

/// Target and ball budget of a second innings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChaseContext {
    target: u32,
    total_balls: u32,
}

impl ChaseContext {
    pub fn new(target: u32, total_balls: u32) -> Result<Self, PiError> {
        if target < 1 {
            return Err(PiError::InvalidContext("target must be at least 1".into()));
        }
        if total_balls < BALLS_PER_OVER || total_balls % BALLS_PER_OVER != 0 {
            return Err(PiError::InvalidContext(format!(
                "total balls must be a positive multiple of 6, got {total_balls}"
            )));
        }
        Ok(Self {
            target,
            total_balls,
        })
    }

    /// A full twenty-over chase.
    pub fn t20(target: u32) -> Result<Self, PiError> {
        Self::new(target, 120)
    }

    pub fn target(&self) -> u32 {
        self.target
    }

    pub fn total_balls(&self) -> u32 {
        self.total_balls
    }

    pub fn total_overs(&self) -> u32 {
        self.total_balls / BALLS_PER_OVER
    }
}

/// Cumulative state of the chase at some point in the innings.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InningsState {
    pub runs_scored: u32,
    pub balls_faced: u32,
    /// Batting positions (1..=11) of the dismissed batters, in order of dismissal.
    pub dismissed_positions: Vec<u8>,
}

impl InningsState {
    pub fn new(runs_scored: u32, balls_faced: u32, dismissed_positions: Vec<u8>) -> Self {
        Self {
            runs_scored,
            balls_faced,
            dismissed_positions,
        }
    }

    pub fn wickets_lost(&self) -> usize {
        self.dismissed_positions.len()
    }

    pub fn validate(&self, ctx: &ChaseContext) -> Result<(), PiError> {
        if self.balls_faced > ctx.total_balls {
            return Err(PiError::InvalidState(format!(
                "{} balls faced exceeds the {} available",
                self.balls_faced, ctx.total_balls
            )));
        }
        if self.dismissed_positions.len() > MAX_WICKETS {
            return Err(PiError::InvalidState(
                "more than ten batters dismissed".into(),
            ));
        }
        let mut seen = [false; 12];
        for &p in &self.dismissed_positions {
            if !(1..=11).contains(&p) {
                return Err(PiError::InvalidState(format!(
                    "batting position {p} outside 1..=11"
                )));
            }
            if seen[p as usize] {
                return Err(PiError::InvalidState(format!(
                    "batting position {p} dismissed twice"
                )));
            }
            seen[p as usize] = true;
        }
        Ok(())
    }
}

/// Censored Pressure Index value (never negative).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PiValue(f64);

impl PiValue {
    pub const ZERO: PiValue = PiValue(0.0);

    /// Applies `max(pi, 0)`.
    pub fn censored(raw: f64) -> Self {
        PiValue(if raw > 0.0 { raw } else { 0.0 })
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }

    /// Presentation value, half-up to two decimals.
    pub fn rounded(self) -> f64 {
        round_half_up(self.0, 2)
    }
}

impl From<PiValue> for f64 {
    fn from(v: PiValue) -> f64 {
        v.0
    }
}

pub fn round_half_up(x: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    // nudge by a few ulps so values like 1.005 printed from binary still round up
    ((x * scale) + 0.5 + 1e-9).floor() / scale
}

/// Initial required run rate, runs per over.
pub fn compute_irrr(ctx: &ChaseContext) -> f64 {
    f64::from(ctx.target) * 6.0 / f64::from(ctx.total_balls)
}

/// Current required run rate, runs per over.
pub fn compute_crrr(ctx: &ChaseContext, st: &InningsState) -> Result<f64, PiError> {
    if st.runs_scored >= ctx.target {
        return Err(PiError::TargetReached);
    }
    if st.balls_faced >= ctx.total_balls {
        return Err(PiError::BallsExhausted);
    }
    let runs_needed = f64::from(ctx.target - st.runs_scored);
    let balls_left = f64::from(ctx.total_balls - st.balls_faced);
    Ok(runs_needed * 6.0 / balls_left)
}

/// Everything needed to evaluate the index: weights plus resource table.
#[derive(Debug, Clone)]
pub struct PiCalculator {
    pub weights: WicketWeights,
    pub resources: ResourceTable,
}

impl Default for PiCalculator {
    fn default() -> Self {
        Self {
            weights: WicketWeights::default(),
            resources: ResourceTable::bundled(),
        }
    }
}

impl PiCalculator {
    pub fn new(weights: WicketWeights, resources: ResourceTable) -> Self {
        Self { weights, resources }
    }

    pub fn pi(&self, ctx: &ChaseContext, st: &InningsState) -> Result<PiValue, PiError> {
        compute_pi(ctx, st, &self.weights, &self.resources)
    }

    pub fn sequence(
        &self,
        ctx: &ChaseContext,
        over_end_states: &[InningsState],
    ) -> Result<Vec<PiValue>, PiError> {
        pi_sequence(ctx, over_end_states, &self.weights, &self.resources)
    }
}

/// The two-term pressure multiplier `1/2 (e^{RU/100} + e^{sum w / 11})`.
pub(crate) fn pressure_factor(
    ctx: &ChaseContext,
    balls_left: u32,
    dismissed: &[u8],
    weights: &WicketWeights,
    resources: &ResourceTable,
) -> f64 {
    let used = resources.used_pct(ctx.total_balls, balls_left, dismissed.len());
    let wicket_sum = weights.sum(dismissed);
    0.5 * ((used / 100.0).exp() + (wicket_sum / 11.0).exp())
}

pub fn compute_pi(
    ctx: &ChaseContext,
    st: &InningsState,
    weights: &WicketWeights,
    resources: &ResourceTable,
) -> Result<PiValue, PiError> {
    st.validate(ctx)?;
    let crrr = match compute_crrr(ctx, st) {
        Ok(v) => v,
        Err(PiError::TargetReached) => return Ok(PiValue::ZERO),
        Err(e) => return Err(e),
    };
    let ratio = crrr / compute_irrr(ctx);
    let factor = pressure_factor(
        ctx,
        ctx.total_balls - st.balls_faced,
        &st.dismissed_positions,
        weights,
        resources,
    );
    Ok(PiValue::censored(ratio * factor))
}

/// PI for the closing state of a chase that used every ball without
/// reaching the target. The required rate is undefined there, so the rate is
/// evaluated as if a single ball remained; the result is large and positive.
pub fn terminal_pi(
    ctx: &ChaseContext,
    st: &InningsState,
    weights: &WicketWeights,
    resources: &ResourceTable,
) -> Result<PiValue, PiError> {
    st.validate(ctx)?;
    if st.runs_scored >= ctx.target {
        return Ok(PiValue::ZERO);
    }
    let balls_left = (ctx.total_balls - st.balls_faced).max(1);
    let crrr = f64::from(ctx.target - st.runs_scored) * 6.0 / f64::from(balls_left);
    let ratio = crrr / compute_irrr(ctx);
    let factor = pressure_factor(
        ctx,
        ctx.total_balls - st.balls_faced,
        &st.dismissed_positions,
        weights,
        resources,
    );
    Ok(PiValue::censored(ratio * factor))
}

/// Censored PI at each supplied over boundary.
///
/// `over_end_states` must be cumulative. The final entry may be the state
/// at which the innings ended mid-over; once the target is reached every
/// later entry is 0. A final state with every ball bowled short of the
/// target is evaluated with [`terminal_pi`].
pub fn pi_sequence(
    ctx: &ChaseContext,
    over_end_states: &[InningsState],
    weights: &WicketWeights,
    resources: &ResourceTable,
) -> Result<Vec<PiValue>, PiError> {
    let mut out = Vec::with_capacity(over_end_states.len());
    let mut prev: Option<&InningsState> = None;
    for (i, st) in over_end_states.iter().enumerate() {
        if let Some(p) = prev {
            let wickets_shrank = st.dismissed_positions.len() < p.dismissed_positions.len()
                || st.dismissed_positions[..p.dismissed_positions.len()] != p.dismissed_positions[..];
            if st.runs_scored < p.runs_scored || st.balls_faced < p.balls_faced || wickets_shrank {
                return Err(PiError::NonMonotoneInnings { over: i + 1 });
            }
        }
        let reached = prev.is_some_and(|p| p.runs_scored >= ctx.target);
        let v = if reached {
            PiValue::ZERO
        } else {
            match compute_pi(ctx, st, weights, resources) {
                Ok(v) => v,
                Err(PiError::BallsExhausted) => terminal_pi(ctx, st, weights, resources)?,
                Err(e) => return Err(e),
            }
        };
        out.push(v);
        prev = Some(st);
    }
    Ok(out)
}
