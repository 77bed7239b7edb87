//! Order-k Markov chains over discretised over-end PI values.
//!
//! PI values are rounded to a grid of step δ and stored as integer grid
//! indices, so equality of states never depends on floating-point noise.
//! Zero is absorbing: once a sequence reaches the zero cell every later
//! value is treated as zero, which keeps the censored terminal state closed
//! even when a small positive PI rounds down to zero.

mod model;
mod predict;
mod select;
mod sparsity;

pub use model::{build_transitions, ModelMetadata, Row, TransitionModel, MODEL_FORMAT};
pub use predict::{Prediction, PredictionSource, PredictiveDistribution, MIN_EMPIRICAL_COUNT};
pub use select::{
    log_likelihood, select_order, split_by_match, Likelihood, ModelSelectionReport, OrderStats,
    Split,
};
pub use sparsity::{state_coverage, sparsity_report, SparsityReport, TopTransition};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phase::Phase;

/// Grid steps examined by the precision sweep.
pub const PRECISION_SWEEP: [f64; 5] = [0.01, 0.05, 0.1, 0.25, 0.5];

#[derive(Debug, Error)]
pub enum MarkovError {
    #[error("no sequence is long enough to yield a transition")]
    EmptyCorpus,
    #[error("model order must be at least 1")]
    InvalidOrder,
    #[error("precision must be a positive finite number, got {0}")]
    InvalidPrecision(f64),
    #[error("split fraction must lie in (0, 1), got {0}")]
    InvalidSplit(f64),
    #[error("the {0} split holds no transitions")]
    EmptySplit(&'static str),
    #[error("expected {expected} recent values, got {got}")]
    WrongHistory { expected: usize, got: usize },
    #[error("over {over} lies outside the {phase} phase of this model")]
    ModelPhaseMismatch { over: u32, phase: Phase },
    #[error("state not in the model and no gamma fallback supplied")]
    NoFallback,
    #[error("confidence must lie in (0, 1), got {0}")]
    InvalidConfidence(f64),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("model file: {0}")]
    Format(String),
}

/// Rounds PI to the nearest multiple of δ, halves rounding up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discretizer {
    precision: f64,
}

impl Default for Discretizer {
    fn default() -> Self {
        Self { precision: 0.1 }
    }
}

impl Discretizer {
    pub fn new(precision: f64) -> Result<Self, MarkovError> {
        if precision.is_finite() && precision > 0.0 {
            Ok(Self { precision })
        } else {
            Err(MarkovError::InvalidPrecision(precision))
        }
    }

    pub fn precision(&self) -> f64 {
        self.precision
    }

    /// Grid index of `x`; negative input is treated as censored zero.
    pub fn index(&self, x: f64) -> u32 {
        if !(x > 0.0) {
            return 0;
        }
        // the epsilon keeps exact halves such as 1.15 / 0.1 = 11.499999... on the upper side
        (x / self.precision + 0.5 + 1e-9).floor() as u32
    }

    pub fn value(&self, index: u32) -> f64 {
        f64::from(index) * self.precision
    }

    pub fn discretize(&self, x: f64) -> f64 {
        self.value(self.index(x))
    }

    /// Grid indices of a whole sequence with zero made absorbing.
    pub fn states(&self, values: &[f64]) -> Vec<u32> {
        let mut absorbed = false;
        values
            .iter()
            .map(|&v| {
                if absorbed {
                    return 0;
                }
                let i = self.index(v);
                absorbed = i == 0;
                i
            })
            .collect()
    }
}
