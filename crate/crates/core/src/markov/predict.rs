use serde::{Deserialize, Serialize};

use super::model::Row;
use super::{MarkovError, TransitionModel};
use crate::distfit::Gamma;

/// Rows with fewer observations take their interval from the gamma fallback.
pub const MIN_EMPIRICAL_COUNT: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionSource {
    MarkovExact,
    MarkovSumMatched,
    GammaFallback,
}

impl PredictionSource {
    pub fn is_markov(self) -> bool {
        !matches!(self, PredictionSource::GammaFallback)
    }
}

/// Predictive law of the next over-end PI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictiveDistribution {
    /// All mass on one value (the absorbed zero state).
    Point { value: f64 },
    /// Next-state probabilities of a transition row, in increasing state order.
    Discrete { states: Vec<(f64, f64)> },
    /// `max(0, X + shift)` with `X ~ Gamma(shape, rate)`.
    ShiftedGamma { shape: f64, rate: f64, shift: f64 },
}

impl PredictiveDistribution {
    /// Probability that the next PI lands in `[lo, hi)`.
    pub fn probability_in(&self, lo: f64, hi: f64) -> f64 {
        if !(hi > lo) {
            return 0.0;
        }
        match self {
            PredictiveDistribution::Point { value } => {
                if *value >= lo && *value < hi {
                    1.0
                } else {
                    0.0
                }
            }
            PredictiveDistribution::Discrete { states } => states
                .iter()
                .filter(|(s, _)| *s >= lo && *s < hi)
                .map(|(_, p)| p)
                .sum(),
            PredictiveDistribution::ShiftedGamma { shape, rate, shift } => {
                let g = Gamma {
                    shape: *shape,
                    rate: *rate,
                };
                // P(max(0, X + shift) < h) for h > 0 is F(h - shift)
                let below = |h: f64| if h <= 0.0 { 0.0 } else { g.cdf(h - shift) };
                (below(hi) - below(lo)).max(0.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub expected_pi: f64,
    pub lower: f64,
    pub upper: f64,
    /// Median of the predictive law; the interval always contains it.
    pub center: f64,
    pub confidence: f64,
    pub source: PredictionSource,
    /// Observations behind the transition row used (0 for the fallback).
    pub support: u64,
    pub distribution: PredictiveDistribution,
}

impl Prediction {
    pub fn interval(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower - 1e-12 && x <= self.upper + 1e-12
    }

    pub fn probability_in(&self, lo: f64, hi: f64) -> f64 {
        self.distribution.probability_in(lo, hi)
    }

    fn absorbed(confidence: f64) -> Self {
        Prediction {
            expected_pi: 0.0,
            lower: 0.0,
            upper: 0.0,
            center: 0.0,
            confidence,
            source: PredictionSource::MarkovExact,
            support: 0,
            distribution: PredictiveDistribution::Point { value: 0.0 },
        }
    }
}

/// Smallest state whose cumulative count reaches `q` of the row total.
fn weighted_percentile(row: &Row, q: f64) -> u32 {
    let target = q * row.total as f64;
    let mut cum = 0u64;
    for (&s, &c) in &row.next {
        cum += c;
        if cum as f64 >= target - 1e-9 {
            return s;
        }
    }
    *row.next.keys().next_back().expect("non-empty row")
}

/// `(lower, center, upper)` of the shifted, zero-floored gamma.
fn gamma_interval(g: &Gamma, shift: f64, confidence: f64) -> (f64, f64, f64) {
    let lo = (g.quantile((1.0 - confidence) / 2.0) + shift).max(0.0);
    let mid = (g.quantile(0.5) + shift).max(0.0);
    let hi = (g.quantile((1.0 + confidence) / 2.0) + shift).max(0.0);
    (lo, mid, hi)
}

impl TransitionModel {
    /// Predicts the PI at the end of the next over from the last `k`
    /// over-end values. `over` is the over being predicted; when given it
    /// must belong to the model's phase. `fallback` is the phase's gamma
    /// fit, required only when the state was never observed or its row is
    /// too thin for an empirical interval.
    pub fn predict_next(
        &self,
        recent: &[f64],
        over: Option<u32>,
        fallback: Option<&Gamma>,
        confidence: f64,
    ) -> Result<Prediction, MarkovError> {
        if !(confidence > 0.0 && confidence < 1.0) {
            return Err(MarkovError::InvalidConfidence(confidence));
        }
        if recent.len() != self.order() {
            return Err(MarkovError::WrongHistory {
                expected: self.order(),
                got: recent.len(),
            });
        }
        if let (Some(o), Some(p)) = (over, self.phase()) {
            if !self.covers_over(o) {
                return Err(MarkovError::ModelPhaseMismatch { over: o, phase: p });
            }
        }
        let d = self.discretizer();
        let state = d.states(recent);
        if state.last() == Some(&0) {
            return Ok(Prediction::absorbed(confidence));
        }
        let sum: u64 = state.iter().map(|&s| u64::from(s)).sum();
        let (row, source) = match self.row(&state) {
            Some(r) => (r, PredictionSource::MarkovExact),
            None => match self.sum_matched(sum) {
                Some(r) => (r, PredictionSource::MarkovSumMatched),
                None => {
                    let g = fallback.ok_or(MarkovError::NoFallback)?;
                    let (lower, center, upper) = gamma_interval(g, 0.0, confidence);
                    return Ok(Prediction {
                        expected_pi: g.mean(),
                        lower,
                        upper,
                        center,
                        confidence,
                        source: PredictionSource::GammaFallback,
                        support: 0,
                        distribution: PredictiveDistribution::ShiftedGamma {
                            shape: g.shape,
                            rate: g.rate,
                            shift: 0.0,
                        },
                    });
                }
            },
        };
        let states: Vec<(f64, f64)> = row.probabilities().map(|(s, p)| (d.value(s), p)).collect();
        let expected_pi: f64 = states.iter().map(|(s, p)| s * p).sum();
        let (lower, center, upper) = if row.total >= MIN_EMPIRICAL_COUNT {
            (
                d.value(weighted_percentile(row, (1.0 - confidence) / 2.0)),
                d.value(weighted_percentile(row, 0.5)),
                d.value(weighted_percentile(row, (1.0 + confidence) / 2.0)),
            )
        } else {
            let g = fallback.ok_or(MarkovError::NoFallback)?;
            gamma_interval(g, expected_pi - g.mean(), confidence)
        };
        Ok(Prediction {
            expected_pi,
            lower,
            upper,
            center,
            confidence,
            source,
            support: row.total,
            distribution: PredictiveDistribution::Discrete { states },
        })
    }
}
