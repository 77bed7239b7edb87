use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::ingest::PiSequence;
use crate::interval::Interval;
use crate::models::ModelSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    /// Mean predicted probability in the bin (0 when empty).
    pub predicted: f64,
    /// Observed event frequency in the bin (0 when empty).
    pub observed: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub n: usize,
    pub brier: f64,
    pub ece: f64,
    pub bins: Vec<CalibrationBin>,
}

/// Brier score and expected calibration error over `bins` equal-width
/// probability bins on `[0, 1]`. A probability of exactly 1 falls in the
/// last bin.
pub fn calibration(
    probs: &[f64],
    outcomes: &[bool],
    bins: usize,
) -> Result<CalibrationReport, EvalError> {
    if probs.is_empty() || probs.len() != outcomes.len() || bins == 0 {
        return Err(EvalError::EmptyInput);
    }
    let n = probs.len();
    let mut count = vec![0usize; bins];
    let mut p_sum = vec![0.0; bins];
    let mut o_sum = vec![0.0; bins];
    let mut brier = 0.0;
    for (&p, &o) in probs.iter().zip(outcomes) {
        let p = p.clamp(0.0, 1.0);
        let y = if o { 1.0 } else { 0.0 };
        brier += (p - y) * (p - y);
        let b = ((p * bins as f64) as usize).min(bins - 1);
        count[b] += 1;
        p_sum[b] += p;
        o_sum[b] += y;
    }
    let width = 1.0 / bins as f64;
    let mut ece = 0.0;
    let out = (0..bins)
        .map(|b| {
            let (predicted, observed) = if count[b] == 0 {
                (0.0, 0.0)
            } else {
                (p_sum[b] / count[b] as f64, o_sum[b] / count[b] as f64)
            };
            let error = (predicted - observed).abs();
            ece += count[b] as f64 / n as f64 * error;
            CalibrationBin {
                lo: b as f64 * width,
                hi: (b + 1) as f64 * width,
                n: count[b],
                predicted,
                observed,
                error,
            }
        })
        .collect();
    Ok(CalibrationReport {
        n,
        brier: brier / n as f64,
        ece,
        bins: out,
    })
}

/// Calibration of the event "next over-end PI lies in `event`" over every
/// predictable over of the test sequences. The event probability comes
/// from each prediction's own predictive law; the outcome is judged on the
/// actual value's grid cell.
pub fn event_calibration(
    models: &ModelSet,
    test: &[&PiSequence],
    event: Interval,
    confidence: f64,
    bins: usize,
) -> Result<CalibrationReport, EvalError> {
    let k = models.order();
    let mut probs = Vec::new();
    let mut outcomes = Vec::new();
    for s in test {
        for t in (k + 1)..=s.values.len() {
            let over = t as u32;
            let p = models.predict(&s.values[t - 1 - k..t - 1], over, confidence)?;
            let d = models.model_for(over).map(|m| m.discretizer()).unwrap_or_default();
            let cell = d.value(*d.states(&s.values[..t]).last().expect("non-empty prefix"));
            probs.push(p.probability_in(event.lo, event.upper()));
            outcomes.push(event.contains(cell));
        }
    }
    calibration(&probs, &outcomes, bins)
}
