//! Predictive scoring, calibration and win-rate breakdowns.
//!
//! [`evaluate_predictions`] replays held-out sequences through a
//! [`ModelSet`], predicting every over from the `k` before it, and
//! aggregates errors, interval coverage and how often the transition table
//! (rather than the gamma fallback) served the prediction.
//!
//! Errors are measured against the raw over-end PI. Interval coverage asks
//! whether the actual value's grid cell lies inside the predicted interval,
//! since Markov intervals live on the grid.

mod calibration;
mod export;
mod winrate;

pub use calibration::{calibration, event_calibration, CalibrationBin, CalibrationReport};
pub use export::{
    write_calibration_csv, write_metrics_csv, write_pressure_curves_csv, write_sweep_csv,
    write_win_rates_csv,
};
pub use winrate::{
    default_bins, win_rate_by_threshold, Grouping, MembershipRule, WinRateRow, WinRateTable,
};

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::PiSequence;
use crate::markov::{
    sparsity_report, split_by_match, state_coverage, Discretizer, MarkovError, PredictionSource,
    TransitionModel,
};
use crate::models::{ModelSet, ModelSetError};
use crate::phase::Phase;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("test match '{0}' was part of the training set")]
    SplitLeakage(String),
    #[error("no inputs to evaluate")]
    EmptyInput,
    #[error(transparent)]
    Model(#[from] ModelSetError),
    #[error(transparent)]
    Markov(#[from] MarkovError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// One scored prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub match_id: String,
    pub competition: String,
    pub over: u32,
    pub phase: Phase,
    pub actual: f64,
    pub expected: f64,
    pub lower: f64,
    pub upper: f64,
    pub source: PredictionSource,
    pub hit: bool,
}

impl PredictionRecord {
    pub fn error(&self) -> f64 {
        self.expected - self.actual
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n_predictions: usize,
    pub mae: f64,
    pub rmse: f64,
    pub coverage_pct: f64,
    pub markov_usage_pct: f64,
    pub mean_actual: f64,
    pub mean_predicted: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Accumulator {
    n: usize,
    abs: f64,
    sq: f64,
    hits: usize,
    markov: usize,
    actual: f64,
    predicted: f64,
}

impl Accumulator {
    fn push(&mut self, r: &PredictionRecord) {
        let e = r.error();
        self.n += 1;
        self.abs += e.abs();
        self.sq += e * e;
        self.hits += usize::from(r.hit);
        self.markov += usize::from(r.source.is_markov());
        self.actual += r.actual;
        self.predicted += r.expected;
    }

    fn finish(&self) -> Metrics {
        if self.n == 0 {
            return Metrics::default();
        }
        let n = self.n as f64;
        Metrics {
            n_predictions: self.n,
            mae: self.abs / n,
            rmse: (self.sq / n).sqrt(),
            coverage_pct: 100.0 * self.hits as f64 / n,
            markov_usage_pct: 100.0 * self.markov as f64 / n,
            mean_actual: self.actual / n,
            mean_predicted: self.predicted / n,
        }
    }
}

/// Aggregates a set of records.
pub fn metrics<'a>(records: impl IntoIterator<Item = &'a PredictionRecord>) -> Metrics {
    let mut acc = Accumulator::default();
    for r in records {
        acc.push(r);
    }
    acc.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub order: usize,
    pub confidence: f64,
    pub global: Metrics,
    pub by_phase: BTreeMap<Phase, Metrics>,
    pub by_over: BTreeMap<u32, Metrics>,
    pub by_competition: BTreeMap<String, Metrics>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<PredictionRecord>,
}

impl EvalReport {
    pub fn from_records(order: usize, confidence: f64, records: Vec<PredictionRecord>) -> Self {
        let mut global = Accumulator::default();
        let mut by_phase: BTreeMap<Phase, Accumulator> = BTreeMap::new();
        let mut by_over: BTreeMap<u32, Accumulator> = BTreeMap::new();
        let mut by_comp: BTreeMap<String, Accumulator> = BTreeMap::new();
        for r in &records {
            global.push(r);
            by_phase.entry(r.phase).or_default().push(r);
            by_over.entry(r.over).or_default().push(r);
            by_comp.entry(r.competition.clone()).or_default().push(r);
        }
        Self {
            order,
            confidence,
            global: global.finish(),
            by_phase: by_phase.into_iter().map(|(k, a)| (k, a.finish())).collect(),
            by_over: by_over.into_iter().map(|(k, a)| (k, a.finish())).collect(),
            by_competition: by_comp.into_iter().map(|(k, a)| (k, a.finish())).collect(),
            records,
        }
    }

    pub fn without_records(mut self) -> Self {
        self.records.clear();
        self
    }
}

fn score_sequence(
    models: &ModelSet,
    seq: &PiSequence,
    confidence: f64,
) -> Result<Vec<PredictionRecord>, EvalError> {
    let k = models.order();
    let scheme = models.scheme();
    let mut out = Vec::new();
    for t in (k + 1)..=seq.values.len() {
        let over = t as u32;
        let recent = &seq.values[t - 1 - k..t - 1];
        let actual = seq.values[t - 1];
        let p = models.predict(recent, over, confidence)?;
        let d = models
            .model_for(over)
            .map(TransitionModel::discretizer)
            .unwrap_or_default();
        let actual_cell = *d
            .states(&seq.values[..t])
            .last()
            .expect("non-empty prefix");
        out.push(PredictionRecord {
            match_id: seq.match_id.clone(),
            competition: seq.competition.clone(),
            over,
            phase: scheme.phase_of(over),
            actual,
            expected: p.expected_pi,
            lower: p.lower,
            upper: p.upper,
            source: p.source,
            hit: p.contains(d.value(actual_cell)),
        });
    }
    Ok(out)
}

/// Scores every over `t > k` of every test sequence.
pub fn evaluate_predictions(
    models: &ModelSet,
    test: &[&PiSequence],
    confidence: f64,
) -> Result<EvalReport, EvalError> {
    let trained = models.training_ids();
    if let Some(s) = test.iter().find(|s| trained.contains(s.match_id.as_str())) {
        return Err(EvalError::SplitLeakage(s.match_id.clone()));
    }
    let per_match: Vec<Vec<PredictionRecord>> = test
        .par_iter()
        .map(|s| score_sequence(models, s, confidence))
        .collect::<Result<_, _>>()?;
    Ok(EvalReport::from_records(
        models.order(),
        confidence,
        per_match.into_iter().flatten().collect(),
    ))
}

/// One row of the discretisation sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub precision: f64,
    pub unique_transitions: usize,
    pub states: usize,
    pub singleton_pct: f64,
    pub reliable_state_pct: f64,
    /// Share of held-out windows whose state the training table contains.
    pub coverage_pct: f64,
}

/// Builds an order-`k` model on the training part of a seeded match split
/// at each grid step and reports sparsity and held-out state coverage.
pub fn precision_sweep(
    seqs: &[PiSequence],
    k: usize,
    precisions: &[f64],
    train_fraction: f64,
    seed: u64,
) -> Result<Vec<SweepRow>, EvalError> {
    let split = split_by_match(seqs.len(), train_fraction, seed)?;
    let train = split.train(seqs);
    let test = split.test(seqs);
    precisions
        .iter()
        .map(|&delta| {
            let model = TransitionModel::build(&train, k, Discretizer::new(delta)?, None)?;
            let sp = sparsity_report(&model, 0);
            Ok(SweepRow {
                precision: delta,
                unique_transitions: sp.unique_transitions,
                states: sp.states,
                singleton_pct: sp.singleton_pct,
                reliable_state_pct: sp.reliable_state_pct,
                coverage_pct: state_coverage(&model, &test),
            })
        })
        .collect()
}
