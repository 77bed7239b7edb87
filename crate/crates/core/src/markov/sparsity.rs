use serde::{Deserialize, Serialize};

use super::model::windows;
use super::TransitionModel;
use crate::ingest::PiSequence;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopTransition {
    pub state: Vec<f64>,
    pub next: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparsityReport {
    pub precision: f64,
    pub order: usize,
    pub unique_transitions: usize,
    pub states: usize,
    /// Share of distinct transitions seen exactly once, in percent.
    pub singleton_pct: f64,
    /// Share of state tuples with at least `reliable_threshold` observations, in percent.
    pub reliable_state_pct: f64,
    pub reliable_threshold: u64,
    pub top: Vec<TopTransition>,
}

pub const RELIABLE_THRESHOLD: u64 = 10;

pub fn sparsity_report(model: &TransitionModel, top_n: usize) -> SparsityReport {
    let d = model.discretizer();
    let mut unique = 0usize;
    let mut singletons = 0usize;
    let mut reliable = 0usize;
    let mut all = Vec::new();
    for (state, row) in model.rows() {
        if row.total >= RELIABLE_THRESHOLD {
            reliable += 1;
        }
        for (&n, &c) in &row.next {
            unique += 1;
            if c == 1 {
                singletons += 1;
            }
            all.push((c, state, n));
        }
    }
    // highest count first, ties in state order
    all.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)).then(a.2.cmp(&b.2)));
    let pct = |a: usize, b: usize| if b == 0 { 0.0 } else { 100.0 * a as f64 / b as f64 };
    SparsityReport {
        precision: model.precision(),
        order: model.order(),
        unique_transitions: unique,
        states: model.n_states(),
        singleton_pct: pct(singletons, unique),
        reliable_state_pct: pct(reliable, model.n_states()),
        reliable_threshold: RELIABLE_THRESHOLD,
        top: all
            .into_iter()
            .take(top_n)
            .map(|(c, s, n)| TopTransition {
                state: s.iter().map(|&i| d.value(i)).collect(),
                next: d.value(n),
                count: c,
            })
            .collect(),
    }
}

/// Percentage of the windows in `seqs` whose state tuple exists in the model.
pub fn state_coverage(model: &TransitionModel, seqs: &[&PiSequence]) -> f64 {
    let d = model.discretizer();
    let (mut hit, mut n) = (0u64, 0u64);
    for s in seqs {
        let states = d.states(&s.values);
        for (state, _, over) in windows(&states, model.order()) {
            if !model.covers_over(over) {
                continue;
            }
            n += 1;
            if model.row(state).is_some() {
                hit += 1;
            }
        }
    }
    if n == 0 {
        0.0
    } else {
        100.0 * hit as f64 / n as f64
    }
}
