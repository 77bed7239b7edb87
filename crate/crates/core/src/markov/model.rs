use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Discretizer, MarkovError};
use crate::ingest::PiSequence;
use crate::phase::{Phase, PhaseScheme};

pub const MODEL_FORMAT: &str = "chasepi.markov";
const MODEL_VERSION: u32 = 1;

/// Next-state counts observed after one state tuple.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Row {
    pub next: BTreeMap<u32, u64>,
    pub total: u64,
}

impl Row {
    fn add(&mut self, next: u32, count: u64) {
        *self.next.entry(next).or_insert(0) += count;
        self.total += count;
    }

    pub fn probability(&self, next: u32) -> f64 {
        match self.next.get(&next) {
            Some(&c) => c as f64 / self.total as f64,
            None => 0.0,
        }
    }

    /// `(next index, probability)` pairs in increasing state order.
    pub fn probabilities(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        let t = self.total as f64;
        self.next.iter().map(move |(&s, &c)| (s, c as f64 / t))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    /// SHA-256 over the training sequences.
    pub corpus_hash: String,
    /// RFC 3339 build time.
    pub built_at: String,
    pub training_ids: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_seed: Option<u64>,
}

/// Sparse order-k transition table.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel {
    order: usize,
    discretizer: Discretizer,
    phase: Option<Phase>,
    scheme: PhaseScheme,
    rows: HashMap<Vec<u32>, Row>,
    by_sum: HashMap<u64, Row>,
    n_transitions: u64,
    pub metadata: ModelMetadata,
}

type Counts = HashMap<Vec<u32>, Row>;

fn merge(mut a: Counts, b: Counts) -> Counts {
    if a.len() < b.len() {
        return merge(b, a);
    }
    for (k, row) in b {
        let dst = a.entry(k).or_default();
        for (n, c) in row.next {
            dst.add(n, c);
        }
    }
    a
}

fn sum_key(state: &[u32]) -> u64 {
    state.iter().map(|&s| u64::from(s)).sum()
}

pub(crate) fn corpus_hash(seqs: &[&PiSequence]) -> String {
    let mut h = Sha256::new();
    for s in seqs {
        h.update(s.match_id.as_bytes());
        h.update([0]);
        for v in &s.values {
            h.update(v.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// Windows `(state, next, predicted over)` of one sequence.
pub(crate) fn windows(
    states: &[u32],
    k: usize,
) -> impl Iterator<Item = (&[u32], u32, u32)> + '_ {
    (k..states.len()).map(move |t| (&states[t - k..t], states[t], t as u32 + 1))
}

/// Counts every in-match window of length `k + 1`. With a phase, only
/// windows whose predicted over lies in that phase are counted.
pub fn build_transitions(
    seqs: &[PiSequence],
    k: usize,
    d: Discretizer,
    phase: Option<(Phase, PhaseScheme)>,
) -> Result<TransitionModel, MarkovError> {
    let refs: Vec<&PiSequence> = seqs.iter().collect();
    TransitionModel::build(&refs, k, d, phase)
}

impl TransitionModel {
    pub fn build(
        seqs: &[&PiSequence],
        k: usize,
        d: Discretizer,
        phase: Option<(Phase, PhaseScheme)>,
    ) -> Result<Self, MarkovError> {
        if k == 0 {
            return Err(MarkovError::InvalidOrder);
        }
        let scheme = phase.map(|(_, s)| s).unwrap_or_default();
        let label = phase.map(|(p, _)| p);
        let rows = seqs
            .par_iter()
            .fold(Counts::new, |mut acc, s| {
                let states = d.states(&s.values);
                for (state, next, over) in windows(&states, k) {
                    if label.is_some_and(|p| scheme.phase_of(over) != p) {
                        continue;
                    }
                    match acc.get_mut(state) {
                        Some(r) => r.add(next, 1),
                        None => {
                            let mut r = Row::default();
                            r.add(next, 1);
                            acc.insert(state.to_vec(), r);
                        }
                    }
                }
                acc
            })
            .reduce(Counts::new, merge);
        let n_transitions: u64 = rows.values().map(|r| r.total).sum();
        if n_transitions == 0 {
            return Err(MarkovError::EmptyCorpus);
        }
        let metadata = ModelMetadata {
            corpus_hash: corpus_hash(seqs),
            built_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            training_ids: seqs.iter().map(|s| s.match_id.clone()).collect(),
            split_seed: None,
        };
        Ok(Self::from_rows(k, d, label, scheme, rows, metadata))
    }

    fn from_rows(
        order: usize,
        discretizer: Discretizer,
        phase: Option<Phase>,
        scheme: PhaseScheme,
        rows: Counts,
        metadata: ModelMetadata,
    ) -> Self {
        let mut by_sum: HashMap<u64, Row> = HashMap::new();
        for (state, row) in &rows {
            let dst = by_sum.entry(sum_key(state)).or_default();
            for (&n, &c) in &row.next {
                dst.add(n, c);
            }
        }
        let n_transitions = rows.values().map(|r| r.total).sum();
        Self {
            order,
            discretizer,
            phase,
            scheme,
            rows,
            by_sum,
            n_transitions,
            metadata,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn discretizer(&self) -> Discretizer {
        self.discretizer
    }

    pub fn precision(&self) -> f64 {
        self.discretizer.precision()
    }

    pub fn phase(&self) -> Option<Phase> {
        self.phase
    }

    pub fn scheme(&self) -> PhaseScheme {
        self.scheme
    }

    pub fn n_transitions(&self) -> u64 {
        self.n_transitions
    }

    /// Number of distinct state tuples.
    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    /// Number of distinct observed transitions, the model's free parameters.
    pub fn n_params(&self) -> usize {
        self.rows.values().map(|r| r.next.len()).sum()
    }

    /// Whether windows predicting `over` belong to this model.
    pub fn covers_over(&self, over: u32) -> bool {
        self.phase.is_none_or(|p| self.scheme.phase_of(over) == p)
    }

    pub fn row(&self, state: &[u32]) -> Option<&Row> {
        self.rows.get(state)
    }

    /// Pooled counts of all tuples whose grid indices sum to `sum`.
    pub fn sum_matched(&self, sum: u64) -> Option<&Row> {
        self.by_sum.get(&sum)
    }

    /// Rows in lexicographic state order.
    pub fn rows(&self) -> Vec<(&Vec<u32>, &Row)> {
        let mut v: Vec<_> = self.rows.iter().collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }

    pub fn probability(&self, state: &[u32], next: u32) -> f64 {
        self.row(state).map_or(0.0, |r| r.probability(next))
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            order: self.order,
            precision: self.precision(),
            phase: self.phase,
            scheme: self.scheme,
            n_transitions: self.n_transitions,
            metadata: self.metadata.clone(),
            rows: self
                .rows()
                .into_iter()
                .map(|(s, r)| FileRow {
                    state: s.clone(),
                    next: r.next.iter().map(|(&n, &c)| (n, c)).collect(),
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("model serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, MarkovError> {
        let f: ModelFile =
            serde_json::from_str(text).map_err(|e| MarkovError::Format(e.to_string()))?;
        if f.format != MODEL_FORMAT || f.version != MODEL_VERSION {
            return Err(MarkovError::Format(format!(
                "unsupported model format {} v{}",
                f.format, f.version
            )));
        }
        if f.order == 0 {
            return Err(MarkovError::InvalidOrder);
        }
        let d = Discretizer::new(f.precision)?;
        let mut rows = Counts::new();
        for r in f.rows {
            if r.state.len() != f.order {
                return Err(MarkovError::Format(format!(
                    "state of length {} in an order-{} model",
                    r.state.len(),
                    f.order
                )));
            }
            let row = rows.entry(r.state).or_default();
            for (n, c) in r.next {
                row.add(n, c);
            }
        }
        let model = Self::from_rows(f.order, d, f.phase, f.scheme, rows, f.metadata);
        if model.n_transitions != f.n_transitions {
            return Err(MarkovError::Format(format!(
                "header declares {} transitions, body holds {}",
                f.n_transitions, model.n_transitions
            )));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MarkovError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MarkovError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    order: usize,
    precision: f64,
    phase: Option<Phase>,
    scheme: PhaseScheme,
    n_transitions: u64,
    metadata: ModelMetadata,
    rows: Vec<FileRow>,
}

#[derive(Serialize, Deserialize)]
struct FileRow {
    state: Vec<u32>,
    next: Vec<(u32, u64)>,
}
