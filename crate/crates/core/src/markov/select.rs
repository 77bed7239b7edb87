use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::windows;
use super::{Discretizer, MarkovError, TransitionModel};
use crate::ingest::PiSequence;

/// Held-out log-likelihood of a model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Likelihood {
    pub log_likelihood: f64,
    /// Transitions evaluated.
    pub n: u64,
    /// Transitions the model assigns zero probability; each contributes `ln ε`.
    pub uncovered: u64,
}

/// Sum of log conditional probabilities over every window of `seqs` that
/// belongs to the model's phase. A transition the model has never seen
/// contributes `ln ε` with `ε = 1 / (n_transitions + 1)`.
pub fn log_likelihood(model: &TransitionModel, seqs: &[&PiSequence]) -> Likelihood {
    log_likelihood_from(model, seqs, 0)
}

/// [`log_likelihood`] restricted to windows predicting over `first_over` or later.
fn log_likelihood_from(model: &TransitionModel, seqs: &[&PiSequence], first_over: u32) -> Likelihood {
    let d = model.discretizer();
    let k = model.order();
    let ln_eps = -((model.n_transitions() + 1) as f64).ln();
    let (ll, n, uncovered) = seqs
        .par_iter()
        .map(|s| {
            let states = d.states(&s.values);
            let mut acc = (0.0, 0u64, 0u64);
            for (state, next, over) in windows(&states, k) {
                if over < first_over || !model.covers_over(over) {
                    continue;
                }
                let p = model.probability(state, next);
                acc.1 += 1;
                if p > 0.0 {
                    acc.0 += p.ln();
                } else {
                    acc.0 += ln_eps;
                    acc.2 += 1;
                }
            }
            acc
        })
        .reduce(|| (0.0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    Likelihood {
        log_likelihood: ll,
        n,
        uncovered,
    }
}

/// A seeded by-match split of a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub seed: u64,
    pub train_fraction: f64,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    pub fn train<'a>(&self, seqs: &'a [PiSequence]) -> Vec<&'a PiSequence> {
        self.train.iter().map(|&i| &seqs[i]).collect()
    }

    pub fn test<'a>(&self, seqs: &'a [PiSequence]) -> Vec<&'a PiSequence> {
        self.test.iter().map(|&i| &seqs[i]).collect()
    }
}

/// Shuffles match indices with a seeded ChaCha stream and assigns the first
/// `round(fraction · n)` to training.
pub fn split_by_match(n: usize, train_fraction: f64, seed: u64) -> Result<Split, MarkovError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(MarkovError::InvalidSplit(train_fraction));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = (train_fraction * n as f64).round() as usize;
    let mut train = idx[..cut].to_vec();
    let mut test = idx[cut..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split {
        seed,
        train_fraction,
        train,
        test,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderStats {
    pub order: usize,
    /// Training transitions.
    pub observations: u64,
    /// Distinct observed transitions.
    pub params: usize,
    pub log_likelihood: f64,
    pub aic: f64,
    pub bic: f64,
    pub ratio: f64,
    pub test_transitions: u64,
    pub uncovered: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSelectionReport {
    pub precision: f64,
    pub split: Split,
    pub orders: Vec<OrderStats>,
    /// Largest held-out likelihood among orders with ratio below 1.
    pub recommended: Option<usize>,
}

impl ModelSelectionReport {
    pub fn stats(&self, k: usize) -> Option<&OrderStats> {
        self.orders.iter().find(|s| s.order == k)
    }
}

/// Fits orders `1..=k_max` on a training split and scores them on the rest.
/// Every order is scored on the same held-out windows, those predicting
/// over `k_max + 1` or later, so the likelihoods are comparable.
pub fn select_order(
    seqs: &[PiSequence],
    k_max: usize,
    d: Discretizer,
    train_fraction: f64,
    seed: u64,
) -> Result<ModelSelectionReport, MarkovError> {
    if k_max == 0 {
        return Err(MarkovError::InvalidOrder);
    }
    let split = split_by_match(seqs.len(), train_fraction, seed)?;
    let train = split.train(seqs);
    let test = split.test(seqs);
    let mut orders = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let model = match TransitionModel::build(&train, k, d, None) {
            Ok(m) => m,
            Err(MarkovError::EmptyCorpus) if k > 1 => break,
            Err(MarkovError::EmptyCorpus) => return Err(MarkovError::EmptySplit("training")),
            Err(e) => return Err(e),
        };
        let lik = log_likelihood_from(&model, &test, k_max as u32 + 1);
        if lik.n == 0 {
            if k == 1 {
                return Err(MarkovError::EmptySplit("test"));
            }
            break;
        }
        let m = model.n_params() as f64;
        let n = model.n_transitions();
        orders.push(OrderStats {
            order: k,
            observations: n,
            params: model.n_params(),
            log_likelihood: lik.log_likelihood,
            aic: 2.0 * m - 2.0 * lik.log_likelihood,
            bic: m * (n as f64).ln() - 2.0 * lik.log_likelihood,
            ratio: m / n as f64,
            test_transitions: lik.n,
            uncovered: lik.uncovered,
        });
    }
    let mut recommended: Option<&OrderStats> = None;
    for s in orders.iter().filter(|s| s.ratio < 1.0) {
        match recommended {
            Some(best) if s.log_likelihood <= best.log_likelihood + 1e-9 => {}
            _ => recommended = Some(s),
        }
    }
    Ok(ModelSelectionReport {
        precision: d.precision(),
        recommended: recommended.map(|s| s.order),
        split,
        orders,
    })
}
