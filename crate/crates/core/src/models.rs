//! A bundle of transition models and phase fits used together for prediction.
//!
//! A set holds an optional global model and up to one model per phase, all
//! of the same order, plus the phase-wise fits that supply the gamma
//! fallback. A prediction for over `t` uses the model of `t`'s phase when
//! one exists and the global model otherwise.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distfit::{FitError, PhaseFits};
use crate::ingest::PiSequence;
use crate::markov::{Discretizer, MarkovError, Prediction, TransitionModel};
use crate::phase::{Phase, PhaseScheme};

pub const DEFAULT_CONFIDENCE: f64 = 0.95;
const GLOBAL_FILE: &str = "global.json";
const FITS_FILE: &str = "fits.json";

#[derive(Debug, Error)]
pub enum ModelSetError {
    #[error("no transition model covers over {0}")]
    ModelMissing(u32),
    #[error("inconsistent model set: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Markov(#[from] MarkovError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ModelSet {
    global: Option<TransitionModel>,
    phases: BTreeMap<Phase, TransitionModel>,
    fits: PhaseFits,
    order: usize,
}

/// Description of a model set for listings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub name: String,
    pub phase: Option<Phase>,
    pub order: usize,
    pub precision: f64,
    pub n_transitions: u64,
    pub n_states: usize,
    pub corpus_hash: String,
    pub built_at: String,
}

fn file_name(p: Phase) -> String {
    format!("{}.json", p.as_str())
}

fn summary(name: &str, m: &TransitionModel) -> ModelSummary {
    ModelSummary {
        name: name.to_string(),
        phase: m.phase(),
        order: m.order(),
        precision: m.precision(),
        n_transitions: m.n_transitions(),
        n_states: m.n_states(),
        corpus_hash: m.metadata.corpus_hash.clone(),
        built_at: m.metadata.built_at.clone(),
    }
}

impl ModelSet {
    pub fn new(
        global: Option<TransitionModel>,
        phases: Vec<TransitionModel>,
        fits: PhaseFits,
    ) -> Result<Self, ModelSetError> {
        let mut orders = global.iter().chain(phases.iter()).map(|m| m.order());
        let order = orders
            .next()
            .ok_or_else(|| ModelSetError::Inconsistent("no transition models".into()))?;
        if orders.any(|k| k != order) {
            return Err(ModelSetError::Inconsistent("models of different orders".into()));
        }
        if global.as_ref().is_some_and(|g| g.phase().is_some()) {
            return Err(ModelSetError::Inconsistent("global model carries a phase".into()));
        }
        let mut by_phase = BTreeMap::new();
        for m in phases {
            let p = m
                .phase()
                .ok_or_else(|| ModelSetError::Inconsistent("phase model without a phase".into()))?;
            if by_phase.insert(p, m).is_some() {
                return Err(ModelSetError::Inconsistent(format!("two models for {p}")));
            }
        }
        Ok(Self {
            global,
            phases: by_phase,
            fits,
            order,
        })
    }

    /// Builds the requested models from training sequences.
    pub fn train(
        train: &[&PiSequence],
        k: usize,
        d: Discretizer,
        scheme: PhaseScheme,
        phase_wise: bool,
        with_global: bool,
        fits: PhaseFits,
    ) -> Result<Self, ModelSetError> {
        let global = if with_global {
            Some(TransitionModel::build(train, k, d, None)?)
        } else {
            None
        };
        let mut phases = Vec::new();
        if phase_wise {
            for p in Phase::ALL {
                match TransitionModel::build(train, k, d, Some((p, scheme))) {
                    Ok(m) => phases.push(m),
                    Err(MarkovError::EmptyCorpus) => {
                        tracing::warn!(phase = %p, "no training windows for phase");
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
        Self::new(global, phases, fits)
    }

    /// Records the seed of the train/test split on every model.
    pub fn with_split_seed(mut self, seed: u64) -> Self {
        for m in self.global.iter_mut().chain(self.phases.values_mut()) {
            m.metadata.split_seed = Some(seed);
        }
        self
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn fits(&self) -> &PhaseFits {
        &self.fits
    }

    pub fn scheme(&self) -> PhaseScheme {
        self.fits.scheme
    }

    pub fn global(&self) -> Option<&TransitionModel> {
        self.global.as_ref()
    }

    pub fn phase_model(&self, p: Phase) -> Option<&TransitionModel> {
        self.phases.get(&p)
    }

    /// The model that predicts over `over`.
    pub fn model_for(&self, over: u32) -> Option<&TransitionModel> {
        let p = self.scheme().phase_of(over);
        self.phases.get(&p).or(self.global.as_ref())
    }

    pub fn predict(
        &self,
        recent: &[f64],
        over: u32,
        confidence: f64,
    ) -> Result<Prediction, ModelSetError> {
        let m = self.model_for(over).ok_or(ModelSetError::ModelMissing(over))?;
        let gamma = self.fits.gamma(self.scheme().phase_of(over));
        let over_arg = m.phase().map(|_| over);
        Ok(m.predict_next(recent, over_arg, gamma.as_ref(), confidence)?)
    }

    pub fn training_ids(&self) -> BTreeSet<&str> {
        self.global
            .iter()
            .chain(self.phases.values())
            .flat_map(|m| m.metadata.training_ids.iter().map(String::as_str))
            .collect()
    }

    pub fn summaries(&self) -> Vec<ModelSummary> {
        let mut out: Vec<_> = self.global.iter().map(|g| summary("global", g)).collect();
        out.extend(self.phases.iter().map(|(p, m)| summary(p.as_str(), m)));
        out
    }

    /// Writes `global.json`, one file per phase model and `fits.json`.
    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<(), ModelSetError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        if let Some(g) = &self.global {
            g.save(dir.join(GLOBAL_FILE))?;
        }
        for (p, m) in &self.phases {
            m.save(dir.join(file_name(*p)))?;
        }
        self.fits.save(dir.join(FITS_FILE))?;
        Ok(())
    }

    /// Loads whatever models a directory holds. `fits` overrides the
    /// directory's own `fits.json`.
    pub fn load_dir(dir: impl AsRef<Path>, fits: Option<PhaseFits>) -> Result<Self, ModelSetError> {
        let dir = dir.as_ref();
        let global_path = dir.join(GLOBAL_FILE);
        let global = if global_path.exists() {
            Some(TransitionModel::load(&global_path)?)
        } else {
            None
        };
        let mut phases = Vec::new();
        for p in Phase::ALL {
            let path = dir.join(file_name(p));
            if path.exists() {
                phases.push(TransitionModel::load(&path)?);
            }
        }
        let fits = match fits {
            Some(f) => f,
            None => PhaseFits::load(dir.join(FITS_FILE))?,
        };
        Self::new(global, phases, fits)
    }
}
