//! Match ingestion: parsing, corpus filtering and PI sequence extraction.

mod corpus;
mod formats;
mod record;

pub use corpus::{Corpus, CorpusError, CORPUS_SCHEMA, CORPUS_VERSION};
pub use formats::{parse_match, to_native_json, MatchFormat, NATIVE_SCHEMA};
pub use record::{Delivery, ExtraKind, MatchRecord, Outcome};

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phase::{Phase, PhaseScheme};
use crate::pi::{PiCalculator, PiError, BALLS_PER_OVER};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed match file: {0}")]
    Parse(String),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("illegal innings: {0}")]
    IllegalInnings(String),
    #[error("pressure index: {0}")]
    Pi(#[from] PiError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Which matches enter the training corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusFilter {
    /// Successful chases must take strictly more than this many overs.
    pub min_overs_batted_if_won: u32,
    /// Failed chases must lose by at most this many runs.
    pub max_loss_margin: u32,
}

impl Default for CorpusFilter {
    fn default() -> Self {
        Self {
            min_overs_batted_if_won: 18,
            max_loss_margin: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterDecision {
    Retained,
    Excluded,
    DroppedNoResult,
}

impl CorpusFilter {
    pub fn decide(&self, m: &MatchRecord) -> FilterDecision {
        match m.outcome {
            Outcome::NoResult => FilterDecision::DroppedNoResult,
            Outcome::Tie => FilterDecision::Retained,
            Outcome::ChasedWithBallsLeft => {
                if m.legal_balls() > self.min_overs_batted_if_won * BALLS_PER_OVER {
                    FilterDecision::Retained
                } else {
                    FilterDecision::Excluded
                }
            }
            Outcome::LostByRuns { margin } => {
                if margin <= self.max_loss_margin {
                    FilterDecision::Retained
                } else {
                    FilterDecision::Excluded
                }
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterSummary {
    pub retained: usize,
    pub excluded: usize,
    pub dropped_no_result: usize,
    pub ties_retained: usize,
}

pub fn filter_corpus(matches: Vec<MatchRecord>, f: &CorpusFilter) -> (Vec<MatchRecord>, FilterSummary) {
    let mut summary = FilterSummary::default();
    let mut kept = Vec::new();
    for m in matches {
        match f.decide(&m) {
            FilterDecision::Retained => {
                summary.retained += 1;
                if m.outcome == Outcome::Tie {
                    summary.ties_retained += 1;
                }
                kept.push(m);
            }
            FilterDecision::Excluded => summary.excluded += 1,
            FilterDecision::DroppedNoResult => summary.dropped_no_result += 1,
        }
    }
    (kept, summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HomeAway {
    Home,
    Away,
    Neutral,
}

impl HomeAway {
    pub fn classify(m: &MatchRecord) -> HomeAway {
        match m.home_side.as_deref() {
            Some(h) if h == m.teams[1] && h != m.teams[0] => HomeAway::Home,
            Some(h) if h == m.teams[0] && h != m.teams[1] => HomeAway::Away,
            _ => HomeAway::Neutral,
        }
    }
}

impl std::str::FromStr for HomeAway {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "home" => Ok(HomeAway::Home),
            "away" => Ok(HomeAway::Away),
            "neutral" => Ok(HomeAway::Neutral),
            other => Err(format!("unknown venue class '{other}'")),
        }
    }
}

/// Over-indexed, censored PI trajectory of one chase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiSequence {
    pub match_id: String,
    #[serde(default)]
    pub competition: String,
    #[serde(default)]
    pub date: Option<chrono::NaiveDate>,
    #[serde(default)]
    pub target: u32,
    #[serde(default = "default_total_balls")]
    pub total_balls: u32,
    /// `values[i]` is the PI at the end of over `i + 1`.
    pub values: Vec<f64>,
    /// Cumulative wickets at the end of each over.
    #[serde(default)]
    pub wickets: Vec<u8>,
    pub home_away: HomeAway,
    pub won: bool,
    #[serde(default)]
    pub tie: bool,
    /// Set when the innings was cut short without a result.
    #[serde(default)]
    pub truncated: bool,
}

fn default_total_balls() -> u32 {
    120
}

impl PiSequence {
    /// A bare sequence, mostly for synthetic corpora and tests.
    pub fn from_values(match_id: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            match_id: match_id.into(),
            competition: String::new(),
            date: None,
            target: 0,
            total_balls: 120,
            wickets: vec![0; values.len()],
            values,
            home_away: HomeAway::Neutral,
            won: false,
            tie: false,
            truncated: false,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(over, value)` pairs with 1-based overs.
    pub fn overs(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.values.iter().enumerate().map(|(i, &v)| (i as u32 + 1, v))
    }

    pub fn phase_tags(&self, scheme: &PhaseScheme) -> Vec<Phase> {
        (1..=self.values.len() as u32).map(|o| scheme.phase_of(o)).collect()
    }

    /// Overs in which at least one wicket fell.
    pub fn wicket_overs(&self) -> Vec<u32> {
        let mut prev = 0;
        let mut out = Vec::new();
        for (i, &w) in self.wickets.iter().enumerate() {
            if w > prev {
                out.push(i as u32 + 1);
            }
            prev = w;
        }
        out
    }
}

/// PI sequence of a single match.
pub fn build_sequence(m: &MatchRecord, calc: &PiCalculator) -> Result<PiSequence, IngestError> {
    let ctx = m.context()?;
    let mut states = m.over_end_states()?;
    let truncated = m.outcome == Outcome::NoResult;
    if truncated {
        // keep completed overs only
        if let Some((_, last)) = states.last() {
            let complete = last.balls_faced % BALLS_PER_OVER == 0;
            let finished = last.runs_scored >= ctx.target() || last.wickets_lost() >= 10;
            if !complete && !finished {
                states.pop();
            }
        }
    }
    let over_states: Vec<_> = states.iter().map(|(_, s)| s.clone()).collect();
    let values = calc.sequence(&ctx, &over_states)?;
    Ok(PiSequence {
        match_id: m.match_id.clone(),
        competition: m.competition.clone(),
        date: Some(m.date),
        target: m.target,
        total_balls: m.total_balls,
        values: values.into_iter().map(f64::from).collect(),
        wickets: over_states.iter().map(|s| s.wickets_lost() as u8).collect(),
        home_away: HomeAway::classify(m),
        won: m.outcome.won(),
        tie: m.outcome == Outcome::Tie,
        truncated,
    })
}

/// Builds sequences for every match; a match that fails is logged and skipped.
pub fn build_sequences(matches: &[MatchRecord], calc: &PiCalculator) -> Vec<PiSequence> {
    matches
        .par_iter()
        .filter_map(|m| match build_sequence(m, calc) {
            Ok(s) => Some(s),
            Err(e) => {
                tracing::warn!(match_id = %m.match_id, error = %e, "skipping match");
                None
            }
        })
        .collect()
}

/// Reads one match file, using the file stem as the fallback identifier.
pub fn load_match_file(path: impl AsRef<Path>, format: MatchFormat) -> Result<MatchRecord, IngestError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    let stem = path.file_stem().and_then(|s| s.to_str());
    parse_match(&bytes, format, stem)
}

/// Reads every `*.json` / `*.csv` file (by `format`) in a directory.
/// Returns parsed matches and `(path, error)` pairs for files that failed.
pub fn load_dir(
    dir: impl AsRef<Path>,
    format: MatchFormat,
) -> Result<(Vec<MatchRecord>, Vec<(String, IngestError)>), IngestError> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some(format.extension()))
        .collect();
    paths.sort();
    let results: Vec<_> = paths
        .par_iter()
        .map(|p| {
            (p.display().to_string(), load_match_file(p, format))
        })
        .collect();
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (p, r) in results {
        match r {
            Ok(m) => ok.push(m),
            Err(e) => failed.push((p, e)),
        }
    }
    Ok((ok, failed))
}

#[cfg(test)]
mod tests;
