use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Position-indexed wicket weights (Lemmer), positions 1 through 11.
pub const LEMMER_WEIGHTS: [f64; 11] = [
    1.30, 1.35, 1.40, 1.45, 1.38, 1.18, 0.98, 0.79, 0.59, 0.39, 0.19,
];

#[derive(Debug, Error)]
pub enum WeightsError {
    #[error("reading weights: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing weights: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("expected 11 weights, got {0}")]
    WrongLength(usize),
    #[error("weight for position {0} must be positive")]
    NonPositive(usize),
}

/// Cost of losing the batter at each batting position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightsFile", into = "WeightsFile")]
pub struct WicketWeights([f64; 11]);

#[derive(Serialize, Deserialize)]
struct WeightsFile {
    weights: Vec<f64>,
}

impl TryFrom<WeightsFile> for WicketWeights {
    type Error = WeightsError;

    fn try_from(f: WeightsFile) -> Result<Self, Self::Error> {
        Self::new(&f.weights)
    }
}

impl From<WicketWeights> for WeightsFile {
    fn from(w: WicketWeights) -> Self {
        WeightsFile { weights: w.0.to_vec() }
    }
}

impl Default for WicketWeights {
    fn default() -> Self {
        WicketWeights(LEMMER_WEIGHTS)
    }
}

impl WicketWeights {
    pub fn new(weights: &[f64]) -> Result<Self, WeightsError> {
        let arr: [f64; 11] = weights
            .try_into()
            .map_err(|_| WeightsError::WrongLength(weights.len()))?;
        if let Some(i) = arr.iter().position(|w| !(*w > 0.0)) {
            return Err(WeightsError::NonPositive(i + 1));
        }
        Ok(WicketWeights(arr))
    }

    /// Loads a TOML file of the form `weights = [1.30, 1.35, ...]`.
    pub fn from_toml_path(path: impl AsRef<Path>) -> Result<Self, WeightsError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, WeightsError> {
        let f: WeightsFile = toml::from_str(text)?;
        f.try_into()
    }

    /// Weight of batting position `pos` (1-based).
    pub fn weight(&self, pos: u8) -> f64 {
        self.0[pos as usize - 1]
    }

    pub fn sum(&self, positions: &[u8]) -> f64 {
        positions.iter().map(|&p| self.weight(p)).sum()
    }

    pub fn as_slice(&self) -> &[f64; 11] {
        &self.0
    }
}
