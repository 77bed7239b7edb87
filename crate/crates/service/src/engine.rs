use std::path::{Path, PathBuf};

use chasepi_core::models::{ModelSet, DEFAULT_CONFIDENCE};
use chasepi_core::pi::{PiCalculator, ResourceTable, WicketWeights};
use chasepi_core::strategy::{default_zone_table, ZoneTable};

/// Everything a prediction needs, shared read-only across sessions.
#[derive(Debug, Clone)]
pub struct Engine {
    pub models: ModelSet,
    pub zones: ZoneTable,
    pub calc: PiCalculator,
    pub confidence: f64,
}

/// Where an engine is loaded from.
#[derive(Debug, Clone, Default)]
pub struct EngineConfig {
    pub model_dir: PathBuf,
    pub fits: Option<PathBuf>,
    pub zone_table: Option<PathBuf>,
    pub resource_table: Option<PathBuf>,
    pub weights: Option<PathBuf>,
    pub confidence: Option<f64>,
}

impl Engine {
    pub fn new(models: ModelSet) -> Self {
        Self {
            models,
            zones: default_zone_table(),
            calc: PiCalculator::default(),
            confidence: DEFAULT_CONFIDENCE,
        }
    }

    pub fn load(cfg: &EngineConfig) -> anyhow::Result<Self> {
        let fits = cfg
            .fits
            .as_deref()
            .map(chasepi_core::distfit::PhaseFits::load)
            .transpose()?;
        let models = ModelSet::load_dir(&cfg.model_dir, fits)?;
        let zones = match &cfg.zone_table {
            Some(p) => ZoneTable::load(p)?,
            None => default_zone_table(),
        };
        Ok(Self {
            models,
            zones,
            calc: calculator(cfg.resource_table.as_deref(), cfg.weights.as_deref())?,
            confidence: cfg.confidence.unwrap_or(DEFAULT_CONFIDENCE),
        })
    }
}

/// PI calculator from optional resource-table and weights files.
pub fn calculator(resources: Option<&Path>, weights: Option<&Path>) -> anyhow::Result<PiCalculator> {
    let resources = match resources {
        Some(p) => ResourceTable::from_path(p)?,
        None => ResourceTable::bundled(),
    };
    let weights = match weights {
        Some(p) => WicketWeights::from_toml_path(p)?,
        None => WicketWeights::default(),
    };
    Ok(PiCalculator::new(weights, resources))
}
