use std::path::Path;

use asrfair_core::fairness::FairnessWeights;
use asrfair_core::manifest::Partition;
use asrfair_core::metrics::{Level, MissingPolicy};
use asrfair_core::spectral::{Compression, LocalMetric, WindowFunction};
use serde::Deserialize;

use crate::CliError;

pub const SEED_ENV: &str = "ASRFAIR_SEED";

/// JSON overrides for any flag. A value given on the command line wins over
/// the file; the file wins over built-in defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub level: Option<Level>,
    pub missing: Option<MissingPolicy>,
    pub partition: Option<Partition>,
    pub weights: Option<Vec<FairnessWeights>>,
    pub chart_weights: Option<FairnessWeights>,
    pub test_fraction: Option<f64>,
    pub dev_fraction: Option<f64>,
    pub speaker_disjoint: Option<bool>,
    pub window_ms: Option<f64>,
    pub hop_ms: Option<f64>,
    pub fft_points: Option<usize>,
    pub window: Option<WindowFunction>,
    pub metric: Option<LocalMetric>,
    pub compression: Option<Compression>,
    pub threshold: Option<f64>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("invalid config {}: {e}", path.display())))
    }

    /// Seed from flag, then config, then the environment, then `default`.
    pub fn seed(&self, flag: Option<u64>, default: u64) -> Result<u64, CliError> {
        if let Some(s) = flag.or(self.seed) {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Input(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))),
            Err(_) => Ok(default),
        }
    }
}
