//! Declarative experiment configuration, loaded from TOML and overridden by
//! command-line flags.

use std::path::{Path, PathBuf};

use evinf_core::linear::{LrConfig, PipelineLrConfig};
use evinf_core::models::ModelConfig;
use evinf_core::training::{PretrainObjective, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, CliError, Result};

/// Default vocabulary size, excluding the reserved ids.
pub const DEFAULT_VOCAB_CAP: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub vocab_cap: usize,
    /// Attention pretraining objective; no pretraining when absent.
    pub pretrain: Option<PretrainObjective>,
    /// Word vectors in `token v1 ... vk` text format.
    pub embeddings: Option<PathBuf>,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub lr: LrConfig,
    pub pipeline_lr: PipelineLrConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            vocab_cap: DEFAULT_VOCAB_CAP,
            pretrain: None,
            embeddings: None,
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            lr: LrConfig::default(),
            pipeline_lr: PipelineLrConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str, source: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("{}: {e}", source.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        ExperimentConfig::parse(&read_to_string(path)?, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes to TOML")
    }

    /// Use one seed for initialization, shuffling and the nested split.
    pub fn set_seed(&mut self, seed: u64) {
        self.model.seed = seed;
        self.train.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab_cap == 0 {
            return Err(CliError::Usage("vocab_cap must be at least 1".into()));
        }
        self.model.validate()?;
        self.train.validate()?;
        Ok(())
    }
}
