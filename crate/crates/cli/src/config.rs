//! Resolved run configuration for `bench`, loadable from a TOML file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use phasecoder::bench::{Head, TrainConfig};
use phasecoder::LossWeights;
use serde::{Deserialize, Serialize};

/// Overrides the output directory when no `--out-dir` flag is given.
pub const OUT_DIR_ENV: &str = "PHASECODER_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "bench-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    pub train_count: usize,
    pub test_count: usize,
    pub square_fraction: f64,
    pub noise_sigma: f64,
    /// Optional dataset snapshots to use instead of generating.
    pub train_file: Option<PathBuf>,
    pub test_file: Option<PathBuf>,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self {
            train_count: 5000,
            test_count: 1000,
            square_fraction: 0.0,
            noise_sigma: 0.01,
            train_file: None,
            test_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub hidden: usize,
    /// Classification weight; the angle weight is `0.2 * w1`.
    pub w1: f64,
    pub w2: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            epochs: t.epochs,
            batch: t.batch,
            learning_rate: t.learning_rate,
            momentum: t.momentum,
            hidden: t.hidden,
            w1: t.weights.w1,
            w2: t.weights.w2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub heads: Vec<Head>,
    /// One evaluation pass per value; more than one value is a sweep.
    pub n_steps: Vec<usize>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub save_models: bool,
    pub dataset: DatasetSection,
    pub train: TrainSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            heads: Head::ALL.to_vec(),
            n_steps: vec![phasecoder::DEFAULT_N_STEP],
            seed: 42,
            out_dir: PathBuf::from(DEFAULT_OUT_DIR),
            save_models: false,
            dataset: DatasetSection::default(),
            train: TrainSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.heads.is_empty() {
            bail!("at least one head is required");
        }
        if self.n_steps.is_empty() {
            bail!("at least one n_step value is required");
        }
        for n in &self.n_steps {
            if *n < 3 {
                bail!("n_step = {n}: at least 3 phase-shifting steps are required");
            }
        }
        if self.dataset.train_file.is_none() && self.dataset.train_count == 0 {
            bail!("train_count must be positive");
        }
        if self.dataset.test_file.is_none() && self.dataset.test_count == 0 {
            bail!("test_count must be positive");
        }
        self.train_config(self.n_steps[0])?.validate()?;
        Ok(())
    }

    pub fn train_config(&self, n_step: usize) -> anyhow::Result<TrainConfig> {
        let t = &self.train;
        Ok(TrainConfig {
            epochs: t.epochs,
            batch: t.batch,
            learning_rate: t.learning_rate,
            momentum: t.momentum,
            n_step,
            hidden: t.hidden,
            seed: self.seed,
            weights: LossWeights::with_default_ratio(t.w1, t.w2)?,
        })
    }

    pub fn train_seed(&self) -> u64 {
        self.seed
    }

    pub fn test_seed(&self) -> u64 {
        self.seed.wrapping_add(1)
    }
}
