//! Experiment configuration. A run is fully described by one JSON file, and
//! its SHA-256 is stamped on every result it produces.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::eeg::{ConditioningConfig, ErspConfig, RoiSpec};
use crate::error::{Error, Result};
use crate::eval::CvConfig;
use crate::stats::TTestKind;
use crate::synth::{EegSynthSpec, SpeechSynthSpec};

/// Environment variable consulted when no data root is configured.
pub const DATA_ROOT_ENV: &str = "CDMA_DATA_ROOT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub data_root: Option<PathBuf>,
    pub output_root: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths { data_root: None, output_root: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EegConfig {
    pub conditioning: ConditioningConfig,
    pub ersp: ErspConfig,
    pub rois: Vec<RoiSpec>,
    pub t_test: TTestKind,
}

impl Default for EegConfig {
    fn default() -> Self {
        EegConfig {
            conditioning: ConditioningConfig::default(),
            ersp: ErspConfig::default(),
            rois: RoiSpec::defaults(),
            t_test: TTestKind::Pooled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub speech: SpeechSynthSpec,
    pub eeg: EegSynthSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub cv: CvConfig,
    pub iterations: usize,
    pub seed: u64,
    pub eeg: EegConfig,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            paths: Paths::default(),
            cv: CvConfig::default(),
            iterations: 50,
            seed: 0,
            eeg: EegConfig::default(),
            synth: SynthConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.cv.train;
        let positive = [
            ("segment length", self.cv.segment.length),
            ("segment stride", self.cv.segment.stride),
            ("hidden size", t.hidden_dim),
            ("batch size", t.batch_size),
            ("epochs", t.epochs),
            ("iterations", self.iterations),
            ("folds", self.cv.folds),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        let o = &t.optimizer;
        if !(o.learning_rate > 0.0 && o.epsilon > 0.0 && (0.0..1.0).contains(&o.decay)) {
            return Err(Error::Config("optimizer needs lr > 0, eps > 0 and decay in [0, 1)".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config is serializable");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Configured data root, else the environment default.
    pub fn data_root(&self) -> Option<PathBuf> {
        self.paths.data_root.clone().or_else(|| std::env::var_os(DATA_ROOT_ENV).map(PathBuf::from))
    }
}
