//! EEG epoch conditioning, ERSP time-frequency power, ROI band power,
//! group statistics and the correlation of band power with speech-model
//! depression probabilities.

mod analysis;
mod condition;
mod ersp;
pub mod filter;
mod io;
mod roi;

use std::fmt;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use analysis::{
    correlate_power_logits, delta_logits, group_compare, pointwise_group_trace, CorrelationScope, DeltaLogits,
    GroupComparison, ParticipantValue,
};
pub use condition::{condition_epochs, default_montage, filter_channel, reject_epochs, ConditioningConfig, TARGET_RATE};
pub use ersp::{compute_ersp, BaselineMode, ErspConfig, ErspMatrix};
pub use io::{load_epoch_dir, write_epoch_dir, write_ersp_csv, EpochManifest, MANIFEST_NAME};
pub use roi::{band_power, Band, BandWindow, RoiSpec, TimeWindow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Group {
    #[serde(rename = "MDD")]
    Mdd,
    #[serde(rename = "HC")]
    Hc,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::Mdd => "MDD",
            Group::Hc => "HC",
        })
    }
}

/// Facial-expression category of the task stimuli.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StimulusCondition {
    Fear,
    Sad,
    Happy,
}

impl StimulusCondition {
    pub const ALL: [StimulusCondition; 3] = [StimulusCondition::Fear, StimulusCondition::Sad, StimulusCondition::Happy];

    pub fn as_str(self) -> &'static str {
        match self {
            StimulusCondition::Fear => "fear",
            StimulusCondition::Sad => "sad",
            StimulusCondition::Happy => "happy",
        }
    }
}

impl fmt::Display for StimulusCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// All epochs of one participant in one stimulus condition.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochSet {
    pub participant_id: String,
    pub group: Group,
    pub condition: StimulusCondition,
    /// `channels x samples`, in µV.
    pub epochs: Vec<Array2<f64>>,
    pub channels: Vec<String>,
    pub sample_rate: f64,
    /// Sample index of stimulus onset.
    pub t0_index: usize,
    /// Cleared when too few epochs survive artifact rejection.
    pub valid: bool,
}

impl EpochSet {
    pub fn n_samples(&self) -> usize {
        self.epochs.first().map_or(0, |e| e.ncols())
    }

    /// Time of sample `i` relative to onset, in ms.
    pub fn time_ms(&self, i: usize) -> f64 {
        (i as f64 - self.t0_index as f64) * 1000.0 / self.sample_rate
    }

    pub fn channel_index(&self, name: &str) -> Result<usize> {
        self.channels
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Montage(format!("channel `{name}` not in recording of `{}`", self.participant_id)))
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate <= 0.0 || !self.sample_rate.is_finite() {
            return Err(Error::Data(format!("{}: invalid sample rate", self.participant_id)));
        }
        let shape = (self.channels.len(), self.n_samples());
        for (k, e) in self.epochs.iter().enumerate() {
            if e.dim() != shape {
                return Err(Error::Shape(format!(
                    "{}: epoch {k} is {:?}, expected {:?}",
                    self.participant_id,
                    e.dim(),
                    shape
                )));
            }
            if e.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("{}: epoch {k} has non-finite samples", self.participant_id)));
            }
        }
        if !self.epochs.is_empty() && self.t0_index >= shape.1 {
            return Err(Error::Data(format!("{}: onset index outside the epoch", self.participant_id)));
        }
        Ok(())
    }
}
