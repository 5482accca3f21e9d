//! Frame-level acoustic features: 16 descriptors per 25 ms frame plus their
//! first-order deltas.
//!
//! Descriptor layout: `[log-energy, MFCC 1..=12, F0, ZCR, voicing probability]`.

mod delta;
mod descriptors;
mod framing;
mod io;
mod mel;

use ndarray::Array2;

use crate::corpus::{Condition, Label, RecordingManifest};
use crate::error::{Error, Result};

pub use delta::append_deltas;
pub use descriptors::{compute_descriptors, DescriptorExtractor, PitchEstimate, VOICING_THRESHOLD};
pub use framing::{frame_count, frame_signal};
pub use io::{import_feature_csv, read_wav, write_feature_csv};
pub use mel::{hz_to_mel, mel_to_hz, MelFilterbank};

pub const DESCRIPTOR_DIM: usize = 16;
pub const FEATURE_DIM: usize = 2 * DESCRIPTOR_DIM;
pub const NUM_MFCC: usize = 12;
pub const NUM_MEL_FILTERS: usize = 26;
pub const WINDOW_MS: f64 = 25.0;
pub const SHIFT_MS: f64 = 10.0;
pub const MIN_SAMPLE_RATE: u32 = 8000;
/// Floor applied to energies before taking logarithms.
pub const ENERGY_FLOOR: f64 = 1e-10;

/// Mono audio with amplitudes in [-1, 1].
#[derive(Debug, Clone)]
pub struct SampleBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl SampleBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Data("sample buffer is empty".into()));
        }
        if sample_rate < MIN_SAMPLE_RATE {
            return Err(Error::Data(format!(
                "sample rate {sample_rate} Hz is below the minimum of {MIN_SAMPLE_RATE} Hz"
            )));
        }
        Ok(SampleBuffer { samples, sample_rate })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Frame-level 32-dimensional features of one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    /// `T x 32`, one row per frame.
    pub frames: Array2<f64>,
    pub speaker_id: String,
    pub recording_id: String,
    pub condition: Condition,
    pub label: Label,
}

impl FeatureSequence {
    pub fn new(frames: Array2<f64>, manifest: &RecordingManifest) -> Result<Self> {
        if frames.nrows() == 0 {
            return Err(Error::Data(format!("recording {} has no frames", manifest.recording_id)));
        }
        if frames.ncols() != FEATURE_DIM {
            return Err(Error::Shape(format!(
                "recording {}: expected {FEATURE_DIM} feature columns, got {}",
                manifest.recording_id,
                frames.ncols()
            )));
        }
        if frames.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(format!("recording {} contains non-finite features", manifest.recording_id)));
        }
        Ok(FeatureSequence {
            frames,
            speaker_id: manifest.speaker_id.clone(),
            recording_id: manifest.recording_id.clone(),
            condition: manifest.condition,
            label: manifest.label,
        })
    }

    pub fn len(&self) -> usize {
        self.frames.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.nrows() == 0
    }

    pub fn manifest(&self) -> RecordingManifest {
        RecordingManifest {
            speaker_id: self.speaker_id.clone(),
            recording_id: self.recording_id.clone(),
            condition: self.condition,
            label: self.label,
            sample_rate: None,
        }
    }
}

/// Full extraction: frame, describe, append deltas.
pub fn extract_features(buf: &SampleBuffer, manifest: &RecordingManifest) -> Result<FeatureSequence> {
    let blocks = frame_signal(buf, WINDOW_MS, SHIFT_MS)?;
    let window = blocks[0].len();
    let extractor = DescriptorExtractor::new(buf.sample_rate(), window);
    let descriptors: Vec<[f64; DESCRIPTOR_DIM]> = blocks.iter().map(|b| extractor.compute(b)).collect();
    let frames = append_deltas(&descriptors)?;
    FeatureSequence::new(frames, manifest)
}
