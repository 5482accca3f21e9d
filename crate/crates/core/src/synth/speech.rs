use std::path::Path;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{Condition, Corpus, Label, RecordingManifest};
use crate::error::{Error, Result};
use crate::features::{write_feature_csv, FeatureSequence, FEATURE_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionMultipliers {
    pub read: f64,
    pub positive: f64,
    pub neutral: f64,
    pub negative: f64,
}

impl Default for ConditionMultipliers {
    fn default() -> Self {
        ConditionMultipliers { read: 1.0, positive: 1.5, neutral: 1.0, negative: 1.5 }
    }
}

impl ConditionMultipliers {
    pub fn get(&self, c: Condition) -> f64 {
        match c {
            Condition::Read => self.read,
            Condition::Positive => self.positive,
            Condition::Neutral => self.neutral,
            Condition::Negative => self.negative,
        }
    }
}

/// Gaussian class-shift model. Every frame of a speaker is
/// `speaker offset + [depressed] shift * multiplier(condition) + noise`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeechSynthSpec {
    pub speakers_per_class: usize,
    pub frames_per_recording: usize,
    pub responses_per_condition: usize,
    /// 32-dim mean shift applied to depressed speakers.
    pub class_shift: Vec<f64>,
    /// Frame-level noise SD.
    pub noise_sd: f64,
    /// SD of the per-speaker offset shared by all of a speaker's recordings.
    pub speaker_sd: f64,
    pub multipliers: ConditionMultipliers,
    pub seed: u64,
}

impl Default for SpeechSynthSpec {
    fn default() -> Self {
        SpeechSynthSpec {
            speakers_per_class: 20,
            frames_per_recording: 128,
            responses_per_condition: 2,
            class_shift: uniform_shift(2.0),
            noise_sd: 1.0,
            speaker_sd: 0.0,
            multipliers: ConditionMultipliers::default(),
            seed: 0,
        }
    }
}

/// Equal shift in every dimension with Euclidean norm `norm`.
pub fn uniform_shift(norm: f64) -> Vec<f64> {
    vec![norm / (FEATURE_DIM as f64).sqrt(); FEATURE_DIM]
}

impl SpeechSynthSpec {
    /// Shift norm over frame noise SD.
    pub fn snr(&self) -> f64 {
        self.class_shift.iter().map(|v| v * v).sum::<f64>().sqrt() / self.noise_sd
    }

    pub fn with_snr(mut self, snr: f64) -> Self {
        self.class_shift = uniform_shift(snr * self.noise_sd);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.noise_sd <= 0.0 || self.speaker_sd < 0.0 {
            return Err(Error::Config("noise SD must be positive and speaker SD non-negative".into()));
        }
        if self.class_shift.len() != FEATURE_DIM {
            return Err(Error::Config(format!("class shift must have {FEATURE_DIM} entries")));
        }
        if self.speakers_per_class == 0 || self.responses_per_condition == 0 || self.frames_per_recording < 2 {
            return Err(Error::Config("synthetic corpus needs speakers, responses and at least two frames".into()));
        }
        Ok(())
    }
}

/// Generates the corpus. Speakers `mdd_XX` are depressed, `hc_XX` controls.
pub fn gen_speech_corpus(spec: &SpeechSynthSpec) -> Result<Vec<FeatureSequence>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sd).expect("validated");
    let offset_dist = Normal::new(0.0, spec.speaker_sd.max(f64::MIN_POSITIVE)).expect("validated");
    let mut out = Vec::new();
    for label in [Label::Depressed, Label::Control] {
        for i in 0..spec.speakers_per_class {
            let speaker_id = match label {
                Label::Depressed => format!("mdd_{i:02}"),
                Label::Control => format!("hc_{i:02}"),
            };
            let offset: Vec<f64> = (0..FEATURE_DIM)
                .map(|_| if spec.speaker_sd > 0.0 { offset_dist.sample(&mut rng) } else { 0.0 })
                .collect();
            let mut recordings = vec![(Condition::Read, format!("{speaker_id}_read"))];
            for c in Condition::EMOTIONAL {
                for r in 0..spec.responses_per_condition {
                    recordings.push((c, format!("{speaker_id}_{c}_{r}")));
                }
            }
            for (condition, recording_id) in recordings {
                let shift = if label.is_depressed() { spec.multipliers.get(condition) } else { 0.0 };
                let frames = Array2::from_shape_fn((spec.frames_per_recording, FEATURE_DIM), |(_, j)| {
                    offset[j] + shift * spec.class_shift[j] + noise.sample(&mut rng)
                });
                let manifest = RecordingManifest {
                    speaker_id: speaker_id.clone(),
                    recording_id,
                    condition,
                    label,
                    sample_rate: None,
                };
                out.push(FeatureSequence::new(frames, &manifest)?);
            }
        }
    }
    Ok(out)
}

/// Writes one `<recording>.csv` + `<recording>.json` pair per recording,
/// the layout [`Corpus::load_dir`] reads.
pub fn write_corpus(dir: &Path, sequences: &[FeatureSequence]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for seq in sequences {
        let csv_path = dir.join(format!("{}.csv", seq.recording_id));
        write_feature_csv(&csv_path, seq)?;
        let json_path = dir.join(format!("{}.json", seq.recording_id));
        let text = serde_json::to_string_pretty(&seq.manifest()).map_err(|e| Error::json(&json_path, e))?;
        std::fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;
    }
    Ok(())
}

impl Corpus {
    pub fn synthetic(spec: &SpeechSynthSpec) -> Result<Self> {
        Corpus::from_sequences(gen_speech_corpus(spec)?)
    }
}
