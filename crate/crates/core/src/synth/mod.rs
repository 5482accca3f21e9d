//! Deterministic synthetic corpora for exercising the pipelines end to end.

mod eeg;
mod speech;

pub use eeg::{gen_eeg_epochs, EegSynthSpec, Oscillation, SyntheticEegStudy};
pub use speech::{gen_speech_corpus, write_corpus, ConditionMultipliers, SpeechSynthSpec};
