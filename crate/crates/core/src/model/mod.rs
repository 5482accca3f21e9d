//! Cross-data multilevel attention classifier.

pub mod attention;
mod cdma;
mod train;

pub use attention::{
    cosine, cosine_attention, cosine_attention_backward, ctga_enhance, itmla_enhance, segment_average, AttentionOutput,
};
pub use cdma::{
    aggregate, cdma_loss, majority_vote, BatchGraph, CdmaModel, PreparedSpeaker, ProbSet, SpeakerTrace, Stage1Output,
    Stage2Output,
};
pub use train::{train, FeatureScaler, TrainConfig, TrainHistory};
