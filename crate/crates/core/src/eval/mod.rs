//! Person-independent cross-validation, repetition harness and metrics.

mod cv;
mod folds;
mod metrics;
mod repeat;

pub use cv::{
    run_cv, run_cv_segmented, segment_corpus, CvConfig, CvOutcome, FoldMode, SpeakerPrediction, SpeakerSegments,
    Stream,
};
pub use folds::{check_disjoint, make_folds, FoldAssignment};
pub use metrics::{compute_metrics, Confusion, MetricsReport};
pub use repeat::{
    compare_f1, run_repetitions, summarize, F1Comparison, IterationOutcome, IterationRecord, MetricValues,
    RepetitionReport, ResultsFile, Summary,
};
