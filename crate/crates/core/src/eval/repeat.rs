use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::cv::{run_cv_segmented, segment_corpus, CvConfig, FoldMode, SpeakerPrediction, Stream};
use super::metrics::{compute_metrics, Confusion, MetricsReport};
use crate::corpus::{Corpus, Label};
use crate::error::{Error, Result};
use crate::pool::parallel_map;
use crate::stats::{mean_std, t_independent_pooled};

/// One repetition of the full cross-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationOutcome {
    pub seed: u64,
    pub metrics: BTreeMap<Stream, MetricsReport>,
    pub predictions: BTreeMap<Stream, Vec<SpeakerPrediction>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValues {
    pub acc: f64,
    pub prec: f64,
    pub rec: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: MetricValues,
    /// Sample (n - 1) standard deviation.
    pub std: MetricValues,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionReport {
    pub iterations: Vec<IterationOutcome>,
}

impl RepetitionReport {
    pub fn metrics(&self, stream: Stream) -> Vec<MetricsReport> {
        self.iterations.iter().map(|it| it.metrics[&stream]).collect()
    }

    pub fn f1_vector(&self, stream: Stream) -> Vec<f64> {
        self.metrics(stream).iter().map(|m| m.f1).collect()
    }

    pub fn summary(&self, stream: Stream) -> Result<Summary> {
        summarize(&self.metrics(stream))
    }
}

pub fn summarize(reports: &[MetricsReport]) -> Result<Summary> {
    let stat = |f: fn(&MetricsReport) -> f64| mean_std(&reports.iter().map(f).collect::<Vec<_>>());
    let (acc, acc_s) = stat(|m| m.accuracy)?;
    let (prec, prec_s) = stat(|m| m.precision)?;
    let (rec, rec_s) = stat(|m| m.recall)?;
    let (f1, f1_s) = stat(|m| m.f1)?;
    Ok(Summary {
        mean: MetricValues { acc, prec, rec, f1 },
        std: MetricValues { acc: acc_s, prec: prec_s, rec: rec_s, f1: f1_s },
    })
}

fn stream_metrics(preds: &[SpeakerPrediction]) -> Result<MetricsReport> {
    let (p, y): (Vec<Label>, Vec<Label>) = preds.iter().map(|p| (p.label, p.truth)).unzip();
    compute_metrics(&p, &y)
}

/// Runs `n` independent cross-validations with seeds `base_seed + i`.
/// Iterations run concurrently on up to `jobs` threads; results are
/// collected in iteration order.
pub fn run_repetitions(cfg: &CvConfig, corpus: &Corpus, n: usize, base_seed: u64, jobs: usize) -> Result<RepetitionReport> {
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let data = segment_corpus(corpus, cfg)?;
    let outcomes = parallel_map(n, jobs, |i| {
        let seed = base_seed.wrapping_add(i as u64);
        let fold_seed = match cfg.fold_mode {
            FoldMode::Reshuffle => seed,
            FoldMode::WeightsOnly => base_seed,
        };
        let out = run_cv_segmented(cfg, &data, fold_seed, seed, 1)?;
        let metrics = out
            .streams
            .iter()
            .map(|(s, p)| Ok((*s, stream_metrics(p)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Ok(IterationOutcome { seed, metrics, predictions: out.streams })
    });
    Ok(RepetitionReport { iterations: outcomes.into_iter().collect::<Result<Vec<_>>>()? })
}

/// Pooled two-sample t-test between two F1 vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F1Comparison {
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub mean_a: f64,
    pub mean_b: f64,
    /// Both vectors constant: the statistic is undefined and `p` is reported as 1
    /// (or 0 when the constants differ).
    pub degenerate: bool,
    pub significant_05: bool,
    pub significant_001: bool,
}

pub fn compare_f1(a: &[f64], b: &[f64]) -> Result<F1Comparison> {
    let r = t_independent_pooled(a, b)?;
    let (mean_a, _) = mean_std(a)?;
    let (mean_b, _) = mean_std(b)?;
    Ok(F1Comparison {
        t: r.statistic,
        df: r.df,
        p: r.p_two_tailed,
        mean_a,
        mean_b,
        degenerate: r.degenerate,
        significant_05: r.p_two_tailed < 0.05,
        significant_001: r.p_two_tailed < 0.001,
    })
}

/// Persisted per-iteration record; the percentages are recomputable from `confusion`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub seed: u64,
    pub acc: f64,
    pub prec: f64,
    pub rec: f64,
    pub f1: f64,
    pub confusion: Confusion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub config_hash: String,
    pub condition: Stream,
    pub iterations: Vec<IterationRecord>,
    pub summary: Summary,
}

impl ResultsFile {
    pub fn from_report(report: &RepetitionReport, stream: Stream, config_hash: &str) -> Result<Self> {
        let iterations = report
            .iterations
            .iter()
            .map(|it| {
                let m = it.metrics[&stream];
                IterationRecord { seed: it.seed, acc: m.accuracy, prec: m.precision, rec: m.recall, f1: m.f1, confusion: m.confusion }
            })
            .collect();
        Ok(ResultsFile { config_hash: config_hash.to_string(), condition: stream, iterations, summary: report.summary(stream)? })
    }

    pub fn f1_vector(&self) -> Vec<f64> {
        self.iterations.iter().map(|r| r.f1).collect()
    }
}
