use std::collections::BTreeMap;
use std::fmt;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::folds::{check_disjoint, make_folds, FoldAssignment};
use crate::corpus::{Condition, Corpus, Label};
use crate::error::{Error, Result};
use crate::model::{aggregate, majority_vote, train, FeatureScaler, PreparedSpeaker, ProbSet, TrainConfig};
use crate::pool::{mix_seed, parallel_map};
use crate::segment::{segment_responses, SegmentConfig, ShortSequencePolicy};

/// How repeated runs vary between iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldMode {
    /// New fold assignment and new weights every iteration.
    #[default]
    Reshuffle,
    /// Folds fixed by the base seed; only weight initialization varies.
    WeightsOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub folds: usize,
    pub segment: SegmentConfig,
    pub read_policy: ShortSequencePolicy,
    pub response_policy: ShortSequencePolicy,
    pub train: TrainConfig,
    /// Z-score features with statistics of the training speakers of each fold.
    pub standardize: bool,
    pub fold_mode: FoldMode,
    /// Fault injection for testing the leakage guard: puts one test speaker
    /// into the training set of every fold.
    pub inject_leak: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 5,
            segment: SegmentConfig::default(),
            read_policy: ShortSequencePolicy::Drop,
            response_policy: ShortSequencePolicy::ZeroPad,
            train: TrainConfig::default(),
            standardize: true,
            fold_mode: FoldMode::Reshuffle,
            inject_leak: false,
        }
    }
}

/// One of the four output streams of a cross-validation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stream {
    Positive,
    Neutral,
    Negative,
    Combination,
}

impl Stream {
    pub const ALL: [Stream; 4] = [Stream::Positive, Stream::Neutral, Stream::Negative, Stream::Combination];

    pub fn condition(self) -> Option<Condition> {
        match self {
            Stream::Positive => Some(Condition::Positive),
            Stream::Neutral => Some(Condition::Neutral),
            Stream::Negative => Some(Condition::Negative),
            Stream::Combination => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stream::Positive => "positive",
            Stream::Neutral => "neutral",
            Stream::Negative => "negative",
            Stream::Combination => "combination",
        }
    }
}

impl fmt::Display for Stream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Stream {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stream::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Data(format!("unknown stream `{s}`")))
    }
}

/// Per-speaker inference record. For the combination stream `probs` is
/// absent, `p_hat` is the mean of the three condition estimates and `label`
/// the majority vote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerPrediction {
    pub speaker_id: String,
    pub condition: Stream,
    #[serde(flatten, skip_serializing_if = "Option::is_none", default)]
    pub probs: Option<ProbSet>,
    pub p_hat: f64,
    pub label: Label,
    /// Depression probability consumed by the EEG correlation stage (equal to `p_hat`).
    pub logit: f64,
    pub truth: Label,
    pub fold: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub assignment: FoldAssignment,
    /// Predictions per stream, sorted by speaker id.
    pub streams: BTreeMap<Stream, Vec<SpeakerPrediction>>,
}

impl CvOutcome {
    pub fn stream(&self, s: Stream) -> &[SpeakerPrediction] {
        self.streams.get(&s).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Segmented, unscaled inputs of one speaker.
#[derive(Debug, Clone)]
pub struct SpeakerSegments {
    pub speaker_id: String,
    pub label: Label,
    pub read: Vec<Array2<f64>>,
    pub responses: BTreeMap<Condition, Vec<Array2<f64>>>,
}

/// Segments every speaker, failing with a data error that names the first
/// speaker lacking read speech or responses for a condition.
pub fn segment_corpus(corpus: &Corpus, cfg: &CvConfig) -> Result<Vec<SpeakerSegments>> {
    let named = |id: &str, what: &str, e: Error| Error::Data(format!("speaker `{id}`: {what}: {e}"));
    corpus
        .speakers
        .iter()
        .map(|sp| {
            let id = &sp.speaker_id;
            if sp.read.is_empty() {
                return Err(Error::Data(format!("speaker `{id}` has no read speech")));
            }
            let read = segment_responses(&sp.read, &cfg.segment, cfg.read_policy)
                .map_err(|e| named(id, "read speech", e))?;
            let mut responses = BTreeMap::new();
            for c in Condition::EMOTIONAL {
                let recs = sp.responses(c);
                if recs.is_empty() {
                    return Err(Error::Data(format!("speaker `{id}` has no {c} responses")));
                }
                let set = segment_responses(recs, &cfg.segment, cfg.response_policy)
                    .map_err(|e| named(id, &format!("{c} responses"), e))?;
                responses.insert(c, set.segments.into_iter().map(|s| s.vectors).collect());
            }
            Ok(SpeakerSegments {
                speaker_id: id.clone(),
                label: sp.label,
                read: read.segments.into_iter().map(|s| s.vectors).collect(),
                responses,
            })
        })
        .collect()
}

fn prepare(sp: &SpeakerSegments, c: Condition, scaler: Option<&FeatureScaler>) -> Result<PreparedSpeaker> {
    let scale = |segs: &[Array2<f64>]| -> Vec<Array2<f64>> {
        match scaler {
            Some(s) => segs.iter().map(|m| s.apply(m)).collect(),
            None => segs.to_vec(),
        }
    };
    PreparedSpeaker::new(sp.speaker_id.clone(), sp.label, &scale(&sp.read), &scale(&sp.responses[&c]))
}

/// Trains one model on `train_idx` for condition `c` and predicts `test_idx`.
fn fold_condition(
    data: &[SpeakerSegments],
    train_idx: &[usize],
    test_idx: &[usize],
    c: Condition,
    cfg: &TrainConfig,
    standardize: bool,
    seed: u64,
) -> Result<Vec<ProbSet>> {
    let scaler = if standardize {
        FeatureScaler::fit(train_idx.iter().flat_map(|&i| data[i].read.iter().chain(&data[i].responses[&c])))
    } else {
        None
    };
    let train_set = train_idx.iter().map(|&i| prepare(&data[i], c, scaler.as_ref())).collect::<Result<Vec<_>>>()?;
    let (model, _) = train(&train_set, cfg, seed)?;
    test_idx.iter().map(|&i| model.predict(&prepare(&data[i], c, scaler.as_ref())?)).collect()
}

/// Person-independent cross-validation over the three emotional conditions
/// plus their majority vote. Every speaker is predicted exactly once, by the
/// models of the fold that excluded them.
pub fn run_cv(cfg: &CvConfig, corpus: &Corpus, fold_seed: u64, weight_seed: u64, jobs: usize) -> Result<CvOutcome> {
    let data = segment_corpus(corpus, cfg)?;
    run_cv_segmented(cfg, &data, fold_seed, weight_seed, jobs)
}

pub fn run_cv_segmented(
    cfg: &CvConfig,
    data: &[SpeakerSegments],
    fold_seed: u64,
    weight_seed: u64,
    jobs: usize,
) -> Result<CvOutcome> {
    let roster: Vec<(String, Label)> = data.iter().map(|s| (s.speaker_id.clone(), s.label)).collect();
    let assignment = make_folds(&roster, cfg.folds, fold_seed)?;
    let mut splits = Vec::with_capacity(cfg.folds);
    for fold in 0..cfg.folds {
        let in_fold = |s: &SpeakerSegments| assignment.folds[&s.speaker_id] == fold;
        let test_idx: Vec<usize> = (0..data.len()).filter(|&i| in_fold(&data[i])).collect();
        let mut train_idx: Vec<usize> = (0..data.len()).filter(|&i| !in_fold(&data[i])).collect();
        if cfg.inject_leak {
            train_idx.push(test_idx[0]);
        }
        check_disjoint(
            fold,
            train_idx.iter().map(|&i| data[i].speaker_id.as_str()),
            test_idx.iter().map(|&i| data[i].speaker_id.as_str()),
        )?;
        splits.push((train_idx, test_idx));
    }

    let tasks: Vec<(usize, usize)> = (0..cfg.folds).flat_map(|f| (0..3).map(move |c| (f, c))).collect();
    let results = parallel_map(tasks.len(), jobs, |t| {
        let (fold, ci) = tasks[t];
        let (train_idx, test_idx) = &splits[fold];
        let seed = mix_seed(weight_seed, (fold * 3 + ci) as u64);
        fold_condition(data, train_idx, test_idx, Condition::EMOTIONAL[ci], &cfg.train, cfg.standardize, seed)
    });

    let mut per_condition: Vec<BTreeMap<usize, (usize, ProbSet)>> = vec![BTreeMap::new(); 3];
    for ((fold, ci), probs) in tasks.into_iter().zip(results) {
        for (&i, ps) in splits[fold].1.iter().zip(probs?) {
            per_condition[ci].insert(i, (fold, ps));
        }
    }

    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by(|&a, &b| data[a].speaker_id.cmp(&data[b].speaker_id));
    let mut streams = BTreeMap::new();
    for (ci, stream) in Stream::ALL[..3].iter().enumerate() {
        let preds = order
            .iter()
            .map(|&i| {
                let (fold, ps) = per_condition[ci][&i];
                let (p_hat, label) = aggregate(&ps);
                SpeakerPrediction {
                    speaker_id: data[i].speaker_id.clone(),
                    condition: *stream,
                    probs: Some(ps),
                    p_hat,
                    label,
                    logit: p_hat,
                    truth: data[i].label,
                    fold,
                }
            })
            .collect::<Vec<_>>();
        streams.insert(*stream, preds);
    }
    let combination = (0..order.len())
        .map(|k| {
            let votes: Vec<&SpeakerPrediction> = Stream::ALL[..3].iter().map(|s| &streams[s][k]).collect();
            let label = majority_vote(&votes.iter().map(|p| p.label).collect::<Vec<_>>())?;
            let p_hat = votes.iter().map(|p| p.p_hat).sum::<f64>() / 3.0;
            Ok(SpeakerPrediction {
                speaker_id: votes[0].speaker_id.clone(),
                condition: Stream::Combination,
                probs: None,
                p_hat,
                label,
                logit: p_hat,
                truth: votes[0].truth,
                fold: votes[0].fold,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    streams.insert(Stream::Combination, combination);
    Ok(CvOutcome { assignment, streams })
}
