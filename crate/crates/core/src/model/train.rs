use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cdma::{BatchGraph, CdmaModel, PreparedSpeaker};
use crate::error::{Error, Result};
use crate::nn::{RmsProp, RmsPropConfig, HIDDEN_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub hidden_dim: usize,
    pub epochs: usize,
    /// Speakers per optimizer step.
    pub batch_size: usize,
    pub optimizer: RmsPropConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { hidden_dim: HIDDEN_DIM, epochs: 50, batch_size: 32, optimizer: RmsPropConfig::default() }
    }
}

/// Per-epoch mean batch loss.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epoch_loss: Vec<f64>,
}

/// Trains one condition model from scratch. Deterministic given `seed`.
pub fn train(speakers: &[PreparedSpeaker], cfg: &TrainConfig, seed: u64) -> Result<(CdmaModel, TrainHistory)> {
    let first = speakers.first().ok_or_else(|| Error::Data("no training speakers".into()))?;
    if cfg.batch_size == 0 || cfg.hidden_dim == 0 {
        return Err(Error::Config("batch size and hidden size must be positive".into()));
    }
    let input_dim = first.read[0].ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = CdmaModel::init(input_dim, cfg.hidden_dim, &mut rng);
    let mut optimizer = RmsProp::new(cfg.optimizer, &model);
    let mut order: Vec<usize> = (0..speakers.len()).collect();
    let mut history = TrainHistory::default();
    let mut graph = BatchGraph::new();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&PreparedSpeaker> = chunk.iter().map(|&i| &speakers[i]).collect();
            total += graph.forward(&model, &batch)?;
            let grads = graph.backward(&model)?;
            optimizer.step(&mut model, &grads)?;
            batches += 1;
        }
        history.epoch_loss.push(total / batches as f64);
    }
    Ok((model, history))
}

/// Per-dimension z-scoring fitted on training frames only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureScaler {
    pub fn fit<'a>(segments: impl IntoIterator<Item = &'a Array2<f64>>) -> Option<Self> {
        let mut sum: Option<Array1<f64>> = None;
        let mut sq: Option<Array1<f64>> = None;
        let mut count = 0usize;
        for seg in segments {
            for row in seg.rows() {
                let s = sum.get_or_insert_with(|| Array1::zeros(row.len()));
                *s += &row;
                let q = sq.get_or_insert_with(|| Array1::zeros(row.len()));
                *q += &row.mapv(|v| v * v);
                count += 1;
            }
        }
        let (sum, sq) = (sum?, sq?);
        let n = count as f64;
        let mean = &sum / n;
        let var = (&sq / n - &mean.mapv(|m| m * m)).mapv(|v| v.max(0.0));
        let std = var.mapv(|v| if v > 1e-12 { v.sqrt() } else { 1.0 });
        Some(FeatureScaler { mean: mean.to_vec(), std: std.to_vec() })
    }

    pub fn apply(&self, seg: &Array2<f64>) -> Array2<f64> {
        let mut out = seg.clone();
        for mut row in out.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        out
    }
}
