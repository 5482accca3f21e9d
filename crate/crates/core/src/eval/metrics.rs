use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

/// Confusion counts with depressed as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Percentages derived from one confusion table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: Confusion,
}

impl MetricsReport {
    pub fn from_confusion(c: Confusion) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        MetricsReport {
            accuracy: 100.0 * ratio(c.tp + c.tn, c.total()),
            precision: 100.0 * precision,
            recall: 100.0 * recall,
            f1: 100.0 * f1,
            confusion: c,
        }
    }
}

pub fn compute_metrics(preds: &[Label], labels: &[Label]) -> Result<MetricsReport> {
    if preds.len() != labels.len() || preds.is_empty() {
        return Err(Error::Shape(format!("{} predictions for {} labels", preds.len(), labels.len())));
    }
    let mut c = Confusion::default();
    for (p, y) in preds.iter().zip(labels) {
        match (p.is_depressed(), y.is_depressed()) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(MetricsReport::from_confusion(c))
}
