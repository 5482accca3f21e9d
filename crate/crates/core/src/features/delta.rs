use ndarray::Array2;

use crate::error::{Error, Result};

use super::{DESCRIPTOR_DIM, FEATURE_DIM};

/// Stacks descriptors with their symmetric first differences,
/// `delta(t) = (d(t+1) - d(t-1)) / 2`, replicating the edge frames.
pub fn append_deltas(descriptors: &[[f64; DESCRIPTOR_DIM]]) -> Result<Array2<f64>> {
    let t = descriptors.len();
    if t < 2 {
        return Err(Error::TooShort { needed: 2, got: t });
    }
    let mut out = Array2::zeros((t, FEATURE_DIM));
    for (i, d) in descriptors.iter().enumerate() {
        let prev = &descriptors[i.saturating_sub(1)];
        let next = &descriptors[(i + 1).min(t - 1)];
        for j in 0..DESCRIPTOR_DIM {
            out[[i, j]] = d[j];
            out[[i, DESCRIPTOR_DIM + j]] = (next[j] - prev[j]) / 2.0;
        }
    }
    Ok(out)
}
