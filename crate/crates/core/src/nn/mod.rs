//! Differentiable building blocks with hand-written reverse-mode gradients.

mod checkpoint;
pub mod gradcheck;
mod head;
mod loss;
mod lstm;
mod rmsprop;

use rand::Rng;

pub use checkpoint::{Checkpoint, NamedTensor, CHECKPOINT_VERSION};
pub use head::{softmax2, DenseSoftmax};
pub use loss::{cross_entropy, cross_entropy_grad, PROB_CLAMP};
pub use lstm::{Lstm, LstmTrace};
pub use rmsprop::{RmsProp, RmsPropConfig};

pub const HIDDEN_DIM: usize = 32;

/// Read-only view of one named parameter tensor.
#[derive(Debug)]
pub struct ParamView<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [f64],
}

/// Anything that owns trainable tensors. Both methods must enumerate the
/// tensors in the same order; gradients and optimizer state reuse the
/// parameter type as their container.
pub trait Parameterized {
    fn params(&self) -> Vec<ParamView<'_>>;
    fn params_mut(&mut self) -> Vec<&mut [f64]>;

    fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.data.len()).sum()
    }

    /// Sets every entry of every tensor to zero.
    fn zero(&mut self) {
        for p in self.params_mut() {
            p.fill(0.0);
        }
    }

    fn flatten(&self) -> Vec<f64> {
        self.params().iter().flat_map(|p| p.data.iter().copied()).collect()
    }
}

pub(crate) fn prefixed<'a>(prefix: &str, views: Vec<ParamView<'a>>) -> impl Iterator<Item = ParamView<'a>> + 'a {
    let prefix = prefix.to_string();
    views.into_iter().map(move |mut v| {
        v.name = format!("{prefix}.{}", v.name);
        v
    })
}

pub(crate) fn uniform_fill<R: Rng>(data: &mut [f64], bound: f64, rng: &mut R) {
    for v in data {
        *v = rng.gen_range(-bound..bound);
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
