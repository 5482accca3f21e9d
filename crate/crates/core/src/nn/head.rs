use ndarray::{Array1, Array2, ArrayView1, ArrayViewMut1};
use rand::Rng;

use super::{uniform_fill, ParamView, Parameterized};

/// Two-class softmax with max subtraction. Index 1 is the depressed class.
pub fn softmax2(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    let z = e0 + e1;
    [e0 / z, e1 / z]
}

/// Dense layer followed by a binary softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSoftmax {
    /// `2 x in_dim`
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl DenseSoftmax {
    pub fn zeros(in_dim: usize) -> Self {
        DenseSoftmax { weight: Array2::zeros((2, in_dim)), bias: Array1::zeros(2) }
    }

    pub fn init<R: Rng>(in_dim: usize, rng: &mut R) -> Self {
        let mut head = Self::zeros(in_dim);
        let bound = 1.0 / (in_dim as f64).sqrt();
        uniform_fill(head.weight.as_slice_mut().unwrap(), bound, rng);
        uniform_fill(head.bias.as_slice_mut().unwrap(), bound, rng);
        head
    }

    pub fn in_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn logits(&self, v: ArrayView1<f64>) -> [f64; 2] {
        [self.weight.row(0).dot(&v) + self.bias[0], self.weight.row(1).dot(&v) + self.bias[1]]
    }

    /// `(p_control, p_depressed)`
    pub fn forward(&self, v: ArrayView1<f64>) -> [f64; 2] {
        softmax2(self.logits(v))
    }

    /// Backpropagates `d loss / d p_depressed` given the forward input and
    /// output. Accumulates into `grads` and, if given, into `d_input`.
    pub fn backward(
        &self,
        v: ArrayView1<f64>,
        probs: [f64; 2],
        d_p_depressed: f64,
        grads: &mut DenseSoftmax,
        d_input: Option<ArrayViewMut1<f64>>,
    ) {
        // softmax Jacobian with upstream (0, g): dz_j = p_j (dp_j - p . dp)
        let dot = probs[1] * d_p_depressed;
        let dz = [probs[0] * (0.0 - dot), probs[1] * (d_p_depressed - dot)];
        for (c, &d) in dz.iter().enumerate() {
            grads.weight.row_mut(c).scaled_add(d, &v);
            grads.bias[c] += d;
        }
        if let Some(mut di) = d_input {
            di.scaled_add(dz[0], &self.weight.row(0));
            di.scaled_add(dz[1], &self.weight.row(1));
        }
    }
}

impl Parameterized for DenseSoftmax {
    fn params(&self) -> Vec<ParamView<'_>> {
        vec![
            ParamView { name: "weight".into(), shape: self.weight.shape().to_vec(), data: self.weight.as_slice().unwrap() },
            ParamView { name: "bias".into(), shape: vec![2], data: self.bias.as_slice().unwrap() },
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.weight.as_slice_mut().unwrap(), self.bias.as_slice_mut().unwrap()]
    }
}
