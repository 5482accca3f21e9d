use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use super::{sigmoid, uniform_fill, ParamView, Parameterized};
use crate::error::{Error, Result};

/// Unidirectional LSTM with zero initial state. Gate blocks are stacked in the
/// order input, forget, cell, output.
#[derive(Debug, Clone, PartialEq)]
pub struct Lstm {
    /// `4H x D`
    pub w_ih: Array2<f64>,
    /// `4H x H`
    pub w_hh: Array2<f64>,
    /// `4H`
    pub bias: Array1<f64>,
}

/// Intermediates recorded by [`Lstm::forward`].
#[derive(Debug, Clone)]
pub struct LstmTrace {
    pub inputs: Array2<f64>,
    /// Activated gates per step, `T x 4H`.
    pub gates: Array2<f64>,
    pub cells: Array2<f64>,
    /// `T x H`
    pub hidden: Array2<f64>,
}

impl LstmTrace {
    pub fn len(&self) -> usize {
        self.hidden.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.hidden.nrows() == 0
    }

    pub fn last_hidden(&self) -> ndarray::ArrayView1<'_, f64> {
        self.hidden.row(self.hidden.nrows() - 1)
    }

    pub fn mean_hidden(&self) -> Array1<f64> {
        self.hidden.mean_axis(Axis(0)).expect("non-empty trace")
    }
}

impl Lstm {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        Lstm {
            w_ih: Array2::zeros((4 * hidden_dim, input_dim)),
            w_hh: Array2::zeros((4 * hidden_dim, hidden_dim)),
            bias: Array1::zeros(4 * hidden_dim),
        }
    }

    /// Uniform(-1/sqrt(H), 1/sqrt(H)) weights; forget-gate bias set to 1.
    pub fn init<R: Rng>(input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        let mut lstm = Self::zeros(input_dim, hidden_dim);
        let bound = 1.0 / (hidden_dim as f64).sqrt();
        for p in lstm.params_mut() {
            uniform_fill(p, bound, rng);
        }
        lstm.bias.slice_mut(s![hidden_dim..2 * hidden_dim]).fill(1.0);
        lstm
    }

    pub fn input_dim(&self) -> usize {
        self.w_ih.ncols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_hh.ncols()
    }

    pub fn forward(&self, inputs: ArrayView2<f64>) -> Result<LstmTrace> {
        let (steps, dim) = inputs.dim();
        if dim != self.input_dim() {
            return Err(Error::Shape(format!("LSTM expects {}-dim inputs, got {dim}", self.input_dim())));
        }
        let h = self.hidden_dim();
        let mut gates = inputs.dot(&self.w_ih.t());
        gates += &self.bias;
        let mut cells = Array2::zeros((steps, h));
        let mut hidden = Array2::zeros((steps, h));
        let w_hh = self.w_hh.as_slice().expect("standard layout");
        let mut h_prev = vec![0.0; h];
        let mut c_prev = vec![0.0; h];
        for t in 0..steps {
            let mut z = gates.row_mut(t);
            let z = z.as_slice_mut().expect("row of standard-layout array");
            if t > 0 {
                for (r, zr) in z.iter_mut().enumerate() {
                    let row = &w_hh[r * h..(r + 1) * h];
                    *zr += row.iter().zip(&h_prev).map(|(a, b)| a * b).sum::<f64>();
                }
            }
            for j in 0..h {
                z[j] = sigmoid(z[j]);
                z[h + j] = sigmoid(z[h + j]);
                z[2 * h + j] = z[2 * h + j].tanh();
                z[3 * h + j] = sigmoid(z[3 * h + j]);
                let c = z[h + j] * c_prev[j] + z[j] * z[2 * h + j];
                c_prev[j] = c;
                h_prev[j] = z[3 * h + j] * c.tanh();
                cells[[t, j]] = c;
                hidden[[t, j]] = h_prev[j];
            }
        }
        Ok(LstmTrace { inputs: inputs.to_owned(), gates, cells, hidden })
    }

    /// Backpropagation through time. `d_hidden` holds `d loss / d h_t` from
    /// everything downstream of each step's output. Parameter gradients are
    /// accumulated into `grads`; the input gradient is returned when asked for.
    pub fn backward(
        &self,
        trace: &LstmTrace,
        d_hidden: ArrayView2<f64>,
        grads: &mut Lstm,
        want_input_grad: bool,
    ) -> Option<Array2<f64>> {
        let steps = trace.len();
        let h = self.hidden_dim();
        let w_hh = self.w_hh.as_slice().expect("standard layout");
        let mut dz_all = Array2::<f64>::zeros((steps, 4 * h));
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        for t in (0..steps).rev() {
            let g = trace.gates.row(t);
            let mut dz = dz_all.row_mut(t);
            for j in 0..h {
                let (i, f, cg, o) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                let c = trace.cells[[t, j]];
                let c_prev = if t > 0 { trace.cells[[t - 1, j]] } else { 0.0 };
                let tc = c.tanh();
                let dh = d_hidden[[t, j]] + dh_next[j];
                let d_o = dh * tc;
                let dc = dc_next[j] + dh * o * (1.0 - tc * tc);
                dz[j] = dc * cg * i * (1.0 - i);
                dz[h + j] = dc * c_prev * f * (1.0 - f);
                dz[2 * h + j] = dc * i * (1.0 - cg * cg);
                dz[3 * h + j] = d_o * o * (1.0 - o);
                dc_next[j] = dc * f;
            }
            dh_next.fill(0.0);
            if t > 0 {
                for (r, &d) in dz.iter().enumerate() {
                    if d != 0.0 {
                        let row = &w_hh[r * h..(r + 1) * h];
                        for (acc, w) in dh_next.iter_mut().zip(row) {
                            *acc += d * w;
                        }
                    }
                }
            }
        }
        grads.w_ih += &dz_all.t().dot(&trace.inputs);
        if steps > 1 {
            grads.w_hh += &dz_all.slice(s![1.., ..]).t().dot(&trace.hidden.slice(s![..steps - 1, ..]));
        }
        grads.bias += &dz_all.sum_axis(Axis(0));
        want_input_grad.then(|| dz_all.dot(&self.w_ih))
    }
}

impl Parameterized for Lstm {
    fn params(&self) -> Vec<ParamView<'_>> {
        vec![
            ParamView { name: "w_ih".into(), shape: self.w_ih.shape().to_vec(), data: self.w_ih.as_slice().unwrap() },
            ParamView { name: "w_hh".into(), shape: self.w_hh.shape().to_vec(), data: self.w_hh.as_slice().unwrap() },
            ParamView { name: "bias".into(), shape: self.bias.shape().to_vec(), data: self.bias.as_slice().unwrap() },
        ]
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.w_ih.as_slice_mut().unwrap(), self.w_hh.as_slice_mut().unwrap(), self.bias.as_slice_mut().unwrap()]
    }
}
