//! LSTM cell with full backpropagation through time.
//!
//! Gate order in the packed weight rows is fixed as (input i, forget f,
//! cell-candidate g, output o). Classification uses the final hidden
//! state, so the backward entry point takes the gradient with respect to
//! that state and unrolls the recurrence over all steps with no
//! truncation.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    /// Input weights, 4h x d; row blocks (i, f, g, o).
    pub wx: Matrix,
    /// Recurrent weights, 4h x h.
    pub wh: Matrix,
    /// Gate biases, 4h.
    pub b: Vec<f64>,
}

/// Gradients mirroring [`LstmCell`].
#[derive(Debug, Clone)]
pub struct LstmGrads {
    pub wx: Matrix,
    pub wh: Matrix,
    pub b: Vec<f64>,
}

/// Per-step activations saved by the forward pass for BPTT.
#[derive(Debug, Clone)]
pub struct LstmCache {
    input_dim: usize,
    hidden: usize,
    inputs: Matrix,     // S x d
    gate_i: Matrix,     // S x h, post-sigmoid
    gate_f: Matrix,     // S x h, post-sigmoid
    gate_g: Matrix,     // S x h, post-tanh
    gate_o: Matrix,     // S x h, post-sigmoid
    cells: Matrix,      // S x h, c_t
    tanh_cells: Matrix, // S x h, tanh(c_t)
    hiddens: Matrix,    // S x h, h_t
    h0: Vec<f64>,
    c0: Vec<f64>,
}

/// Forward outputs: every hidden state plus the final (h, c) pair.
#[derive(Debug, Clone)]
pub struct LstmOutput {
    pub hidden_states: Matrix, // S x h
    pub final_h: Vec<f64>,
    pub final_c: Vec<f64>,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl LstmCell {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        LstmCell {
            wx: Matrix::zeros(4 * hidden, input_dim),
            wh: Matrix::zeros(4 * hidden, hidden),
            b: vec![0.0; 4 * hidden],
        }
    }

    /// Glorot-uniform weights on the packed matrices; forget-gate bias +1,
    /// all other biases zero.
    pub fn init(input_dim: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let lim_x = (6.0 / (input_dim + 4 * hidden) as f64).sqrt();
        let wx = Matrix::from_fn(4 * hidden, input_dim, |_, _| rng.gen_range(-lim_x..lim_x));
        let lim_h = (6.0 / (hidden + 4 * hidden) as f64).sqrt();
        let wh = Matrix::from_fn(4 * hidden, hidden, |_, _| rng.gen_range(-lim_h..lim_h));
        let mut b = vec![0.0; 4 * hidden];
        for v in &mut b[hidden..2 * hidden] {
            *v = 1.0;
        }
        LstmCell { wx, wh, b }
    }

    pub fn input_dim(&self) -> usize {
        self.wx.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.wh.cols()
    }

    pub fn param_count(&self) -> usize {
        let (d, h) = (self.input_dim(), self.hidden_dim());
        4 * (h * (d + h) + h)
    }

    /// Runs the recurrence over a whole `S x d` sequence.
    pub fn forward(&self, sequence: &Matrix, h0: &[f64], c0: &[f64]) -> Result<(LstmOutput, LstmCache)> {
        let (d, h) = (self.input_dim(), self.hidden_dim());
        if sequence.cols() != d {
            return Err(Error::InvalidArgument(format!(
                "lstm forward: sequence feature dim {} does not match cell input dim {d}",
                sequence.cols()
            )));
        }
        if h0.len() != h || c0.len() != h {
            return Err(Error::InvalidArgument(format!(
                "lstm forward: state dims ({}, {}) do not match hidden dim {h}",
                h0.len(),
                c0.len()
            )));
        }
        let steps = sequence.rows();
        if steps == 0 {
            return Err(Error::InvalidArgument("lstm forward: empty sequence".into()));
        }

        let mut cache = LstmCache {
            input_dim: d,
            hidden: h,
            inputs: sequence.clone(),
            gate_i: Matrix::zeros(steps, h),
            gate_f: Matrix::zeros(steps, h),
            gate_g: Matrix::zeros(steps, h),
            gate_o: Matrix::zeros(steps, h),
            cells: Matrix::zeros(steps, h),
            tanh_cells: Matrix::zeros(steps, h),
            hiddens: Matrix::zeros(steps, h),
            h0: h0.to_vec(),
            c0: c0.to_vec(),
        };

        let mut h_prev = h0.to_vec();
        let mut c_prev = c0.to_vec();
        for t in 0..steps {
            let mut z = self.wx.matvec(sequence.row(t));
            let zh = self.wh.matvec(&h_prev);
            for ((zv, hv), bv) in z.iter_mut().zip(zh.iter()).zip(self.b.iter()) {
                *zv += hv + bv;
            }
            for j in 0..h {
                let i = sigmoid(z[j]);
                let f = sigmoid(z[h + j]);
                let g = z[2 * h + j].tanh();
                let o = sigmoid(z[3 * h + j]);
                let c = f * c_prev[j] + i * g;
                let tc = c.tanh();
                let hv = o * tc;
                cache.gate_i.set(t, j, i);
                cache.gate_f.set(t, j, f);
                cache.gate_g.set(t, j, g);
                cache.gate_o.set(t, j, o);
                cache.cells.set(t, j, c);
                cache.tanh_cells.set(t, j, tc);
                cache.hiddens.set(t, j, hv);
            }
            h_prev = cache.hiddens.row(t).to_vec();
            c_prev = cache.cells.row(t).to_vec();
        }

        let output = LstmOutput {
            hidden_states: cache.hiddens.clone(),
            final_h: h_prev,
            final_c: c_prev,
        };
        Ok((output, cache))
    }

    /// Full BPTT from the gradient on the final hidden state. Returns the
    /// weight gradients and the per-step input gradients (`S x d`).
    pub fn backward(&self, cache: &LstmCache, d_final_h: &[f64]) -> Result<(LstmGrads, Matrix)> {
        let (d, h) = (self.input_dim(), self.hidden_dim());
        if cache.input_dim != d || cache.hidden != h {
            return Err(Error::InvalidArgument(format!(
                "lstm backward: cache built for ({}, {}), cell is ({d}, {h})",
                cache.input_dim, cache.hidden
            )));
        }
        if d_final_h.len() != h {
            return Err(Error::InvalidArgument(format!(
                "lstm backward: upstream gradient dim {} does not match hidden dim {h}",
                d_final_h.len()
            )));
        }
        let steps = cache.inputs.rows();

        let mut grads = LstmGrads {
            wx: Matrix::zeros(4 * h, d),
            wh: Matrix::zeros(4 * h, h),
            b: vec![0.0; 4 * h],
        };
        let mut d_inputs = Matrix::zeros(steps, d);
        let mut dh_next = d_final_h.to_vec();
        let mut dc_next = vec![0.0; h];
        let mut dz = vec![0.0; 4 * h];

        for t in (0..steps).rev() {
            let c_prev: &[f64] = if t == 0 { &cache.c0 } else { cache.cells.row(t - 1) };
            let h_prev: &[f64] = if t == 0 { &cache.h0 } else { cache.hiddens.row(t - 1) };

            for j in 0..h {
                let i = cache.gate_i.get(t, j);
                let f = cache.gate_f.get(t, j);
                let g = cache.gate_g.get(t, j);
                let o = cache.gate_o.get(t, j);
                let tc = cache.tanh_cells.get(t, j);

                let dh = dh_next[j];
                let dc = dh * o * (1.0 - tc * tc) + dc_next[j];

                dz[j] = dc * g * i * (1.0 - i);
                dz[h + j] = dc * c_prev[j] * f * (1.0 - f);
                dz[2 * h + j] = dc * i * (1.0 - g * g);
                dz[3 * h + j] = dh * tc * o * (1.0 - o);
                dc_next[j] = dc * f;
            }

            let x_t = cache.inputs.row(t);
            for (row, &dzv) in dz.iter().enumerate() {
                grads.b[row] += dzv;
                let gx = &mut grads.wx.as_mut_slice()[row * d..(row + 1) * d];
                for (g, &xv) in gx.iter_mut().zip(x_t.iter()) {
                    *g += dzv * xv;
                }
                let gh = &mut grads.wh.as_mut_slice()[row * h..(row + 1) * h];
                for (g, &hv) in gh.iter_mut().zip(h_prev.iter()) {
                    *g += dzv * hv;
                }
            }

            let dx = self.wx.matvec_transposed(&dz);
            for (c, v) in dx.into_iter().enumerate() {
                d_inputs.set(t, c, v);
            }
            dh_next = self.wh.matvec_transposed(&dz);
        }

        Ok((grads, d_inputs))
    }
}
