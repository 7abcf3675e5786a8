//! Fully connected layer.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Affine layer `y = W x + b` with `W: out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub w: Matrix,
    pub b: Vec<f64>,
}

/// Gradients mirroring [`DenseLayer`].
#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub w: Matrix,
    pub b: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        DenseLayer {
            w: Matrix::zeros(out_dim, in_dim),
            b: vec![0.0; out_dim],
        }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn init(out_dim: usize, in_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        DenseLayer {
            w: Matrix::from_fn(out_dim, in_dim, |_, _| rng.gen_range(-limit..limit)),
            b: vec![0.0; out_dim],
        }
    }

    pub fn out_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn in_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn param_count(&self) -> usize {
        self.w.rows() * self.w.cols() + self.b.len()
    }

    /// Batch forward: `x` is batch x in, output batch x out.
    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.in_dim() {
            return Err(Error::InvalidArgument(format!(
                "dense forward: input dim {} does not match layer in_dim {}",
                x.cols(),
                self.in_dim()
            )));
        }
        let mut out = Matrix::zeros(x.rows(), self.out_dim());
        for r in 0..x.rows() {
            let y = self.w.matvec(x.row(r));
            for (c, v) in y.into_iter().enumerate() {
                out.set(r, c, v + self.b[c]);
            }
        }
        Ok(out)
    }

    /// Single-vector forward.
    pub fn forward_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.w.matvec(x);
        for (v, b) in y.iter_mut().zip(self.b.iter()) {
            *v += b;
        }
        y
    }

    /// Returns `(grads, dx)` given the forward input and the upstream
    /// gradient (both batch-major).
    pub fn backward(&self, x: &Matrix, dy: &Matrix) -> (DenseGrads, Matrix) {
        assert_eq!(dy.cols(), self.out_dim(), "dense backward dy dim");
        assert_eq!(x.cols(), self.in_dim(), "dense backward x dim");
        assert_eq!(x.rows(), dy.rows(), "dense backward batch");
        let mut gw = Matrix::zeros(self.out_dim(), self.in_dim());
        let mut gb = vec![0.0; self.out_dim()];
        let mut dx = Matrix::zeros(x.rows(), self.in_dim());
        for r in 0..x.rows() {
            let xr = x.row(r);
            let dyr = dy.row(r);
            for (o, &d) in dyr.iter().enumerate() {
                gb[o] += d;
                let grow = &mut gw.as_mut_slice()[o * xr.len()..(o + 1) * xr.len()];
                for (g, &xv) in grow.iter_mut().zip(xr.iter()) {
                    *g += d * xv;
                }
            }
            let dxr = self.w.matvec_transposed(dyr);
            for (c, v) in dxr.into_iter().enumerate() {
                dx.set(r, c, v);
            }
        }
        (DenseGrads { w: gw, b: gb }, dx)
    }
}
