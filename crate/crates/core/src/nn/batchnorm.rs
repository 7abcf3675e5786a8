//! Batch normalization with running statistics for inference.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::Mode;

pub const BN_EPS: f64 = 1e-3;
/// Fraction of the running statistic retained per update.
pub const BN_MOMENTUM: f64 = 0.99;

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub eps: f64,
    pub momentum: f64,
}

/// Gradients for the trainable parameters.
#[derive(Debug, Clone)]
pub struct BatchNormGrads {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

/// Saved normalization state for the backward pass.
#[derive(Debug, Clone)]
pub struct BatchNormCache {
    xhat: Matrix,
    inv_std: Vec<f64>,
}

impl BatchNorm {
    pub fn new(features: usize) -> Self {
        BatchNorm {
            gamma: vec![1.0; features],
            beta: vec![0.0; features],
            running_mean: vec![0.0; features],
            running_var: vec![1.0; features],
            eps: BN_EPS,
            momentum: BN_MOMENTUM,
        }
    }

    pub fn features(&self) -> usize {
        self.gamma.len()
    }

    /// Bookkeeping count: all four per-feature arrays, matching the
    /// convention under which the classifier totals are reported.
    pub fn param_count(&self) -> usize {
        4 * self.features()
    }

    pub fn trainable_count(&self) -> usize {
        2 * self.features()
    }

    /// Train mode normalizes by batch statistics (biased variance) and
    /// updates the running statistics; infer mode uses the running
    /// statistics. The cache is only produced in train mode.
    pub fn forward(&mut self, x: &Matrix, mode: Mode) -> Result<(Matrix, Option<BatchNormCache>)> {
        let f = self.features();
        if x.cols() != f {
            return Err(Error::InvalidArgument(format!(
                "batchnorm: input has {} features, layer has {f}",
                x.cols()
            )));
        }
        let n = x.rows();
        match mode {
            Mode::Train => {
                if n < 2 {
                    return Err(Error::InvalidArgument(
                        "batchnorm train mode requires batch size >= 2".into(),
                    ));
                }
                let mut mean = vec![0.0; f];
                for r in 0..n {
                    for (m, &v) in mean.iter_mut().zip(x.row(r)) {
                        *m += v;
                    }
                }
                for m in &mut mean {
                    *m /= n as f64;
                }
                let mut var = vec![0.0; f];
                for r in 0..n {
                    for (j, &v) in x.row(r).iter().enumerate() {
                        let d = v - mean[j];
                        var[j] += d * d;
                    }
                }
                for v in &mut var {
                    *v /= n as f64;
                }

                let inv_std: Vec<f64> = var.iter().map(|&v| 1.0 / (v + self.eps).sqrt()).collect();
                let xhat = Matrix::from_fn(n, f, |r, c| (x.get(r, c) - mean[c]) * inv_std[c]);
                let y = Matrix::from_fn(n, f, |r, c| self.gamma[c] * xhat.get(r, c) + self.beta[c]);

                for j in 0..f {
                    self.running_mean[j] =
                        self.momentum * self.running_mean[j] + (1.0 - self.momentum) * mean[j];
                    self.running_var[j] =
                        self.momentum * self.running_var[j] + (1.0 - self.momentum) * var[j];
                }
                Ok((y, Some(BatchNormCache { xhat, inv_std })))
            }
            Mode::Infer => {
                let y = Matrix::from_fn(n, f, |r, c| {
                    let xhat = (x.get(r, c) - self.running_mean[c])
                        / (self.running_var[c] + self.eps).sqrt();
                    self.gamma[c] * xhat + self.beta[c]
                });
                Ok((y, None))
            }
        }
    }

    /// Backward through the train-mode normalization.
    pub fn backward(&self, cache: &BatchNormCache, dy: &Matrix) -> (BatchNormGrads, Matrix) {
        let f = self.features();
        let n = dy.rows();
        assert_eq!(dy.cols(), f, "batchnorm backward feature dim");
        assert_eq!(cache.xhat.rows(), n, "batchnorm backward batch");

        let mut dgamma = vec![0.0; f];
        let mut dbeta = vec![0.0; f];
        let mut sum_dxhat = vec![0.0; f];
        let mut sum_dxhat_xhat = vec![0.0; f];
        for r in 0..n {
            for j in 0..f {
                let d = dy.get(r, j);
                let xh = cache.xhat.get(r, j);
                dgamma[j] += d * xh;
                dbeta[j] += d;
                let dxhat = d * self.gamma[j];
                sum_dxhat[j] += dxhat;
                sum_dxhat_xhat[j] += dxhat * xh;
            }
        }
        let dx = Matrix::from_fn(n, f, |r, j| {
            let dxhat = dy.get(r, j) * self.gamma[j];
            cache.inv_std[j] / n as f64
                * (n as f64 * dxhat - sum_dxhat[j] - cache.xhat.get(r, j) * sum_dxhat_xhat[j])
        });
        (BatchNormGrads { gamma: dgamma, beta: dbeta }, dx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn sample(n: usize, f: usize, seed: u64) -> Matrix {
        let mut rng = rng_from_seed(seed);
        Matrix::from_fn(n, f, |_, _| rng.gen_range(-2.0..2.0))
    }

    #[test]
    fn train_mode_standardizes_batch() {
        let mut bn = BatchNorm::new(3);
        let x = sample(64, 3, 1);
        let (y, _) = bn.forward(&x, Mode::Train).unwrap();
        for j in 0..3 {
            let col: Vec<f64> = (0..64).map(|r| y.get(r, j)).collect();
            let mean: f64 = col.iter().sum::<f64>() / 64.0;
            let var: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 64.0;
            assert!(mean.abs() < 1e-12);
            // eps shrinks the variance slightly below 1
            assert!((var - 1.0).abs() < 0.01, "var {var}");
        }
    }

    #[test]
    fn affine_parameters_shift_and_scale() {
        let mut bn = BatchNorm::new(2);
        bn.gamma = vec![2.0, 2.0];
        bn.beta = vec![3.0, 3.0];
        let x = sample(128, 2, 2);
        let (y, _) = bn.forward(&x, Mode::Train).unwrap();
        for j in 0..2 {
            let col: Vec<f64> = (0..128).map(|r| y.get(r, j)).collect();
            let mean: f64 = col.iter().sum::<f64>() / 128.0;
            let std: f64 =
                (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 128.0).sqrt();
            assert!((mean - 3.0).abs() < 1e-12);
            assert!((std - 2.0).abs() < 0.02);
        }
    }

    #[test]
    fn infer_with_identity_statistics_is_affine() {
        let mut bn = BatchNorm::new(2);
        bn.gamma = vec![1.5, -0.5];
        bn.beta = vec![0.25, 1.0];
        bn.eps = 0.0;
        let x = sample(4, 2, 3);
        let (y, cache) = bn.forward(&x, Mode::Infer).unwrap();
        assert!(cache.is_none());
        for r in 0..4 {
            for j in 0..2 {
                let expect = bn.gamma[j] * x.get(r, j) + bn.beta[j];
                assert!((y.get(r, j) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn train_mode_rejects_batch_of_one() {
        let mut bn = BatchNorm::new(2);
        let x = sample(1, 2, 4);
        assert!(bn.forward(&x, Mode::Train).is_err());
        assert!(bn.forward(&x, Mode::Infer).is_ok());
    }

    #[test]
    fn running_statistics_blend_toward_batch() {
        let mut bn = BatchNorm::new(1);
        let x = Matrix::from_vec(2, 1, vec![1.0, 3.0]).unwrap();
        bn.forward(&x, Mode::Train).unwrap();
        // batch mean 2, biased batch var 1
        assert!((bn.running_mean[0] - (0.99 * 0.0 + 0.01 * 2.0)).abs() < 1e-12);
        assert!((bn.running_var[0] - (0.99 * 1.0 + 0.01 * 1.0)).abs() < 1e-12);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut bn = BatchNorm::new(3);
        bn.gamma = vec![1.3, 0.7, -0.9];
        bn.beta = vec![0.2, -0.1, 0.4];
        let x = sample(5, 3, 9);

        // objective: sum of squares of the normalized output
        let loss = |bn: &BatchNorm, x: &Matrix| -> f64 {
            let mut b = bn.clone();
            let (y, _) = b.forward(x, Mode::Train).unwrap();
            y.as_slice().iter().map(|v| v * v).sum()
        };
        let mut b = bn.clone();
        let (y, cache) = b.forward(&x, Mode::Train).unwrap();
        let dy = Matrix::from_fn(5, 3, |r, c| 2.0 * y.get(r, c));
        let (grads, dx) = bn.backward(cache.as_ref().unwrap(), &dy);

        let eps = 1e-6;
        for j in 0..3 {
            let mut p = bn.clone();
            p.gamma[j] += eps;
            let up = loss(&p, &x);
            p.gamma[j] -= 2.0 * eps;
            let down = loss(&p, &x);
            let numeric = (up - down) / (2.0 * eps);
            assert!((grads.gamma[j] - numeric).abs() < 1e-5 * numeric.abs().max(1.0));

            let mut p = bn.clone();
            p.beta[j] += eps;
            let up = loss(&p, &x);
            p.beta[j] -= 2.0 * eps;
            let down = loss(&p, &x);
            let numeric = (up - down) / (2.0 * eps);
            assert!((grads.beta[j] - numeric).abs() < 1e-5 * numeric.abs().max(1.0));
        }
        // input gradients
        for idx in 0..15 {
            let mut xp = x.clone();
            xp.as_mut_slice()[idx] += eps;
            let up = loss(&bn, &xp);
            xp.as_mut_slice()[idx] -= 2.0 * eps;
            let down = loss(&bn, &xp);
            let numeric = (up - down) / (2.0 * eps);
            assert!(
                (dx.as_slice()[idx] - numeric).abs() < 1e-5 * numeric.abs().max(1.0),
                "dx[{idx}]: {} vs {numeric}",
                dx.as_slice()[idx]
            );
        }
    }
}
