//! Inverted dropout: inference is a mode-pure identity.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::Mode;

/// Train mode zeroes each unit with probability `rate` and scales
/// survivors by `1 / (1 - rate)`; infer mode passes the input through.
/// The returned mask holds the per-unit multiplier for the backward pass
/// (present only in train mode).
pub fn dropout_forward(
    rate: f64,
    x: &Matrix,
    mode: Mode,
    rng: &mut ChaCha8Rng,
) -> Result<(Matrix, Option<Matrix>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!(
            "dropout rate must be in [0, 1), got {rate}"
        )));
    }
    match mode {
        Mode::Infer => Ok((x.clone(), None)),
        Mode::Train => {
            if rate == 0.0 {
                return Ok((x.clone(), Some(Matrix::from_fn(x.rows(), x.cols(), |_, _| 1.0))));
            }
            let keep = 1.0 - rate;
            let scale = 1.0 / keep;
            let mask = Matrix::from_fn(x.rows(), x.cols(), |_, _| {
                if rng.gen::<f64>() < rate {
                    0.0
                } else {
                    scale
                }
            });
            let y = Matrix::from_fn(x.rows(), x.cols(), |r, c| x.get(r, c) * mask.get(r, c));
            Ok((y, Some(mask)))
        }
    }
}

/// Backward is an elementwise product with the saved mask.
pub fn dropout_backward(mask: &Matrix, dy: &Matrix) -> Matrix {
    Matrix::from_fn(dy.rows(), dy.cols(), |r, c| dy.get(r, c) * mask.get(r, c))
}
