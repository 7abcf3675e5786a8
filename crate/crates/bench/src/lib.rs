//! Shared input builders for the pipeline benchmarks.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gliograde::imaging::GrayImage;
use gliograde::matrix::Matrix;

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

/// Normalized slice with a bright central blob over a noisy background,
/// shaped like the real segmentation input.
pub fn blob_image(side: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = side as f64 / 2.0;
    let r = side as f64 / 6.0;
    let pixels = (0..side * side)
        .map(|i| {
            let (x, y) = ((i % side) as f64, (i / side) as f64);
            let d2 = ((x - c) / r).powi(2) + ((y - c) / r).powi(2);
            let base = rng.gen_range(0.0..0.1);
            if d2 <= 1.0 {
                base + 0.8 * (1.0 - 0.4 * d2)
            } else {
                base
            }
        })
        .collect();
    GrayImage::new(side, side, pixels).unwrap()
}
