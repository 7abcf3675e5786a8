//! Brain-tumor grade classification from weakly labeled MRI slice sequences.
//!
//! The pipeline: grayscale slices are resized and normalized, the tumor
//! region is isolated as the brightest K-means intensity cluster, each
//! masked slice is reduced to a compact mixed DWT/DCT feature vector, and
//! fixed-length per-patient sequences of those vectors are classified with
//! a from-scratch LSTM (or a dense baseline) trained by Adam.
//!
//! Everything is deterministic given explicit seeds: clustering
//! initialization, weight initialization, dropout masks, dataset splits,
//! and the synthetic corpus generator all derive their randomness from
//! caller-supplied seeds.

#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod features;
pub mod harness;
pub mod imaging;
pub mod matrix;
pub mod nn;
pub mod rng;
pub mod segmentation;
pub mod train_eval;
pub mod transforms;

pub use error::{Error, Result};
pub use features::{DatasetSplit, FeatureMode, Grade, PatientSequence};
pub use imaging::GrayImage;
pub use matrix::Matrix;
pub use nn::{Architecture, ModelParams};
pub use train_eval::{Metrics, TrainConfig};
