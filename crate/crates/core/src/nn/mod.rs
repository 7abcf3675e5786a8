//! From-scratch neural network primitives and the two classifier
//! architectures: a single-layer LSTM with a 3-unit dense head, and a
//! dense/batch-norm baseline over the flattened sequence.

pub mod adam;
pub mod batchnorm;
pub mod dense;
pub mod dropout;
pub mod loss;
pub mod lstm;

pub use adam::{adam_step, AdamState, ADAM_EPS};
pub use batchnorm::{BatchNorm, BatchNormGrads, BN_EPS, BN_MOMENTUM};
pub use dense::{DenseGrads, DenseLayer};
pub use dropout::{dropout_backward, dropout_forward};
pub use loss::softmax_cross_entropy;
pub use lstm::{LstmCache, LstmCell, LstmGrads, LstmOutput};

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::rng_from_seed;

pub const NUM_CLASSES: usize = 3;
pub const BASELINE_HIDDEN_1: usize = 150;
pub const BASELINE_HIDDEN_2: usize = 90;

/// Forward-pass mode: training uses batch statistics and dropout,
/// inference is deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchKind {
    Lstm { hidden: usize },
    Baseline,
}

/// Classifier architecture: variant, per-slice input dimension, and
/// sequence length. The class count is fixed at three.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Architecture {
    pub kind: ArchKind,
    pub input_dim: usize,
    pub seq_len: usize,
}

impl Architecture {
    pub fn lstm(hidden: usize, input_dim: usize, seq_len: usize) -> Self {
        Architecture {
            kind: ArchKind::Lstm { hidden },
            input_dim,
            seq_len,
        }
    }

    pub fn lstm21(input_dim: usize, seq_len: usize) -> Self {
        Self::lstm(21, input_dim, seq_len)
    }

    pub fn lstm32(input_dim: usize, seq_len: usize) -> Self {
        Self::lstm(32, input_dim, seq_len)
    }

    pub fn baseline(input_dim: usize, seq_len: usize) -> Self {
        Architecture {
            kind: ArchKind::Baseline,
            input_dim,
            seq_len,
        }
    }

    pub fn from_name(name: &str, input_dim: usize, seq_len: usize) -> Result<Self> {
        match name {
            "lstm21" => Ok(Self::lstm21(input_dim, seq_len)),
            "lstm32" => Ok(Self::lstm32(input_dim, seq_len)),
            "baseline" => Ok(Self::baseline(input_dim, seq_len)),
            other => Err(Error::Config(format!(
                "unknown architecture {other:?} (expected lstm21, lstm32, or baseline)"
            ))),
        }
    }

    pub fn name(&self) -> String {
        match self.kind {
            ArchKind::Lstm { hidden } => format!("lstm{hidden}"),
            ArchKind::Baseline => "baseline".to_string(),
        }
    }

    /// Trainable-plus-bookkeeping parameter total. Batch-norm layers count
    /// all four per-feature arrays (scale, shift, and both running
    /// statistics), the convention under which the classifier totals are
    /// reported.
    pub fn param_count(&self) -> usize {
        let d = self.input_dim;
        match self.kind {
            ArchKind::Lstm { hidden: h } => {
                4 * (h * (d + h) + h) + (NUM_CLASSES * h + NUM_CLASSES)
            }
            ArchKind::Baseline => {
                let flat = self.seq_len * d;
                (flat * BASELINE_HIDDEN_1 + BASELINE_HIDDEN_1)
                    + (BASELINE_HIDDEN_1 * BASELINE_HIDDEN_2 + BASELINE_HIDDEN_2)
                    + (BASELINE_HIDDEN_2 * NUM_CLASSES + NUM_CLASSES)
                    + 4 * BASELINE_HIDDEN_1
                    + 4 * BASELINE_HIDDEN_2
            }
        }
    }
}

/// LSTM classifier: one recurrent layer plus a dense head over the final
/// hidden state.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    pub cell: LstmCell,
    pub head: DenseLayer,
    pub seq_len: usize,
}

/// Dense baseline: flatten -> Dense(150) -> BN -> ReLU -> Dropout ->
/// Dense(90) -> BN -> ReLU -> Dropout -> Dense(3).
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel {
    pub fc1: DenseLayer,
    pub bn1: BatchNorm,
    pub fc2: DenseLayer,
    pub bn2: BatchNorm,
    pub fc3: DenseLayer,
    pub input_dim: usize,
    pub seq_len: usize,
}

/// All trainable tensors of either architecture.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)] // both variants are heap-backed
pub enum ModelParams {
    Lstm(LstmModel),
    Baseline(BaselineModel),
}

fn relu(x: &Matrix) -> Matrix {
    Matrix::from_fn(x.rows(), x.cols(), |r, c| x.get(r, c).max(0.0))
}

fn relu_backward(pre: &Matrix, dy: &Matrix) -> Matrix {
    Matrix::from_fn(dy.rows(), dy.cols(), |r, c| {
        if pre.get(r, c) > 0.0 {
            dy.get(r, c)
        } else {
            0.0
        }
    })
}

impl ModelParams {
    /// Seed-controlled initialization. Draw order is fixed (weights in
    /// declaration order), so identical seeds give identical models.
    pub fn init(arch: &Architecture, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        match arch.kind {
            ArchKind::Lstm { hidden } => ModelParams::Lstm(LstmModel {
                cell: LstmCell::init(arch.input_dim, hidden, &mut rng),
                head: DenseLayer::init(NUM_CLASSES, hidden, &mut rng),
                seq_len: arch.seq_len,
            }),
            ArchKind::Baseline => {
                let flat = arch.seq_len * arch.input_dim;
                ModelParams::Baseline(BaselineModel {
                    fc1: DenseLayer::init(BASELINE_HIDDEN_1, flat, &mut rng),
                    bn1: BatchNorm::new(BASELINE_HIDDEN_1),
                    fc2: DenseLayer::init(BASELINE_HIDDEN_2, BASELINE_HIDDEN_1, &mut rng),
                    bn2: BatchNorm::new(BASELINE_HIDDEN_2),
                    fc3: DenseLayer::init(NUM_CLASSES, BASELINE_HIDDEN_2, &mut rng),
                    input_dim: arch.input_dim,
                    seq_len: arch.seq_len,
                })
            }
        }
    }

    pub fn architecture(&self) -> Architecture {
        match self {
            ModelParams::Lstm(m) => Architecture::lstm(
                m.cell.hidden_dim(),
                m.cell.input_dim(),
                m.seq_len,
            ),
            ModelParams::Baseline(m) => Architecture::baseline(m.input_dim, m.seq_len),
        }
    }

    pub fn param_count(&self) -> usize {
        self.architecture().param_count()
    }

    /// Sizes of the trainable tensors, in the flattening order used by
    /// `trainable_views_mut` and the gradient vectors.
    pub fn trainable_shapes(&self) -> Vec<usize> {
        match self {
            ModelParams::Lstm(m) => vec![
                m.cell.wx.as_slice().len(),
                m.cell.wh.as_slice().len(),
                m.cell.b.len(),
                m.head.w.as_slice().len(),
                m.head.b.len(),
            ],
            ModelParams::Baseline(m) => vec![
                m.fc1.w.as_slice().len(),
                m.fc1.b.len(),
                m.bn1.gamma.len(),
                m.bn1.beta.len(),
                m.fc2.w.as_slice().len(),
                m.fc2.b.len(),
                m.bn2.gamma.len(),
                m.bn2.beta.len(),
                m.fc3.w.as_slice().len(),
                m.fc3.b.len(),
            ],
        }
    }

    /// Mutable views over the trainable tensors, aligned with
    /// `trainable_shapes` and the gradient vectors from
    /// `train_loss_and_grads`. Running statistics are not trainable.
    pub fn trainable_views_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            ModelParams::Lstm(m) => vec![
                m.cell.wx.as_mut_slice(),
                m.cell.wh.as_mut_slice(),
                &mut m.cell.b,
                m.head.w.as_mut_slice(),
                &mut m.head.b,
            ],
            ModelParams::Baseline(m) => vec![
                m.fc1.w.as_mut_slice(),
                &mut m.fc1.b,
                &mut m.bn1.gamma,
                &mut m.bn1.beta,
                m.fc2.w.as_mut_slice(),
                &mut m.fc2.b,
                &mut m.bn2.gamma,
                &mut m.bn2.beta,
                m.fc3.w.as_mut_slice(),
                &mut m.fc3.b,
            ],
        }
    }

    fn check_batch(&self, sequences: &[Matrix]) -> Result<()> {
        if sequences.is_empty() {
            return Err(Error::InvalidArgument("empty batch".into()));
        }
        let arch = self.architecture();
        for (i, s) in sequences.iter().enumerate() {
            if s.rows() != arch.seq_len || s.cols() != arch.input_dim {
                return Err(Error::Config(format!(
                    "sequence {i} is {}x{}, model expects {}x{}",
                    s.rows(),
                    s.cols(),
                    arch.seq_len,
                    arch.input_dim
                )));
            }
        }
        Ok(())
    }

    fn flatten_batch(&self, sequences: &[Matrix]) -> Matrix {
        let arch = self.architecture();
        let flat = arch.seq_len * arch.input_dim;
        let mut x = Matrix::zeros(sequences.len(), flat);
        for (r, s) in sequences.iter().enumerate() {
            x.as_mut_slice()[r * flat..(r + 1) * flat].copy_from_slice(s.as_slice());
        }
        x
    }

    /// Inference-mode class logits, one row per sequence. Deterministic
    /// and side-effect free.
    pub fn logits_infer(&self, sequences: &[Matrix]) -> Result<Matrix> {
        self.check_batch(sequences)?;
        match self {
            ModelParams::Lstm(m) => {
                let h = m.cell.hidden_dim();
                let mut logits = Matrix::zeros(sequences.len(), NUM_CLASSES);
                let zeros = vec![0.0; h];
                for (r, seq) in sequences.iter().enumerate() {
                    let (out, _) = m.cell.forward(seq, &zeros, &zeros)?;
                    let y = m.head.forward_vec(&out.final_h);
                    for (c, v) in y.into_iter().enumerate() {
                        logits.set(r, c, v);
                    }
                }
                Ok(logits)
            }
            ModelParams::Baseline(m) => {
                let x = self.flatten_batch(sequences);
                let z1 = m.fc1.forward(&x)?;
                let y1 = m.bn1.forward_infer(&z1)?;
                let r1 = relu(&y1);
                let z2 = m.fc2.forward(&r1)?;
                let y2 = m.bn2.forward_infer(&z2)?;
                let r2 = relu(&y2);
                m.fc3.forward(&r2)
            }
        }
    }

    /// Train-mode forward and backward over a full batch: returns the mean
    /// cross-entropy loss and per-tensor gradients aligned with
    /// `trainable_views_mut`. Batch-norm running statistics are updated as
    /// a side effect; dropout masks are drawn from `dropout_rng`.
    pub fn train_loss_and_grads(
        &mut self,
        sequences: &[Matrix],
        labels: &[usize],
        dropout_rate: f64,
        dropout_rng: &mut ChaCha8Rng,
    ) -> Result<(f64, Vec<Vec<f64>>)> {
        self.check_batch(sequences)?;
        if labels.len() != sequences.len() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} sequences",
                labels.len(),
                sequences.len()
            )));
        }
        match self {
            ModelParams::Lstm(m) => {
                let h = m.cell.hidden_dim();
                let zeros = vec![0.0; h];
                let mut caches = Vec::with_capacity(sequences.len());
                let mut finals = Vec::with_capacity(sequences.len());
                let mut logits = Matrix::zeros(sequences.len(), NUM_CLASSES);
                for (r, seq) in sequences.iter().enumerate() {
                    let (out, cache) = m.cell.forward(seq, &zeros, &zeros)?;
                    let y = m.head.forward_vec(&out.final_h);
                    for (c, v) in y.into_iter().enumerate() {
                        logits.set(r, c, v);
                    }
                    caches.push(cache);
                    finals.push(out.final_h);
                }
                let (loss, dlogits) = softmax_cross_entropy(&logits, labels)?;

                let mut grads = LstmGrads {
                    wx: Matrix::zeros(4 * h, m.cell.input_dim()),
                    wh: Matrix::zeros(4 * h, h),
                    b: vec![0.0; 4 * h],
                };
                let mut head_w = Matrix::zeros(NUM_CLASSES, h);
                let mut head_b = vec![0.0; NUM_CLASSES];
                for (r, cache) in caches.iter().enumerate() {
                    let dl = dlogits.row(r);
                    for (o, &d) in dl.iter().enumerate() {
                        head_b[o] += d;
                        let row = &mut head_w.as_mut_slice()[o * h..(o + 1) * h];
                        for (g, &hv) in row.iter_mut().zip(finals[r].iter()) {
                            *g += d * hv;
                        }
                    }
                    let dh = m.head.w.matvec_transposed(dl);
                    let (g, _) = m.cell.backward(cache, &dh)?;
                    add_matrix(&mut grads.wx, &g.wx);
                    add_matrix(&mut grads.wh, &g.wh);
                    add_slice(&mut grads.b, &g.b);
                }
                Ok((
                    loss,
                    vec![
                        grads.wx.into_vec(),
                        grads.wh.into_vec(),
                        grads.b,
                        head_w.into_vec(),
                        head_b,
                    ],
                ))
            }
            ModelParams::Baseline(m) => {
                let flat = m.seq_len * m.input_dim;
                let mut x = Matrix::zeros(sequences.len(), flat);
                for (r, s) in sequences.iter().enumerate() {
                    x.as_mut_slice()[r * flat..(r + 1) * flat].copy_from_slice(s.as_slice());
                }

                let z1 = m.fc1.forward(&x)?;
                let (y1, c1) = m.bn1.forward(&z1, Mode::Train)?;
                let r1 = relu(&y1);
                let (d1, mask1) = dropout_forward(dropout_rate, &r1, Mode::Train, dropout_rng)?;
                let z2 = m.fc2.forward(&d1)?;
                let (y2, c2) = m.bn2.forward(&z2, Mode::Train)?;
                let r2 = relu(&y2);
                let (d2, mask2) = dropout_forward(dropout_rate, &r2, Mode::Train, dropout_rng)?;
                let logits = m.fc3.forward(&d2)?;

                let (loss, dlogits) = softmax_cross_entropy(&logits, labels)?;

                let (g3, dd2) = m.fc3.backward(&d2, &dlogits);
                let dr2 = dropout_backward(mask2.as_ref().expect("train mode mask"), &dd2);
                let dy2 = relu_backward(&y2, &dr2);
                let (gbn2, dz2) = m.bn2.backward(c2.as_ref().expect("train mode cache"), &dy2);
                let (g2, dd1) = m.fc2.backward(&d1, &dz2);
                let dr1 = dropout_backward(mask1.as_ref().expect("train mode mask"), &dd1);
                let dy1 = relu_backward(&y1, &dr1);
                let (gbn1, dz1) = m.bn1.backward(c1.as_ref().expect("train mode cache"), &dy1);
                let (g1, _) = m.fc1.backward(&x, &dz1);

                Ok((
                    loss,
                    vec![
                        g1.w.into_vec(),
                        g1.b,
                        gbn1.gamma,
                        gbn1.beta,
                        g2.w.into_vec(),
                        g2.b,
                        gbn2.gamma,
                        gbn2.beta,
                        g3.w.into_vec(),
                        g3.b,
                    ],
                ))
            }
        }
    }
}

fn add_matrix(acc: &mut Matrix, other: &Matrix) {
    for (a, b) in acc.as_mut_slice().iter_mut().zip(other.as_slice()) {
        *a += b;
    }
}

fn add_slice(acc: &mut [f64], other: &[f64]) {
    for (a, b) in acc.iter_mut().zip(other.iter()) {
        *a += b;
    }
}

impl BatchNorm {
    /// Inference normalization by running statistics; no state change.
    pub fn forward_infer(&self, x: &Matrix) -> Result<Matrix> {
        let mut copy = self.clone();
        let (y, _) = copy.forward(x, Mode::Infer)?;
        Ok(y)
    }
}

// --- model container -------------------------------------------------------
//
// Flat binary layout: magic "GLM1", a one-byte architecture tag, a
// little-endian u32 dimension header, then every parameter array in
// declaration order as little-endian f64. Batch-norm running statistics
// are included so a loaded model is inference-ready.

pub const MODEL_MAGIC: &[u8; 4] = b"GLM1";
const TAG_LSTM: u8 = 1;
const TAG_BASELINE: u8 = 2;

fn push_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

fn push_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let s = self
            .bytes
            .get(self.pos..self.pos + n)
            .ok_or_else(|| Error::Format("model container truncated".into()))?;
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let b = self.take(n * 8)?;
        let values: Vec<f64> = b
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("model container holds non-finite values".into()));
        }
        Ok(values)
    }
}

impl ModelParams {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        match self {
            ModelParams::Lstm(m) => {
                out.push(TAG_LSTM);
                push_u32(&mut out, m.cell.input_dim());
                push_u32(&mut out, m.cell.hidden_dim());
                push_u32(&mut out, m.seq_len);
                push_f64s(&mut out, m.cell.wx.as_slice());
                push_f64s(&mut out, m.cell.wh.as_slice());
                push_f64s(&mut out, &m.cell.b);
                push_f64s(&mut out, m.head.w.as_slice());
                push_f64s(&mut out, &m.head.b);
            }
            ModelParams::Baseline(m) => {
                out.push(TAG_BASELINE);
                push_u32(&mut out, m.input_dim);
                push_u32(&mut out, m.seq_len);
                push_u32(&mut out, BASELINE_HIDDEN_1);
                push_u32(&mut out, BASELINE_HIDDEN_2);
                push_u32(&mut out, NUM_CLASSES);
                push_f64s(&mut out, m.fc1.w.as_slice());
                push_f64s(&mut out, &m.fc1.b);
                push_f64s(&mut out, &m.bn1.gamma);
                push_f64s(&mut out, &m.bn1.beta);
                push_f64s(&mut out, &m.bn1.running_mean);
                push_f64s(&mut out, &m.bn1.running_var);
                push_f64s(&mut out, m.fc2.w.as_slice());
                push_f64s(&mut out, &m.fc2.b);
                push_f64s(&mut out, &m.bn2.gamma);
                push_f64s(&mut out, &m.bn2.beta);
                push_f64s(&mut out, &m.bn2.running_mean);
                push_f64s(&mut out, &m.bn2.running_var);
                push_f64s(&mut out, m.fc3.w.as_slice());
                push_f64s(&mut out, &m.fc3.b);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(4)? != MODEL_MAGIC {
            return Err(Error::Format("not a GLM1 model container".into()));
        }
        let tag = r.take(1)?[0];
        match tag {
            TAG_LSTM => {
                let d = r.u32()?;
                let h = r.u32()?;
                let s = r.u32()?;
                if d == 0 || h == 0 || s == 0 {
                    return Err(Error::Format("model header has zero dimension".into()));
                }
                let wx = Matrix::from_vec(4 * h, d, r.f64s(4 * h * d)?)?;
                let wh = Matrix::from_vec(4 * h, h, r.f64s(4 * h * h)?)?;
                let b = r.f64s(4 * h)?;
                let head_w = Matrix::from_vec(NUM_CLASSES, h, r.f64s(NUM_CLASSES * h)?)?;
                let head_b = r.f64s(NUM_CLASSES)?;
                if r.pos != bytes.len() {
                    return Err(Error::Format("trailing bytes after model payload".into()));
                }
                Ok(ModelParams::Lstm(LstmModel {
                    cell: LstmCell { wx, wh, b },
                    head: DenseLayer { w: head_w, b: head_b },
                    seq_len: s,
                }))
            }
            TAG_BASELINE => {
                let d = r.u32()?;
                let s = r.u32()?;
                let h1 = r.u32()?;
                let h2 = r.u32()?;
                let classes = r.u32()?;
                if h1 != BASELINE_HIDDEN_1 || h2 != BASELINE_HIDDEN_2 || classes != NUM_CLASSES {
                    return Err(Error::Format(format!(
                        "baseline header ({h1}, {h2}, {classes}) does not match ({BASELINE_HIDDEN_1}, {BASELINE_HIDDEN_2}, {NUM_CLASSES})"
                    )));
                }
                if d == 0 || s == 0 {
                    return Err(Error::Format("model header has zero dimension".into()));
                }
                let flat = s * d;
                let fc1 = DenseLayer {
                    w: Matrix::from_vec(h1, flat, r.f64s(h1 * flat)?)?,
                    b: r.f64s(h1)?,
                };
                let mut bn1 = BatchNorm::new(h1);
                bn1.gamma = r.f64s(h1)?;
                bn1.beta = r.f64s(h1)?;
                bn1.running_mean = r.f64s(h1)?;
                bn1.running_var = r.f64s(h1)?;
                let fc2 = DenseLayer {
                    w: Matrix::from_vec(h2, h1, r.f64s(h2 * h1)?)?,
                    b: r.f64s(h2)?,
                };
                let mut bn2 = BatchNorm::new(h2);
                bn2.gamma = r.f64s(h2)?;
                bn2.beta = r.f64s(h2)?;
                bn2.running_mean = r.f64s(h2)?;
                bn2.running_var = r.f64s(h2)?;
                let fc3 = DenseLayer {
                    w: Matrix::from_vec(NUM_CLASSES, h2, r.f64s(NUM_CLASSES * h2)?)?,
                    b: r.f64s(NUM_CLASSES)?,
                };
                if r.pos != bytes.len() {
                    return Err(Error::Format("trailing bytes after model payload".into()));
                }
                Ok(ModelParams::Baseline(BaselineModel {
                    fc1,
                    bn1,
                    fc2,
                    bn2,
                    fc3,
                    input_dim: d,
                    seq_len: s,
                }))
            }
            other => Err(Error::Format(format!("unknown architecture tag {other}"))),
        }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn table_parameter_counts_reproduce_exactly() {
        assert_eq!(Architecture::lstm21(64, 30).param_count(), 7290);
        assert_eq!(Architecture::lstm32(64, 30).param_count(), 12515);
        assert_eq!(Architecture::baseline(64, 30).param_count(), 302973);
    }

    #[test]
    fn param_count_for_mixed_feature_dimension() {
        // lstm21 over d = 164 features: 4*(21*(164+21)+21) + 66
        assert_eq!(Architecture::lstm21(164, 30).param_count(), 15690);
    }

    #[test]
    fn stored_values_match_param_count() {
        for arch in [
            Architecture::lstm21(12, 5),
            Architecture::lstm32(7, 4),
            Architecture::baseline(6, 4),
        ] {
            let model = ModelParams::init(&arch, 3);
            let stored: usize = match &model {
                ModelParams::Lstm(m) => {
                    m.cell.wx.as_slice().len()
                        + m.cell.wh.as_slice().len()
                        + m.cell.b.len()
                        + m.head.w.as_slice().len()
                        + m.head.b.len()
                }
                ModelParams::Baseline(m) => {
                    m.fc1.param_count()
                        + m.bn1.param_count()
                        + m.fc2.param_count()
                        + m.bn2.param_count()
                        + m.fc3.param_count()
                }
            };
            assert_eq!(stored, arch.param_count(), "{}", arch.name());
        }
    }

    #[test]
    fn from_name_round_trips() {
        let a = Architecture::from_name("lstm21", 64, 30).unwrap();
        assert_eq!(a.name(), "lstm21");
        let a = Architecture::from_name("baseline", 64, 30).unwrap();
        assert_eq!(a.name(), "baseline");
        assert!(matches!(
            Architecture::from_name("vgg16", 64, 30),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn init_is_seed_deterministic() {
        let arch = Architecture::lstm21(10, 6);
        let a = ModelParams::init(&arch, 77);
        let b = ModelParams::init(&arch, 77);
        let c = ModelParams::init(&arch, 78);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn lstm_forget_bias_initialized_to_one() {
        let arch = Architecture::lstm21(8, 4);
        if let ModelParams::Lstm(m) = ModelParams::init(&arch, 0) {
            let h = m.cell.hidden_dim();
            assert!(m.cell.b[..h].iter().all(|&v| v == 0.0));
            assert!(m.cell.b[h..2 * h].iter().all(|&v| v == 1.0));
            assert!(m.cell.b[2 * h..].iter().all(|&v| v == 0.0));
        } else {
            panic!("expected lstm model");
        }
    }

    fn random_batch(arch: &Architecture, n: usize, seed: u64) -> (Vec<Matrix>, Vec<usize>) {
        let mut rng = rng_from_seed(seed);
        let xs = (0..n)
            .map(|_| Matrix::from_fn(arch.seq_len, arch.input_dim, |_, _| rng.gen_range(-1.0..1.0)))
            .collect();
        let labels = (0..n).map(|_| rng.gen_range(0..NUM_CLASSES)).collect();
        (xs, labels)
    }

    #[test]
    fn logits_shape_and_determinism() {
        let arch = Architecture::lstm21(6, 5);
        let model = ModelParams::init(&arch, 1);
        let (xs, _) = random_batch(&arch, 4, 2);
        let a = model.logits_infer(&xs).unwrap();
        let b = model.logits_infer(&xs).unwrap();
        assert_eq!(a.rows(), 4);
        assert_eq!(a.cols(), 3);
        assert_eq!(a, b);
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let arch = Architecture::lstm21(6, 5);
        let model = ModelParams::init(&arch, 1);
        let bad = vec![Matrix::zeros(5, 7)];
        assert!(matches!(model.logits_infer(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn model_container_round_trip_lstm() {
        let arch = Architecture::lstm32(9, 4);
        let model = ModelParams::init(&arch, 5);
        let bytes = model.to_bytes();
        assert_eq!(&bytes[..4], MODEL_MAGIC);
        let back = ModelParams::from_bytes(&bytes).unwrap();
        assert_eq!(model, back);
    }

    #[test]
    fn model_container_round_trip_baseline() {
        let arch = Architecture::baseline(4, 3);
        let mut model = ModelParams::init(&arch, 6);
        // make running statistics non-trivial so the round trip covers them
        if let ModelParams::Baseline(m) = &mut model {
            m.bn1.running_mean[0] = 0.25;
            m.bn2.running_var[3] = 2.5;
        }
        let back = ModelParams::from_bytes(&model.to_bytes()).unwrap();
        assert_eq!(model, back);
    }

    #[test]
    fn container_rejects_corruption() {
        let arch = Architecture::lstm21(4, 3);
        let model = ModelParams::init(&arch, 7);
        let bytes = model.to_bytes();

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(ModelParams::from_bytes(&bad_magic).is_err());

        let truncated = &bytes[..bytes.len() - 3];
        assert!(ModelParams::from_bytes(truncated).is_err());

        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(ModelParams::from_bytes(&trailing).is_err());

        let mut nan = bytes;
        let nan_bytes = f64::NAN.to_le_bytes();
        let off = 4 + 1 + 12;
        nan[off..off + 8].copy_from_slice(&nan_bytes);
        assert!(ModelParams::from_bytes(&nan).is_err());
    }

    /// Central finite differences over every trainable parameter of the
    /// full network; shared by the LSTM and baseline checks.
    fn check_gradients(arch: &Architecture, seed: u64, tol_abs: f64, tol_rel: f64) {
        let mut model = ModelParams::init(arch, seed);
        let (xs, labels) = random_batch(arch, 3, seed ^ 0xabcd);
        let dropout = 0.2;
        let mask_seed = seed ^ 0x5eed;

        let loss_of = |m: &mut ModelParams| -> f64 {
            let mut rng = rng_from_seed(mask_seed);
            m.train_loss_and_grads(&xs, &labels, dropout, &mut rng)
                .unwrap()
                .0
        };
        let (_, grads) = {
            let mut rng = rng_from_seed(mask_seed);
            model
                .train_loss_and_grads(&xs, &labels, dropout, &mut rng)
                .unwrap()
        };

        let eps = 1e-5;
        let n_tensors = grads.len();
        for ti in 0..n_tensors {
            for pi in 0..grads[ti].len() {
                let orig = model.trainable_views_mut()[ti][pi];
                model.trainable_views_mut()[ti][pi] = orig + eps;
                let up = loss_of(&mut model);
                model.trainable_views_mut()[ti][pi] = orig - eps;
                let down = loss_of(&mut model);
                model.trainable_views_mut()[ti][pi] = orig;
                let numeric = (up - down) / (2.0 * eps);
                let analytic = grads[ti][pi];
                let err = (analytic - numeric).abs();
                assert!(
                    err <= tol_abs + tol_rel * analytic.abs().max(numeric.abs()),
                    "tensor {ti} param {pi}: analytic {analytic} vs numeric {numeric}"
                );
            }
        }
    }

    #[test]
    fn lstm_network_gradients_match_finite_differences() {
        check_gradients(&Architecture::lstm(4, 5, 6), 31, 1e-7, 1e-4);
    }

    #[test]
    fn baseline_network_gradients_match_finite_differences() {
        check_gradients(&Architecture::baseline(2, 3), 32, 1e-7, 1e-4);
    }
}
