//! Orthonormal 2-D Haar DWT, orthonormal 2-D DCT, zigzag coefficient
//! ordering, dominant-coefficient selection, and the mixed DWT/DCT
//! transform that produces the per-slice feature vector.
//!
//! All transforms here are norm-preserving: the Haar analysis uses the
//! 1/sqrt(2) pair filters and the DCT uses the orthonormal scaling, so
//! Parseval checks hold to round-off and the mixed transform is a linear
//! map of its input.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// One level of a separable 2-D Haar decomposition.
///
/// `ll` is the approximation of both axes; `lh`/`hl`/`hh` carry the detail.
/// The four subbands partition the parent's energy exactly.
#[derive(Debug, Clone)]
pub struct DwtLevel {
    pub ll: Matrix,
    pub lh: Matrix,
    pub hl: Matrix,
    pub hh: Matrix,
}

/// The first `p` zigzag-ordered coefficients of a square matrix, plus the
/// residual with those positions zeroed.
#[derive(Debug, Clone)]
pub struct DominantSelection {
    pub values: Vec<f64>,
    pub positions: Vec<(usize, usize)>,
    pub residual: Matrix,
}

/// How `select_dominant` picks its `p` coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionPolicy {
    /// First `p` positions of the zigzag scan (low-frequency corner).
    /// Fixed support, identical across slices. This is the default.
    ZigzagPrefix,
    /// Largest `p` coefficients by magnitude, ties broken by zigzag order.
    /// Support varies per input; offered for comparison experiments only.
    TopMagnitude,
}

/// Concatenated mixed-transform feature: `p` dominant DCT coefficients of
/// the wavelet LL band followed by `q` coefficients of the deep-DWT
/// summary of the DCT residual.
#[derive(Debug, Clone)]
pub struct MixedFeature {
    pub dct_part: Vec<f64>,
    pub dwt_part: Vec<f64>,
}

impl MixedFeature {
    pub fn len(&self) -> usize {
        self.dct_part.len() + self.dwt_part.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn into_vec(self) -> Vec<f64> {
        let mut v = self.dct_part;
        v.extend_from_slice(&self.dwt_part);
        v
    }
}

/// In-place 1-D orthonormal Haar pass over `line`: first half receives the
/// pair approximations, second half the details.
fn haar_pass(line: &mut [f64], scratch: &mut [f64]) {
    let half = line.len() / 2;
    for i in 0..half {
        let a = line[2 * i];
        let b = line[2 * i + 1];
        scratch[i] = (a + b) / SQRT_2;
        scratch[half + i] = (a - b) / SQRT_2;
    }
    line.copy_from_slice(&scratch[..line.len()]);
}

/// Inverse of `haar_pass`.
fn haar_unpass(line: &mut [f64], scratch: &mut [f64]) {
    let half = line.len() / 2;
    for i in 0..half {
        let l = line[i];
        let h = line[half + i];
        scratch[2 * i] = (l + h) / SQRT_2;
        scratch[2 * i + 1] = (l - h) / SQRT_2;
    }
    line.copy_from_slice(&scratch[..line.len()]);
}

/// Single-level separable orthonormal Haar analysis: rows first, then
/// columns. Requires even dimensions.
pub fn haar_dwt2(m: &Matrix) -> Result<DwtLevel> {
    let (rows, cols) = (m.rows(), m.cols());
    if rows == 0 || cols == 0 || rows % 2 != 0 || cols % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "haar_dwt2 requires even, nonzero dimensions, got {rows}x{cols}"
        )));
    }
    let mut work = m.clone();
    let mut scratch = vec![0.0; rows.max(cols)];

    for r in 0..rows {
        let row = &mut work.as_mut_slice()[r * cols..(r + 1) * cols];
        haar_pass(row, &mut scratch);
    }
    let mut col_buf = vec![0.0; rows];
    for c in 0..cols {
        for r in 0..rows {
            col_buf[r] = work.get(r, c);
        }
        haar_pass(&mut col_buf, &mut scratch);
        for r in 0..rows {
            work.set(r, c, col_buf[r]);
        }
    }

    let (hr, hc) = (rows / 2, cols / 2);
    let quad = |r0: usize, c0: usize| Matrix::from_fn(hr, hc, |r, c| work.get(r0 + r, c0 + c));
    Ok(DwtLevel {
        ll: quad(0, 0),
        // lh: row-approximation, column-detail (top-right quadrant);
        // hl: row-detail, column-approximation (bottom-left quadrant).
        lh: quad(0, hc),
        hl: quad(hr, 0),
        hh: quad(hr, hc),
    })
}

/// Exact inverse of `haar_dwt2` up to round-off.
pub fn haar_idwt2(level: &DwtLevel) -> Result<Matrix> {
    let (hr, hc) = (level.ll.rows(), level.ll.cols());
    for (name, band) in [("lh", &level.lh), ("hl", &level.hl), ("hh", &level.hh)] {
        if band.rows() != hr || band.cols() != hc {
            return Err(Error::InvalidArgument(format!(
                "subband {name} is {}x{}, expected {hr}x{hc}",
                band.rows(),
                band.cols()
            )));
        }
    }
    let (rows, cols) = (hr * 2, hc * 2);
    let mut work = Matrix::zeros(rows, cols);
    for r in 0..hr {
        for c in 0..hc {
            work.set(r, c, level.ll.get(r, c));
            work.set(r, hc + c, level.lh.get(r, c));
            work.set(hr + r, c, level.hl.get(r, c));
            work.set(hr + r, hc + c, level.hh.get(r, c));
        }
    }

    let mut scratch = vec![0.0; rows.max(cols)];
    let mut col_buf = vec![0.0; rows];
    for c in 0..cols {
        for r in 0..rows {
            col_buf[r] = work.get(r, c);
        }
        haar_unpass(&mut col_buf, &mut scratch);
        for r in 0..rows {
            work.set(r, c, col_buf[r]);
        }
    }
    for r in 0..rows {
        let row = &mut work.as_mut_slice()[r * cols..(r + 1) * cols];
        haar_unpass(row, &mut scratch);
    }
    Ok(work)
}

/// Applies `haar_dwt2` `levels` times, recursing into the LL band, and
/// returns the final approximation; detail bands are discarded.
pub fn dwt2_approx(m: &Matrix, levels: usize) -> Result<Matrix> {
    let div = 1usize
        .checked_shl(levels as u32)
        .ok_or_else(|| Error::InvalidArgument(format!("levels {levels} too large")))?;
    if !m.rows().is_multiple_of(div) || !m.cols().is_multiple_of(div) || (levels > 0 && (m.rows() < div || m.cols() < div))
    {
        return Err(Error::InvalidArgument(format!(
            "dwt2_approx: {}x{} not divisible by 2^{levels}",
            m.rows(),
            m.cols()
        )));
    }
    let mut ll = m.clone();
    for _ in 0..levels {
        ll = haar_dwt2(&ll)?.ll;
    }
    Ok(ll)
}

/// Orthonormal DCT-II basis: `basis[k][n] = c(k) cos(pi (2n+1) k / (2N))`
/// with `c(0) = sqrt(1/N)`, `c(k>0) = sqrt(2/N)`.
fn dct_basis(n: usize) -> Matrix {
    Matrix::from_fn(n, n, |k, i| {
        let c = if k == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        };
        c * (std::f64::consts::PI * (2.0 * i as f64 + 1.0) * k as f64 / (2.0 * n as f64)).cos()
    })
}

/// Orthonormal 2-D DCT-II, applied separably: `Y = B_r X B_c^T`.
pub fn dct2(m: &Matrix) -> Matrix {
    let br = dct_basis(m.rows());
    let bc = dct_basis(m.cols());
    br.matmul(&m.matmul_transposed(&bc))
}

/// Orthonormal 2-D DCT-III, the exact inverse of [`dct2`]: `X = B_r^T Y B_c`.
pub fn idct2(m: &Matrix) -> Matrix {
    let br = dct_basis(m.rows());
    let bc = dct_basis(m.cols());
    br.transpose().matmul(&m.matmul(&bc))
}

/// Antidiagonal zigzag scan of an `n x n` grid, JPEG convention:
/// `(0,0), (0,1), (1,0), (2,0), (1,1), (0,2), ...`.
pub fn zigzag_order(n: usize) -> Vec<(usize, usize)> {
    let mut order = Vec::with_capacity(n * n);
    if n == 0 {
        return order;
    }
    for s in 0..=(2 * n - 2) {
        let lo = s.saturating_sub(n - 1);
        let hi = s.min(n - 1);
        if s % 2 == 1 {
            for r in lo..=hi {
                order.push((r, s - r));
            }
        } else {
            for r in (lo..=hi).rev() {
                order.push((r, s - r));
            }
        }
    }
    order
}

/// Keeps `p` coefficients of a square matrix under the given policy and
/// zeroes them out of the returned residual.
pub fn select_dominant_with(
    coeffs: &Matrix,
    p: usize,
    policy: SelectionPolicy,
) -> Result<DominantSelection> {
    if coeffs.rows() != coeffs.cols() {
        return Err(Error::InvalidArgument(format!(
            "select_dominant requires a square matrix, got {}x{}",
            coeffs.rows(),
            coeffs.cols()
        )));
    }
    let n = coeffs.rows();
    if p > n * n {
        return Err(Error::InvalidArgument(format!(
            "p = {p} exceeds coefficient count {}",
            n * n
        )));
    }
    let positions: Vec<(usize, usize)> = match policy {
        SelectionPolicy::ZigzagPrefix => zigzag_order(n).into_iter().take(p).collect(),
        SelectionPolicy::TopMagnitude => {
            let mut indexed: Vec<(usize, (usize, usize))> =
                zigzag_order(n).into_iter().enumerate().collect();
            indexed.sort_by(|(za, pa), (zb, pb)| {
                let ma = coeffs.get(pa.0, pa.1).abs();
                let mb = coeffs.get(pb.0, pb.1).abs();
                mb.partial_cmp(&ma).unwrap().then(za.cmp(zb))
            });
            indexed.into_iter().take(p).map(|(_, pos)| pos).collect()
        }
    };
    let mut residual = coeffs.clone();
    let mut values = Vec::with_capacity(p);
    for &(r, c) in &positions {
        values.push(coeffs.get(r, c));
        residual.set(r, c, 0.0);
    }
    Ok(DominantSelection {
        values,
        positions,
        residual,
    })
}

/// Zigzag-prefix dominant selection (the default policy).
pub fn select_dominant(coeffs: &Matrix, p: usize) -> Result<DominantSelection> {
    select_dominant_with(coeffs, p, SelectionPolicy::ZigzagPrefix)
}

/// The mixed DWT/DCT transform.
///
/// Pipeline on a square, even-sided image: one Haar level keeps the LL
/// band; the DCT of that band yields `p` dominant coefficients; the DCT
/// residual is brought back to the LL domain by the inverse DCT and
/// collapsed by repeated Haar levels to a `sqrt(q) x sqrt(q)`
/// approximation, which is vectorized row-major. Every step is linear, so
/// the whole map is linear in the input image.
pub fn mixed_transform(img: &Matrix, p: usize, q: usize) -> Result<MixedFeature> {
    if img.rows() != img.cols() {
        return Err(Error::InvalidArgument(format!(
            "mixed_transform: image must be square, got {}x{}",
            img.rows(),
            img.cols()
        )));
    }
    if img.rows() < 2 || !img.rows().is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "mixed_transform: image side {} must be even and >= 2",
            img.rows()
        )));
    }
    let half = img.rows() / 2;
    if p > half * half {
        return Err(Error::InvalidArgument(format!(
            "mixed_transform: p = {p} exceeds LL coefficient count {}",
            half * half
        )));
    }
    let q_side = (q as f64).sqrt().round() as usize;
    if q_side * q_side != q || q_side == 0 {
        return Err(Error::InvalidArgument(format!(
            "mixed_transform: q = {q} is not a perfect square"
        )));
    }
    if !half.is_multiple_of(q_side) || !(half / q_side).is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "mixed_transform: q side {q_side} must divide LL side {half} by a power of two"
        )));
    }
    let levels = (half / q_side).trailing_zeros() as usize;

    let ll = haar_dwt2(img)?.ll;
    let coeffs = dct2(&ll);
    let selection = select_dominant(&coeffs, p)?;
    let residual_spatial = idct2(&selection.residual);
    let summary = dwt2_approx(&residual_spatial, levels)?;

    Ok(MixedFeature {
        dct_part: selection.values,
        dwt_part: summary.into_vec(),
    })
}
