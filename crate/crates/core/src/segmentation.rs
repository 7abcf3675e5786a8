//! Intensity K-means segmentation and ROI masking.
//!
//! Clustering runs Lloyd's algorithm on the 1-D pixel intensities with
//! k-means++ initialization driven by an explicit seed. The ROI is the
//! brightest cluster; masking zeroes everything else while keeping the
//! image dimensions fixed so downstream transforms always see the same
//! input size.

use rand::Rng;

use crate::error::{Error, Result};
use crate::imaging::GrayImage;
use crate::rng::rng_from_seed;

pub const DEFAULT_MAX_ITER: usize = 300;
pub const DEFAULT_TOL: f64 = 1e-6;

/// Outcome of an intensity clustering run. Centroids are reported sorted
/// ascending with labels re-indexed to match.
#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub centroids: Vec<f64>,
    pub labels: Vec<u8>,
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia recorded after each Lloyd iteration; non-increasing.
    pub inertia_per_iter: Vec<f64>,
}

/// Per-pixel ROI membership, same dimensions as the source image.
#[derive(Debug, Clone)]
pub struct RoiMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl RoiMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "mask bit count {} does not match {width}x{height}",
                bits.len()
            )));
        }
        Ok(RoiMask {
            width,
            height,
            bits,
        })
    }

    /// Marks the pixels of one cluster as ROI.
    pub fn from_labels(result: &KMeansResult, width: usize, height: usize, cluster: u8) -> Result<Self> {
        if result.labels.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "label count {} does not match {width}x{height}",
                result.labels.len()
            )));
        }
        let bits = result.labels.iter().map(|&l| l == cluster).collect();
        RoiMask::new(width, height, bits)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn roi_pixel_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

fn nearest_centroid(x: f64, centroids: &[f64]) -> (usize, f64) {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (j, &c) in centroids.iter().enumerate() {
        let d = (x - c) * (x - c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    (best, best_d)
}

/// Lloyd's algorithm on pixel intensities with seeded k-means++
/// initialization. Terminates when the centroid movement max-norm drops
/// below `tol` or after `max_iter` iterations.
pub fn kmeans_intensity(
    img: &GrayImage,
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<KMeansResult> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    if tol < 0.0 {
        return Err(Error::InvalidArgument("tol must be non-negative".into()));
    }
    let points = img.pixels();
    let mut distinct: Vec<f64> = points.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if distinct.len() < k {
        return Err(Error::DegenerateInput(format!(
            "{} distinct pixel values, need at least k = {k}",
            distinct.len()
        )));
    }

    let mut rng = rng_from_seed(seed);
    let n = points.len();

    // k-means++ seeding: first center uniform, the rest proportional to
    // squared distance from the chosen set.
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(0..n)]);
    let mut dist2: Vec<f64> = points
        .iter()
        .map(|&x| (x - centroids[0]) * (x - centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = dist2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in dist2.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            points[chosen]
        } else {
            // all points coincide with chosen centers; the distinct-value
            // precondition guarantees an uncovered value exists
            *distinct
                .iter()
                .find(|v| !centroids.contains(v))
                .expect("distinct values exceed chosen centers")
        };
        centroids.push(next);
        for (d, &x) in dist2.iter_mut().zip(points.iter()) {
            let nd = (x - next) * (x - next);
            if nd < *d {
                *d = nd;
            }
        }
    }

    let mut labels: Vec<u8> = vec![0; n];
    let mut inertia_per_iter = Vec::new();
    let mut iterations = 0usize;

    for _ in 0..max_iter {
        iterations += 1;

        // assignment
        for (l, &x) in labels.iter_mut().zip(points.iter()) {
            *l = nearest_centroid(x, &centroids).0 as u8;
        }

        // update
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (&l, &x) in labels.iter().zip(points.iter()) {
            sums[l as usize] += x;
            counts[l as usize] += 1;
        }
        let old = centroids.clone();
        for j in 0..k {
            if counts[j] > 0 {
                centroids[j] = sums[j] / counts[j] as f64;
            }
        }
        // reseed empty clusters at the point farthest from its centroid,
        // reassigning that point so inertia stays monotone
        for j in 0..k {
            if counts[j] == 0 {
                let mut far_i = 0usize;
                let mut far_d = -1.0;
                for (i, &x) in points.iter().enumerate() {
                    let d = {
                        let c = centroids[labels[i] as usize];
                        (x - c) * (x - c)
                    };
                    if d > far_d {
                        far_d = d;
                        far_i = i;
                    }
                }
                centroids[j] = points[far_i];
                labels[far_i] = j as u8;
                counts[j] = 1;
            }
        }

        let inertia: f64 = labels
            .iter()
            .zip(points.iter())
            .map(|(&l, &x)| {
                let c = centroids[l as usize];
                (x - c) * (x - c)
            })
            .sum();
        inertia_per_iter.push(inertia);

        let movement = centroids
            .iter()
            .zip(old.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if movement < tol {
            break;
        }
    }

    // final assignment against the final centroids
    for (l, &x) in labels.iter_mut().zip(points.iter()) {
        *l = nearest_centroid(x, &centroids).0 as u8;
    }
    let inertia: f64 = labels
        .iter()
        .zip(points.iter())
        .map(|(&l, &x)| {
            let c = centroids[l as usize];
            (x - c) * (x - c)
        })
        .sum();

    // report centroids sorted ascending, labels re-indexed
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| centroids[a].partial_cmp(&centroids[b]).unwrap());
    let sorted: Vec<f64> = order.iter().map(|&j| centroids[j]).collect();
    for w in sorted.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::DegenerateInput(
                "clustering collapsed to coincident centroids".into(),
            ));
        }
    }
    let mut remap = vec![0u8; k];
    for (new_idx, &old_idx) in order.iter().enumerate() {
        remap[old_idx] = new_idx as u8;
    }
    let labels = labels.into_iter().map(|l| remap[l as usize]).collect();

    Ok(KMeansResult {
        centroids: sorted,
        labels,
        inertia,
        iterations,
        inertia_per_iter,
    })
}

/// Index of the highest-intensity centroid — the ROI cluster.
pub fn select_roi_cluster(result: &KMeansResult) -> usize {
    result
        .centroids
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.partial_cmp(b).unwrap())
        .map(|(i, _)| i)
        .expect("clustering result has at least one centroid")
}

/// Zeroes every pixel outside the mask; dimensions are preserved so the
/// ROI stays embedded in its original frame.
pub fn apply_mask(img: &GrayImage, mask: &RoiMask) -> Result<GrayImage> {
    if img.width() != mask.width() || img.height() != mask.height() {
        return Err(Error::InvalidArgument(format!(
            "mask is {}x{}, image is {}x{}",
            mask.width(),
            mask.height(),
            img.width(),
            img.height()
        )));
    }
    let pixels = img
        .pixels()
        .iter()
        .zip(mask.bits().iter())
        .map(|(&v, &b)| if b { v } else { 0.0 })
        .collect();
    GrayImage::new(img.width(), img.height(), pixels)
}
