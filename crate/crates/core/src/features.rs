//! Per-slice feature extraction and patient-sequence assembly.
//!
//! A slice becomes a feature vector by clustering its intensities,
//! masking to the brightest cluster, and applying the mixed DWT/DCT
//! transform. A patient is exactly `S` consecutive central slices with a
//! single weak label for the whole sequence. Splits are by patient and
//! stratified by grade.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::imaging::{resize_bilinear, GrayImage};
use crate::rng::rng_from_seed;
use crate::segmentation::{
    apply_mask, kmeans_intensity, select_roi_cluster, RoiMask, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use crate::transforms::{dwt2_approx, mixed_transform};

pub const DEFAULT_SEQ_LEN: usize = 30;
pub const DEFAULT_TEST_FRACTION: f64 = 0.2;
pub const SEGMENTATION_CLUSTERS: usize = 3;

/// Glioma grade, the three-way classification target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Grade {
    II,
    III,
    IV,
}

impl Grade {
    pub const ALL: [Grade; 3] = [Grade::II, Grade::III, Grade::IV];

    pub fn index(self) -> usize {
        match self {
            Grade::II => 0,
            Grade::III => 1,
            Grade::IV => 2,
        }
    }

    pub fn from_index(index: usize) -> Result<Self> {
        match index {
            0 => Ok(Grade::II),
            1 => Ok(Grade::III),
            2 => Ok(Grade::IV),
            other => Err(Error::InvalidArgument(format!("grade index {other} out of range"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Grade::II => "II",
            Grade::III => "III",
            Grade::IV => "IV",
        }
    }
}

impl std::str::FromStr for Grade {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "II" => Ok(Grade::II),
            "III" => Ok(Grade::III),
            "IV" => Ok(Grade::IV),
            other => Err(Error::InvalidArgument(format!(
                "unknown grade {other:?} (expected II, III, or IV)"
            ))),
        }
    }
}

impl std::fmt::Display for Grade {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub type FeatureVector = Vec<f64>;

/// A patient's ordered slice features plus the single weak label.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientSequence {
    pub patient_id: String,
    pub label: Grade,
    pub slices: Vec<FeatureVector>,
    pub feature_dim: usize,
}

/// Patient-disjoint train/test partition.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: Vec<PatientSequence>,
    pub test: Vec<PatientSequence>,
    pub seed: u64,
    /// Split anomalies worth surfacing (e.g. a grade with no test patients).
    pub warnings: Vec<String>,
}

/// What the per-slice feature vector is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureMode {
    /// Mixed transform: p dominant DCT coefficients of the wavelet LL band
    /// plus the q-coefficient deep-DWT summary of the DCT residual.
    Mixed,
    /// Deep-DWT approximation of the masked slice alone (q coefficients).
    DwtOnly,
    /// No domain transform: the masked ROI downsampled to 16x16 and
    /// vectorized (256 values).
    RawRoi,
}

impl FeatureMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMode::Mixed => "mixed",
            FeatureMode::DwtOnly => "dwt",
            FeatureMode::RawRoi => "raw",
        }
    }

    pub fn feature_dim(self, p: usize, q: usize) -> usize {
        match self {
            FeatureMode::Mixed => p + q,
            FeatureMode::DwtOnly => q,
            FeatureMode::RawRoi => RAW_ROI_SIDE * RAW_ROI_SIDE,
        }
    }
}

impl std::str::FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mixed" => Ok(FeatureMode::Mixed),
            "dwt" => Ok(FeatureMode::DwtOnly),
            "raw" => Ok(FeatureMode::RawRoi),
            other => Err(Error::InvalidArgument(format!(
                "unknown feature mode {other:?} (expected mixed, dwt, or raw)"
            ))),
        }
    }
}

const RAW_ROI_SIDE: usize = 16;

/// Masks a preprocessed slice to its brightest intensity cluster.
fn roi_masked(img: &GrayImage, seed: u64) -> Result<GrayImage> {
    let clusters = kmeans_intensity(img, SEGMENTATION_CLUSTERS, seed, DEFAULT_MAX_ITER, DEFAULT_TOL)?;
    let roi = select_roi_cluster(&clusters);
    let mask = RoiMask::from_labels(&clusters, img.width(), img.height(), roi as u8)?;
    apply_mask(img, &mask)
}

/// Mixed-transform features of the ROI-masked slice (the default path).
pub fn extract_slice_features(img: &GrayImage, p: usize, q: usize, seed: u64) -> Result<FeatureVector> {
    extract_slice_features_mode(img, FeatureMode::Mixed, p, q, seed)
}

/// Feature extraction with an explicit mode; `Mixed` is the default
/// path, the others exist for transform-ablation experiments.
pub fn extract_slice_features_mode(
    img: &GrayImage,
    mode: FeatureMode,
    p: usize,
    q: usize,
    seed: u64,
) -> Result<FeatureVector> {
    let masked = roi_masked(img, seed)?;
    match mode {
        FeatureMode::Mixed => Ok(mixed_transform(&masked.to_matrix(), p, q)?.into_vec()),
        FeatureMode::DwtOnly => {
            let side = masked.width();
            if masked.height() != side {
                return Err(Error::InvalidArgument(format!(
                    "dwt feature mode requires a square slice, got {}x{}",
                    masked.width(),
                    masked.height()
                )));
            }
            let q_side = (q as f64).sqrt().round() as usize;
            if q_side * q_side != q || q_side == 0 || side % q_side != 0 || !(side / q_side).is_power_of_two()
            {
                return Err(Error::InvalidArgument(format!(
                    "q = {q} incompatible with slice side {side}"
                )));
            }
            let levels = (side / q_side).trailing_zeros() as usize;
            Ok(dwt2_approx(&masked.to_matrix(), levels)?.into_vec())
        }
        FeatureMode::RawRoi => {
            let small = resize_bilinear(&masked, RAW_ROI_SIDE, RAW_ROI_SIDE)?;
            Ok(small.pixels().to_vec())
        }
    }
}

/// Keeps the `s` central slices of a patient volume, dropping
/// `floor((n - s) / 2)` from the front and the remainder from the back.
pub fn build_sequence(
    patient_id: &str,
    slice_features: Vec<FeatureVector>,
    label: Grade,
    s: usize,
) -> Result<PatientSequence> {
    let n = slice_features.len();
    if n < s {
        return Err(Error::InsufficientSlices {
            patient: patient_id.to_string(),
            have: n,
            need: s,
        });
    }
    let front = (n - s) / 2;
    let slices: Vec<FeatureVector> = slice_features
        .into_iter()
        .skip(front)
        .take(s)
        .collect();
    let feature_dim = slices.first().map_or(0, |f| f.len());
    if slices.iter().any(|f| f.len() != feature_dim) {
        return Err(Error::InvalidArgument(format!(
            "patient {patient_id}: slice feature lengths are not uniform"
        )));
    }
    Ok(PatientSequence {
        patient_id: patient_id.to_string(),
        label,
        slices,
        feature_dim,
    })
}

/// Largest-remainder allocation of `total_test` test slots across grades,
/// proportional to per-grade patient counts.
fn allocate_test_counts(counts: &[usize; 3], total_test: usize) -> [usize; 3] {
    let total: usize = counts.iter().sum();
    let mut alloc = [0usize; 3];
    let mut remainders: Vec<(usize, f64)> = Vec::new();
    let mut assigned = 0usize;
    for g in 0..3 {
        let quota = total_test as f64 * counts[g] as f64 / total as f64;
        alloc[g] = quota.floor() as usize;
        assigned += alloc[g];
        remainders.push((g, quota - quota.floor()));
    }
    // hand out remaining slots by largest remainder, ties by grade index;
    // never allocate more test slots than a grade has patients
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut left = total_test - assigned;
    let mut idx = 0;
    while left > 0 {
        let g = remainders[idx % 3].0;
        if alloc[g] < counts[g] {
            alloc[g] += 1;
            left -= 1;
        }
        idx += 1;
        if idx > 12 {
            break; // every grade saturated; cannot place more
        }
    }
    alloc
}

/// Deterministic, grade-stratified split by patient. The test set size is
/// `round(test_fraction * total)`, allocated per grade by largest
/// remainder; no patient appears in both halves.
pub fn split_dataset(
    patients: &[PatientSequence],
    test_fraction: f64,
    seed: u64,
) -> Result<DatasetSplit> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test_fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    if patients.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 patients to split".into(),
        ));
    }
    let dims: Vec<usize> = patients.iter().map(|p| p.feature_dim).collect();
    if dims.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::InvalidArgument(
            "patients have mixed feature dimensions".into(),
        ));
    }

    let mut order: Vec<usize> = (0..patients.len()).collect();
    let mut rng = rng_from_seed(seed);
    order.shuffle(&mut rng);

    let mut counts = [0usize; 3];
    for p in patients {
        counts[p.label.index()] += 1;
    }
    let total_test = (test_fraction * patients.len() as f64).round() as usize;
    let alloc = allocate_test_counts(&counts, total_test);

    let mut warnings = Vec::new();
    for g in 0..3 {
        if counts[g] > 0 && alloc[g] == 0 {
            warnings.push(format!(
                "grade {} has {} patients but no test slot at fraction {test_fraction}",
                Grade::from_index(g).unwrap(),
                counts[g]
            ));
        }
    }

    let mut taken = [0usize; 3];
    let mut train = Vec::new();
    let mut test = Vec::new();
    for &i in &order {
        let p = &patients[i];
        let g = p.label.index();
        if taken[g] < alloc[g] {
            taken[g] += 1;
            test.push(p.clone());
        } else {
            train.push(p.clone());
        }
    }
    Ok(DatasetSplit {
        train,
        test,
        seed,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::slice_seed;
    use rand::Rng;

    /// Synthetic preprocessed slice: dark noisy background with a bright
    /// square blob, guaranteed to have three well-separated intensity
    /// groups.
    fn blob_slice(side: usize, seed: u64) -> GrayImage {
        let mut rng = rng_from_seed(seed);
        let mut pixels = vec![0.0f64; side * side];
        for p in pixels.iter_mut() {
            *p = rng.gen_range(0.0..0.1);
        }
        let (lo, hi) = (side / 3, 2 * side / 3);
        for y in lo..hi {
            for x in lo..hi {
                let edge = y == lo || y + 1 == hi || x == lo || x + 1 == hi;
                pixels[y * side + x] = if edge { 0.5 } else { rng.gen_range(0.85..1.0) };
            }
        }
        GrayImage::new(side, side, pixels).unwrap()
    }

    #[test]
    fn all_zero_slice_propagates_degenerate_error() {
        let img = GrayImage::new(64, 64, vec![0.0; 64 * 64]).unwrap();
        match extract_slice_features(&img, 25, 64, 3) {
            Err(Error::DegenerateInput(_)) => {}
            other => panic!("expected degenerate input, got {other:?}"),
        }
    }

    #[test]
    fn blob_slice_yields_feature_of_expected_shape() {
        let img = blob_slice(256, 5);
        let feat = extract_slice_features(&img, 100, 64, 11).unwrap();
        assert_eq!(feat.len(), 164);
        assert!(feat[0].abs() > 0.0, "DC entry should be nonzero");

        // cross-check against running the stages individually
        let masked = roi_masked(&img, 11).unwrap();
        let direct = mixed_transform(&masked.to_matrix(), 100, 64).unwrap().into_vec();
        assert_eq!(feat, direct);
    }

    #[test]
    fn background_outside_roi_does_not_change_features() {
        // Perturbing background pixels by far less than the gap between
        // intensity groups cannot move any pixel across a cluster
        // boundary, so the masked image — and hence the features — must
        // be identical.
        let img = blob_slice(128, 21);
        let seed = 17;
        let masked = roi_masked(&img, seed).unwrap();

        let mut altered = img.pixels().to_vec();
        let mut rng = rng_from_seed(99);
        for (i, v) in altered.iter_mut().enumerate() {
            if masked.pixels()[i] == 0.0 && *v < 0.15 {
                *v = (*v + rng.gen_range(0.0..0.04)).min(0.15);
            }
        }
        let altered = GrayImage::new(img.width(), img.height(), altered).unwrap();
        let masked_b = roi_masked(&altered, seed).unwrap();
        assert_eq!(masked.pixels(), masked_b.pixels());

        let fa = extract_slice_features(&img, 25, 64, seed).unwrap();
        let fb = extract_slice_features(&altered, 25, 64, seed).unwrap();
        assert_eq!(fa, fb);
    }

    #[test]
    fn feature_modes_have_expected_dims() {
        let img = blob_slice(256, 8);
        let seed = slice_seed(1, "x", 0);
        assert_eq!(
            extract_slice_features_mode(&img, FeatureMode::Mixed, 100, 64, seed)
                .unwrap()
                .len(),
            164
        );
        assert_eq!(
            extract_slice_features_mode(&img, FeatureMode::DwtOnly, 100, 64, seed)
                .unwrap()
                .len(),
            64
        );
        assert_eq!(
            extract_slice_features_mode(&img, FeatureMode::RawRoi, 100, 64, seed)
                .unwrap()
                .len(),
            256
        );
    }

    fn dummy_patient(id: &str, label: Grade, n_slices: usize, dim: usize) -> PatientSequence {
        PatientSequence {
            patient_id: id.to_string(),
            label,
            slices: (0..n_slices).map(|i| vec![i as f64; dim]).collect(),
            feature_dim: dim,
        }
    }

    #[test]
    fn build_sequence_exact_fit_keeps_order() {
        let feats: Vec<FeatureVector> = (0..30).map(|i| vec![i as f64]).collect();
        let seq = build_sequence("p", feats.clone(), Grade::II, 30).unwrap();
        assert_eq!(seq.slices, feats);
    }

    #[test]
    fn build_sequence_takes_central_window() {
        let feats: Vec<FeatureVector> = (0..34).map(|i| vec![i as f64]).collect();
        let seq = build_sequence("p", feats, Grade::III, 30).unwrap();
        let first = seq.slices.first().unwrap()[0];
        let last = seq.slices.last().unwrap()[0];
        assert_eq!(first, 2.0);
        assert_eq!(last, 31.0);
    }

    #[test]
    fn build_sequence_reports_insufficient_slices() {
        let feats: Vec<FeatureVector> = (0..29).map(|i| vec![i as f64]).collect();
        match build_sequence("patient-7", feats, Grade::IV, 30) {
            Err(Error::InsufficientSlices { patient, have, need }) => {
                assert_eq!(patient, "patient-7");
                assert_eq!(have, 29);
                assert_eq!(need, 30);
            }
            other => panic!("expected insufficient-slices, got {other:?}"),
        }
    }

    #[test]
    fn split_80_patients_gives_16_test() {
        let mut patients = Vec::new();
        for i in 0..30 {
            patients.push(dummy_patient(&format!("a{i}"), Grade::II, 1, 4));
        }
        for i in 0..28 {
            patients.push(dummy_patient(&format!("b{i}"), Grade::III, 1, 4));
        }
        for i in 0..22 {
            patients.push(dummy_patient(&format!("c{i}"), Grade::IV, 1, 4));
        }
        let split = split_dataset(&patients, 0.2, 1).unwrap();
        assert_eq!(split.test.len(), 16);
        assert_eq!(split.train.len(), 64);
        // stratification keeps every grade represented in test
        for g in Grade::ALL {
            assert!(split.test.iter().any(|p| p.label == g), "grade {g} missing");
        }
    }

    #[test]
    fn split_single_grade_proportion() {
        let patients: Vec<PatientSequence> = (0..10)
            .map(|i| dummy_patient(&format!("p{i}"), Grade::II, 1, 2))
            .collect();
        let split = split_dataset(&patients, 0.2, 3).unwrap();
        assert_eq!(split.test.len(), 2);
        assert_eq!(split.train.len(), 8);
    }

    #[test]
    fn split_is_deterministic_and_patient_disjoint() {
        let patients: Vec<PatientSequence> = (0..20)
            .map(|i| dummy_patient(&format!("p{i}"), Grade::from_index(i % 3).unwrap(), 1, 2))
            .collect();
        let a = split_dataset(&patients, 0.25, 7).unwrap();
        let b = split_dataset(&patients, 0.25, 7).unwrap();
        let ids = |s: &[PatientSequence]| -> Vec<String> {
            s.iter().map(|p| p.patient_id.clone()).collect()
        };
        assert_eq!(ids(&a.test), ids(&b.test));
        assert_eq!(ids(&a.train), ids(&b.train));
        for t in &a.test {
            assert!(!a.train.iter().any(|p| p.patient_id == t.patient_id));
        }
        assert_eq!(a.train.len() + a.test.len(), patients.len());
    }

    #[test]
    fn split_warns_when_grade_gets_no_test_slot() {
        let mut patients: Vec<PatientSequence> = (0..9)
            .map(|i| dummy_patient(&format!("p{i}"), Grade::II, 1, 2))
            .collect();
        patients.push(dummy_patient("solo", Grade::IV, 1, 2));
        let split = split_dataset(&patients, 0.2, 5).unwrap();
        assert_eq!(split.test.len(), 2);
        // the lone grade-IV patient may or may not get a slot depending on
        // remainders; if it did not, a warning must be recorded
        let iv_in_test = split.test.iter().any(|p| p.label == Grade::IV);
        if !iv_in_test {
            assert!(!split.warnings.is_empty());
        }
    }

    #[test]
    fn split_rejects_mixed_feature_dims() {
        let patients = vec![
            dummy_patient("a", Grade::II, 1, 4),
            dummy_patient("b", Grade::III, 1, 5),
        ];
        assert!(split_dataset(&patients, 0.5, 0).is_err());
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let patients = vec![
            dummy_patient("a", Grade::II, 1, 4),
            dummy_patient("b", Grade::III, 1, 4),
        ];
        assert!(split_dataset(&patients, 0.0, 0).is_err());
        assert!(split_dataset(&patients, 1.0, 0).is_err());
    }
}
