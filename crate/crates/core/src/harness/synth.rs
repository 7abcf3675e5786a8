//! Synthetic MRI-like corpus with grade-dependent tumor blobs.
//!
//! Each slice is a dark, slightly graded background plus one bright
//! elliptical blob. Radius, peak intensity, and sinusoidal texture
//! frequency grow with grade, giving three statistically distinct
//! regimes; the blob waxes and wanes smoothly along the slice sequence so
//! the sequential classifier has structure to use. No clinical fidelity
//! is claimed — the corpus exists so the full pipeline can be exercised
//! and scored without restricted data.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;

use crate::error::{Error, Result};
use crate::features::Grade;
use crate::rng::{derive_seed, rng_from_seed};

pub const SYNTH_SIDE: usize = 256;

/// Grade-indexed blob regimes: base radius (px), peak intensity, texture
/// frequency (cycles across the blob). Jitter ranges below are narrow
/// enough that blob area, intensity, and texture stay disjoint across
/// grades; that margin is what makes the desk-scale experiment scorable.
const BASE_RADIUS: [f64; 3] = [9.0, 14.0, 20.0];
const BASE_INTENSITY: [f64; 3] = [0.55, 0.72, 0.88];
const TEXTURE_FREQ: [f64; 3] = [3.0, 6.0, 10.0];

const BACKGROUND_FLOOR: f64 = 0.08;
const BACKGROUND_GRADIENT: f64 = 0.01;
const BACKGROUND_NOISE: f64 = 0.01;
const TEXTURE_AMPLITUDE: f64 = 0.15;

/// Ground-truth geometry of one slice's blob.
#[derive(Debug, Clone)]
pub struct BlobSpec {
    pub center: (f64, f64),
    pub axes: (f64, f64),
    pub angle: f64,
    pub intensity: f64,
    pub texture_freq: f64,
}

impl BlobSpec {
    /// Squared normalized elliptical radius of a pixel.
    pub fn rho2(&self, x: f64, y: f64) -> f64 {
        let dx = x - self.center.0;
        let dy = y - self.center.1;
        let (sin, cos) = self.angle.sin_cos();
        let u = dx * cos + dy * sin;
        let v = -dx * sin + dy * cos;
        (u / self.axes.0).powi(2) + (v / self.axes.1).powi(2)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.rho2(x, y) <= 1.0
    }
}

#[derive(Debug, Clone)]
pub struct SynthPatient {
    pub patient_id: String,
    pub grade: Grade,
    pub dir: PathBuf,
    /// One blob description per slice, in slice order.
    pub blobs: Vec<BlobSpec>,
}

#[derive(Debug, Clone)]
pub struct SynthSummary {
    pub manifest_path: PathBuf,
    pub patients: Vec<SynthPatient>,
}

/// Generates `per_grade` patients for each grade with `slices` slices
/// each, writes 8-bit P5 slices plus a manifest, and returns the
/// ground-truth blob geometry. Byte-identical for identical seeds.
pub fn synthesize_corpus(
    out_dir: &Path,
    per_grade: usize,
    slices: usize,
    seed: u64,
) -> Result<SynthSummary> {
    if per_grade == 0 || slices == 0 {
        return Err(Error::InvalidArgument(
            "per_grade and slices must be at least 1".into(),
        ));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut manifest = String::from("patient_id,grade,slice_dir\n");
    let mut patients = Vec::new();
    let mut patient_index = 0u64;
    for grade in Grade::ALL {
        for i in 0..per_grade {
            let patient_id = format!("{}_{:02}", grade, i);
            let dir = out_dir.join(&patient_id);
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

            let blobs = write_patient(&dir, grade, slices, derive_seed(seed, patient_index))?;
            writeln!(manifest, "{patient_id},{grade},{patient_id}").expect("string write");
            patients.push(SynthPatient {
                patient_id,
                grade,
                dir,
                blobs,
            });
            patient_index += 1;
        }
    }

    let manifest_path = out_dir.join("manifest.csv");
    std::fs::write(&manifest_path, manifest).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(SynthSummary {
        manifest_path,
        patients,
    })
}

fn write_patient(dir: &Path, grade: Grade, slices: usize, patient_seed: u64) -> Result<Vec<BlobSpec>> {
    let g = grade.index();
    let mut rng = rng_from_seed(patient_seed);

    // per-patient geometry, drawn in a fixed order
    let radius = BASE_RADIUS[g] * rng.gen_range(0.92..1.08);
    let eccentricity = rng.gen_range(0.92..1.08);
    let angle = rng.gen_range(0.0..std::f64::consts::PI);
    let half = SYNTH_SIDE as f64 / 2.0;
    let center = (half + rng.gen_range(-4.0..4.0), half + rng.gen_range(-4.0..4.0));
    let drift = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    let intensity = BASE_INTENSITY[g] * rng.gen_range(0.97..1.03);
    let texture_freq = TEXTURE_FREQ[g] * rng.gen_range(0.9..1.1);

    let mut blobs = Vec::with_capacity(slices);
    for t in 0..slices {
        // blob waxes toward mid-volume and wanes again
        let profile = 0.7 + 0.3 * (std::f64::consts::PI * (t as f64 + 0.5) / slices as f64).sin();
        let along = if slices > 1 {
            t as f64 / (slices - 1) as f64 - 0.5
        } else {
            0.0
        };
        let blob = BlobSpec {
            center: (center.0 + drift.0 * along, center.1 + drift.1 * along),
            axes: (radius * profile, radius * eccentricity * profile),
            angle,
            intensity,
            texture_freq,
        };

        let path = dir.join(format!("slice_{t:03}.pgm"));
        let mut noise_rng = rng_from_seed(derive_seed(patient_seed, 1000 + t as u64));
        write_slice(&path, &blob, &mut noise_rng)?;
        blobs.push(blob);
    }
    Ok(blobs)
}

fn write_slice(path: &Path, blob: &BlobSpec, noise_rng: &mut rand_chacha::ChaCha8Rng) -> Result<()> {
    let side = SYNTH_SIDE;
    let mut raster = Vec::with_capacity(side * side);
    let (sin, cos) = blob.angle.sin_cos();
    for y in 0..side {
        let grad = BACKGROUND_GRADIENT * y as f64 / (side - 1) as f64;
        for x in 0..side {
            let mut v = BACKGROUND_FLOOR + grad + noise_rng.gen_range(0.0..BACKGROUND_NOISE);
            let dx = x as f64 - blob.center.0;
            let dy = y as f64 - blob.center.1;
            let u = dx * cos + dy * sin;
            let w = -dx * sin + dy * cos;
            let rho2 = (u / blob.axes.0).powi(2) + (w / blob.axes.1).powi(2);
            if rho2 <= 1.0 {
                let falloff = 0.55 + 0.45 * (std::f64::consts::FRAC_PI_2 * rho2).cos();
                // radial rings: texture depends on the normalized radius
                // only, so it carries the grade's frequency without
                // imprinting a per-patient orientation fingerprint
                let tex = 1.0
                    + TEXTURE_AMPLITUDE
                        * (2.0 * std::f64::consts::PI * blob.texture_freq * rho2.sqrt()).sin();
                v += blob.intensity * falloff * tex;
            }
            raster.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }

    let mut bytes = format!("P5\n{side} {side}\n255\n").into_bytes();
    bytes.extend_from_slice(&raster);
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
