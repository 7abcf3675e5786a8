//! Dataset manifest and feature-file formats, training-config files, the
//! synthetic corpus generator, and the command entry points the CLI wraps.

pub mod synth;

pub use synth::{synthesize_corpus, BlobSpec, SynthPatient, SynthSummary, SYNTH_SIDE};

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::features::{
    build_sequence, extract_slice_features_mode, FeatureMode, Grade, PatientSequence,
};
use crate::imaging::{load_image, normalize_minmax, resize_bilinear};
use crate::nn::{Architecture, ModelParams};
use crate::rng::slice_seed;
use crate::train_eval::{evaluate, run_protocol, Metrics, TrainConfig};

pub const DEFAULT_RESOLUTION: usize = 256;

/// One dataset row: a patient, their grade, and the directory holding
/// their slice images.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub patient_id: String,
    pub grade: Grade,
    pub slice_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

/// Parses the `patient_id,grade,slice_dir` CSV. Relative slice
/// directories resolve against the manifest's parent directory; every
/// directory must exist.
pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut lines = text.lines().enumerate();

    match lines.next() {
        Some((_, header)) if header.trim() == "patient_id,grade,slice_dir" => {}
        Some((_, header)) => {
            return Err(Error::parse(
                path,
                format!("unexpected header {header:?}, expected patient_id,grade,slice_dir"),
            ))
        }
        None => return Err(Error::parse(path, "empty manifest")),
    }

    let mut entries = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                path,
                format!("line {}: expected 3 fields, got {}", lineno + 1, fields.len()),
            ));
        }
        let patient_id = fields[0].trim().to_string();
        if patient_id.is_empty() {
            return Err(Error::parse(path, format!("line {}: empty patient_id", lineno + 1)));
        }
        if !seen.insert(patient_id.clone()) {
            return Err(Error::parse(
                path,
                format!("line {}: duplicate patient_id {patient_id:?}", lineno + 1),
            ));
        }
        let grade: Grade = fields[1].trim().parse()?;
        let raw_dir = Path::new(fields[2].trim());
        let slice_dir = if raw_dir.is_absolute() {
            raw_dir.to_path_buf()
        } else {
            base.join(raw_dir)
        };
        if !slice_dir.is_dir() {
            return Err(Error::parse(
                path,
                format!(
                    "line {}: slice directory {} does not exist",
                    lineno + 1,
                    slice_dir.display()
                ),
            ));
        }
        entries.push(ManifestEntry {
            patient_id,
            grade,
            slice_dir,
        });
    }
    Ok(Manifest { entries })
}

/// Natural-order comparison: digit runs compare by value, everything else
/// byte-wise, so `slice_2` sorts before `slice_10`.
pub fn numeric_aware_cmp(a: &str, b: &str) -> Ordering {
    let (ab, bb) = (a.as_bytes(), b.as_bytes());
    let (mut i, mut j) = (0usize, 0usize);
    while i < ab.len() && j < bb.len() {
        let (ca, cb) = (ab[i], bb[j]);
        if ca.is_ascii_digit() && cb.is_ascii_digit() {
            let si = i;
            while i < ab.len() && ab[i].is_ascii_digit() {
                i += 1;
            }
            let sj = j;
            while j < bb.len() && bb[j].is_ascii_digit() {
                j += 1;
            }
            let ra = a[si..i].trim_start_matches('0');
            let rb = b[sj..j].trim_start_matches('0');
            // compare by magnitude: longer trimmed run is larger
            let ord = ra
                .len()
                .cmp(&rb.len())
                .then_with(|| ra.cmp(rb))
                // equal values: fall back to the raw digits so
                // zero-padding still orders deterministically
                .then_with(|| a[si..i].cmp(&b[sj..j]));
            if ord != Ordering::Equal {
                return ord;
            }
        } else {
            let ord = ca.cmp(&cb);
            if ord != Ordering::Equal {
                return ord;
            }
            i += 1;
            j += 1;
        }
    }
    (ab.len() - i).cmp(&(bb.len() - j))
}

/// Slice images of one patient, numeric-aware sorted by file name.
pub fn list_slice_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut names: Vec<String> = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        if matches!(ext.as_deref(), Some("pgm") | Some("png")) {
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                names.push(name.to_string());
            }
        }
    }
    names.sort_by(|a, b| numeric_aware_cmp(a, b));
    Ok(names.into_iter().map(|n| dir.join(n)).collect())
}

// --- feature file -----------------------------------------------------------
//
// Text table, one row per (patient, slice):
//   patient_id,label,slice_index,f0,...,f{D-1}
// Floats carry 17 significant digits, enough for a lossless f64 round
// trip, so the file can be diffed and inspected by any tooling.

/// In-memory view of a feature file.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub patients: Vec<PatientSequence>,
    pub feature_dim: usize,
    pub seq_len: usize,
}

fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_feature_file(path: &Path, patients: &[PatientSequence]) -> Result<()> {
    if patients.is_empty() {
        return Err(Error::InvalidArgument("no patients to write".into()));
    }
    let dim = patients[0].feature_dim;
    let seq_len = patients[0].slices.len();
    for p in patients {
        if p.feature_dim != dim || p.slices.len() != seq_len {
            return Err(Error::InvalidArgument(format!(
                "patient {} has shape ({}, {}), expected ({seq_len}, {dim})",
                p.patient_id,
                p.slices.len(),
                p.feature_dim
            )));
        }
    }

    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut header = String::from("patient_id,label,slice_index");
    for i in 0..dim {
        write!(header, ",f{i}").expect("string write");
    }
    writeln!(w, "{header}").map_err(|e| Error::io(path, e))?;

    let mut line = String::new();
    for p in patients {
        for (idx, slice) in p.slices.iter().enumerate() {
            line.clear();
            write!(line, "{},{},{idx}", p.patient_id, p.label).expect("string write");
            for v in slice {
                line.push(',');
                line.push_str(&format_f64(*v));
            }
            writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_feature_file(path: &Path) -> Result<FeatureTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();

    let dim = match lines.next() {
        Some((_, header)) => {
            let mut cols = header.split(',');
            if cols.next() != Some("patient_id")
                || cols.next() != Some("label")
                || cols.next() != Some("slice_index")
            {
                return Err(Error::parse(path, "malformed feature-file header"));
            }
            let mut dim = 0usize;
            for (i, c) in cols.enumerate() {
                if c != format!("f{i}") {
                    return Err(Error::parse(path, format!("unexpected header column {c:?}")));
                }
                dim = i + 1;
            }
            if dim == 0 {
                return Err(Error::parse(path, "feature file has no feature columns"));
            }
            dim
        }
        None => return Err(Error::parse(path, "empty feature file")),
    };

    struct Block {
        label: Grade,
        slices: Vec<Vec<f64>>,
    }
    let mut order: Vec<String> = Vec::new();
    let mut blocks: std::collections::HashMap<String, Block> = std::collections::HashMap::new();

    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let patient_id = fields
            .next()
            .ok_or_else(|| Error::parse(path, format!("line {}: missing patient_id", lineno + 1)))?
            .to_string();
        let label: Grade = fields
            .next()
            .ok_or_else(|| Error::parse(path, format!("line {}: missing label", lineno + 1)))?
            .parse()?;
        let slice_index: usize = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse(path, format!("line {}: bad slice_index", lineno + 1)))?;
        let values: Vec<f64> = fields
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::parse(path, format!("line {}: bad float {s:?}", lineno + 1)))
            })
            .collect::<Result<_>>()?;
        if values.len() != dim {
            return Err(Error::parse(
                path,
                format!("line {}: {} values, expected {dim}", lineno + 1, values.len()),
            ));
        }

        let block = blocks.entry(patient_id.clone()).or_insert_with(|| {
            order.push(patient_id.clone());
            Block {
                label,
                slices: Vec::new(),
            }
        });
        if block.label != label {
            return Err(Error::parse(
                path,
                format!("line {}: patient {patient_id} has conflicting labels", lineno + 1),
            ));
        }
        if slice_index != block.slices.len() {
            return Err(Error::parse(
                path,
                format!(
                    "line {}: patient {patient_id} slice_index {slice_index} out of order (expected {})",
                    lineno + 1,
                    block.slices.len()
                ),
            ));
        }
        block.slices.push(values);
    }

    if order.is_empty() {
        return Err(Error::parse(path, "feature file has no data rows"));
    }
    let seq_len = blocks[&order[0]].slices.len();
    let mut patients = Vec::with_capacity(order.len());
    for id in order {
        let block = blocks.remove(&id).expect("ordered ids come from the map");
        if block.slices.len() != seq_len {
            return Err(Error::parse(
                path,
                format!(
                    "patient {id} has {} slices, expected {seq_len}",
                    block.slices.len()
                ),
            ));
        }
        patients.push(PatientSequence {
            patient_id: id,
            label: block.label,
            slices: block.slices,
            feature_dim: dim,
        });
    }
    Ok(FeatureTable {
        patients,
        feature_dim: dim,
        seq_len,
    })
}

// --- training config file ---------------------------------------------------

/// Flat `key=value` config; keys match the [`TrainConfig`] field names.
/// Blank lines and `#` comments are ignored; unknown keys are errors.
pub fn parse_train_config(path: &Path) -> Result<TrainConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = TrainConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "{}:{}: expected key=value, got {line:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        let (key, value) = (key.trim(), value.trim());
        let bad_value = || {
            Error::Config(format!(
                "{}:{}: invalid value {value:?} for key {key}",
                path.display(),
                lineno + 1
            ))
        };
        match key {
            "epochs" => cfg.epochs = value.parse().map_err(|_| bad_value())?,
            "base_lr" => cfg.base_lr = value.parse().map_err(|_| bad_value())?,
            "lr_decay_factor" => cfg.lr_decay_factor = value.parse().map_err(|_| bad_value())?,
            "lr_decay_epoch" => cfg.lr_decay_epoch = value.parse().map_err(|_| bad_value())?,
            "dropout" => cfg.dropout = value.parse().map_err(|_| bad_value())?,
            "beta1" => cfg.beta1 = value.parse().map_err(|_| bad_value())?,
            "beta2" => cfg.beta2 = value.parse().map_err(|_| bad_value())?,
            "seed" => cfg.seed = value.parse().map_err(|_| bad_value())?,
            "runs" => cfg.runs = value.parse().map_err(|_| bad_value())?,
            other => {
                return Err(Error::Config(format!(
                    "{}:{}: unknown config key {other:?}",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

// --- commands ---------------------------------------------------------------

/// Whether metrics JSON records measured wall-clock training time or
/// zeros (for byte-reproducible artifacts).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimingMode {
    Wall,
    Zero,
}

#[derive(Debug, Clone)]
pub struct ExtractOptions {
    pub manifest: PathBuf,
    pub mode: FeatureMode,
    pub p: usize,
    pub q: usize,
    pub seq_len: usize,
    pub seed: u64,
    pub resolution: usize,
    pub out: PathBuf,
}

/// A patient the extraction pipeline could not process.
#[derive(Debug)]
pub struct PatientFailure {
    pub patient_id: String,
    pub error: Error,
}

/// Runs preprocess -> segment -> transform for every slice of every
/// patient, keeps each patient's central window, and writes the feature
/// file. Per-patient failures are returned rather than aborting the whole
/// extraction; the file holds every patient that succeeded.
pub fn cmd_extract(opts: &ExtractOptions) -> Result<Vec<PatientFailure>> {
    let manifest = load_manifest(&opts.manifest)?;
    if manifest.entries.is_empty() {
        return Err(Error::InvalidArgument("manifest has no patients".into()));
    }

    let mut patients = Vec::new();
    let mut failures = Vec::new();
    for entry in &manifest.entries {
        match extract_patient(entry, opts) {
            Ok(seq) => patients.push(seq),
            Err(error) => failures.push(PatientFailure {
                patient_id: entry.patient_id.clone(),
                error,
            }),
        }
    }
    if patients.is_empty() {
        return Err(Error::InvalidArgument(
            "no patient produced features; see per-patient errors".into(),
        ));
    }
    write_feature_file(&opts.out, &patients)?;
    Ok(failures)
}

fn extract_patient(entry: &ManifestEntry, opts: &ExtractOptions) -> Result<PatientSequence> {
    let files = list_slice_files(&entry.slice_dir)?;
    let mut features = Vec::with_capacity(files.len());
    for (index, file) in files.iter().enumerate() {
        let img = load_image(file)?;
        let img = resize_bilinear(&img, opts.resolution, opts.resolution)?;
        let img = normalize_minmax(&img);
        let seed = slice_seed(opts.seed, &entry.patient_id, index);
        features.push(extract_slice_features_mode(
            &img, opts.mode, opts.p, opts.q, seed,
        )?);
    }
    build_sequence(&entry.patient_id, features, entry.grade, opts.seq_len)
}

/// Trains via the repeated-split protocol and writes the model container
/// and metrics JSON. The written model comes from the best run.
pub fn cmd_train(
    features_path: &Path,
    arch_name: &str,
    config: Option<&Path>,
    model_out: &Path,
    metrics_out: &Path,
    timing: TimingMode,
) -> Result<Metrics> {
    let table = read_feature_file(features_path)?;
    let cfg = match config {
        Some(path) => parse_train_config(path)?,
        None => TrainConfig::default(),
    };
    let arch = Architecture::from_name(arch_name, table.feature_dim, table.seq_len)?;
    let (mut metrics, model) = run_protocol(&arch, &table.patients, &cfg)?;
    if timing == TimingMode::Zero {
        metrics.train_time_seconds = vec![0.0; metrics.train_time_seconds.len()];
    }
    model.save(model_out)?;
    write_metrics(metrics_out, &metrics)?;
    Ok(metrics)
}

/// Evaluates a saved model over every patient in a feature file.
pub fn cmd_evaluate(model_path: &Path, features_path: &Path, metrics_out: &Path) -> Result<Metrics> {
    let model = ModelParams::load(model_path)?;
    let table = read_feature_file(features_path)?;
    let metrics = evaluate(&model, &table.patients)?;
    write_metrics(metrics_out, &metrics)?;
    Ok(metrics)
}

/// Parameter count for a named architecture at the given dimensions.
pub fn cmd_param_count(arch_name: &str, input_dim: usize, seq_len: usize) -> Result<usize> {
    Ok(Architecture::from_name(arch_name, input_dim, seq_len)?.param_count())
}

pub fn write_metrics(path: &Path, metrics: &Metrics) -> Result<()> {
    let json = serde_json::to_string_pretty(metrics)
        .map_err(|e| Error::Format(format!("metrics serialization: {e}")))?;
    std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_metrics(path: &Path) -> Result<Metrics> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, format!("metrics JSON: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::DEFAULT_SEQ_LEN;

    fn tempdir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("gliograde-harness-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn numeric_sort_orders_by_value() {
        let mut names = vec!["s10.pgm", "s2.pgm", "s1.pgm", "s02.pgm"];
        names.sort_by(|a, b| numeric_aware_cmp(a, b));
        assert_eq!(names, vec!["s1.pgm", "s02.pgm", "s2.pgm", "s10.pgm"]);
    }

    #[test]
    fn numeric_sort_falls_back_to_bytes() {
        let mut names = vec!["b.pgm", "a.pgm", "a1.pgm"];
        names.sort_by(|a, b| numeric_aware_cmp(a, b));
        assert_eq!(names, vec!["a.pgm", "a1.pgm", "b.pgm"]);
    }

    #[test]
    fn manifest_round_trip_and_validation() {
        let dir = tempdir("manifest");
        let slices = dir.join("p1");
        std::fs::create_dir_all(&slices).unwrap();
        let manifest_path = dir.join("manifest.csv");
        std::fs::write(&manifest_path, "patient_id,grade,slice_dir\np1,II,p1\n").unwrap();
        let m = load_manifest(&manifest_path).unwrap();
        assert_eq!(m.entries.len(), 1);
        assert_eq!(m.entries[0].grade, Grade::II);
        assert!(m.entries[0].slice_dir.ends_with("p1"));

        // missing directory names the path
        std::fs::write(&manifest_path, "patient_id,grade,slice_dir\np2,III,gone\n").unwrap();
        let err = load_manifest(&manifest_path).unwrap_err().to_string();
        assert!(err.contains("gone"), "{err}");

        // duplicate ids rejected
        std::fs::write(
            &manifest_path,
            "patient_id,grade,slice_dir\np1,II,p1\np1,III,p1\n",
        )
        .unwrap();
        assert!(load_manifest(&manifest_path).is_err());

        std::fs::remove_dir_all(&dir).ok();
    }

    fn sample_patients() -> Vec<PatientSequence> {
        vec![
            PatientSequence {
                patient_id: "a".into(),
                label: Grade::II,
                slices: vec![vec![1.0, -0.5], vec![0.25, 1e-17]],
                feature_dim: 2,
            },
            PatientSequence {
                patient_id: "b".into(),
                label: Grade::IV,
                slices: vec![vec![std::f64::consts::PI, 2.5e-8], vec![-1.0 / 3.0, 42.0]],
                feature_dim: 2,
            },
        ]
    }

    #[test]
    fn feature_file_round_trips_exactly() {
        let dir = tempdir("features");
        let path = dir.join("features.csv");
        let patients = sample_patients();
        write_feature_file(&path, &patients).unwrap();
        let table = read_feature_file(&path).unwrap();
        assert_eq!(table.feature_dim, 2);
        assert_eq!(table.seq_len, 2);
        assert_eq!(table.patients, patients);

        // byte-identical on rewrite
        let first = std::fs::read(&path).unwrap();
        write_feature_file(&path, &table.patients).unwrap();
        assert_eq!(first, std::fs::read(&path).unwrap());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn feature_file_rejects_malformed_rows() {
        let dir = tempdir("badfeat");
        let path = dir.join("f.csv");

        std::fs::write(&path, "patient_id,label,slice_index,f0\na,II,1,0.5\n").unwrap();
        assert!(read_feature_file(&path).unwrap_err().to_string().contains("out of order"));

        std::fs::write(&path, "patient_id,label,slice_index,f0\na,II,0,0.5\na,III,1,0.5\n").unwrap();
        assert!(read_feature_file(&path)
            .unwrap_err()
            .to_string()
            .contains("conflicting labels"));

        std::fs::write(&path, "patient_id,label,slice_index,f0\na,II,0,0.5,9.0\n").unwrap();
        assert!(read_feature_file(&path).is_err());

        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn config_file_parses_and_rejects_unknown_keys() {
        let dir = tempdir("config");
        let path = dir.join("train.cfg");
        std::fs::write(
            &path,
            "# protocol\nepochs = 12\nbase_lr=0.01\nruns=2\nseed = 9\n",
        )
        .unwrap();
        let cfg = parse_train_config(&path).unwrap();
        assert_eq!(cfg.epochs, 12);
        assert_eq!(cfg.base_lr, 0.01);
        assert_eq!(cfg.runs, 2);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.lr_decay_epoch, 30); // default preserved

        std::fs::write(&path, "epoch = 12\n").unwrap();
        let err = parse_train_config(&path).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("epoch"));

        std::fs::write(&path, "epochs = twelve\n").unwrap();
        assert!(parse_train_config(&path).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn extract_on_synthetic_corpus_round_trips() {
        let dir = tempdir("extract");
        synthesize_corpus(&dir, 1, DEFAULT_SEQ_LEN, 7).unwrap();
        let opts = ExtractOptions {
            manifest: dir.join("manifest.csv"),
            mode: FeatureMode::Mixed,
            p: 25,
            q: 64,
            seq_len: DEFAULT_SEQ_LEN,
            seed: 7,
            resolution: DEFAULT_RESOLUTION,
            out: dir.join("features.csv"),
        };
        let failures = cmd_extract(&opts).unwrap();
        assert!(failures.is_empty());
        let table = read_feature_file(&opts.out).unwrap();
        assert_eq!(table.patients.len(), 3);
        assert_eq!(table.feature_dim, 89);
        assert_eq!(table.seq_len, DEFAULT_SEQ_LEN);

        // determinism: extracting again is byte-identical
        let first = std::fs::read(&opts.out).unwrap();
        cmd_extract(&opts).unwrap();
        assert_eq!(first, std::fs::read(&opts.out).unwrap());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn extract_reports_insufficient_slices_per_patient() {
        let dir = tempdir("short");
        synthesize_corpus(&dir, 1, 5, 3).unwrap();
        let opts = ExtractOptions {
            manifest: dir.join("manifest.csv"),
            mode: FeatureMode::Mixed,
            p: 25,
            q: 64,
            seq_len: 10, // more than the corpus has
            seed: 3,
            resolution: DEFAULT_RESOLUTION,
            out: dir.join("features.csv"),
        };
        match cmd_extract(&opts) {
            Err(Error::InvalidArgument(msg)) => assert!(msg.contains("no patient")),
            other => panic!("expected total failure, got {other:?}"),
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn param_count_command_values() {
        assert_eq!(cmd_param_count("lstm21", 64, 30).unwrap(), 7290);
        assert_eq!(cmd_param_count("lstm32", 64, 30).unwrap(), 12515);
        assert_eq!(cmd_param_count("baseline", 64, 30).unwrap(), 302973);
        assert_eq!(cmd_param_count("lstm21", 164, 30).unwrap(), 15690);
        assert!(matches!(
            cmd_param_count("resnet", 64, 30),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn metrics_json_round_trip() {
        let dir = tempdir("metrics");
        let path = dir.join("metrics.json");
        let metrics = Metrics {
            per_run_accuracy: vec![0.9, 1.0],
            average_accuracy: 0.95,
            best_accuracy: 1.0,
            train_time_seconds: vec![1.5, 2.5],
            param_count: 7290,
            confusion: [[2, 0, 0], [0, 2, 0], [1, 0, 1]],
        };
        write_metrics(&path, &metrics).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"average_accuracy\""));
        assert!(text.contains("\"param_count\": 7290"));
        assert_eq!(read_metrics(&path).unwrap(), metrics);
        std::fs::remove_dir_all(&dir).ok();
    }
}
