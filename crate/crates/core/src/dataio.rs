//! Files on disk: CSV matrices, dataset manifests and model archives.
//!
//! Matrices are plain CSV (one row per line, no header, LF endings), with
//! every value written in Rust's shortest round-trip form so a write followed
//! by a read reproduces the matrix bit for bit. Manifests and archives are
//! JSON documents that reference those CSV files by paths relative to the
//! document's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baseline::RrrConfig;
use crate::dataset::{Group, GroupedDataset};
use crate::dictlearn::{CscConfig, CscModel, Dictionary, FitDiagnostics};
use crate::encoder::GroupCoefficients;
use crate::error::{Error, Result};
use crate::matcore::Matrix;
use crate::simulate::{GroundTruth, SimParams, SimulatedData};

pub const FORMAT_VERSION: &str = "1";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const MODEL_FILE: &str = "model.json";

pub fn format_matrix(m: &Matrix) -> Result<String> {
    let mut out = String::with_capacity(m.nrows() * m.ncols() * 24);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            if !v.is_finite() {
                return Err(Error::Validation(format!("non-finite value at ({i}, {j})")));
            }
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("{v:?}"));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_matrix(text: &str, path: &Path) -> Result<Matrix> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let body = text.strip_suffix('\n').unwrap_or(text);
    if body.trim().is_empty() {
        return Err(err(1, "empty file".into()));
    }
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (idx, raw) in body.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            return Err(err(line_no, "empty line".into()));
        }
        let mut count = 0;
        for token in line.split(',') {
            let token = token.trim();
            let v: f64 = token
                .parse()
                .map_err(|_| err(line_no, format!("not a number: {token:?}")))?;
            if !v.is_finite() {
                return Err(err(line_no, format!("non-finite value {token:?}")));
            }
            values.push(v);
            count += 1;
        }
        match cols {
            None => cols = Some(count),
            Some(c) if c != count => {
                return Err(err(line_no, format!("row has {count} values, expected {c}")));
            }
            Some(_) => {}
        }
        rows += 1;
    }
    Ok(Matrix::from_row_slice(rows, cols.unwrap_or(0), &values))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingArtifact(path.to_path_buf())
        } else {
            Error::io(path, e)
        }
    })?;
    parse_matrix(&text, path)
}

pub fn write_matrix(m: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_matrix(m)?).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingArtifact(path.to_path_buf())
        } else {
            Error::io(path, e)
        }
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

fn check_version(found: &str) -> Result<()> {
    if found != FORMAT_VERSION {
        return Err(Error::Version {
            found: found.to_string(),
            expected: FORMAT_VERSION.to_string(),
        });
    }
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFiles {
    pub x: String,
    pub y: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitFiles {
    pub n: usize,
    pub groups: Vec<GroupFiles>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFiles {
    pub b_star: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_dictionary: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_supports: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_weights: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub note: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: String,
    pub p: usize,
    pub q: usize,
    pub n: usize,
    #[serde(rename = "G")]
    pub num_groups: usize,
    pub groups: Vec<GroupFiles>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<SplitFiles>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<TruthFiles>,
    #[serde(default)]
    pub provenance: Provenance,
}

/// Everything a manifest can point to.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub manifest: DatasetManifest,
    pub train: GroupedDataset,
    pub test: Option<GroupedDataset>,
    pub truth: Option<GroundTruth>,
}

fn write_split(dataset: &GroupedDataset, dir: &Path, prefix: &str) -> Result<Vec<GroupFiles>> {
    dataset
        .groups()
        .iter()
        .enumerate()
        .map(|(g, group)| {
            let files = GroupFiles {
                x: format!("{prefix}x_{g:03}.csv"),
                y: format!("{prefix}y_{g:03}.csv"),
            };
            write_matrix(&group.x, dir.join(&files.x))?;
            write_matrix(&group.y, dir.join(&files.y))?;
            Ok(files)
        })
        .collect()
}

/// Writes the matrices and a manifest into `dir`; returns the manifest path.
pub fn save_dataset_bundle(
    train: &GroupedDataset,
    test: Option<&GroupedDataset>,
    truth: Option<&GroundTruth>,
    provenance: Provenance,
    dir: impl AsRef<Path>,
) -> Result<PathBuf> {
    let dir = dir.as_ref();
    create_dir(dir)?;
    let groups = write_split(train, dir, "")?;
    let test = match test {
        Some(t) => {
            if t.num_groups() != train.num_groups() || t.p() != train.p() || t.q() != train.q() {
                return Err(Error::Dimension("test split does not match the training split".into()));
            }
            Some(SplitFiles {
                n: t.n(),
                groups: write_split(t, dir, "test_")?,
            })
        }
        None => None,
    };
    let ground_truth = match truth {
        Some(truth) => {
            if truth.b_star.len() != train.num_groups() {
                return Err(Error::Dimension(format!(
                    "ground truth has {} matrices for {} groups",
                    truth.b_star.len(),
                    train.num_groups()
                )));
            }
            let mut b_star = Vec::new();
            for (g, b) in truth.b_star.iter().enumerate() {
                let name = format!("b_star_{g:03}.csv");
                write_matrix(b, dir.join(&name))?;
                b_star.push(name);
            }
            let true_dictionary = match &truth.true_dictionary {
                Some(atoms) => {
                    let mut names = Vec::new();
                    for (k, d) in atoms.iter().enumerate() {
                        let name = format!("true_dict_{k:03}.csv");
                        write_matrix(d, dir.join(&name))?;
                        names.push(name);
                    }
                    Some(names)
                }
                None => None,
            };
            Some(TruthFiles {
                b_star,
                true_dictionary,
                true_supports: truth.true_supports.clone(),
                true_weights: truth.true_weights.clone(),
            })
        }
        None => None,
    };
    let manifest = DatasetManifest {
        format_version: FORMAT_VERSION.to_string(),
        p: train.p(),
        q: train.q(),
        n: train.n(),
        num_groups: train.num_groups(),
        groups,
        test,
        ground_truth,
        provenance,
    };
    let path = dir.join(MANIFEST_FILE);
    write_json(&manifest, &path)?;
    Ok(path)
}

pub fn save_dataset(dataset: &GroupedDataset, truth: Option<&GroundTruth>, dir: impl AsRef<Path>) -> Result<PathBuf> {
    save_dataset_bundle(dataset, None, truth, Provenance::default(), dir)
}

pub fn save_simulated(sim: &SimulatedData, params: &SimParams, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let provenance = Provenance {
        note: format!("simulated, scenario {}", params.scenario),
        simulation: Some(params.clone()),
    };
    save_dataset_bundle(&sim.train, Some(&sim.test), Some(&sim.truth), provenance, dir)
}

fn check_shape(m: &Matrix, rows: usize, cols: usize, what: &str) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::Validation(format!(
            "{what} is {}x{}, manifest declares {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn load_split(manifest: &DatasetManifest, files: &[GroupFiles], n: usize, dir: &Path, label: &str) -> Result<GroupedDataset> {
    if files.len() != manifest.num_groups {
        return Err(Error::Validation(format!(
            "{label} lists {} groups, manifest declares G={}",
            files.len(),
            manifest.num_groups
        )));
    }
    let groups = files
        .iter()
        .enumerate()
        .map(|(g, f)| {
            let x = read_matrix(dir.join(&f.x))?;
            check_shape(&x, manifest.p, n, &format!("{label} group {g}: X ({})", f.x))?;
            let y = read_matrix(dir.join(&f.y))?;
            check_shape(&y, manifest.q, n, &format!("{label} group {g}: Y ({})", f.y))?;
            Ok(Group { x, y })
        })
        .collect::<Result<Vec<_>>>()?;
    GroupedDataset::new(groups)
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let manifest: DatasetManifest = read_json(path.as_ref())?;
    check_version(&manifest.format_version)?;
    Ok(manifest)
}

pub fn load_dataset_bundle(manifest_path: impl AsRef<Path>) -> Result<LoadedDataset> {
    let path = manifest_path.as_ref();
    let manifest = load_manifest(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let train = load_split(&manifest, &manifest.groups, manifest.n, dir, "train")?;
    let test = match &manifest.test {
        Some(split) => Some(load_split(&manifest, &split.groups, split.n, dir, "test")?),
        None => None,
    };
    let truth = match &manifest.ground_truth {
        Some(files) => {
            if files.b_star.len() != manifest.num_groups {
                return Err(Error::Validation(format!(
                    "ground truth lists {} matrices, manifest declares G={}",
                    files.b_star.len(),
                    manifest.num_groups
                )));
            }
            let b_star = files
                .b_star
                .iter()
                .enumerate()
                .map(|(g, f)| {
                    let b = read_matrix(dir.join(f))?;
                    check_shape(&b, manifest.q, manifest.p, &format!("group {g}: B* ({f})"))?;
                    Ok(b)
                })
                .collect::<Result<Vec<_>>>()?;
            let true_dictionary = match &files.true_dictionary {
                Some(names) => Some(
                    names
                        .iter()
                        .map(|f| {
                            let d = read_matrix(dir.join(f))?;
                            check_shape(&d, manifest.q, manifest.p, &format!("true dictionary entry {f}"))?;
                            Ok(d)
                        })
                        .collect::<Result<Vec<_>>>()?,
                ),
                None => None,
            };
            Some(GroundTruth {
                b_star,
                true_dictionary,
                true_supports: files.true_supports.clone(),
                true_weights: files.true_weights.clone(),
            })
        }
        None => None,
    };
    Ok(LoadedDataset {
        manifest,
        train,
        test,
        truth,
    })
}

pub fn load_dataset(manifest_path: impl AsRef<Path>) -> Result<GroupedDataset> {
    Ok(load_dataset_bundle(manifest_path)?.train)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Csc,
    Rrr,
}

/// The JSON envelope of a model archive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEnvelope {
    pub format_version: String,
    pub kind: ModelKind,
    pub p: usize,
    pub q: usize,
    #[serde(rename = "G")]
    pub num_groups: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csc_config: Option<CscConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rrr_config: Option<RrrConfig>,
    /// Nuclear-norm radius used for each group (rrr only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    /// Dictionary entries (csc) or per-group estimates (rrr).
    pub matrix_files: Vec<String>,
    /// `G x K` coefficient matrix (csc only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<FitDiagnostics>,
}

/// Per-group nuclear-norm baseline estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct RrrModel {
    pub estimates: Vec<Matrix>,
    pub radii: Vec<f64>,
    pub config: RrrConfig,
}

fn read_envelope(dir: &Path) -> Result<ModelEnvelope> {
    let envelope: ModelEnvelope = read_json(&dir.join(MODEL_FILE))?;
    check_version(&envelope.format_version)?;
    Ok(envelope)
}

pub fn save_model(model: &CscModel, diagnostics: Option<&FitDiagnostics>, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    create_dir(dir)?;
    let (q, p) = model.dictionary.shape();
    let mut matrix_files = Vec::with_capacity(model.dictionary.k());
    for (k, d) in model.dictionary.entries().iter().enumerate() {
        let name = format!("dict_{k:03}.csv");
        write_matrix(d, dir.join(&name))?;
        matrix_files.push(name);
    }
    let coefficients_file = "coefficients.csv".to_string();
    write_matrix(&model.coefficients.to_matrix(), dir.join(&coefficients_file))?;
    let envelope = ModelEnvelope {
        format_version: FORMAT_VERSION.to_string(),
        kind: ModelKind::Csc,
        p,
        q,
        num_groups: model.coefficients.num_groups(),
        k: Some(model.dictionary.k()),
        tau: Some(model.dictionary.tau()),
        csc_config: Some(model.config.clone()),
        rrr_config: None,
        radii: None,
        matrix_files,
        coefficients_file: Some(coefficients_file),
        diagnostics: diagnostics.cloned(),
    };
    let path = dir.join(MODEL_FILE);
    write_json(&envelope, &path)?;
    Ok(path)
}

pub fn load_model(dir: impl AsRef<Path>) -> Result<(CscModel, Option<FitDiagnostics>)> {
    let dir = dir.as_ref();
    let envelope = read_envelope(dir)?;
    if envelope.kind != ModelKind::Csc {
        return Err(Error::Validation(format!("{} holds a baseline model, not a CSC model", dir.display())));
    }
    let missing = |what: &str| Error::Validation(format!("model archive lacks {what}"));
    let config = envelope.csc_config.clone().ok_or_else(|| missing("csc_config"))?;
    let tau = envelope.tau.ok_or_else(|| missing("tau"))?;
    let k = envelope.k.ok_or_else(|| missing("k"))?;
    if envelope.matrix_files.len() != k {
        return Err(Error::Validation(format!(
            "archive lists {} dictionary files for K={k}",
            envelope.matrix_files.len()
        )));
    }
    let entries = envelope
        .matrix_files
        .iter()
        .map(|f| {
            let d = read_matrix(dir.join(f))?;
            check_shape(&d, envelope.q, envelope.p, &format!("dictionary entry {f}"))?;
            Ok(d)
        })
        .collect::<Result<Vec<_>>>()?;
    let coef_file = envelope.coefficients_file.as_ref().ok_or_else(|| missing("coefficients_file"))?;
    let coef = read_matrix(dir.join(coef_file))?;
    check_shape(&coef, envelope.num_groups, k, &format!("coefficients ({coef_file})"))?;
    let dictionary = Dictionary::new(entries, tau)?;
    let model = CscModel::new(dictionary, GroupCoefficients::from_matrix(&coef)?, config)?;
    Ok((model, envelope.diagnostics))
}

pub fn save_rrr_model(model: &RrrModel, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    create_dir(dir)?;
    let first = model
        .estimates
        .first()
        .ok_or_else(|| Error::Config("baseline model has no groups".into()))?;
    let mut matrix_files = Vec::with_capacity(model.estimates.len());
    for (g, b) in model.estimates.iter().enumerate() {
        let name = format!("b_{g:03}.csv");
        write_matrix(b, dir.join(&name))?;
        matrix_files.push(name);
    }
    let envelope = ModelEnvelope {
        format_version: FORMAT_VERSION.to_string(),
        kind: ModelKind::Rrr,
        p: first.ncols(),
        q: first.nrows(),
        num_groups: model.estimates.len(),
        k: None,
        tau: None,
        csc_config: None,
        rrr_config: Some(model.config.clone()),
        radii: Some(model.radii.clone()),
        matrix_files,
        coefficients_file: None,
        diagnostics: None,
    };
    let path = dir.join(MODEL_FILE);
    write_json(&envelope, &path)?;
    Ok(path)
}

pub fn load_rrr_model(dir: impl AsRef<Path>) -> Result<RrrModel> {
    let dir = dir.as_ref();
    let envelope = read_envelope(dir)?;
    if envelope.kind != ModelKind::Rrr {
        return Err(Error::Validation(format!("{} holds a CSC model, not a baseline model", dir.display())));
    }
    rrr_from_envelope(dir, envelope)
}

fn rrr_from_envelope(dir: &Path, envelope: ModelEnvelope) -> Result<RrrModel> {
    if envelope.matrix_files.len() != envelope.num_groups {
        return Err(Error::Validation(format!(
            "archive lists {} estimates for G={}",
            envelope.matrix_files.len(),
            envelope.num_groups
        )));
    }
    let estimates = envelope
        .matrix_files
        .iter()
        .enumerate()
        .map(|(g, f)| {
            let b = read_matrix(dir.join(f))?;
            check_shape(&b, envelope.q, envelope.p, &format!("group {g}: estimate ({f})"))?;
            Ok(b)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RrrModel {
        estimates,
        radii: envelope.radii.unwrap_or_default(),
        config: envelope.rrr_config.unwrap_or_default(),
    })
}

/// Per-group estimates from either kind of archive.
pub fn load_estimates(dir: impl AsRef<Path>) -> Result<Vec<Matrix>> {
    let dir = dir.as_ref();
    let envelope = read_envelope(dir)?;
    match envelope.kind {
        ModelKind::Csc => Ok(load_model(dir)?.0.estimates()),
        ModelKind::Rrr => Ok(rrr_from_envelope(dir, envelope)?.estimates),
    }
}

/// Tidy long-format diagnostics: `alternation,series,index,value`, one row
/// per alternation per series (and per group or entry for the per-item
/// series). Alternations count from 1.
pub fn diagnostics_csv(diag: &FitDiagnostics) -> String {
    let mut out = String::from("alternation,series,index,value\n");
    let mut row = |t: usize, series: &str, index: usize, value: String| {
        out.push_str(&format!("{},{series},{index},{value}\n", t + 1));
    };
    for t in 0..diag.alternations() {
        row(t, "objective", 0, format!("{:?}", diag.objective_per_alternation[t]));
        row(t, "mean_l0", 0, format!("{:?}", diag.mean_l0(t)));
        row(t, "mean_l1", 0, format!("{:?}", diag.mean_l1(t)));
        row(t, "mean_rank", 0, format!("{:?}", diag.mean_rank(t)));
        if let Some(s) = diag.dictionary_stationarity.get(t) {
            row(t, "dictionary_stationarity", 0, format!("{s:?}"));
        }
        for (g, v) in diag.l0_per_group_per_alternation[t].iter().enumerate() {
            row(t, "l0", g, v.to_string());
        }
        for (g, v) in diag.l1_per_group_per_alternation[t].iter().enumerate() {
            row(t, "l1", g, format!("{v:?}"));
        }
        for (k, v) in diag.rank_per_entry_per_alternation[t].iter().enumerate() {
            row(t, "rank", k, v.to_string());
        }
    }
    out
}

pub fn write_diagnostics_csv(diag: &FitDiagnostics, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, diagnostics_csv(diag)).map_err(|e| Error::io(path, e))
}

pub fn write_text(text: &str, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn save_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    write_json(value, path.as_ref())
}

pub fn load_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    read_json(path.as_ref())
}
