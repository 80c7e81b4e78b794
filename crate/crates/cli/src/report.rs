//! Run reports and input digests.
//!
//! A report holds only values reproducible from the inputs and flags, so
//! reruns are byte-identical. Wall-clock timings go to a sidecar file next
//! to the report.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use sha2::{Digest, Sha256};

use scd_axes_core::embedstore::{DATA_FILE, META_FILE};
use scd_axes_core::temporal::SweepResult;
use scd_axes_core::transforms::{COMPONENTS_FILE, MEAN_FILE, TRANSFORM_FILE};
use scd_axes_core::{AxisTransform, TransformKind};

use crate::error::{CliError, CliResult};

pub const TOOL_VERSION: &str = concat!("scd-axes ", env!("CARGO_PKG_VERSION"));

/// `sha256:<hex>` over the named files of `dir`, each entry framed by its
/// name and byte length; a plain file is hashed as-is.
fn digest_files(dir: &Path, names: &[&str]) -> CliResult<String> {
    let mut h = Sha256::new();
    for name in names {
        let path = dir.join(name);
        let bytes = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        h.update(name.as_bytes());
        h.update([0]);
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(format!("sha256:{}", hex::encode(h.finalize())))
}

pub fn digest_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(format!("sha256:{}", hex::encode(Sha256::digest(&bytes))))
}

pub fn digest_store(path: &Path) -> CliResult<String> {
    if path.is_dir() {
        digest_files(path, &[META_FILE, DATA_FILE])
    } else {
        digest_file(path)
    }
}

pub fn digest_transform(dir: &Path) -> CliResult<String> {
    digest_files(dir, &[TRANSFORM_FILE, COMPONENTS_FILE, MEAN_FILE])
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub role: &'static str,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct TransformDescriptor {
    pub kind: TransformKind,
    pub dim: usize,
    pub n_axes: usize,
    pub fitted_on: usize,
    pub seed: Option<u64>,
    pub converged: Option<bool>,
    pub n_iter: Option<usize>,
}

impl From<&AxisTransform> for TransformDescriptor {
    fn from(t: &AxisTransform) -> Self {
        Self {
            kind: t.kind,
            dim: t.dim(),
            n_axes: t.n_axes(),
            fitted_on: t.fitted_on,
            seed: t.seed,
            converged: t.converged,
            n_iter: t.n_iter,
        }
    }
}

/// One evaluated axis budget. `transform` is `"raw"` for the full-dimension
/// baseline and the evaluated transform's kind otherwise.
#[derive(Debug, Serialize)]
pub struct FractionResult {
    pub transform: TransformKind,
    pub fraction: f64,
    pub n_axes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub auc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spearman: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub tool_version: &'static str,
    pub command: &'static str,
    pub inputs: Vec<InputDigest>,
    pub transform: TransformDescriptor,
    pub n_items: usize,
    pub results: Vec<FractionResult>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sweeps: Vec<SweepResult>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// `<report>.timings.json`
pub fn timings_path(report: &Path) -> PathBuf {
    let mut name = report.file_name().unwrap_or_default().to_os_string();
    name.push(".timings.json");
    report.with_file_name(name)
}

#[derive(Debug, Default, Serialize)]
pub struct Timings {
    pub phases: Vec<(String, f64)>,
}

impl Timings {
    pub fn record(&mut self, phase: &str, elapsed: Duration) {
        self.phases.push((phase.to_string(), elapsed.as_secs_f64()));
    }
}
