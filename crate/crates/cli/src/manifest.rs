//! Run manifests: one `manifest.json` per output directory, listing the
//! inputs and every output file by SHA-256. Wall-clock timings live in a
//! separate `timing.json` so that the manifest itself is reproducible.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io::{read_bytes, sha256_hex, write_file};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMING_FILE: &str = "timing.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRef {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dimensions {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub n_categories: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// Input files by role (`data`, `config`, `draws`, ...).
    pub inputs: BTreeMap<String, FileRef>,
    /// Echo of the resolved configuration or simulation design.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dimensions: Option<Dimensions>,
    /// `category_labels[j]` is the user label of internal category `j + 1`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub category_labels: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_columns: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_columns: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampler: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accept_rate_alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accept_rate_beta_delta: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relabeled: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub swap_fraction: Option<f64>,
    pub notes: Vec<String>,
    /// Output file name → SHA-256 of its contents.
    pub outputs: BTreeMap<String, String>,
    pub timing_file: String,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: BTreeMap::new(),
            config: None,
            dimensions: None,
            category_labels: None,
            x_columns: None,
            w_columns: None,
            sampler: None,
            accept_rate_alpha: None,
            accept_rate_beta_delta: None,
            relabeled: None,
            swap_fraction: None,
            notes: Vec::new(),
            outputs: BTreeMap::new(),
            timing_file: TIMING_FILE.to_string(),
        }
    }

    pub fn add_input(&mut self, role: &str, path: &Path, sha256: String) {
        self.inputs.insert(role.to_string(), FileRef { path: path.display().to_string(), sha256 });
    }

    pub fn load(dir: &Path) -> CliResult<Self> {
        let path = dir.join(MANIFEST_FILE);
        let bytes = read_bytes(&path)?;
        serde_json::from_slice(&bytes).map_err(|e| CliError::Validation(format!("{}: not a run manifest: {e}", path.display())))
    }

    /// Refuse an output file whose contents differ from what the manifest recorded.
    pub fn verify_output(&self, dir: &Path, name: &str, bytes: &[u8]) -> CliResult<()> {
        let recorded = self
            .outputs
            .get(name)
            .ok_or_else(|| CliError::Validation(format!("{}: manifest does not list '{name}'", dir.join(MANIFEST_FILE).display())))?;
        let actual = sha256_hex(bytes);
        if *recorded != actual {
            return Err(CliError::Validation(format!(
                "{} was modified after the run that produced it (manifest sha256 {recorded}, file sha256 {actual}); refusing to use it",
                dir.join(name).display()
            )));
        }
        Ok(())
    }

    /// Refuse a dataset other than the one the run was fitted to.
    pub fn verify_data(&self, data_path: &Path, sha256: &str) -> CliResult<()> {
        let recorded = self
            .inputs
            .get("data")
            .ok_or_else(|| CliError::Validation("manifest has no dataset entry".into()))?;
        if recorded.sha256 != sha256 {
            return Err(CliError::Validation(format!(
                "{} is not the dataset these draws were fitted to (manifest sha256 {}, file sha256 {sha256})",
                data_path.display(),
                recorded.sha256
            )));
        }
        Ok(())
    }
}

/// Collects output files, then writes them along with the manifest and timings.
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl OutputDir {
    pub fn new(dir: &Path) -> Self {
        Self { dir: dir.to_path_buf(), files: Vec::new() }
    }

    pub fn add(&mut self, name: &str, contents: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), contents.into()));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) {
        let mut text = serde_json::to_string_pretty(value).expect("serializable output");
        text.push('\n');
        self.add(name, text);
    }

    pub fn finish(self, mut manifest: RunManifest, timing: &BTreeMap<String, f64>) -> CliResult<()> {
        crate::io::create_dir(&self.dir)?;
        for (name, bytes) in &self.files {
            manifest.outputs.insert(name.clone(), sha256_hex(bytes));
            write_file(&self.dir.join(name), bytes)?;
        }
        let mut text = serde_json::to_string_pretty(&manifest).expect("serializable manifest");
        text.push('\n');
        write_file(&self.dir.join(MANIFEST_FILE), text.as_bytes())?;
        let timing = serde_json::json!({ "command": manifest.command, "seconds": timing });
        write_file(&self.dir.join(TIMING_FILE), format!("{timing:#}\n").as_bytes())
    }
}
