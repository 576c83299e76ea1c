//! Run manifests and atomically published output directories.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const RUN_MANIFEST_FILE: &str = "run_manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub input_paths: Vec<String>,
    pub output_paths: Vec<String>,
    pub toolkit_version: String,
    pub timestamp: String,
}

/// SHA-256 of the compact JSON form of `config`. Object keys serialize in
/// sorted order, so equal configs hash equally everywhere.
pub fn config_hash(config: &serde_json::Value) -> String {
    let canonical = serde_json::to_string(config).expect("JSON value serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// An output directory assembled under a temporary sibling and renamed into
/// place on [`OutputDir::commit`]. Dropped without committing, the temporary
/// directory is removed.
pub struct OutputDir {
    target: PathBuf,
    staging: PathBuf,
    files: Vec<String>,
    committed: bool,
}

impl OutputDir {
    /// Prepares `target`. An existing target is only replaced when it is
    /// empty or holds a previous run's manifest.
    pub fn create(target: &Path) -> CliResult<Self> {
        if target.exists() {
            let replaceable = target.join(RUN_MANIFEST_FILE).exists()
                || fs::read_dir(target).map(|mut d| d.next().is_none()).unwrap_or(false);
            if !replaceable {
                return Err(CliError::config(format!(
                    "output directory {} exists and is not a previous run's output",
                    target.display()
                )));
            }
        }
        let name = target
            .file_name()
            .ok_or_else(|| CliError::config(format!("invalid output path {}", target.display())))?
            .to_string_lossy()
            .into_owned();
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent)
            .map_err(|e| CliError::internal(format!("cannot create {}: {e}", parent.display())))?;
        let staging = parent.join(format!(".{name}.tmp-{}", std::process::id()));
        if staging.exists() {
            let _ = fs::remove_dir_all(&staging);
        }
        fs::create_dir(&staging)
            .map_err(|e| CliError::internal(format!("cannot create {}: {e}", staging.display())))?;
        Ok(OutputDir {
            target: target.to_path_buf(),
            staging,
            files: Vec::new(),
            committed: false,
        })
    }

    pub fn path(&self) -> &Path {
        &self.staging
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> CliResult<()> {
        let path = self.staging.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::internal(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(CliError::internal)?;
        text.push('\n');
        self.write(name, text)
    }

    /// Records files written directly into [`OutputDir::path`].
    pub fn record(&mut self, name: impl Into<String>) {
        self.files.push(name.into());
    }

    /// Writes the run manifest and moves the directory into place.
    pub fn commit(mut self, command: &str, config: serde_json::Value, inputs: &[&Path]) -> CliResult<PathBuf> {
        let mut outputs: Vec<String> = self
            .files
            .iter()
            .map(|f| self.target.join(f).display().to_string())
            .collect();
        outputs.sort();
        let manifest = RunManifest {
            command: command.to_string(),
            config_hash: config_hash(&config),
            config,
            input_paths: inputs.iter().map(|p| p.display().to_string()).collect(),
            output_paths: outputs,
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        };
        self.write_json(RUN_MANIFEST_FILE, &manifest)?;

        if self.target.exists() {
            fs::remove_dir_all(&self.target)
                .map_err(|e| CliError::internal(format!("cannot replace {}: {e}", self.target.display())))?;
        }
        fs::rename(&self.staging, &self.target)
            .map_err(|e| CliError::internal(format!("cannot move output into {}: {e}", self.target.display())))?;
        self.committed = true;
        Ok(self.target.clone())
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.staging);
        }
    }
}
