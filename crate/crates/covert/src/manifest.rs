//! Run manifests written beside every output file.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub channel_sha256: Option<String>,
    /// Every setting the run used, defaults included.
    pub config: serde_json::Value,
    pub version: &'static str,
    pub seed: Option<u64>,
    pub duration_secs: f64,
    pub outputs: Vec<String>,
}

/// `<file name>.<suffix>` in the same directory as `path`.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".");
    name.push(suffix);
    path.with_file_name(name)
}

impl RunManifest {
    /// Writes `<output>.manifest.json`.
    pub fn write_beside(&self, output: &Path) -> CliResult<PathBuf> {
        let path = sidecar(output, "manifest.json");
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::write(&path, e))? + "\n";
        std::fs::write(&path, text).map_err(|e| CliError::write(&path, e))?;
        Ok(path)
    }
}
