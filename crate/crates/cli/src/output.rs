//! Output files and run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// Everything needed to regenerate a command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: &'static str,
    pub seed: u64,
    pub config: serde_json::Value,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: impl Serialize) -> Self {
        RunManifest {
            command: command.to_owned(),
            version: env!("CARGO_PKG_VERSION"),
            seed,
            config: serde_json::to_value(config).expect("configuration serializes"),
            outputs: Vec::new(),
        }
    }

    pub fn write(mut self, path: &Path, force: bool) -> Result<(), CliError> {
        self.outputs.sort();
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes") + "\n";
        write_file(path, text.as_bytes(), force)
    }
}

pub fn ensure_writable(path: &Path, force: bool) -> Result<(), CliError> {
    if path.exists() && !force {
        return Err(CliError::Exists(path.to_owned()));
    }
    Ok(())
}

pub fn write_file(path: &Path, bytes: &[u8], force: bool) -> Result<(), CliError> {
    ensure_writable(path, force)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}
