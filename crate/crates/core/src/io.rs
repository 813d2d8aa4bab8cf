//! Number formatting, atomic file output and run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::scalar::Scalar;

/// Scientific notation with 17 significant digits; round-trips any `f64`.
pub fn fmt_num<T: Scalar>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}

/// Hex SHA-256 of a byte slice.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `contents` to `path` through a sibling temp file and rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Provenance record written next to every run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_sha256: String,
    pub code_version: String,
    pub seeds: Vec<u64>,
    pub started_unix_s: u64,
    pub finished_unix_s: u64,
    #[serde(default)]
    pub files: Vec<ManifestEntry>,
}

impl RunManifest {
    pub fn new(command: &str, config_text: &str, seeds: Vec<u64>) -> Self {
        Self {
            command: command.to_string(),
            config_sha256: digest(config_text.as_bytes()),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            seeds,
            started_unix_s: unix_now(),
            finished_unix_s: 0,
            files: Vec::new(),
        }
    }

    /// Writes a file atomically and records it relative to `root`.
    pub fn emit(&mut self, root: &Path, rel: &str, contents: &[u8]) -> Result<PathBuf> {
        let path = root.join(rel);
        write_atomic(&path, contents)?;
        self.files.push(ManifestEntry {
            path: rel.to_string(),
            sha256: digest(contents),
            bytes: contents.len() as u64,
        });
        Ok(path)
    }

    /// Finalizes timestamps and writes `manifest.toml` under `root`.
    pub fn finish(mut self, root: &Path) -> Result<PathBuf> {
        self.finished_unix_s = unix_now();
        let text = toml::to_string(&self).expect("manifest serializes");
        let path = root.join("manifest.toml");
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }

    /// Every listed file exists with the recorded digest.
    pub fn verify(&self, root: &Path) -> Result<bool> {
        for f in &self.files {
            let bytes = fs::read(root.join(&f.path))?;
            if digest(&bytes) != f.sha256 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
