//! `manifest.json`, written next to the outputs of every run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{fnv1a, Config};
use crate::error::Result;
use crate::forecast::FORECAST_MANIFEST;
use crate::ingest::GRID_EXTENSION;
use crate::net::CHECKPOINT_VERSION;

pub const RUN_MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: PathBuf,
    /// Total bytes of the file, or of every file below a directory.
    pub bytes: u64,
    /// FNV-1a over the contents (directories: over sorted relative paths
    /// and contents); absent for inputs that do not exist.
    pub digest: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub dune: String,
    pub checkpoint_format: u32,
    pub grid_extension: String,
    pub forecast_manifest: String,
}

impl Default for Versions {
    fn default() -> Self {
        Self {
            dune: env!("CARGO_PKG_VERSION").to_string(),
            checkpoint_format: CHECKPOINT_VERSION,
            grid_extension: GRID_EXTENSION.to_string(),
            forecast_manifest: FORECAST_MANIFEST.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub seed: u64,
    pub config_hash: String,
    pub config: Config,
    pub inputs: Vec<InputRecord>,
    /// Paths relative to the manifest's directory.
    pub outputs: Vec<PathBuf>,
    pub versions: Versions,
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)?.filter_map(|e| e.ok().map(|e| e.path())).collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_files(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

impl InputRecord {
    pub fn of(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Ok(Self {
                path: path.to_path_buf(),
                bytes: 0,
                digest: None,
            });
        }
        let mut files = Vec::new();
        if path.is_dir() {
            collect_files(path, &mut files)?;
        } else {
            files.push(path.to_path_buf());
        }
        let mut buf = Vec::new();
        let mut bytes = 0;
        for f in &files {
            if f.file_name().is_some_and(|n| n == RUN_MANIFEST) {
                continue;
            }
            let data = fs::read(f)?;
            bytes += data.len() as u64;
            buf.extend(f.strip_prefix(path).unwrap_or(f).to_string_lossy().bytes());
            buf.extend(fnv1a(&data).to_le_bytes());
        }
        Ok(Self {
            path: path.to_path_buf(),
            bytes,
            digest: Some(format!("{:016x}", fnv1a(&buf))),
        })
    }
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(RUN_MANIFEST);
        fs::write(&path, serde_json::to_vec_pretty(self)?)?;
        Ok(path)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&fs::read(dir.join(RUN_MANIFEST))?)?)
    }
}
