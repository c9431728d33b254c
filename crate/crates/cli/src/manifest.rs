//! Run-directory manifest: config hash, seeds, tool version and a content
//! hash of every output file.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    pub seeds: Vec<u64>,
    /// Relative path to sha256 of contents.
    pub files: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn collect(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) -> Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<std::io::Result<_>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let path = e.path();
        if e.file_type()?.is_dir() {
            collect(root, &path, out)?;
        } else if path.file_name().is_some_and(|n| n != MANIFEST_FILE) {
            let rel = path.strip_prefix(root).expect("under root").to_string_lossy().replace('\\', "/");
            out.insert(rel, sha256_file(&path)?);
        }
    }
    Ok(())
}

/// Rewrites `<run>/manifest.json` from the current directory contents.
pub fn write_manifest(run_dir: &Path, cfg: &ExperimentConfig) -> Result<Manifest> {
    let mut files = BTreeMap::new();
    collect(run_dir, run_dir, &mut files)?;
    let m = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: cfg.hash(),
        seeds: cfg.seeds.clone(),
        files,
    };
    fs::write(run_dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&m)? + "\n")?;
    Ok(m)
}
