//! Output files: overwrite protection, atomic writes and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Writes `bytes` next to `path` under a temporary name, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let name = path
        .file_name()
        .with_context(|| format!("{} is not a file path", path.display()))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("moving {} into place", path.display()))?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `model.json` -> `model.manifest.json`
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    config: &'a serde_json::Value,
    seed: Option<u64>,
    inputs: Vec<String>,
    outputs: Vec<String>,
    duration_secs: f64,
    checksums: BTreeMap<String, String>,
}

/// Collects the artifacts of one command and commits them together.
pub struct Run {
    command: &'static str,
    started: Instant,
    force: bool,
    inputs: Vec<PathBuf>,
    files: Vec<(PathBuf, Vec<u8>)>,
    manifest: Option<PathBuf>,
}

impl Run {
    pub fn new(command: &'static str, force: bool) -> Self {
        Run {
            command,
            started: Instant::now(),
            force,
            inputs: Vec::new(),
            files: Vec::new(),
            manifest: None,
        }
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.inputs.push(path.to_path_buf());
        self
    }

    pub fn manifest_at(&mut self, path: PathBuf) -> &mut Self {
        self.manifest = Some(path);
        self
    }

    /// Fails before any work is done if an output already exists or would
    /// replace one of the inputs.
    pub fn claim(&self, outputs: &[&Path]) -> Result<()> {
        let all = outputs.iter().copied().chain(self.manifest.as_deref());
        for out in all {
            for input in &self.inputs {
                if same_file(out, input) {
                    bail!("output {} would overwrite an input file", out.display());
                }
            }
            if out.exists() && !self.force {
                bail!("{} already exists (pass --force to overwrite)", out.display());
            }
        }
        Ok(())
    }

    pub fn add(&mut self, path: &Path, bytes: impl Into<Vec<u8>>) {
        self.files.push((path.to_path_buf(), bytes.into()));
    }

    /// Writes every output, then the manifest.
    pub fn commit(self, config: &serde_json::Value, seed: Option<u64>) -> Result<()> {
        let outputs: Vec<&Path> = self.files.iter().map(|(p, _)| p.as_path()).collect();
        self.claim(&outputs)?;
        let mut checksums = BTreeMap::new();
        for (path, bytes) in &self.files {
            write_atomic(path, bytes)?;
            checksums.insert(path.display().to_string(), sha256_hex(bytes));
            log::info!("wrote {}", path.display());
        }
        if let Some(manifest_path) = &self.manifest {
            let manifest = RunManifest {
                command: self.command,
                config,
                seed,
                inputs: self.inputs.iter().map(|p| p.display().to_string()).collect(),
                outputs: self.files.iter().map(|(p, _)| p.display().to_string()).collect(),
                duration_secs: self.started.elapsed().as_secs_f64(),
                checksums,
            };
            let mut json = serde_json::to_string_pretty(&manifest)?;
            json.push('\n');
            write_atomic(manifest_path, json.as_bytes())?;
            log::debug!("wrote {}", manifest_path.display());
        }
        Ok(())
    }
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}
