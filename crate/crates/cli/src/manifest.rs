use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMING_FILE: &str = "run_timing.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Record of one run. Wall-clock time lives in a sidecar so that deterministic runs
/// produce byte-identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<FileEntry>,
    /// Paths relative to the output directory.
    pub outputs: Vec<FileEntry>,
    pub warnings: Vec<String>,
    pub timing_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    pub command: String,
    pub duration_seconds: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> CliResult<FileEntry> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    Ok(FileEntry {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    })
}

/// Output directory that hashes everything written through it.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root)
            .map_err(|e| CliError::io(format!("creating {}", root.display()), e))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.root.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
        self.written.retain(|f| f.path != name);
        self.written.push(FileEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_vec_pretty(value)
            .map_err(|e| CliError::Config(format!("serializing {name}: {e}")))?;
        text.push(b'\n');
        self.write(name, &text)
    }

    /// Writes the manifest (outputs sorted by path) and the timing sidecar.
    pub fn finish(
        mut self,
        command: &str,
        config: serde_json::Value,
        seeds: BTreeMap<String, u64>,
        inputs: Vec<FileEntry>,
        warnings: Vec<String>,
        elapsed: Duration,
    ) -> CliResult<RunManifest> {
        self.written.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = RunManifest {
            command: command.to_string(),
            version: concat!("brc ", env!("CARGO_PKG_VERSION")).to_string(),
            config,
            seeds,
            inputs,
            outputs: self.written.clone(),
            warnings,
            timing_file: TIMING_FILE.to_string(),
        };
        let timing = RunTiming {
            command: command.to_string(),
            duration_seconds: elapsed.as_secs_f64(),
        };
        for (name, bytes) in [(TIMING_FILE, pretty(&timing)), (MANIFEST_FILE, pretty(&manifest))] {
            let path = self.root.join(name);
            std::fs::write(&path, bytes).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
        }
        Ok(manifest)
    }
}

fn pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("manifest types serialize");
    v.push(b'\n');
    v
}

/// Checks that every listed output exists with the recorded hash.
pub fn verify(root: &Path) -> CliResult<RunManifest> {
    let path = root.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("manifest: {e}")))?;
    for entry in &manifest.outputs {
        let actual = hash_file(&root.join(&entry.path))?;
        if actual.sha256 != entry.sha256 || actual.bytes != entry.bytes {
            return Err(CliError::Config(format!("{} does not match its manifest hash", entry.path)));
        }
    }
    Ok(manifest)
}
