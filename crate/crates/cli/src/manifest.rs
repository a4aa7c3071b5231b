use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub seed: Option<u64>,
    pub wall_time: f64,
}

/// Collects digests while a command runs; written once at the end.
pub struct Recorder {
    command: String,
    started: Instant,
    config: serde_json::Value,
    inputs: Vec<FileDigest>,
    outputs: Vec<PathBuf>,
    seed: Option<u64>,
}

impl Recorder {
    pub fn new(command: &str, seed: Option<u64>) -> Self {
        Recorder {
            command: command.to_owned(),
            started: Instant::now(),
            config: serde_json::Value::Null,
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed,
        }
    }

    pub fn config(&mut self, value: impl Serialize) -> Result<()> {
        self.config = serde_json::to_value(value)?;
        Ok(())
    }

    pub fn seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) -> String {
        let digest = sha256_hex(bytes);
        self.inputs.push(FileDigest {
            path: path.to_owned(),
            sha256: digest.clone(),
        });
        digest
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_owned());
    }

    pub fn finish(self, manifest_path: &Path) -> Result<RunManifest> {
        let outputs = self
            .outputs
            .into_iter()
            .map(|path| {
                let bytes = std::fs::read(&path).with_context(|| format!("reading back {}", path.display()))?;
                Ok(FileDigest {
                    sha256: sha256_hex(&bytes),
                    path,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let manifest = RunManifest {
            command: self.command,
            config: self.config,
            inputs: self.inputs,
            outputs,
            seed: self.seed,
            wall_time: self.started.elapsed().as_secs_f64(),
        };
        let text = serde_json::to_string_pretty(&manifest)?;
        std::fs::write(manifest_path, text + "\n")
            .with_context(|| format!("writing manifest {}", manifest_path.display()))?;
        Ok(manifest)
    }
}

/// `foo/model.json` -> `foo/model.json.manifest.json`.
pub fn beside(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    path.with_file_name(name)
}
