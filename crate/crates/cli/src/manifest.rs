//! Record of a command run: enough to replay it and check the outputs.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use shapekit::PipelineConfig;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: PipelineConfig,
    pub seed: u64,
    /// False when no `--seed` was given and one was drawn at random.
    pub seed_given: bool,
    pub provider: Option<String>,
    /// sha256 of each input file, keyed by role.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub timings: Vec<StageTiming>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> CliResult<String> {
    if path.is_dir() {
        // directory of transcripts: hash names and contents in order
        let mut entries: Vec<_> = std::fs::read_dir(path)
            .map_err(|e| CliError::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        entries.sort();
        let mut h = Sha256::new();
        for p in entries {
            h.update(p.file_name().unwrap_or_default().as_encoded_bytes());
            h.update(std::fs::read(&p).map_err(|e| CliError::io(&p, e))?);
        }
        return Ok(hex::encode(h.finalize()));
    }
    Ok(sha256_hex(
        &std::fs::read(path).map_err(|e| CliError::io(path, e))?,
    ))
}

impl RunManifest {
    pub fn new(command: &str, config: &PipelineConfig, seed: u64, seed_given: bool) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            seed,
            seed_given,
            provider: None,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            timings: Vec::new(),
        }
    }

    pub fn input(&mut self, role: &str, path: &Path) -> CliResult<()> {
        self.inputs.insert(role.to_string(), hash_file(path)?);
        Ok(())
    }

    pub fn output(&mut self, name: &str, path: &Path) -> CliResult<()> {
        self.outputs.insert(name.to_string(), hash_file(path)?);
        Ok(())
    }

    /// Run `f`, logging its wall time under `stage`.
    pub fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            seconds: t.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))
    }
}
