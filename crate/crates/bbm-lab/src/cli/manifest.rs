//! Reproducibility record for one command invocation.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::cli::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce a run bit-for-bit: the command, the fully
/// resolved configuration, the master seed and the digests of every output.
/// Timestamps live only here, never in the outputs themselves.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub master_seed: u64,
    pub version: String,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<OutputDigest>,
}

impl RunManifest {
    pub fn begin(command: &str, config: BTreeMap<String, String>, master_seed: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            config,
            master_seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started: chrono::Utc::now().to_rfc3339(),
            finished: String::new(),
            outputs: Vec::new(),
        }
    }

    pub fn record(&mut self, path: &Path, digest: String) {
        self.outputs.push(OutputDigest {
            path: path.display().to_string(),
            sha256: digest,
        });
    }

    pub fn finish(&mut self) {
        self.finished = chrono::Utc::now().to_rfc3339();
    }

    pub fn save(&self, dir: &Path) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Runtime(format!("manifest encoding failed: {e}")))?;
        std::fs::write(&path, text)?;
        Ok(path)
    }
}
