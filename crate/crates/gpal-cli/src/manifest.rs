//! The run manifest: everything needed to replay a comparison byte for
//! byte, plus volatile diagnostics (timings, timestamps) that are *not*
//! part of the determinism contract.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// The effective configuration after flag overrides; replaying this
    /// manifest reruns exactly this.
    pub config: RunConfig,
    /// SHA-256 of the canonical JSON encoding of `config`.
    pub config_sha256: String,
    pub seeds: BTreeMap<String, u64>,
    /// Relative paths of the deterministic outputs.
    pub outputs: Outputs,
    /// Per-strategy error records (runs keep partial outputs on failure).
    pub strategy_errors: BTreeMap<String, String>,
    /// Volatile diagnostics; excluded from replay comparisons.
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct Outputs {
    pub oracle: String,
    pub curves: BTreeMap<String, String>,
    pub models: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct Diagnostics {
    pub created_unix_ms: u64,
    pub wall_ms: BTreeMap<String, u64>,
    pub clamped_observations: BTreeMap<String, usize>,
}

pub fn config_sha256(config: &RunConfig) -> CliResult<String> {
    let canonical =
        serde_json::to_vec(config).map_err(|e| CliError::runtime(e.to_string()))?;
    let mut hasher = Sha256::new();
    hasher.update(&canonical);
    Ok(hex_string(&hasher.finalize()))
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl Manifest {
    pub fn save(&self, path: &Path) -> CliResult<()> {
        let text =
            serde_json::to_string_pretty(self).map_err(|e| CliError::runtime(e.to_string()))?;
        std::fs::write(path, text)
            .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("cannot parse {}: {e}", path.display())))
    }
}
