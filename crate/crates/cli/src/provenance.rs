//! Config hashing and provenance headers.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// SHA-256 over the canonical JSON of the command configuration and the
    /// contents of its input files.
    pub config_hash: String,
    pub seed: Option<u64>,
}

impl Provenance {
    /// `config` must not include output paths, so that the same run written
    /// to different files carries the same hash.
    pub fn new<C: Serialize>(command: &str, config: &C, seed: Option<u64>, inputs: &[&Path]) -> Result<Self> {
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        h.update([0]);
        h.update(serde_json::to_vec(config)?);
        for p in inputs {
            let bytes = std::fs::read(p).map_err(|e| CliError::io(p, e))?;
            h.update([0]);
            h.update(Sha256::digest(&bytes));
        }
        Ok(Provenance {
            tool: "gamecx".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_hash: hex::encode(h.finalize()),
            seed,
        })
    }

    /// Comment lines for the top of a CSV file.
    pub fn csv_header(&self) -> String {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        format!(
            "# {} {} {}\n# config_hash={}\n# seed={}\n",
            self.tool, self.version, self.command, self.config_hash, seed
        )
    }
}

/// Path of the provenance sidecar written next to a JSON array file.
pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".provenance.json");
    s.into()
}
