use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use grwflash::state::GridSpec;
use grwflash::units::PhysicalParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Record written next to the outputs of every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// Command-line overrides as given.
    pub flags: Vec<String>,
    pub params: PhysicalParams,
    pub grids: Vec<GridSpec>,
    pub master_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_traj: Option<usize>,
    pub code_version: String,
    pub params_hash: String,
    /// Effective configuration with defaults filled in.
    pub config: ExperimentConfig,
    /// Output files, relative to the manifest.
    pub outputs: Vec<String>,
    /// Seconds since the Unix epoch. The only time-dependent field.
    pub created_unix: u64,
}

#[derive(Serialize)]
struct HashInput<'a> {
    params: &'a PhysicalParams,
    grids: &'a [GridSpec],
}

/// SHA-256 of the canonical JSON of `params` and `grids`, hex encoded.
pub fn params_hash(params: &PhysicalParams, grids: &[GridSpec]) -> String {
    let json = serde_json::to_vec(&HashInput { params, grids }).expect("plain data serialises");
    Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        subcommand: &str,
        flags: Vec<String>,
        params: PhysicalParams,
        grids: Vec<GridSpec>,
        master_seed: u64,
        n_traj: Option<usize>,
        config: ExperimentConfig,
        outputs: Vec<String>,
    ) -> Self {
        let params_hash = params_hash(&params, &grids);
        RunManifest {
            subcommand: subcommand.to_string(),
            flags,
            params,
            grids,
            master_seed,
            n_traj,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            params_hash,
            config,
            outputs,
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let p = PhysicalParams::dimensionless(1.0, 0.1, 1.0, 1);
        let g = vec![GridSpec::centered(1, 16, 0.25, 0.0).unwrap()];
        let h = params_hash(&p, &g);
        assert_eq!(h.len(), 64);
        assert_eq!(h, params_hash(&p.clone(), &g.clone()));
        let mut q = p.clone();
        q.lambda = 1.0 + 1e-15;
        assert_ne!(h, params_hash(&q, &g));
    }
}
