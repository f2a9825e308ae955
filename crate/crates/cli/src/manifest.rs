//! Provenance record written next to every payload.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub seed: Option<u64>,
    pub core_version: &'static str,
    pub cli_version: &'static str,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    /// SHA-256 of the payload bytes, lowercase hex.
    pub output_digest: String,
}

impl RunManifest {
    pub fn new(argv: &[String], seed: Option<u64>, payload: &[u8]) -> Self {
        let digest = Sha256::digest(payload);
        RunManifest {
            command_line: argv.to_vec(),
            seed,
            core_version: bperc_core::VERSION,
            cli_version: env!("CARGO_PKG_VERSION"),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            output_digest: digest.iter().map(|b| format!("{b:02x}")).collect(),
        }
    }
}
