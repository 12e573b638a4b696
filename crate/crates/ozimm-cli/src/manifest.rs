//! Run manifests: a JSON sidecar written next to every CSV capturing the
//! command, the full parameter set and wall-clock timings, so a run can be
//! reproduced exactly from its manifest.

use std::path::Path;

use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: serde_json::Value,
    pub seed: Option<u64>,
    pub threads: usize,
    pub version: String,
    pub wall_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, args: serde_json::Value, seed: Option<u64>, threads: usize) -> Self {
        Self {
            command: command.to_string(),
            args,
            seed,
            threads,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_seconds: 0.0,
        }
    }

    /// Write alongside the CSV at `csv_path`.
    pub fn write_next_to(&self, csv_path: &Path) -> anyhow::Result<()> {
        let mut path = csv_path.as_os_str().to_owned();
        path.push(".manifest.json");
        let body = serde_json::to_string_pretty(self)?;
        std::fs::write(std::path::PathBuf::from(path), body)?;
        Ok(())
    }
}
