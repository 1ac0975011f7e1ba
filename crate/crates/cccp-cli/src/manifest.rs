//! Run manifest: a JSON record of what a solve ran, written next to the
//! artifacts so a run can be reproduced exactly (modulo timing columns).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverSettings {
    pub max_iters: usize,
    pub step_tol: f64,
    pub objective_tol: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub app: String,
    pub inputs: Vec<PathBuf>,
    pub seed: u64,
    pub config: SolverSettings,
    pub output_dir: PathBuf,
}

impl RunManifest {
    pub fn new(
        app: &str,
        inputs: Vec<PathBuf>,
        seed: u64,
        config: SolverSettings,
        output_dir: PathBuf,
    ) -> Self {
        Self { schema_version: SCHEMA_VERSION, app: app.to_string(), inputs, seed, config, output_dir }
    }

    /// Schema check plus existence of every referenced input.
    pub fn validate(&self) -> Result<(), String> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        for p in &self.inputs {
            if !p.exists() {
                return Err(format!("input path does not exist: {}", p.display()));
            }
        }
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(dir.join("run_manifest.json"), text + "\n")
    }
}
