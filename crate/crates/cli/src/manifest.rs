use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::settings::Settings;

pub const SCHEMA: &str = "hardy-run-manifest/1";

/// Residual and tolerance of one numerical stage.
#[derive(Debug, Clone, Serialize)]
pub struct Stage {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
    pub iterations: usize,
}

/// What a subcommand produced.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub files: Vec<String>,
    pub stages: Vec<Stage>,
    pub seeds: Vec<u64>,
    pub failures: Vec<String>,
}

impl RunOutput {
    pub fn stage(&mut self, name: impl Into<String>, residual: f64, tol: f64, iterations: usize) {
        self.stages.push(Stage { name: name.into(), residual, tol, iterations });
    }

    pub fn fail(&mut self, what: impl Into<String>) {
        self.failures.push(what.into());
    }

    /// Creates `name` in `dir`, records it and hands the writer to `write`.
    pub fn write_file(
        &mut self,
        dir: &Path,
        name: &str,
        write: impl FnOnce(BufWriter<File>) -> hardy_core::Result<()>,
    ) -> Result<()> {
        let path = dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        write(BufWriter::new(file)).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub schema: &'static str,
    pub subcommand: &'a str,
    pub version: &'static str,
    /// Settings as resolved from the config file and flags; usable as `--config`.
    pub config: &'a Settings,
    pub config_hash: String,
    pub seeds: &'a [u64],
    pub wall_time_seconds: f64,
    pub stages: &'a [Stage],
    pub outputs: &'a [String],
    pub failures: &'a [String],
}

pub fn config_hash(settings: &Settings) -> String {
    let bytes = serde_json::to_vec(settings).expect("settings serialize");
    hex::encode(Sha256::digest(&bytes))
}
