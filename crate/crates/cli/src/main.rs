//! `hardy`: batch driver writing CSV/JSON reports and a run manifest.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod manifest;
mod settings;

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use manifest::{config_hash, Manifest, RunOutput, SCHEMA};
use settings::Settings;

#[derive(Parser)]
#[command(name = "hardy", version, about = "Green's functions and Hardy weights on finite boxes of Z^d")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the Green's function, or evaluate the free-field oracle.
    Green(Settings),
    /// Optimal Hardy weight, region averages and the spectral certificate.
    Hardy(Settings),
    /// Monte Carlo statistics over i.i.d. coefficient fields.
    Ensemble(Settings),
    /// Rellich weights, their scaling and the inequality residuals.
    Rellich(Settings),
    /// Transition kernel, symbol grid check and leading asymptotics.
    Fourier(Settings),
}

fn run(name: &str, settings: Settings, command: fn(&Settings, &Path) -> Result<RunOutput>) -> Result<Vec<String>> {
    let settings = settings.resolve()?;
    if let Some(n) = settings.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    let dir = settings.output_dir();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let start = Instant::now();
    let mut out = command(&settings, &dir)?;
    let manifest = Manifest {
        schema: SCHEMA,
        subcommand: name,
        version: env!("CARGO_PKG_VERSION"),
        config: &settings,
        config_hash: config_hash(&settings),
        seeds: &out.seeds,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        stages: &out.stages,
        outputs: &out.files,
        failures: &out.failures,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    out.files.push("manifest.json".into());
    for f in &out.files {
        println!("wrote {}", dir.join(f).display());
    }
    Ok(out.failures)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Green(s) => run("green", s, commands::green),
        Command::Hardy(s) => run("hardy", s, commands::hardy),
        Command::Ensemble(s) => run("ensemble", s, commands::ensemble),
        Command::Rellich(s) => run("rellich", s, commands::rellich),
        Command::Fourier(s) => run("fourier", s, commands::fourier),
    };
    match result {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            for f in &failures {
                eprintln!("failed: {f}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
