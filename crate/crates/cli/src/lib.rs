//! `fqh` command-line runner: loads a run configuration, executes one experiment and
//! writes `<name>.csv`, `<name>.meta.json` and `<name>.svg` into the output directory.

pub mod commands;
pub mod config;
pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use crate::commands::Artifact;
use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "fqh", version, about = "Hard-core photon lattice experiments in a synthetic magnetic field")]
pub struct Cli {
    /// TOML run configuration; the shipped defaults are used when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set flux.phi=0.25`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = "out", global = true)]
    pub out: PathBuf,
    /// Worker threads for flux and parameter sweeps (0: all cores).
    #[arg(long, default_value_t = 0, global = true)]
    pub jobs: usize,
    /// Seed for the randomized self-checks.
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Two-site Rabi chevron.
    Rabi,
    /// Single photon around one plaquette versus flux.
    AbLoop,
    /// Centroid drift of a photon launched from the top edge.
    Deflect,
    /// Single-photon spectrum versus flux from site-resolved dynamics.
    Butterfly,
    /// Many-body gap versus flux and trap depth.
    GapMap,
    /// Adiabatic preparation at `flux.phi`.
    Prepare,
    /// Reversal fidelity versus flux.
    FidelitySweep,
    /// Density correlations of ground states versus flux.
    G2,
    /// Ground-state bond currents.
    Currents,
    /// Density response to boundary traps.
    Defects,
    /// Bulk density versus flux and its slope.
    Streda,
    /// Check the configuration and print a report.
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Rabi => "rabi",
            Command::AbLoop => "ab-loop",
            Command::Deflect => "deflect",
            Command::Butterfly => "butterfly",
            Command::GapMap => "gap-map",
            Command::Prepare => "prepare",
            Command::FidelitySweep => "fidelity-sweep",
            Command::G2 => "g2",
            Command::Currents => "currents",
            Command::Defects => "defects",
            Command::Streda => "streda",
            Command::Validate => "validate",
        }
    }
}

/// Runs one command; returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let cfg = RunConfig::load(cli.config.as_deref(), &cli.overrides)?;
    let report = cfg.validate();
    if cli.command == Command::Validate {
        println!("{report}");
        if !report.is_valid() {
            bail!("configuration is invalid");
        }
        let shift = commands::gauge_check(&cfg, cli.seed)?;
        println!("gauge self-check: max eigenvalue shift {shift:.3e} MHz");
        if shift > 1e-8 {
            bail!("spectrum changed under a gauge transformation");
        }
        return Ok(Vec::new());
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if !report.is_valid() {
        bail!("configuration is invalid:\n{report}");
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build()?;
    let start = Instant::now();
    let artifacts = pool.install(|| dispatch(cli.command, &cfg))?;
    let elapsed = start.elapsed().as_secs_f64();
    let mut written = Vec::new();
    for mut a in artifacts {
        a.record.set_meta("command", cli.command.name());
        a.record.set_meta("config", cfg.to_json());
        a.record.set_meta("seed", cli.seed);
        a.record.set_meta("version", env!("CARGO_PKG_VERSION"));
        a.record.set_meta("elapsed_s", elapsed);
        written.extend(write_artifact(&a, &cli.out)?);
    }
    Ok(written)
}

fn dispatch(command: Command, cfg: &RunConfig) -> Result<Vec<Artifact>> {
    match command {
        Command::Rabi => commands::rabi(cfg),
        Command::AbLoop => commands::ab_loop(cfg),
        Command::Deflect => commands::deflect(cfg),
        Command::Butterfly => commands::butterfly(cfg),
        Command::GapMap => commands::gap_map(cfg),
        Command::Prepare => commands::prepare(cfg),
        Command::FidelitySweep => commands::fidelity(cfg),
        Command::G2 => {
            commands::require_bulk(cfg)?;
            commands::g2(cfg)
        }
        Command::Currents => {
            commands::require_bulk(cfg)?;
            commands::currents(cfg)
        }
        Command::Defects => commands::defects(cfg),
        Command::Streda => {
            commands::require_bulk(cfg)?;
            commands::streda(cfg)
        }
        Command::Validate => unreachable!("handled before dispatch"),
    }
}

fn write_artifact(a: &Artifact, dir: &Path) -> Result<Vec<PathBuf>> {
    let (csv, meta) = a.record.write(dir).with_context(|| format!("writing {}", dir.display()))?;
    let mut out = vec![csv, meta];
    if let Some(svg) = &a.svg {
        let path = dir.join(format!("{}.svg", a.record.name));
        fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
        out.push(path);
    }
    Ok(out)
}

/// Summary printed after a successful run.
pub fn summary(command: Command, files: &[PathBuf]) -> String {
    let names: Vec<String> = files.iter().map(|p| p.display().to_string()).collect();
    json!({"command": command.name(), "files": names}).to_string()
}
