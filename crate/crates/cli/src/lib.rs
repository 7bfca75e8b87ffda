//! Command-line driver for the `phasegauge` library.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure,
//! 3 precondition violation.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use phasegauge::ErrorClass;

use crate::commands::Output;
use crate::config::{parse_pairs, split_pair, Format, RunConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] phasegauge::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Core(e) => match e.class() {
                ErrorClass::Numerical => 2,
                ErrorClass::Precondition => 3,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "phasegauge",
    version,
    about = "Phase-space quantization experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format (json or csv); overrides the `format` key.
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Seed for sampled points; overrides the `seed` key.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override a configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
    /// Worker threads for data-parallel loops. Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Include wall time in the JSON report.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Eigenvalues and eigenstates of the configured Hamiltonian.
    Solve,
    /// Lift an eigenstate to phase space with the generating function `f`.
    Lift,
    /// Phase-space Schrödinger and commutator residuals for each entry of `f_list`.
    Residual,
    /// Cocycle table, quadruple check and B-field on a patch cover.
    Cocycle,
    /// Patches of the cover and overlap counts.
    Cover,
    /// Gauge classification of the generating function `f`.
    Gauge,
    /// Comparison of an eigenstate density with the WKB density.
    Wkb,
    /// Orbit areas and state counts at `orbit_energies`.
    Orbit,
    /// Classical trajectory from `(flow_q0, flow_p0)`.
    Flow,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Lift => "lift",
            Command::Residual => "residual",
            Command::Cocycle => "cocycle",
            Command::Cover => "cover",
            Command::Gauge => "gauge",
            Command::Wkb => "wkb",
            Command::Orbit => "orbit",
            Command::Flow => "flow",
        }
    }
}

/// Merges the config file, `--set` overrides and dedicated flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        cfg.apply(&parse_pairs(&text)?)?;
    }
    for s in &cli.set {
        let (k, v) = split_pair(s)
            .ok_or_else(|| CliError::Config(format!("--set expects key=value, got {s:?}")))?;
        cfg.set(&k, &v)?;
    }
    if let Some(f) = &cli.format {
        cfg.set("format", f)?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// Runs one command and renders its report.
pub fn execute(command: Command, cfg: &RunConfig, timing: bool) -> Result<String, CliError> {
    let validated = cfg.validate()?;
    let started = Instant::now();
    let run = match command {
        Command::Solve => commands::solve,
        Command::Lift => commands::lift_cmd,
        Command::Residual => commands::residual,
        Command::Cocycle => commands::cocycle,
        Command::Cover => commands::cover,
        Command::Gauge => commands::gauge,
        Command::Wkb => commands::wkb,
        Command::Orbit => commands::orbit,
        Command::Flow => commands::flow,
    };
    let Output { results, table } = run(cfg, &validated)?;
    let elapsed = started.elapsed().as_secs_f64();
    Ok(match cfg.format {
        Format::Csv => table.render(),
        Format::Json => {
            let mut report = json!({
                "command": command.name(),
                "config": cfg,
                "results": results,
                "schema_version": SCHEMA_VERSION,
                "version": concat!("phasegauge ", env!("CARGO_PKG_VERSION")),
            });
            if timing {
                report["wall_time_s"] = Value::from(elapsed);
            }
            let mut s = serde_json::to_string_pretty(&report).expect("report serializes");
            s.push('\n');
            s
        }
    })
}

fn run_cli(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve_config(cli)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let text = execute(cli.command, &cfg, cli.timing)?;
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => match std::io::stdout().write_all(text.as_bytes()) {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
            r => r?,
        },
    }
    Ok(())
}

/// Parses arguments, runs, prints diagnostics to stderr and returns the
/// exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run_cli(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("phasegauge: {e}");
            e.exit_code()
        }
    }
}
