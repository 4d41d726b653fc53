//! Command-line driver: scans, screening reports, ansatz export, FCI,
//! noise studies and FCIDUMP checks.
//!
//! Exit codes: 0 success, 2 missing or unusable input, 3 a computation or
//! parse failure, 64 bad command line.

pub mod config;
pub mod output;
pub mod pipeline;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use compass_core::fcidump::parse_fcidump;
use thiserror::Error;

use crate::config::{NoiseSettings, RunConfig};
use crate::output::*;
use crate::pipeline::*;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Output(String),
    #[error("{geometry}: {stage} failed: {message}")]
    Compute { geometry: String, stage: String, message: String },
    #[error("{0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Output(_) => 2,
            CliError::Compute { .. } | CliError::Check(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "compass", version, about = "Screened UCC ansatz construction and VQE scans")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long = "output-dir", global = true)]
    pub output_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build, optimize and compare against FCI for every geometry.
    Scan {
        /// Use ansätze written by `ansatz` instead of screening again.
        #[arg(long)]
        from_ansatz: Option<PathBuf>,
    },
    /// Report screened doubles and attached scatterers.
    Screen,
    /// Write the built ansätze as JSON without optimizing.
    Ansatz,
    /// Exact ground energies only.
    Fci,
    /// Parameter-noise studies on stored converged results.
    Noise {
        /// Converged results written by `scan` (default: <output-dir>/converged.json).
        #[arg(long)]
        from: Option<PathBuf>,
    },
    /// Parse FCIDUMP files and report integral diagnostics.
    FcidumpCheck { files: Vec<PathBuf> },
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Input("this command needs --config <file>".into()))?;
    let mut c = RunConfig::load(path)?;
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    if let Some(t) = cli.threads {
        c.threads = Some(t);
    }
    if let Some(o) = &cli.output_dir {
        let cwd = std::env::current_dir().map_err(|e| CliError::Output(e.to_string()))?;
        c.output_dir = cwd.join(o);
    }
    Ok(c)
}

fn prepare_output(c: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = c.output_path();
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError> {
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Input(format!("thread pool: {e}")))?
            .install(f),
    }
}

fn print_records(records: &[ScanRecord]) {
    for r in records {
        let err = r.error_kcal.map(|e| format!("{e:+.3e} kcal/mol")).unwrap_or_default();
        println!("{:<22} {:<18} E={:.10} params={:<4} {err}", r.geometry, r.method, r.energy, r.n_params);
    }
}

fn cmd_scan(c: &RunConfig, from_ansatz: Option<&Path>) -> Result<(), CliError> {
    let stored: Option<Vec<StoredAnsatz>> = from_ansatz.map(read_json).transpose()?;
    let out = with_threads(c.threads, || run_scan(c, stored.as_deref()))?;
    let dir = prepare_output(c)?;
    write_scan_csv(&dir.join("scan.csv"), &out.records)?;
    let geometries = out.records.iter().map(|r| &r.geometry).collect::<std::collections::BTreeSet<_>>();
    write_json(
        &dir.join("summary.json"),
        &Summary { seed: c.seed, geometries: geometries.len(), methods: &out.summary },
    )?;
    write_json(&dir.join("converged.json"), &out.converged)?;
    if c.noise.is_some() {
        write_noise_csv(&dir.join("noise.csv"), &out.noise)?;
    }
    print_records(&out.records);
    for s in &out.summary {
        println!("{:<18} NPE={:.4e} kcal/mol  avg={:.4e} kcal/mol", s.method, s.npe_kcal, s.avg_kcal);
    }
    Ok(())
}

fn cmd_screen(c: &RunConfig) -> Result<(), CliError> {
    let reports = with_threads(c.threads, || screen(c))?;
    let dir = prepare_output(c)?;
    write_json(&dir.join("screen.json"), &reports)?;
    for r in &reports {
        println!("{} {} (E_HF = {:.10})", r.geometry, r.method, r.run.hf_energy);
        for b in &r.run.blocks {
            println!("  {:>3} {:<28} dE={:.6e} theta={:+.6}", b.block_index, b.tau.excitation.to_string(), b.tau.delta_e, b.tau.theta_opt);
            for s in &b.scatterers {
                println!("        + {:<40} dE={:.6e}", s.scatterer.to_string(), s.delta_e);
            }
        }
        println!("  parameters: {}", r.run.ansatz.n_params());
    }
    Ok(())
}

fn cmd_ansatz(c: &RunConfig) -> Result<(), CliError> {
    let ansatze = with_threads(c.threads, || build_ansatze(c))?;
    let dir = prepare_output(c)?;
    write_json(&dir.join("ansatze.json"), &ansatze)?;
    for a in &ansatze {
        println!("{:<22} {:<18} params={}", a.geometry, a.method, a.ansatz.n_params());
    }
    Ok(())
}

fn cmd_fci(c: &RunConfig) -> Result<(), CliError> {
    let records = with_threads(c.threads, || fci_only(c))?;
    let dir = prepare_output(c)?;
    write_fci_csv(&dir.join("fci.csv"), &records)?;
    for r in &records {
        println!("{:<22} E_HF={:.10} E_FCI={:.10} dim={}", r.geometry, r.hf_energy, r.fci_energy, r.sector_dim);
    }
    Ok(())
}

fn cmd_noise(c: &RunConfig, from: Option<&Path>) -> Result<(), CliError> {
    let default = c.output_path().join("converged.json");
    let converged: Vec<ConvergedResult> = read_json(from.unwrap_or(&default))?;
    let settings = c.noise.clone().unwrap_or_else(NoiseSettings::default);
    let records = with_threads(c.threads, || {
        let geoms = geometries_for(&converged)?;
        run_noise(&converged, &settings, c.seed, &geoms)
    })?;
    let dir = prepare_output(c)?;
    write_noise_csv(&dir.join("noise.csv"), &records)?;
    for r in &records {
        println!("{:<22} {:<18} sd={:e} mean error={:+.4e} kcal/mol std={:.3e} Ha", r.geometry, r.method, r.sd, r.mean_error_kcal, r.std_energy);
    }
    Ok(())
}

fn cmd_fcidump_check(files: &[PathBuf]) -> Result<(), CliError> {
    if files.is_empty() {
        return Err(CliError::Input("no files given".into()));
    }
    let mut failed = Vec::new();
    for f in files {
        let text = std::fs::read_to_string(f)
            .map_err(|e| CliError::Input(format!("{}: {e}", f.display())))?;
        match parse_fcidump(&text) {
            Err(e) => {
                println!("{}: {e}", f.display());
                failed.push(f.display().to_string());
            }
            Ok(m) => {
                let diags = m.diagnostics();
                println!(
                    "{}: NORB={} NELEC={} MS2={} e_core={:.10} symmetry residual={:.1e} diagnostics={}",
                    f.display(),
                    m.n_spatial,
                    m.n_electrons,
                    m.ms2,
                    m.e_core,
                    m.symmetry_residual(),
                    diags.len()
                );
                for d in &diags {
                    println!("  {d}");
                }
                if !diags.is_empty() {
                    failed.push(f.display().to_string());
                }
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(format!("{} file(s) failed: {}", failed.len(), failed.join(", "))))
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Command::FcidumpCheck { files } = &cli.command {
        return cmd_fcidump_check(files);
    }
    let c = load_config(cli)?;
    match &cli.command {
        Command::Scan { from_ansatz } => cmd_scan(&c, from_ansatz.as_deref()),
        Command::Screen => cmd_screen(&c),
        Command::Ansatz => cmd_ansatz(&c),
        Command::Fci => cmd_fci(&c),
        Command::Noise { from } => cmd_noise(&c, from.as_deref()),
        Command::FcidumpCheck { .. } => unreachable!(),
    }
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
