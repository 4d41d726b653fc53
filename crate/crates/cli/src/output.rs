//! CSV and JSON emission.

use std::path::Path;

use serde::Serialize;

use crate::pipeline::{FciRecord, MethodSummary, NoiseRecord, ScanRecord};
use crate::CliError;

pub const SCAN_HEADER: [&str; 11] = [
    "geometry",
    "r_angstrom",
    "method",
    "energy",
    "fci_energy",
    "error_hartree",
    "error_kcal",
    "n_params",
    "iterations",
    "converged",
    "wall_time_s",
];

pub const NOISE_HEADER: [&str; 10] = [
    "geometry",
    "r_angstrom",
    "method",
    "sd",
    "mean_energy",
    "std_energy",
    "mean_error_hartree",
    "mean_error_kcal",
    "n_samples",
    "seed",
];

pub const FCI_HEADER: [&str; 5] = ["geometry", "r_angstrom", "hf_energy", "fci_energy", "sector_dim"];

/// Twelve significant digits.
pub fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

fn opt(x: Option<f64>, f: fn(f64) -> String) -> String {
    x.map(f).unwrap_or_default()
}

fn r_fmt(x: f64) -> String {
    format!("{x:.3}")
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output(format!("{}: {e}", path.display()))
}

fn write_rows(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_scan_csv(path: &Path, records: &[ScanRecord]) -> Result<(), CliError> {
    let rows = records
        .iter()
        .map(|r| {
            vec![
                r.geometry.clone(),
                opt(r.r_angstrom, r_fmt),
                r.method.clone(),
                sig12(r.energy),
                opt(r.fci_energy, sig12),
                opt(r.error_hartree, sig12),
                opt(r.error_kcal, sig12),
                r.n_params.to_string(),
                r.iterations.to_string(),
                r.converged.to_string(),
                format!("{:.3}", r.wall_time_s),
            ]
        })
        .collect();
    write_rows(path, &SCAN_HEADER, rows)
}

pub fn write_noise_csv(path: &Path, records: &[NoiseRecord]) -> Result<(), CliError> {
    let rows = records
        .iter()
        .map(|r| {
            vec![
                r.geometry.clone(),
                opt(r.r_angstrom, r_fmt),
                r.method.clone(),
                format!("{:e}", r.sd),
                sig12(r.mean_energy),
                sig12(r.std_energy),
                sig12(r.mean_error_hartree),
                sig12(r.mean_error_kcal),
                r.n_samples.to_string(),
                r.seed.to_string(),
            ]
        })
        .collect();
    write_rows(path, &NOISE_HEADER, rows)
}

pub fn write_fci_csv(path: &Path, records: &[FciRecord]) -> Result<(), CliError> {
    let rows = records
        .iter()
        .map(|r| {
            vec![
                r.geometry.clone(),
                opt(r.r_angstrom, r_fmt),
                sig12(r.hf_energy),
                sig12(r.fci_energy),
                r.sector_dim.to_string(),
            ]
        })
        .collect();
    write_rows(path, &FCI_HEADER, rows)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

#[derive(Serialize)]
pub struct Summary<'a> {
    pub seed: u64,
    pub geometries: usize,
    pub methods: &'a [MethodSummary],
}
