//! Per-geometry work: Hamiltonian, ansatz, VQE, oracle, noise.

use std::path::{Path, PathBuf};
use std::time::Instant;

use compass_core::compass::{self, Ansatz, CompassRun};
use compass_core::fcidump::{apply_frozen_core, parse_fcidump, MoleculeIntegrals};
use compass_core::noise::noise_study;
use compass_core::oracle::{error_metrics, fci_ground_energy, HARTREE_TO_KCAL};
use compass_core::pauli_jw::build_qubit_hamiltonian;
use compass_core::simulator::{hf_state, sector_basis, Hamiltonian, StateVector};
use compass_core::vqe;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{MethodSpec, NoiseSettings, RunConfig};
use crate::CliError;

/// A parsed fixture with its active-space Hamiltonian.
pub struct Geometry {
    pub label: String,
    pub r_angstrom: Option<f64>,
    pub path: PathBuf,
    pub frozen: Vec<usize>,
    pub integrals: MoleculeIntegrals,
    pub hamiltonian: Hamiltonian,
}

impl Geometry {
    pub fn reference(&self) -> StateVector {
        hf_state(self.hamiltonian.n_qubits(), self.integrals.n_electrons)
            .expect("validated when the Hamiltonian was built")
    }

    fn compute_err(&self, stage: &str, e: impl std::fmt::Display) -> CliError {
        CliError::Compute { geometry: self.label.clone(), stage: stage.into(), message: e.to_string() }
    }
}

/// `R=` value from a fixture's comment lines.
pub fn bond_length(label: &str) -> Option<f64> {
    label
        .split_whitespace()
        .find_map(|tok| tok.strip_prefix("R="))
        .and_then(|v| v.parse().ok())
}

fn recommended_frozen(label: &str) -> Option<Vec<usize>> {
    let line = label.lines().find(|l| l.contains("frozen"))?;
    let list = line.split('=').nth(1)?.trim();
    serde_json::from_str(list).ok()
}

pub fn load_geometry(path: &Path, frozen: Option<&[usize]>) -> Result<Geometry, CliError> {
    let label = path.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default();
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let stage_err = |stage: &str, e: compass_core::Error| CliError::Compute {
        geometry: label.clone(),
        stage: stage.into(),
        message: e.to_string(),
    };
    let raw = parse_fcidump(&text).map_err(|e| stage_err("parse", e))?;
    let frozen = match frozen {
        Some(f) => f.to_vec(),
        None => recommended_frozen(&raw.source_label).unwrap_or_default(),
    };
    let integrals = apply_frozen_core(&raw, &frozen).map_err(|e| stage_err("frozen core", e))?;
    let hamiltonian =
        Hamiltonian::new(build_qubit_hamiltonian(&integrals), integrals.n_electrons, integrals.ms2)
            .map_err(|e| stage_err("hamiltonian", e))?;
    Ok(Geometry {
        r_angstrom: bond_length(&raw.source_label),
        label,
        path: path.to_path_buf(),
        frozen,
        integrals,
        hamiltonian,
    })
}

/// Loads every fixture; geometry order is bond length, then label.
pub fn load_all(config: &RunConfig) -> Result<Vec<Geometry>, CliError> {
    let paths = config.resolve_fixtures()?;
    let mut geoms = paths
        .par_iter()
        .map(|p| load_geometry(p, config.frozen.as_deref()))
        .collect::<Result<Vec<_>, _>>()?;
    geoms.sort_by(|a, b| {
        a.r_angstrom
            .unwrap_or(f64::INFINITY)
            .total_cmp(&b.r_angstrom.unwrap_or(f64::INFINITY))
            .then_with(|| a.label.cmp(&b.label))
    });
    Ok(geoms)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub geometry: String,
    pub r_angstrom: Option<f64>,
    pub method: String,
    pub energy: f64,
    pub fci_energy: Option<f64>,
    pub error_hartree: Option<f64>,
    pub error_kcal: Option<f64>,
    pub n_params: usize,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time_s: f64,
}

/// A converged VQE run, enough to rebuild and perturb it later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergedResult {
    pub geometry: String,
    pub r_angstrom: Option<f64>,
    pub fixture: PathBuf,
    pub frozen: Vec<usize>,
    pub method: String,
    pub energy: f64,
    pub fci_energy: f64,
    pub params: Vec<f64>,
    pub ansatz: Ansatz,
}

/// A stored ansatz for one (geometry, method) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredAnsatz {
    pub geometry: String,
    pub method: String,
    pub ansatz: Ansatz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRecord {
    pub geometry: String,
    pub r_angstrom: Option<f64>,
    pub method: String,
    pub sd: f64,
    pub mean_energy: f64,
    pub std_energy: f64,
    pub mean_error_hartree: f64,
    pub mean_error_kcal: f64,
    pub n_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub geometries: usize,
    pub min_params: usize,
    pub max_params: usize,
    pub npe_hartree: f64,
    pub avg_hartree: f64,
    pub npe_kcal: f64,
    pub avg_kcal: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ScanOutput {
    pub records: Vec<ScanRecord>,
    pub summary: Vec<MethodSummary>,
    pub converged: Vec<ConvergedResult>,
    pub noise: Vec<NoiseRecord>,
}

fn build_ansatz(
    g: &Geometry,
    method: &MethodSpec,
    stored: Option<&[StoredAnsatz]>,
) -> Result<Ansatz, CliError> {
    let label = method.label();
    if let Some(stored) = stored {
        return stored
            .iter()
            .find(|s| s.geometry == g.label && s.method == label)
            .map(|s| s.ansatz.clone())
            .ok_or_else(|| CliError::Input(format!("no stored ansatz for {} / {label}", g.label)));
    }
    match method {
        MethodSpec::Compass { .. } => {
            let cfg = method.compass().expect("compass method");
            let run = compass::run(&g.hamiltonian, &cfg).map_err(|e| g.compute_err("screening", e))?;
            Ok(run.ansatz)
        }
        MethodSpec::Uccsd => compass::uccsd_ansatz(g.integrals.n_spatial, g.integrals.n_electrons)
            .map_err(|e| g.compute_err("ansatz", e)),
        MethodSpec::Fci => unreachable!("FCI has no ansatz"),
    }
}

fn fci(g: &Geometry) -> Result<f64, CliError> {
    fci_ground_energy(&g.hamiltonian.pauli, g.integrals.n_electrons, g.integrals.ms2)
        .map_err(|e| g.compute_err("fci", e))
}

fn run_geometry(
    g: &Geometry,
    config: &RunConfig,
    stored: Option<&[StoredAnsatz]>,
) -> Result<(Vec<ScanRecord>, Vec<ConvergedResult>), CliError> {
    let t0 = Instant::now();
    let e_fci = fci(g)?;
    let fci_time = t0.elapsed().as_secs_f64();
    let reference = g.reference();
    let mut records = Vec::new();
    let mut converged = Vec::new();
    for method in &config.methods {
        let label = method.label();
        if let MethodSpec::Fci = method {
            records.push(ScanRecord {
                geometry: g.label.clone(),
                r_angstrom: g.r_angstrom,
                method: label,
                energy: e_fci,
                fci_energy: Some(e_fci),
                error_hartree: Some(0.0),
                error_kcal: Some(0.0),
                n_params: 0,
                iterations: 0,
                converged: true,
                wall_time_s: fci_time,
            });
            continue;
        }
        let t = Instant::now();
        let ansatz = build_ansatz(g, method, stored)?;
        let circuit = ansatz.circuit().map_err(|e| g.compute_err("ansatz", e))?;
        let r = vqe::minimize(&g.hamiltonian, &reference, &circuit, &ansatz.initial_params, &config.vqe)
            .map_err(|e| g.compute_err("vqe", e))?;
        let err = r.energy - e_fci;
        records.push(ScanRecord {
            geometry: g.label.clone(),
            r_angstrom: g.r_angstrom,
            method: label.clone(),
            energy: r.energy,
            fci_energy: Some(e_fci),
            error_hartree: Some(err),
            error_kcal: Some(err * HARTREE_TO_KCAL),
            n_params: ansatz.n_params(),
            iterations: r.iterations,
            converged: r.converged,
            wall_time_s: t.elapsed().as_secs_f64(),
        });
        converged.push(ConvergedResult {
            geometry: g.label.clone(),
            r_angstrom: g.r_angstrom,
            fixture: g.path.clone(),
            frozen: g.frozen.clone(),
            method: label,
            energy: r.energy,
            fci_energy: e_fci,
            params: r.params,
            ansatz,
        });
    }
    Ok((records, converged))
}

pub fn summarize(records: &[ScanRecord], methods: &[MethodSpec]) -> Vec<MethodSummary> {
    methods
        .iter()
        .filter_map(|m| {
            let label = m.label();
            let rows: Vec<&ScanRecord> = records.iter().filter(|r| r.method == label).collect();
            let errors: Vec<f64> = rows.iter().filter_map(|r| r.error_hartree).collect();
            let metrics = error_metrics(&errors).ok()?;
            Some(MethodSummary {
                method: label,
                geometries: rows.len(),
                min_params: rows.iter().map(|r| r.n_params).min().unwrap_or(0),
                max_params: rows.iter().map(|r| r.n_params).max().unwrap_or(0),
                npe_hartree: metrics.npe_hartree,
                avg_hartree: metrics.avg_hartree,
                npe_kcal: metrics.npe_kcal,
                avg_kcal: metrics.avg_kcal,
            })
        })
        .collect()
}

/// The full scan: every geometry, every method, then optional noise studies.
pub fn run_scan(
    config: &RunConfig,
    stored: Option<&[StoredAnsatz]>,
) -> Result<ScanOutput, CliError> {
    let geoms = load_all(config)?;
    let per_geometry = geoms
        .par_iter()
        .map(|g| run_geometry(g, config, stored))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = ScanOutput::default();
    for (records, converged) in per_geometry {
        out.records.extend(records);
        out.converged.extend(converged);
    }
    out.summary = summarize(&out.records, &config.methods);
    if let Some(noise) = &config.noise {
        out.noise = run_noise(&out.converged, noise, config.seed, &geoms)?;
    }
    Ok(out)
}

/// Noise studies for every converged result. Each (geometry, method, sd)
/// draws from the same seed so methods see identical random streams.
pub fn run_noise(
    converged: &[ConvergedResult],
    settings: &NoiseSettings,
    seed: u64,
    geoms: &[Geometry],
) -> Result<Vec<NoiseRecord>, CliError> {
    let jobs: Vec<(&ConvergedResult, f64)> =
        converged.iter().flat_map(|c| settings.sds.iter().map(move |&sd| (c, sd))).collect();
    jobs.par_iter()
        .map(|&(c, sd)| {
            let g = geoms.iter().find(|g| g.label == c.geometry).ok_or_else(|| {
                CliError::Input(format!("geometry {} not loaded", c.geometry))
            })?;
            let circuit = c.ansatz.circuit().map_err(|e| g.compute_err("noise", e))?;
            let s = noise_study(
                &g.hamiltonian,
                &g.reference(),
                &circuit,
                &c.params,
                sd,
                settings.n_samples,
                seed,
            )
            .map_err(|e| g.compute_err("noise", e))?;
            let err = s.mean - c.fci_energy;
            Ok(NoiseRecord {
                geometry: c.geometry.clone(),
                r_angstrom: c.r_angstrom,
                method: c.method.clone(),
                sd,
                mean_energy: s.mean,
                std_energy: s.std,
                mean_error_hartree: err,
                mean_error_kcal: err * HARTREE_TO_KCAL,
                n_samples: s.n_samples,
                seed,
            })
        })
        .collect()
}

/// Reloads the geometries a set of stored results refers to.
pub fn geometries_for(converged: &[ConvergedResult]) -> Result<Vec<Geometry>, CliError> {
    let mut seen: Vec<(&Path, &[usize])> = Vec::new();
    for c in converged {
        if !seen.iter().any(|(p, _)| *p == c.fixture.as_path()) {
            seen.push((c.fixture.as_path(), &c.frozen));
        }
    }
    seen.par_iter().map(|(p, f)| load_geometry(p, Some(f))).collect()
}

/// Every ansatz the config asks for, without optimizing.
pub fn build_ansatze(config: &RunConfig) -> Result<Vec<StoredAnsatz>, CliError> {
    let geoms = load_all(config)?;
    let nested = geoms
        .par_iter()
        .map(|g| {
            config
                .methods
                .iter()
                .filter(|m| !matches!(m, MethodSpec::Fci))
                .map(|m| {
                    Ok(StoredAnsatz {
                        geometry: g.label.clone(),
                        method: m.label(),
                        ansatz: build_ansatz(g, m, None)?,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(nested.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenReport {
    pub geometry: String,
    pub r_angstrom: Option<f64>,
    pub method: String,
    pub run: CompassRun,
}

pub fn screen(config: &RunConfig) -> Result<Vec<ScreenReport>, CliError> {
    let geoms = load_all(config)?;
    let nested = geoms
        .par_iter()
        .map(|g| {
            config
                .methods
                .iter()
                .filter_map(|m| m.compass().map(|c| (m.label(), c)))
                .map(|(label, cfg)| {
                    let run = compass::run(&g.hamiltonian, &cfg)
                        .map_err(|e| g.compute_err("screening", e))?;
                    Ok(ScreenReport {
                        geometry: g.label.clone(),
                        r_angstrom: g.r_angstrom,
                        method: label,
                        run,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(nested.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FciRecord {
    pub geometry: String,
    pub r_angstrom: Option<f64>,
    pub hf_energy: f64,
    pub fci_energy: f64,
    pub sector_dim: usize,
}

pub fn fci_only(config: &RunConfig) -> Result<Vec<FciRecord>, CliError> {
    let geoms = load_all(config)?;
    geoms
        .par_iter()
        .map(|g| {
            let dim = sector_basis(g.hamiltonian.n_qubits(), g.integrals.n_electrons, g.integrals.ms2)
                .map_err(|e| g.compute_err("fci", e))?
                .len();
            let hf = g.hamiltonian.energy(&g.reference()).map_err(|e| g.compute_err("fci", e))?;
            Ok(FciRecord {
                geometry: g.label.clone(),
                r_angstrom: g.r_angstrom,
                hf_energy: hf,
                fci_energy: fci(g)?,
                sector_dim: dim,
            })
        })
        .collect()
}
