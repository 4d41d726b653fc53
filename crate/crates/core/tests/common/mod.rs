//! Test-only oracles built without the library's Pauli machinery.
#![allow(dead_code)]

use std::path::PathBuf;

use compass_core::fcidump::{apply_frozen_core, parse_fcidump, MoleculeIntegrals};
use compass_core::fermion_ops::{FermionGenerator, Ladder};
use compass_core::pauli_jw::build_qubit_hamiltonian;
use compass_core::simulator::Hamiltonian;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Deserialize;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

#[derive(Debug, Clone, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub molecule: String,
    pub r_angstrom: f64,
    pub frozen: Vec<usize>,
    pub e_hf: f64,
    pub e_fci_full: f64,
    pub e_fci_frozen: f64,
}

pub fn manifest() -> Vec<ManifestEntry> {
    let text = std::fs::read_to_string(fixture_dir().join("manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

pub fn entries(molecule: &str) -> Vec<ManifestEntry> {
    let mut v: Vec<_> = manifest().into_iter().filter(|e| e.molecule == molecule).collect();
    v.sort_by(|a, b| a.r_angstrom.total_cmp(&b.r_angstrom));
    v
}

pub fn raw_integrals(file: &str) -> MoleculeIntegrals {
    let text = std::fs::read_to_string(fixture_dir().join(file)).unwrap();
    parse_fcidump(&text).unwrap()
}

/// Active-space integrals with the manifest's frozen list applied.
pub fn integrals(entry: &ManifestEntry) -> MoleculeIntegrals {
    apply_frozen_core(&raw_integrals(&entry.file), &entry.frozen).unwrap()
}

pub fn hamiltonian(m: &MoleculeIntegrals) -> Hamiltonian {
    Hamiltonian::new(build_qubit_hamiltonian(m), m.n_electrons, m.ms2).unwrap()
}

/// Applies ladder operators (rightmost first) to an occupation bitstring
/// using the standard sign `(−1)^{#occupied below p}`.
pub fn ladder_string(ops: &[(usize, bool)], det: u64) -> Option<(u64, f64)> {
    let mut state = det;
    let mut sign = 1.0;
    for &(p, create) in ops.iter().rev() {
        let bit = 1u64 << p;
        if create == (state & bit != 0) {
            return None;
        }
        let below = (state & (bit - 1)).count_ones();
        if below % 2 == 1 {
            sign = -sign;
        }
        state ^= bit;
    }
    Some((state, sign))
}

pub fn generator_matrix(g: &FermionGenerator, n_qubits: usize) -> DMatrix<Complex64> {
    let dim = 1usize << n_qubits;
    let mut m = DMatrix::zeros(dim, dim);
    for t in &g.terms {
        let ops: Vec<(usize, bool)> =
            t.ops.iter().map(|(o, k)| (o.qubit(), *k == Ladder::Create)).collect();
        for col in 0..dim {
            if let Some((row, s)) = ladder_string(&ops, col as u64) {
                m[(row as usize, col)] += Complex64::new(t.coeff * s, 0.0);
            }
        }
    }
    m
}

/// Second-quantized Hamiltonian straight from chemists'-notation
/// integrals: `Σ h_pq a†_pσ a_qσ + ½ Σ (pq|rs) a†_pσ a†_rτ a_sτ a_qσ`.
pub fn fermionic_hamiltonian_matrix(m: &MoleculeIntegrals) -> DMatrix<f64> {
    let n = m.n_spatial;
    let dim = 1usize << (2 * n);
    let so = |p: usize, s: usize| 2 * p + s;
    let mut h = DMatrix::<f64>::identity(dim, dim) * m.e_core;
    for col in 0..dim as u64 {
        for s in 0..2 {
            for p in 0..n {
                for q in 0..n {
                    let v = m.h1(p, q);
                    if v == 0.0 {
                        continue;
                    }
                    if let Some((row, sg)) = ladder_string(&[(so(p, s), true), (so(q, s), false)], col)
                    {
                        h[(row as usize, col as usize)] += v * sg;
                    }
                }
            }
        }
        for s in 0..2 {
            for t in 0..2 {
                for p in 0..n {
                    for q in 0..n {
                        for r in 0..n {
                            for u in 0..n {
                                let v = m.h2(p, q, r, u);
                                if v == 0.0 {
                                    continue;
                                }
                                let ops = [
                                    (so(p, s), true),
                                    (so(r, t), true),
                                    (so(u, t), false),
                                    (so(q, s), false),
                                ];
                                if let Some((row, sg)) = ladder_string(&ops, col) {
                                    h[(row as usize, col as usize)] += 0.5 * v * sg;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    h
}

/// Sector indices for `n_alpha` even and `n_beta` odd occupations.
pub fn sector(n_qubits: usize, n_alpha: u32, n_beta: u32) -> Vec<usize> {
    (0..1usize << n_qubits)
        .filter(|&i| {
            let a = (0..n_qubits).step_by(2).filter(|q| i >> q & 1 == 1).count() as u32;
            let b = (1..n_qubits).step_by(2).filter(|q| i >> q & 1 == 1).count() as u32;
            a == n_alpha && b == n_beta
        })
        .collect()
}

/// Lowest eigenvalue of the real-symmetric block on `basis`.
pub fn dense_ground(h: &DMatrix<f64>, basis: &[usize]) -> f64 {
    let k = basis.len();
    let block = DMatrix::from_fn(k, k, |i, j| h[(basis[i], basis[j])]);
    block.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Closed-shell RHF energy from spatial integrals.
pub fn rhf_energy(m: &MoleculeIntegrals) -> f64 {
    let occ = m.n_electrons / 2;
    let mut e = m.e_core;
    for i in 0..occ {
        e += 2.0 * m.h1(i, i);
        for j in 0..occ {
            e += 2.0 * m.h2(i, i, j, j) - m.h2(i, j, j, i);
        }
    }
    e
}

pub fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}
