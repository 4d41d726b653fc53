mod common;

use common::*;
use compass_core::fermion_ops::{
    build_generator, enumerate_doubles, enumerate_scatterers, enumerate_singles, CsoSpec, Sector,
};
use compass_core::pauli_jw::{build_qubit_hamiltonian, jw_transform, number_operator, sz_operator};
use compass_core::simulator::{hf_state, sector_basis};
use nalgebra::DMatrix;
use num_complex::Complex64;

#[test]
fn mapped_generators_match_fermionic_matrices() {
    // 10 qubits, 4 electrons: every single and double, plus both scatterer
    // sectors at the frontier.
    let (n_spatial, n_el) = (5, 4);
    let n_q = 2 * n_spatial;
    let mut worst: f64 = 0.0;
    let singles = enumerate_singles(n_spatial, n_el).unwrap();
    let doubles = enumerate_doubles(n_spatial, n_el).unwrap();
    let cso = CsoSpec::frontier(n_spatial, n_el);
    let mut gens: Vec<_> = singles.iter().map(build_generator).collect();
    // A spread of doubles keeps the 1024-dim dense checks cheap.
    gens.extend(doubles.iter().step_by(7).map(build_generator));
    for sector in [Sector::OppositeSpin, Sector::PartiallyPaired] {
        let s = enumerate_scatterers(n_spatial, n_el, &cso, sector).unwrap();
        gens.extend(s.iter().step_by(5).map(build_generator));
    }
    for g in &gens {
        let pauli = jw_transform(g, n_q).unwrap();
        let d = max_abs_diff(&pauli.to_dense(), &generator_matrix(g, n_q));
        worst = worst.max(d);
    }
    assert!(worst < 1e-13, "worst deviation {worst:e}");
}

#[test]
fn mapped_generators_are_anti_hermitian() {
    let doubles = enumerate_doubles(6, 6).unwrap();
    for t in doubles.iter().step_by(3) {
        let p = jw_transform(&build_generator(t), 12).unwrap();
        assert!(p.anti_hermiticity_residual() < 1e-14, "{t}");
    }
}

#[test]
fn hamiltonian_matches_second_quantized_form() {
    for file in ["h2_sto-3g_074.fcidump", "h4_sto-3g_150.fcidump"] {
        let m = raw_integrals(file);
        let n_q = 2 * m.n_spatial;
        let pauli = build_qubit_hamiltonian(&m);
        assert!(pauli.is_hermitian(1e-14));
        let dense = pauli.to_dense();
        let oracle = to_complex(&fermionic_hamiltonian_matrix(&m));
        let d = max_abs_diff(&dense, &oracle);
        assert!(d < 1e-12, "{file}: {d:e}");
        assert_eq!(dense.nrows(), 1 << n_q);
    }
}

#[test]
fn h2_ground_energy_in_two_electron_sector() {
    let entry = &entries("h2")[1];
    let m = integrals(entry);
    let pauli = build_qubit_hamiltonian(&m);
    let basis = sector_basis(4, 2, 0).unwrap();
    let dense = pauli.to_dense();
    let k = basis.len();
    let block = DMatrix::from_fn(k, k, |i, j| dense[(basis[i], basis[j])].re);
    let e = block.symmetric_eigenvalues().min();
    let oracle = dense_ground(&fermionic_hamiltonian_matrix(&m), &sector(4, 1, 1));
    assert!((e - oracle).abs() < 1e-10);
    assert!((e - entry.e_fci_frozen).abs() < 1e-8, "{e} vs {}", entry.e_fci_frozen);
}

#[test]
fn hf_expectation_is_rhf_energy() {
    for molecule in ["h2", "bh", "h2o", "beh2"] {
        for entry in entries(molecule).iter().step_by(3) {
            let m = integrals(entry);
            let h = hamiltonian(&m);
            let hf = hf_state(h.n_qubits(), m.n_electrons).unwrap();
            let e = h.energy(&hf).unwrap();
            assert!((e - rhf_energy(&m)).abs() < 1e-10, "{}", entry.file);
            assert!((e - entry.e_hf).abs() < 1e-8, "{}: {e} vs {}", entry.file, entry.e_hf);
        }
    }
}

#[test]
fn number_and_spin_commute_with_hamiltonian() {
    let m = raw_integrals("h4_sto-3g_100.fcidump");
    let h = build_qubit_hamiltonian(&m);
    for op in [number_operator(8), sz_operator(8)] {
        let comm = h.mul(&op).add(&op.mul(&h).scale(Complex64::new(-1.0, 0.0)));
        let worst = comm.terms().map(|(_, c)| c.norm()).fold(0.0, f64::max);
        assert!(worst < 1e-12, "{worst:e}");
    }
}
