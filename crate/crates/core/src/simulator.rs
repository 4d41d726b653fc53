//! Dense statevector engine.
//!
//! States are full `2^n` complex vectors. Operators are compiled from their
//! Pauli form into sparse maps: generators over their support only, the
//! Hamiltonian over a particle-number/Sz sector.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Error, Result};
use crate::fermion_ops::{build_generator, FermionGenerator, GeneratorLabel};
use crate::pauli_jw::{jw_transform, PauliOperator, PRUNE_TOL};

/// Largest register the dense engine accepts.
pub const MAX_QUBITS: usize = 24;

/// Threshold for the `G³ = −G` probe.
pub const CLOSED_FORM_TOL: f64 = 1e-12;

/// Residual imaginary part tolerated in an expectation value.
pub const EXPECTATION_IMAG_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub n_qubits: usize,
    pub amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return domain(format!("{n_qubits} qubits exceeds the {MAX_QUBITS}-qubit cap"));
        }
        let dim = 1usize << n_qubits;
        if index >= dim {
            return domain(format!("basis index {index} outside 2^{n_qubits}"));
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amplitudes })
    }

    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        if !dim.is_power_of_two() {
            return domain(format!("length {dim} is not a power of two"));
        }
        Ok(Self { n_qubits: dim.trailing_zeros() as usize, amplitudes })
    }

    /// Normalized state with seeded Gaussian amplitudes.
    pub fn random(n_qubits: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v: Vec<Complex64> = (0..1usize << n_qubits)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        normalize(&mut v);
        Self { n_qubits, amplitudes: v }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Basis indices carrying `|amplitude| > tol`.
    pub fn support(&self, tol: f64) -> Vec<usize> {
        (0..self.amplitudes.len())
            .filter(|&i| self.amplitudes[i].norm() > tol)
            .collect()
    }
}

fn normalize(v: &mut [Complex64]) {
    let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in v.iter_mut() {
        *a /= n;
    }
}

/// Hartree–Fock determinant: the `n_electrons` lowest qubits occupied.
pub fn hf_state(n_qubits: usize, n_electrons: usize) -> Result<StateVector> {
    if n_electrons > n_qubits {
        return domain(format!("{n_electrons} electrons exceed {n_qubits} qubits"));
    }
    StateVector::basis(n_qubits, (1usize << n_electrons) - 1)
}

/// Basis indices with `n_alpha` even-qubit and `n_beta` odd-qubit occupations.
pub fn sector_basis(n_qubits: usize, n_electrons: usize, ms2: i32) -> Result<Vec<usize>> {
    if n_qubits > MAX_QUBITS {
        return domain(format!("{n_qubits} qubits exceeds the {MAX_QUBITS}-qubit cap"));
    }
    let twice_alpha = n_electrons as i64 + ms2 as i64;
    if twice_alpha < 0 || twice_alpha % 2 != 0 || twice_alpha > 2 * n_electrons as i64 {
        return domain(format!("no determinants with N={n_electrons}, 2Sz={ms2}"));
    }
    let n_alpha = (twice_alpha / 2) as u32;
    let n_beta = n_electrons as u32 - n_alpha;
    let alpha_mask: usize = (0..n_qubits).step_by(2).fold(0, |m, q| m | (1 << q));
    let beta_mask: usize = (1..n_qubits).step_by(2).fold(0, |m, q| m | (1 << q));
    Ok((0..1usize << n_qubits)
        .filter(|&i| {
            (i & alpha_mask).count_ones() == n_alpha && (i & beta_mask).count_ones() == n_beta
        })
        .collect())
}

/// Sparse row-compressed operator over global basis indices.
///
/// Only rows and columns drawn from `basis` are stored, so the operator is
/// the projection `P A P`; for symmetry-conserving `A` and states inside the
/// projected subspace this is exact.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    pub n_qubits: usize,
    rows: Vec<usize>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl SparseOperator {
    pub fn full(op: &PauliOperator) -> Result<Self> {
        if op.n_qubits > MAX_QUBITS {
            return domain(format!("{} qubits exceeds the cap", op.n_qubits));
        }
        let basis: Vec<usize> = (0..1usize << op.n_qubits).collect();
        Ok(Self::projected(op, &basis))
    }

    pub fn projected(op: &PauliOperator, basis: &[usize]) -> Self {
        let n = op.n_qubits;
        let dim = 1usize << n;
        let mut in_basis = vec![false; dim];
        for &b in basis {
            in_basis[b] = true;
        }
        // Strings sharing an X mask map a column onto the same row.
        let mut groups: Vec<(u64, Vec<(crate::pauli_jw::PauliString, Complex64)>)> = Vec::new();
        let mut group_of: HashMap<u64, usize> = HashMap::new();
        for (p, c) in op.terms() {
            let g = *group_of.entry(p.x).or_insert_with(|| {
                groups.push((p.x, Vec::new()));
                groups.len() - 1
            });
            groups[g].1.push((p, c));
        }
        let mut triplets: Vec<(usize, usize, Complex64)> = Vec::new();
        for &col in basis {
            for (x, strings) in &groups {
                let row = col ^ *x as usize;
                if !in_basis[row] {
                    continue;
                }
                let v: Complex64 = strings
                    .iter()
                    .map(|(p, c)| c * p.apply_basis(col as u64).1)
                    .sum();
                if v.norm() >= PRUNE_TOL {
                    triplets.push((row, col, v));
                }
            }
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut rows = Vec::new();
        let mut row_ptr = vec![0];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if rows.last() != Some(&r) {
                if !rows.is_empty() {
                    row_ptr.push(cols.len());
                }
                rows.push(r);
            }
            cols.push(c);
            vals.push(v);
        }
        row_ptr.push(cols.len());
        if rows.is_empty() {
            row_ptr = vec![0];
        }
        Self { n_qubits: n, rows, row_ptr, cols, vals }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `out = A v` (rows outside the stored set are zeroed).
    pub fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|o| *o = ZERO);
        for (k, &r) in self.rows.iter().enumerate() {
            let mut acc = ZERO;
            for idx in self.row_ptr[k]..self.row_ptr[k + 1] {
                acc += self.vals[idx] * v[self.cols[idx]];
            }
            out[r] = acc;
        }
    }

    /// `⟨v|A|v⟩` without materializing `A v`.
    pub fn expectation_complex(&self, v: &[Complex64]) -> Complex64 {
        let mut total = ZERO;
        for (k, &r) in self.rows.iter().enumerate() {
            let vr = v[r];
            if vr == ZERO {
                continue;
            }
            let mut acc = ZERO;
            for idx in self.row_ptr[k]..self.row_ptr[k + 1] {
                acc += self.vals[idx] * v[self.cols[idx]];
            }
            total += vr.conj() * acc;
        }
        total
    }

    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        checked_real(self.expectation_complex(&state.amplitudes))
    }

    /// Dense matrix restricted to `basis` (row/column order of `basis`).
    pub fn dense_block(&self, basis: &[usize]) -> nalgebra::DMatrix<Complex64> {
        let index: HashMap<usize, usize> = basis.iter().enumerate().map(|(i, &b)| (b, i)).collect();
        let mut m = nalgebra::DMatrix::zeros(basis.len(), basis.len());
        for (k, &r) in self.rows.iter().enumerate() {
            let Some(&ri) = index.get(&r) else { continue };
            for idx in self.row_ptr[k]..self.row_ptr[k + 1] {
                if let Some(&ci) = index.get(&self.cols[idx]) {
                    m[(ri, ci)] += self.vals[idx];
                }
            }
        }
        m
    }
}

fn checked_real(z: Complex64) -> Result<f64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Numerical(format!("non-finite expectation value {z}")));
    }
    if z.im.abs() >= EXPECTATION_IMAG_TOL {
        return Err(Error::Numerical(format!(
            "expectation value has imaginary residue {:e}",
            z.im
        )));
    }
    Ok(z.re)
}

/// `⟨ψ|H|ψ⟩` evaluated term by term from the Pauli form.
pub fn expectation(state: &StateVector, h: &PauliOperator) -> Result<f64> {
    if state.n_qubits != h.n_qubits {
        return domain(format!(
            "state has {} qubits, operator {}",
            state.n_qubits, h.n_qubits
        ));
    }
    let amps = &state.amplitudes;
    let mut total = ZERO;
    for (p, c) in h.terms() {
        let mut acc = ZERO;
        for (col, a) in amps.iter().enumerate() {
            if *a == ZERO {
                continue;
            }
            let (row, phase) = p.apply_basis(col as u64);
            acc += amps[row as usize].conj() * phase * a;
        }
        total += c * acc;
    }
    checked_real(total)
}

/// Sparse action of an anti-hermitian generator restricted to its support.
#[derive(Debug, Clone)]
struct LocalAction {
    support: Vec<usize>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl LocalAction {
    fn from_sparse(op: &SparseOperator) -> Self {
        let mut support: Vec<usize> = op.rows.iter().chain(op.cols.iter()).copied().collect();
        support.sort_unstable();
        support.dedup();
        let local: HashMap<usize, usize> =
            support.iter().enumerate().map(|(i, &g)| (g, i)).collect();
        let mut row_ptr = vec![0usize; support.len() + 1];
        let mut entries: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); support.len()];
        for (k, &r) in op.rows.iter().enumerate() {
            for idx in op.row_ptr[k]..op.row_ptr[k + 1] {
                entries[local[&r]].push((local[&op.cols[idx]], op.vals[idx]));
            }
        }
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for (i, row) in entries.into_iter().enumerate() {
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr[i + 1] = cols.len();
        }
        Self { support, row_ptr, cols, vals }
    }

    fn dim(&self) -> usize {
        self.support.len()
    }

    fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        for i in 0..self.dim() {
            let mut acc = ZERO;
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[idx] * v[self.cols[idx]];
            }
            out[i] = acc;
        }
    }

    /// Maximum absolute row sum, an upper bound on the spectral norm.
    fn norm_bound(&self) -> f64 {
        (0..self.dim())
            .map(|i| (self.row_ptr[i]..self.row_ptr[i + 1]).map(|k| self.vals[k].norm()).sum())
            .fold(0.0, f64::max)
    }

    fn gather(&self, amps: &[Complex64]) -> Vec<Complex64> {
        self.support.iter().map(|&g| amps[g]).collect()
    }
}

/// A generator ready for repeated exponentiation.
#[derive(Debug, Clone)]
pub struct GeneratorCache {
    pub n_qubits: usize,
    pub pauli: PauliOperator,
    action: LocalAction,
    pub closed_form_valid: bool,
}

impl GeneratorCache {
    pub fn new(generator: &FermionGenerator, n_qubits: usize) -> Result<Self> {
        let pauli = jw_transform(generator, n_qubits)?;
        Self::from_pauli(pauli)
    }

    pub fn for_label<L: GeneratorLabel>(label: &L, n_qubits: usize) -> Result<Self> {
        Self::new(&build_generator(label), n_qubits)
    }

    /// Compiles an anti-hermitian Pauli operator and probes `G³ = −G` on
    /// three seeded random states.
    pub fn from_pauli(pauli: PauliOperator) -> Result<Self> {
        let sparse = SparseOperator::full(&pauli)?;
        let action = LocalAction::from_sparse(&sparse);
        let mut cache = Self { n_qubits: pauli.n_qubits, pauli, action, closed_form_valid: false };
        cache.closed_form_valid = cache.closed_form_residual() < CLOSED_FORM_TOL;
        Ok(cache)
    }

    /// Largest `‖G³ψ + Gψ‖` over the three probe states.
    pub fn closed_form_residual(&self) -> f64 {
        let d = self.action.dim();
        if d == 0 {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x0C0_3A55);
        let mut worst: f64 = 0.0;
        let (mut g1, mut g2, mut g3) = (vec![ZERO; d], vec![ZERO; d], vec![ZERO; d]);
        for _ in 0..3 {
            let mut probe: Vec<Complex64> = (0..d)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            normalize(&mut probe);
            self.action.apply(&probe, &mut g1);
            self.action.apply(&g1, &mut g2);
            self.action.apply(&g2, &mut g3);
            let r = g3.iter().zip(&g1).map(|(a, b)| (a + b).norm_sqr()).sum::<f64>().sqrt();
            worst = worst.max(r);
        }
        worst
    }

    /// Number of basis states the generator touches.
    pub fn support_len(&self) -> usize {
        self.action.dim()
    }

    /// `ψ ← G ψ` (dense, for gradient evaluation).
    pub fn apply_generator(&self, amps: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|o| *o = ZERO);
        let x = self.action.gather(amps);
        let mut y = vec![ZERO; x.len()];
        self.action.apply(&x, &mut y);
        for (&g, v) in self.action.support.iter().zip(y) {
            out[g] = v;
        }
    }

    /// `⟨a|G|b⟩` touching only the support.
    pub fn matrix_element(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        let x = self.action.gather(b);
        let mut y = vec![ZERO; x.len()];
        self.action.apply(&x, &mut y);
        self.action.support.iter().zip(y).map(|(&g, v)| a[g].conj() * v).sum()
    }

    /// In-place `ψ ← e^{θG} ψ`.
    pub fn exp_in_place(&self, amps: &mut [Complex64], theta: f64) {
        if theta == 0.0 || self.action.dim() == 0 {
            return;
        }
        if self.closed_form_valid {
            self.exp_closed_form(amps, theta);
        } else {
            self.exp_taylor(amps, theta);
        }
    }

    /// `e^{θG} = 1 + sin θ G + (1 − cos θ) G²`.
    pub fn exp_closed_form(&self, amps: &mut [Complex64], theta: f64) {
        let x = self.action.gather(amps);
        let mut g1 = vec![ZERO; x.len()];
        let mut g2 = vec![ZERO; x.len()];
        self.action.apply(&x, &mut g1);
        self.action.apply(&g1, &mut g2);
        let (s, c) = theta.sin_cos();
        for (i, &g) in self.action.support.iter().enumerate() {
            amps[g] = x[i] + s * g1[i] + (1.0 - c) * g2[i];
        }
    }

    /// Taylor series in `θ/m` steps, each summed until the appended term
    /// drops below `1e-14` in norm.
    pub fn exp_taylor(&self, amps: &mut [Complex64], theta: f64) {
        let mut x = self.action.gather(amps);
        let d = x.len();
        let steps = (theta.abs() * self.action.norm_bound()).ceil().max(1.0) as usize;
        let h = theta / steps as f64;
        let mut term = vec![ZERO; d];
        let mut next = vec![ZERO; d];
        for _ in 0..steps {
            term.copy_from_slice(&x);
            let mut acc = x.clone();
            for k in 1..200 {
                self.action.apply(&term, &mut next);
                let scale = h / k as f64;
                for v in next.iter_mut() {
                    *v *= scale;
                }
                std::mem::swap(&mut term, &mut next);
                let mut norm = 0.0;
                for (a, t) in acc.iter_mut().zip(&term) {
                    *a += t;
                    norm += t.norm_sqr();
                }
                if norm.sqrt() < 1e-14 {
                    break;
                }
            }
            x = acc;
        }
        for (i, &g) in self.action.support.iter().enumerate() {
            amps[g] = x[i];
        }
    }
}

/// `e^{θG}|ψ⟩` as a new state.
pub fn apply_exp_generator(
    state: &StateVector,
    cache: &GeneratorCache,
    theta: f64,
) -> Result<StateVector> {
    if !theta.is_finite() {
        return Err(Error::Domain(format!("non-finite rotation angle {theta}")));
    }
    if cache.n_qubits != state.n_qubits {
        return domain(format!(
            "generator built for {} qubits, state has {}",
            cache.n_qubits, state.n_qubits
        ));
    }
    let mut out = state.clone();
    cache.exp_in_place(&mut out.amplitudes, theta);
    Ok(out)
}

/// A qubit Hamiltonian compiled for the `(N, 2Sz)` sector of a reference.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub pauli: PauliOperator,
    pub n_electrons: usize,
    pub ms2: i32,
    sector: SparseOperator,
}

impl Hamiltonian {
    pub fn new(pauli: PauliOperator, n_electrons: usize, ms2: i32) -> Result<Self> {
        if !pauli.is_hermitian(1e-12) {
            return Err(Error::Numerical(format!(
                "Hamiltonian has imaginary coefficients up to {:e}",
                pauli.hermiticity_residual()
            )));
        }
        let basis = sector_basis(pauli.n_qubits, n_electrons, ms2)?;
        let sector = SparseOperator::projected(&pauli, &basis);
        Ok(Self { pauli, n_electrons, ms2, sector })
    }

    pub fn n_qubits(&self) -> usize {
        self.pauli.n_qubits
    }

    pub fn sector_operator(&self) -> &SparseOperator {
        &self.sector
    }

    /// Energy of a state lying inside the compiled sector.
    pub fn energy(&self, state: &StateVector) -> Result<f64> {
        self.sector.expectation(state)
    }

    /// `H|ψ⟩` for a state inside the sector.
    pub fn apply(&self, state: &[Complex64], out: &mut [Complex64]) {
        self.sector.apply(state, out);
    }
}

/// An ordered product of exponentials, one parameter per factor. Factor 0
/// acts first on the reference.
#[derive(Debug, Clone)]
pub struct Circuit {
    pub n_qubits: usize,
    pub factors: Vec<std::sync::Arc<GeneratorCache>>,
}

impl Circuit {
    pub fn n_params(&self) -> usize {
        self.factors.len()
    }

    pub fn prepare(&self, reference: &StateVector, params: &[f64]) -> Result<StateVector> {
        if params.len() != self.factors.len() {
            return domain(format!(
                "{} parameters supplied for {} factors",
                params.len(),
                self.factors.len()
            ));
        }
        if let Some(bad) = params.iter().find(|p| !p.is_finite()) {
            return Err(Error::Domain(format!("non-finite parameter {bad}")));
        }
        let mut state = reference.clone();
        for (g, &theta) in self.factors.iter().zip(params) {
            g.exp_in_place(&mut state.amplitudes, theta);
        }
        Ok(state)
    }
}

/// Prepares `ansatz` on `reference`: blocks in order, each `τ` before its
/// scatterers, then the singles.
pub fn apply_ansatz(
    reference: &StateVector,
    ansatz: &crate::compass::Ansatz,
    params: &[f64],
) -> Result<StateVector> {
    if params.len() != ansatz.n_params() {
        return domain(format!(
            "{} parameters supplied for an ansatz with {}",
            params.len(),
            ansatz.n_params()
        ));
    }
    ansatz.circuit()?.prepare(reference, params)
}
