//! Pauli-string algebra and the Jordan–Wigner encoding.
//!
//! A string is stored as two bitmasks with `P = i^phase · i^{|x∧z|} X^x Z^z`,
//! so bit `q` set in both masks is a `Y` on qubit `q`. Z chains cover qubits
//! below the target: `a_p ↦ ½(X_p + iY_p) Z_{p−1}···Z_0`.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{domain, Result};
use crate::fcidump::MoleculeIntegrals;
use crate::fermion_ops::{FermionGenerator, Ladder};

/// Coefficients below this magnitude are dropped after simplification.
pub const PRUNE_TOL: f64 = 1e-14;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => I,
        2 => Complex64::new(-1.0, 0.0),
        _ => -I,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

/// A Pauli string with a phase in `{1, i, −1, −i}` (`i^phase`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    pub n_qubits: usize,
    pub x: u64,
    pub z: u64,
    pub phase: u8,
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Self {
        Self { n_qubits, x: 0, z: 0, phase: 0 }
    }

    pub fn from_letters(letters: &[Letter]) -> Self {
        let mut p = Self::identity(letters.len());
        for (q, l) in letters.iter().enumerate() {
            p = p.with_letter(q, *l);
        }
        p
    }

    /// Parses a highest-qubit-first string such as `"XZY"` (`X₂Z₁Y₀`).
    pub fn parse(s: &str) -> Result<Self> {
        let n = s.chars().count();
        let mut p = Self::identity(n);
        for (k, ch) in s.chars().enumerate() {
            let q = n - 1 - k;
            let l = match ch {
                'I' => Letter::I,
                'X' => Letter::X,
                'Y' => Letter::Y,
                'Z' => Letter::Z,
                other => return domain(format!("invalid Pauli letter `{other}`")),
            };
            p = p.with_letter(q, l);
        }
        Ok(p)
    }

    pub fn with_letter(mut self, q: usize, l: Letter) -> Self {
        let bit = 1u64 << q;
        self.x &= !bit;
        self.z &= !bit;
        match l {
            Letter::I => {}
            Letter::X => self.x |= bit,
            Letter::Z => self.z |= bit,
            Letter::Y => {
                self.x |= bit;
                self.z |= bit;
            }
        }
        self
    }

    pub fn letter(&self, q: usize) -> Letter {
        let bit = 1u64 << q;
        match (self.x & bit != 0, self.z & bit != 0) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (false, true) => Letter::Z,
            (true, true) => Letter::Y,
        }
    }

    pub fn phase_factor(&self) -> Complex64 {
        i_pow(self.phase as u32)
    }

    /// Highest qubit first, phase omitted.
    pub fn letters(&self) -> String {
        (0..self.n_qubits)
            .rev()
            .map(|q| match self.letter(q) {
                Letter::I => 'I',
                Letter::X => 'X',
                Letter::Y => 'Y',
                Letter::Z => 'Z',
            })
            .collect()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n_y = |x: u64, z: u64| (x & z).count_ones();
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        // Move Z^{z1} past X^{x2}: one sign per overlapping bit.
        let k = self.phase as u32
            + other.phase as u32
            + n_y(self.x, self.z)
            + n_y(other.x, other.z)
            + 2 * (self.z & other.x).count_ones()
            + 4 * 64
            - n_y(x, z);
        Self {
            n_qubits: self.n_qubits.max(other.n_qubits),
            x,
            z,
            phase: (k % 4) as u8,
        }
    }

    /// `P|basis⟩ = amplitude · |target⟩`.
    #[inline]
    pub fn apply_basis(&self, basis: u64) -> (u64, Complex64) {
        let k = self.phase as u32 + (self.x & self.z).count_ones() + 2 * (basis & self.z).count_ones();
        (basis ^ self.x, i_pow(k))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = ["+", "+i", "-", "-i"][self.phase as usize];
        write!(f, "{prefix}{}", self.letters())
    }
}

/// Complex-weighted sum of phase-free Pauli strings keyed by `(x, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliOperator {
    pub n_qubits: usize,
    terms: BTreeMap<(u64, u64), Complex64>,
}

impl PauliOperator {
    pub fn zero(n_qubits: usize) -> Self {
        Self { n_qubits, terms: BTreeMap::new() }
    }

    pub fn identity(n_qubits: usize, coeff: f64) -> Self {
        let mut op = Self::zero(n_qubits);
        op.add_string(&PauliString::identity(n_qubits), Complex64::new(coeff, 0.0));
        op
    }

    pub fn from_string(p: &PauliString, coeff: Complex64) -> Self {
        let mut op = Self::zero(p.n_qubits);
        op.add_string(p, coeff);
        op
    }

    /// Adds `coeff · p`, folding the string's phase into the coefficient.
    pub fn add_string(&mut self, p: &PauliString, coeff: Complex64) {
        *self.terms.entry((p.x, p.z)).or_insert(Complex64::new(0.0, 0.0)) += coeff * p.phase_factor();
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Phase-free strings with their coefficients, in deterministic order.
    pub fn terms(&self) -> impl Iterator<Item = (PauliString, Complex64)> + '_ {
        self.terms.iter().map(|(&(x, z), &c)| {
            (PauliString { n_qubits: self.n_qubits, x, z, phase: 0 }, c)
        })
    }

    pub fn coefficient(&self, p: &PauliString) -> Complex64 {
        self.terms.get(&(p.x, p.z)).copied().unwrap_or_default() * p.phase_factor()
    }

    /// Drops terms with `|c| < tol`.
    pub fn simplify(&mut self, tol: f64) {
        self.terms.retain(|_, c| c.norm() >= tol);
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.n_qubits = self.n_qubits.max(other.n_qubits);
        for (k, c) in &other.terms {
            *out.terms.entry(*k).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        out.simplify(PRUNE_TOL);
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= s;
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n_qubits.max(other.n_qubits);
        let mut out = Self::zero(n);
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                out.add_string(&a.mul(&b), ca * cb);
            }
        }
        out.simplify(PRUNE_TOL);
        out
    }

    /// Largest imaginary part of any coefficient: zero for a hermitian
    /// operator in this phase-free representation.
    pub fn hermiticity_residual(&self) -> f64 {
        self.terms.values().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual() <= tol
    }

    /// Largest real part: zero for an anti-hermitian operator.
    pub fn anti_hermiticity_residual(&self) -> f64 {
        self.terms.values().map(|c| c.re.abs()).fold(0.0, f64::max)
    }

    /// Dense `2^n × 2^n` matrix; intended for small-system checks.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for (p, c) in self.terms() {
            for col in 0..dim as u64 {
                let (row, amp) = p.apply_basis(col);
                m[(row as usize, col as usize)] += c * amp;
            }
        }
        m
    }

    /// One `<coefficient> <letters>` line per term.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (p, c) in self.terms() {
            out.push_str(&format!("({:+.15e}{:+.15e}j) {}\n", c.re, c.im, p.letters()));
        }
        out
    }
}

/// Qubit image of a single ladder operator.
pub fn ladder_operator(q: usize, kind: Ladder, n_qubits: usize) -> PauliOperator {
    let chain = if q == 0 { 0 } else { (1u64 << q) - 1 };
    let x = PauliString { n_qubits, x: 1 << q, z: chain, phase: 0 };
    let y = PauliString { n_qubits, x: 1 << q, z: chain | (1 << q), phase: 0 };
    let half = Complex64::new(0.5, 0.0);
    let y_coeff = match kind {
        Ladder::Create => Complex64::new(0.0, -0.5),
        Ladder::Destroy => Complex64::new(0.0, 0.5),
    };
    let mut op = PauliOperator::zero(n_qubits);
    op.add_string(&x, half);
    op.add_string(&y, y_coeff);
    op
}

/// Qubit image of `coeff · op_0 op_1 ··· op_k` (qubit indices).
pub fn ladder_product(coeff: f64, ops: &[(usize, Ladder)], n_qubits: usize) -> PauliOperator {
    let mut acc = PauliOperator::identity(n_qubits, coeff);
    for &(q, kind) in ops {
        acc = acc.mul(&ladder_operator(q, kind, n_qubits));
    }
    acc
}

/// Jordan–Wigner image of a fermionic generator.
pub fn jw_transform(g: &FermionGenerator, n_qubits: usize) -> Result<PauliOperator> {
    if n_qubits > 64 {
        return domain("more than 64 qubits");
    }
    let mut out = PauliOperator::zero(n_qubits);
    for term in &g.terms {
        let ops: Vec<(usize, Ladder)> = term.ops.iter().map(|(o, k)| (o.qubit(), *k)).collect();
        if let Some(&(q, _)) = ops.iter().find(|(q, _)| *q >= n_qubits) {
            return domain(format!("spin orbital {q} does not fit in {n_qubits} qubits"));
        }
        out = out.add(&ladder_product(term.coeff, &ops, n_qubits));
    }
    out.simplify(PRUNE_TOL);
    Ok(out)
}

/// Molecular Hamiltonian
/// `E_core + Σ h_pq a†_p a_q + ½ Σ ⟨pq|rs⟩ a†_p a†_q a_s a_r`
/// over spin orbitals, with `⟨pq|rs⟩ = (pr|qs)` when spins match.
pub fn build_qubit_hamiltonian(m: &MoleculeIntegrals) -> PauliOperator {
    let n = 2 * m.n_spatial;
    let spin = |q: usize| q % 2;
    let sp = |q: usize| q / 2;
    let create: Vec<PauliOperator> = (0..n).map(|q| ladder_operator(q, Ladder::Create, n)).collect();
    let destroy: Vec<PauliOperator> =
        (0..n).map(|q| ladder_operator(q, Ladder::Destroy, n)).collect();

    let mut acc: BTreeMap<(u64, u64), Complex64> = BTreeMap::new();
    let mut accumulate = |op: &PauliOperator, scale: f64| {
        for (p, c) in op.terms() {
            *acc.entry((p.x, p.z)).or_insert(Complex64::new(0.0, 0.0)) += c * scale;
        }
    };
    accumulate(&PauliOperator::identity(n, 1.0), m.e_core);

    for p in 0..n {
        for q in 0..n {
            if spin(p) != spin(q) {
                continue;
            }
            let h = m.h1(sp(p), sp(q));
            if h != 0.0 {
                accumulate(&create[p].mul(&destroy[q]), h);
            }
        }
    }
    for p in 0..n {
        for q in 0..n {
            if p == q {
                continue;
            }
            let cpq = create[p].mul(&create[q]);
            for r in 0..n {
                if spin(r) != spin(p) {
                    continue;
                }
                for s in 0..n {
                    if s == r || spin(s) != spin(q) {
                        continue;
                    }
                    let v = m.h2(sp(p), sp(r), sp(q), sp(s));
                    if v == 0.0 {
                        continue;
                    }
                    let op = cpq.mul(&destroy[s]).mul(&destroy[r]);
                    accumulate(&op, 0.5 * v);
                }
            }
        }
    }
    let mut out = PauliOperator { n_qubits: n, terms: acc };
    out.simplify(PRUNE_TOL);
    out
}

/// Total number operator `Σ_q n_q`.
pub fn number_operator(n_qubits: usize) -> PauliOperator {
    let mut out = PauliOperator::zero(n_qubits);
    for q in 0..n_qubits {
        out = out.add(&ladder_operator(q, Ladder::Create, n_qubits).mul(&ladder_operator(
            q,
            Ladder::Destroy,
            n_qubits,
        )));
    }
    out
}

/// `S_z = ½ Σ_p (n_{pα} − n_{pβ})`.
pub fn sz_operator(n_qubits: usize) -> PauliOperator {
    let mut out = PauliOperator::zero(n_qubits);
    for q in 0..n_qubits {
        let sign = if q % 2 == 0 { 0.5 } else { -0.5 };
        let nq = ladder_operator(q, Ladder::Create, n_qubits)
            .mul(&ladder_operator(q, Ladder::Destroy, n_qubits));
        out = out.add(&nq.scale(Complex64::new(sign, 0.0)));
    }
    out
}
