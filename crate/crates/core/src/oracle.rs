//! Exact ground energies in a symmetry sector, and scan error metrics.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::pauli_jw::PauliOperator;
use crate::simulator::{sector_basis, SparseOperator};

pub const HARTREE_TO_KCAL: f64 = 627.509_474_063_1;

/// 1 kcal/mol in Hartree, as used for all accuracy gates.
pub const CHEMICAL_ACCURACY: f64 = 1.5936e-3;

/// Largest sector diagonalized densely under [`Eigensolver::Auto`].
pub const DENSE_LIMIT: usize = 4096;

pub const LANCZOS_RESIDUAL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Eigensolver {
    #[default]
    Auto,
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub energy: f64,
    /// Sector basis indices and the matching eigenvector amplitudes.
    pub basis: Vec<usize>,
    pub vector: Vec<Complex64>,
}

pub fn fci_ground_energy(h: &PauliOperator, n_electrons: usize, ms2: i32) -> Result<f64> {
    Ok(fci_ground_state(h, n_electrons, ms2, Eigensolver::Auto)?.energy)
}

pub fn fci_ground_state(
    h: &PauliOperator,
    n_electrons: usize,
    ms2: i32,
    solver: Eigensolver,
) -> Result<GroundState> {
    let basis = sector_basis(h.n_qubits, n_electrons, ms2)?;
    if basis.is_empty() {
        return domain(format!(
            "empty sector: N={n_electrons}, 2Sz={ms2} on {} qubits",
            h.n_qubits
        ));
    }
    let op = SparseOperator::projected(h, &basis);
    let dense = match solver {
        Eigensolver::Auto => basis.len() <= DENSE_LIMIT,
        Eigensolver::Dense => true,
        Eigensolver::Lanczos => false,
    };
    if dense {
        dense_ground(&op, basis)
    } else {
        lanczos_ground(&op, basis)
    }
}

fn dense_ground(op: &SparseOperator, basis: Vec<usize>) -> Result<GroundState> {
    let m: DMatrix<Complex64> = op.dense_block(&basis);
    let eig = SymmetricEigen::new(m);
    let (k, &energy) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty sector");
    let vector = eig.eigenvectors.column(k).iter().copied().collect();
    Ok(GroundState { energy, basis, vector })
}

/// Lanczos with full reorthogonalization, restarted from the current Ritz
/// vector until the residual drops below [`LANCZOS_RESIDUAL`].
fn lanczos_ground(op: &SparseOperator, basis: Vec<usize>) -> Result<GroundState> {
    let dim = basis.len();
    let full = 1usize << op.n_qubits;
    let zero = Complex64::new(0.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0x1A2C_205);
    let mut start: Vec<Complex64> =
        (0..dim).map(|_| Complex64::new(rng.random::<f64>() - 0.5, 0.0)).collect();
    let krylov = dim.min(120);
    let mut scatter = vec![zero; full];
    let mut gathered = vec![zero; full];
    let mut matvec = |v: &[Complex64]| -> Vec<Complex64> {
        for (&b, &a) in basis.iter().zip(v) {
            scatter[b] = a;
        }
        op.apply(&scatter, &mut gathered);
        basis.iter().map(|&b| gathered[b]).collect()
    };

    for _restart in 0..50 {
        let norm = l2(&start);
        let mut q: Vec<Vec<Complex64>> = vec![start.iter().map(|a| a / norm).collect()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..krylov {
            let mut w = matvec(&q[j]);
            let a = dot(&q[j], &w).re;
            alpha.push(a);
            // Two passes of Gram-Schmidt against the whole basis.
            for _ in 0..2 {
                for qi in &q {
                    let c = dot(qi, &w);
                    for (wk, qk) in w.iter_mut().zip(qi) {
                        *wk -= c * qk;
                    }
                }
            }
            let b = l2(&w);
            if j + 1 == krylov || b < 1e-12 {
                break;
            }
            beta.push(b);
            q.push(w.iter().map(|x| x / b).collect());
        }
        let m = alpha.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let (k, &theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty Krylov space");
        let mut ritz = vec![zero; dim];
        for (i, qi) in q.iter().take(m).enumerate() {
            let c = eig.eigenvectors[(i, k)];
            for (r, x) in ritz.iter_mut().zip(qi) {
                *r += c * x;
            }
        }
        let rn = l2(&ritz);
        ritz.iter_mut().for_each(|r| *r /= rn);
        let hr = matvec(&ritz);
        let residual = hr
            .iter()
            .zip(&ritz)
            .map(|(a, b)| (a - theta * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if residual < LANCZOS_RESIDUAL {
            return Ok(GroundState { energy: theta, basis, vector: ritz });
        }
        start = ritz;
    }
    Err(Error::Numerical("Lanczos did not reach the residual target".into()))
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn l2(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Non-parallelity error and mean absolute error of a scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub npe_hartree: f64,
    pub avg_hartree: f64,
    pub npe_kcal: f64,
    pub avg_kcal: f64,
}

/// `errors` are `E_method − E_FCI` in Hartree.
pub fn error_metrics(errors: &[f64]) -> Result<ErrorMetrics> {
    if errors.is_empty() {
        return domain("no errors to summarize");
    }
    if let Some(bad) = errors.iter().find(|e| !e.is_finite()) {
        return domain(format!("non-finite error {bad}"));
    }
    let max = errors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = errors.iter().copied().fold(f64::INFINITY, f64::min);
    let npe = max - min;
    let avg = errors.iter().map(|e| e.abs()).sum::<f64>() / errors.len() as f64;
    Ok(ErrorMetrics {
        npe_hartree: npe,
        avg_hartree: avg,
        npe_kcal: npe * HARTREE_TO_KCAL,
        avg_kcal: avg * HARTREE_TO_KCAL,
    })
}
