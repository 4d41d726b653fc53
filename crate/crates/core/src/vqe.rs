//! Variational optimization of circuit parameters.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::optimizer::{self, LbfgsSettings};
use crate::simulator::{Circuit, Hamiltonian, StateVector};

/// How `∂E/∂θ` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GradientMethod {
    /// Central differences.
    FiniteDifference { step: f64 },
    /// Reverse sweep through the factors: one forward pass, one backward pass.
    Adjoint,
}

impl Default for GradientMethod {
    fn default() -> Self {
        GradientMethod::FiniteDifference { step: 1e-5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VqeSettings {
    pub max_evaluations: usize,
    pub grad_tol: f64,
    pub f_tol: f64,
    pub memory: usize,
    pub gradient: GradientMethod,
}

impl Default for VqeSettings {
    fn default() -> Self {
        Self {
            max_evaluations: 10_000,
            grad_tol: 1e-8,
            f_tol: 1e-12,
            memory: 10,
            gradient: GradientMethod::Adjoint,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeResult {
    pub energy: f64,
    pub params: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
}

fn check_circuit(h: &Hamiltonian, circuit: &Circuit, reference: &StateVector) -> Result<()> {
    if circuit.n_qubits != h.n_qubits() || reference.n_qubits != h.n_qubits() {
        return domain(format!(
            "register mismatch: Hamiltonian {} qubits, circuit {}, reference {}",
            h.n_qubits(),
            circuit.n_qubits,
            reference.n_qubits
        ));
    }
    Ok(())
}

pub fn energy(
    h: &Hamiltonian,
    circuit: &Circuit,
    reference: &StateVector,
    params: &[f64],
) -> Result<f64> {
    check_circuit(h, circuit, reference)?;
    let state = circuit.prepare(reference, params)?;
    h.energy(&state)
}

pub fn gradient(
    h: &Hamiltonian,
    circuit: &Circuit,
    reference: &StateVector,
    params: &[f64],
    method: GradientMethod,
) -> Result<Vec<f64>> {
    Ok(energy_and_gradient(h, circuit, reference, params, method)?.1)
}

pub fn energy_and_gradient(
    h: &Hamiltonian,
    circuit: &Circuit,
    reference: &StateVector,
    params: &[f64],
    method: GradientMethod,
) -> Result<(f64, Vec<f64>)> {
    check_circuit(h, circuit, reference)?;
    let (e, g) = match method {
        GradientMethod::FiniteDifference { step } => {
            if !(step > 0.0) {
                return domain(format!("finite-difference step {step} must be positive"));
            }
            let e = energy(h, circuit, reference, params)?;
            let mut x = params.to_vec();
            let mut g = Vec::with_capacity(params.len());
            for k in 0..params.len() {
                x[k] = params[k] + step;
                let up = energy(h, circuit, reference, &x)?;
                x[k] = params[k] - step;
                let down = energy(h, circuit, reference, &x)?;
                x[k] = params[k];
                g.push((up - down) / (2.0 * step));
            }
            (e, g)
        }
        GradientMethod::Adjoint => adjoint(h, circuit, reference, params)?,
    };
    if !e.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("non-finite energy {e} or gradient")));
    }
    Ok((e, g))
}

/// With `ψ_k = U_k⋯U_1 ψ_0` and `U_k = e^{θ_k G_k}`,
/// `∂E/∂θ_k = 2 Re⟨U_{k+1}†⋯U_P† H ψ_P | G_k ψ_k⟩`; both vectors are
/// walked backwards with `U_k†` so each factor is touched twice.
fn adjoint(
    h: &Hamiltonian,
    circuit: &Circuit,
    reference: &StateVector,
    params: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let psi = circuit.prepare(reference, params)?;
    let mut lambda = vec![Complex64::new(0.0, 0.0); psi.amplitudes.len()];
    h.apply(&psi.amplitudes, &mut lambda);
    let e_c: Complex64 = psi.amplitudes.iter().zip(&lambda).map(|(a, b)| a.conj() * b).sum();
    let e = e_c.re;
    let mut phi = psi.amplitudes;
    let mut g = vec![0.0; params.len()];
    for k in (0..params.len()).rev() {
        let factor = &circuit.factors[k];
        g[k] = 2.0 * factor.matrix_element(&lambda, &phi).re;
        if k > 0 {
            factor.exp_in_place(&mut phi, -params[k]);
            factor.exp_in_place(&mut lambda, -params[k]);
        }
    }
    Ok((e, g))
}

/// `[−π, π]` for rotation-like factors, open otherwise.
pub fn parameter_bounds(circuit: &Circuit) -> Vec<(f64, f64)> {
    circuit
        .factors
        .iter()
        .map(|f| if f.closed_form_valid { (-PI, PI) } else { (f64::NEG_INFINITY, f64::INFINITY) })
        .collect()
}

/// Minimizes `⟨ψ(θ)|H|ψ(θ)⟩` from `init`.
pub fn minimize(
    h: &Hamiltonian,
    reference: &StateVector,
    circuit: &Circuit,
    init: &[f64],
    settings: &VqeSettings,
) -> Result<VqeResult> {
    if init.len() != circuit.n_params() {
        return domain(format!(
            "{} initial parameters for {} factors",
            init.len(),
            circuit.n_params()
        ));
    }
    check_circuit(h, circuit, reference)?;
    let lbfgs = LbfgsSettings {
        memory: settings.memory,
        max_evaluations: settings.max_evaluations,
        grad_tol: settings.grad_tol,
        f_tol: settings.f_tol,
    };
    let bounds = parameter_bounds(circuit);
    let r = optimizer::minimize(
        |x| energy_and_gradient(h, circuit, reference, x, settings.gradient),
        init,
        &bounds,
        &lbfgs,
    )?;
    Ok(VqeResult {
        energy: r.f,
        params: r.x,
        iterations: r.iterations,
        evaluations: r.evaluations,
        converged: r.converged,
        history: r.history,
    })
}
