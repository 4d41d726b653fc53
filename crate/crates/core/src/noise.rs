//! Gaussian perturbation of converged parameters.
//!
//! Samples come from ChaCha8 seeded with the study seed, drawn in sample
//! order and, within a sample, in parameter order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::simulator::{Circuit, Hamiltonian, StateVector};
use crate::vqe;

pub const DEFAULT_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseStudy {
    pub sd: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub energies: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (`n − 1` denominator; 0 for one sample).
    pub std: f64,
}

/// `n_samples` vectors with `θ_k ~ Normal(theta_opt[k], sd)`.
pub fn sample_noisy_params(
    theta_opt: &[f64],
    sd: f64,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if !(sd > 0.0) || !sd.is_finite() {
        return domain(format!("noise sd {sd} must be positive and finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let v = theta_opt
            .iter()
            .map(|&mu| {
                Normal::new(mu, sd)
                    .map(|d| d.sample(&mut rng))
                    .map_err(|e| Error::Domain(format!("normal({mu}, {sd}): {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(v);
    }
    Ok(out)
}

pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn noise_study(
    h: &Hamiltonian,
    reference: &StateVector,
    circuit: &Circuit,
    theta_opt: &[f64],
    sd: f64,
    n_samples: usize,
    seed: u64,
) -> Result<NoiseStudy> {
    if n_samples == 0 {
        return domain("a noise study needs at least one sample");
    }
    if theta_opt.len() != circuit.n_params() {
        return domain(format!(
            "{} parameters for {} factors",
            theta_opt.len(),
            circuit.n_params()
        ));
    }
    let samples = sample_noisy_params(theta_opt, sd, n_samples, seed)?;
    let energies = samples
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            vqe::energy(h, circuit, reference, x).map_err(|e| match e {
                Error::Numerical(m) => Error::Numerical(format!("sample {i}: {m}")),
                Error::Domain(m) => Error::Domain(format!("sample {i}: {m}")),
                other => other,
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, std) = mean_and_std(&energies);
    Ok(NoiseStudy { sd, n_samples, seed, energies, mean, std })
}
