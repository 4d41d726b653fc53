//! Screening-driven ansatz construction.
//!
//! Doubles are ranked by the energy each lowers on its own, scatterers are
//! attached to the doubles they fail to commute with when the pair lowers the
//! energy further, and the resulting blocks are woven into one product with
//! the singles appended last.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion_ops::{
    admissible, enumerate_doubles, enumerate_scatterers, enumerate_singles, CsoSpec, Excitation,
    Scatterer, Sector,
};
use crate::optimizer::{self, LbfgsSettings};
use crate::simulator::{hf_state, Circuit, GeneratorCache, Hamiltonian, StateVector};
use crate::vqe::{self, GradientMethod};

/// Starting angles tried for every screening problem.
pub const SCREEN_STARTS: [f64; 5] = [0.0, 0.05, -0.05, 0.2, -0.2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompassConfig {
    /// Hartree threshold on `|E_I − E_HF|`.
    pub eps1: f64,
    /// Hartree threshold on `|E_Iμ − E_I|`.
    pub eps2: f64,
    pub sector: Sector,
    /// `None` picks the frontier orbitals.
    #[serde(default)]
    pub cso: Option<CsoSpec>,
}

impl CompassConfig {
    pub fn new(eps1: f64, eps2: f64, sector: Sector) -> Self {
        Self { eps1, eps2, sector, cso: None }
    }

    /// `COMPASS(5,7)` for `eps1 = 1e-5`, `eps2 = 1e-7`.
    pub fn label(&self) -> String {
        let tag = |e: f64| {
            let v = -e.log10();
            if (v - v.round()).abs() < 1e-9 {
                format!("{}", v.round() as i64)
            } else {
                format!("{v:.2}")
            }
        };
        format!("COMPASS({},{})", tag(self.eps1), tag(self.eps2))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, e) in [("eps1", self.eps1), ("eps2", self.eps2)] {
            if !(e > 0.0) {
                return Err(Error::Domain(format!("{name} = {e} must be positive")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for CompassConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.label(), self.sector)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenedDouble {
    pub excitation: Excitation,
    pub theta_opt: f64,
    pub energy: f64,
    pub delta_e: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttachedScatterer {
    pub scatterer: Scatterer,
    pub theta_init: f64,
    pub theta_tau_refined: f64,
    pub energy: f64,
    pub delta_e: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorBlock {
    pub block_index: usize,
    pub tau: ScreenedDouble,
    pub scatterers: Vec<AttachedScatterer>,
}

/// One `τ` followed by the scatterers acting after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzBlock {
    pub tau: Excitation,
    pub scatterers: Vec<Scatterer>,
}

/// A single exponential factor of an ansatz.
#[derive(Debug, Clone, PartialEq)]
pub enum Factor<'a> {
    Double(&'a Excitation),
    Scatterer(&'a Scatterer),
    Single(&'a Excitation),
}

impl fmt::Display for Factor<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Double(t) | Factor::Single(t) => write!(f, "{t}"),
            Factor::Scatterer(s) => write!(f, "{s}"),
        }
    }
}

/// Parameter layout: each block contributes `[τ, σ_1, σ_2, ...]` in order,
/// then one parameter per single.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ansatz {
    pub label: String,
    pub n_qubits: usize,
    pub n_electrons: usize,
    pub blocks: Vec<AnsatzBlock>,
    pub singles_tail: Vec<Excitation>,
    pub initial_params: Vec<f64>,
}

impl Ansatz {
    pub fn n_params(&self) -> usize {
        self.blocks.iter().map(|b| 1 + b.scatterers.len()).sum::<usize>() + self.singles_tail.len()
    }

    /// Factors in application order (first acts first on the reference).
    pub fn factors(&self) -> Vec<Factor<'_>> {
        let mut out = Vec::with_capacity(self.n_params());
        for b in &self.blocks {
            out.push(Factor::Double(&b.tau));
            out.extend(b.scatterers.iter().map(Factor::Scatterer));
        }
        out.extend(self.singles_tail.iter().map(Factor::Single));
        out
    }

    pub fn parameter_labels(&self) -> Vec<String> {
        self.factors().iter().map(|f| f.to_string()).collect()
    }

    pub fn circuit(&self) -> Result<Circuit> {
        let factors = self
            .factors()
            .into_par_iter()
            .map(|f| {
                match f {
                    Factor::Double(t) | Factor::Single(t) => {
                        GeneratorCache::for_label(t, self.n_qubits)
                    }
                    Factor::Scatterer(s) => GeneratorCache::for_label(s, self.n_qubits),
                }
                .map(Arc::new)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Circuit { n_qubits: self.n_qubits, factors })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let a: Self = serde_json::from_str(text)?;
        if a.initial_params.len() != a.n_params() {
            return Err(Error::Construction(format!(
                "{} initial parameters for {} factors",
                a.initial_params.len(),
                a.n_params()
            )));
        }
        Ok(a)
    }
}

fn screening_settings() -> LbfgsSettings {
    LbfgsSettings { f_tol: 1e-10, ..Default::default() }
}

struct Minimum {
    x: Vec<f64>,
    f: f64,
}

/// Runs the quasi-Newton search from every start and keeps the lowest
/// converged result; `None` when no start converged.
fn minimize_with_starts(
    h: &Hamiltonian,
    reference: &StateVector,
    circuit: &Circuit,
    starts: &[Vec<f64>],
) -> Result<Option<Minimum>> {
    let bounds = vqe::parameter_bounds(circuit);
    let settings = screening_settings();
    let mut best: Option<Minimum> = None;
    for x0 in starts {
        let r = optimizer::minimize(
            |x| vqe::energy_and_gradient(h, circuit, reference, x, GradientMethod::Adjoint),
            x0,
            &bounds,
            &settings,
        )?;
        if r.converged && best.as_ref().is_none_or(|b| r.f < b.f) {
            best = Some(Minimum { x: r.x, f: r.f });
        }
    }
    Ok(best)
}

/// One-parameter screening of every double against the reference.
pub fn screen_doubles(
    h: &Hamiltonian,
    reference: &StateVector,
    pool: &[Excitation],
    eps1: f64,
) -> Result<Vec<ScreenedDouble>> {
    let e_ref = h.energy(reference)?;
    let starts: Vec<Vec<f64>> = SCREEN_STARTS.iter().map(|&t| vec![t]).collect();
    let evaluated = pool
        .par_iter()
        .map(|tau| {
            let cache = GeneratorCache::for_label(tau, h.n_qubits())?;
            let circuit = Circuit { n_qubits: h.n_qubits(), factors: vec![Arc::new(cache)] };
            let m = minimize_with_starts(h, reference, &circuit, &starts)?
                .ok_or_else(|| Error::Screening(format!("{tau}: no start converged")))?;
            Ok(ScreenedDouble {
                excitation: tau.clone(),
                theta_opt: m.x[0],
                energy: m.f,
                delta_e: (m.f - e_ref).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut survivors: Vec<ScreenedDouble> =
        evaluated.into_iter().filter(|d| d.delta_e > eps1).collect();
    survivors.sort_by(|a, b| {
        b.delta_e.total_cmp(&a.delta_e).then_with(|| a.excitation.cmp(&b.excitation))
    });
    Ok(survivors)
}

/// Two-parameter screening of scatterers acting after `tau`.
///
/// Candidates that do not share a CSO orbital with `tau` or that fail to
/// reach rank three are skipped.
pub fn screen_scatterers(
    h: &Hamiltonian,
    reference: &StateVector,
    tau: &ScreenedDouble,
    sigma_pool: &[Scatterer],
    eps2: f64,
    block_index: usize,
) -> Result<OperatorBlock> {
    let n_qubits = h.n_qubits();
    let candidates: Vec<&Scatterer> = sigma_pool
        .iter()
        .filter(|s| admissible(&tau.excitation, s, h.n_electrons))
        .collect();
    let tau_cache = Arc::new(GeneratorCache::for_label(&tau.excitation, n_qubits)?);
    let starts: Vec<Vec<f64>> = SCREEN_STARTS.iter().map(|&t| vec![tau.theta_opt, t]).collect();
    let evaluated = candidates
        .par_iter()
        .map(|&sigma| {
            let cache = GeneratorCache::for_label(sigma, n_qubits)?;
            let circuit = Circuit { n_qubits, factors: vec![tau_cache.clone(), Arc::new(cache)] };
            let m = minimize_with_starts(h, reference, &circuit, &starts)?.ok_or_else(|| {
                Error::Screening(format!("{} with {sigma}: no start converged", tau.excitation))
            })?;
            Ok(AttachedScatterer {
                scatterer: sigma.clone(),
                theta_init: m.x[1],
                theta_tau_refined: m.x[0],
                energy: m.f,
                delta_e: (m.f - tau.energy).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut attached: Vec<AttachedScatterer> =
        evaluated.into_iter().filter(|a| a.delta_e > eps2).collect();
    attached.sort_by(|a, b| {
        b.delta_e.total_cmp(&a.delta_e).then_with(|| a.scatterer.cmp(&b.scatterer))
    });
    Ok(OperatorBlock { block_index, tau: tau.clone(), scatterers: attached })
}

/// Weaves screened blocks and the singles tail into one ansatz.
pub fn build_ansatz(
    label: &str,
    n_qubits: usize,
    n_electrons: usize,
    blocks: &[OperatorBlock],
    singles: &[Excitation],
) -> Result<Ansatz> {
    let mut seen = HashSet::new();
    for t in blocks.iter().map(|b| &b.tau.excitation).chain(singles) {
        if !seen.insert(t.key()) {
            return Err(Error::Construction(format!("{t} appears twice")));
        }
    }
    let mut singles_tail = singles.to_vec();
    singles_tail.sort();
    let mut initial_params = Vec::new();
    let mut out_blocks = Vec::with_capacity(blocks.len());
    for b in blocks {
        let theta_tau = b.scatterers.first().map_or(b.tau.theta_opt, |s| s.theta_tau_refined);
        initial_params.push(theta_tau);
        initial_params.extend(b.scatterers.iter().map(|s| s.theta_init));
        out_blocks.push(AnsatzBlock {
            tau: b.tau.excitation.clone(),
            scatterers: b.scatterers.iter().map(|s| s.scatterer.clone()).collect(),
        });
    }
    initial_params.extend(std::iter::repeat_n(0.0, singles_tail.len()));
    Ok(Ansatz {
        label: label.to_string(),
        n_qubits,
        n_electrons,
        blocks: out_blocks,
        singles_tail,
        initial_params,
    })
}

/// Everything the protocol produced for one Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompassRun {
    pub config: CompassConfig,
    pub hf_energy: f64,
    pub pool_size: usize,
    pub scatterer_pool_size: usize,
    pub blocks: Vec<OperatorBlock>,
    pub ansatz: Ansatz,
}

/// Screens, attaches and assembles for a closed-shell reference.
pub fn run(h: &Hamiltonian, config: &CompassConfig) -> Result<CompassRun> {
    config.validate()?;
    let n_qubits = h.n_qubits();
    let n_spatial = n_qubits / 2;
    let n_electrons = h.n_electrons;
    let reference = hf_state(n_qubits, n_electrons)?;
    let hf_energy = h.energy(&reference)?;
    let doubles = enumerate_doubles(n_spatial, n_electrons)?;
    let singles = enumerate_singles(n_spatial, n_electrons)?;
    let cso = config.cso.clone().unwrap_or_else(|| CsoSpec::frontier(n_spatial, n_electrons));
    let bath = enumerate_scatterers(n_spatial, n_electrons, &cso, config.sector)?;

    let screened = screen_doubles(h, &reference, &doubles, config.eps1)?;
    let blocks = screened
        .iter()
        .enumerate()
        .map(|(i, tau)| screen_scatterers(h, &reference, tau, &bath, config.eps2, i + 1))
        .collect::<Result<Vec<_>>>()?;
    let label = config.to_string();
    let ansatz = build_ansatz(&label, n_qubits, n_electrons, &blocks, &singles)?;
    Ok(CompassRun {
        config: config.clone(),
        hf_energy,
        pool_size: doubles.len(),
        scatterer_pool_size: bath.len(),
        blocks,
        ansatz,
    })
}

/// Disentangled UCCSD: every double in lexical order, then every single,
/// all starting at zero.
pub fn uccsd_ansatz(n_spatial: usize, n_electrons: usize) -> Result<Ansatz> {
    let doubles = enumerate_doubles(n_spatial, n_electrons)?;
    let singles = enumerate_singles(n_spatial, n_electrons)?;
    let n_params = doubles.len() + singles.len();
    Ok(Ansatz {
        label: "UCCSD".to_string(),
        n_qubits: 2 * n_spatial,
        n_electrons,
        blocks: doubles.into_iter().map(|tau| AnsatzBlock { tau, scatterers: vec![] }).collect(),
        singles_tail: singles,
        initial_params: vec![0.0; n_params],
    })
}
