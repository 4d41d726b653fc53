//! Box-constrained limited-memory BFGS.
//!
//! A projected variant of L-BFGS-B: variables sitting on a bound with the
//! gradient pushing outward are frozen for the iteration, the two-loop
//! recursion runs over the free set, and an Armijo backtracking search
//! follows the projected path.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsSettings {
    /// Correction pairs kept.
    pub memory: usize,
    /// Function+gradient evaluation cap.
    pub max_evaluations: usize,
    /// Projected-gradient ∞-norm at which the run counts as converged.
    pub grad_tol: f64,
    /// Objective change at which the run counts as converged (two
    /// consecutive iterations must both fall below it).
    pub f_tol: f64,
}

impl Default for LbfgsSettings {
    fn default() -> Self {
        Self { memory: 10, max_evaluations: 10_000, grad_tol: 1e-8, f_tol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Objective at the start and after every accepted step.
    pub history: Vec<f64>,
}

fn project(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.clamp(lo, hi);
    }
}

/// Gradient with components that would leave the box zeroed.
fn projected_gradient(x: &[f64], g: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    x.iter()
        .zip(g)
        .zip(bounds)
        .map(|((&xi, &gi), &(lo, hi))| {
            if (xi <= lo && gi > 0.0) || (xi >= hi && gi < 0.0) {
                0.0
            } else {
                gi
            }
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes `f` from `x0` inside `bounds` (use infinities for open sides).
///
/// `f` returns the objective and its gradient. The best point seen is
/// returned; hitting the evaluation cap yields `converged = false` rather
/// than an error.
pub fn minimize<F>(
    mut f: F,
    x0: &[f64],
    bounds: &[(f64, f64)],
    settings: &LbfgsSettings,
) -> Result<OptimResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let n = x0.len();
    assert_eq!(bounds.len(), n, "one bound pair per variable");
    let mut x = x0.to_vec();
    project(&mut x, bounds);

    let mut evaluations = 0usize;
    let mut eval = |x: &[f64], evaluations: &mut usize| -> Result<(f64, Vec<f64>)> {
        *evaluations += 1;
        let (fx, g) = f(x)?;
        if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite objective {fx} or gradient")));
        }
        Ok((fx, g))
    };

    let (mut fx, mut g) = eval(&x, &mut evaluations)?;
    let mut history = vec![fx];
    let mut iterations = 0usize;
    if n == 0 {
        return Ok(OptimResult { x, f: fx, iterations, evaluations, converged: true, history });
    }

    let mut s_hist: VecDeque<Vec<f64>> = VecDeque::new();
    let mut y_hist: VecDeque<Vec<f64>> = VecDeque::new();
    let mut small_changes = 0usize;
    let mut converged = false;

    loop {
        let pg = projected_gradient(&x, &g, bounds);
        if inf_norm(&pg) < settings.grad_tol {
            converged = true;
            break;
        }
        if evaluations >= settings.max_evaluations {
            break;
        }

        // Free variables: the ones with non-zero projected gradient or
        // strictly inside their box.
        let free: Vec<bool> = (0..n)
            .map(|i| pg[i] != 0.0 || (x[i] > bounds[i].0 && x[i] < bounds[i].1))
            .collect();
        let masked = |v: &[f64]| -> Vec<f64> {
            v.iter().zip(&free).map(|(a, &f)| if f { *a } else { 0.0 }).collect()
        };

        // Two-loop recursion.
        let mut q = masked(&g);
        let m = s_hist.len();
        let mut alpha = vec![0.0; m];
        let mut rho = vec![0.0; m];
        for k in (0..m).rev() {
            let (s, y) = (masked(&s_hist[k]), masked(&y_hist[k]));
            let sy = dot(&s, &y);
            rho[k] = if sy > 0.0 { 1.0 / sy } else { 0.0 };
            alpha[k] = rho[k] * dot(&s, &q);
            for (qi, yi) in q.iter_mut().zip(&y) {
                *qi -= alpha[k] * yi;
            }
        }
        if m > 0 {
            let (s, y) = (masked(&s_hist[m - 1]), masked(&y_hist[m - 1]));
            let yy = dot(&y, &y);
            if yy > 0.0 {
                let gamma = dot(&s, &y) / yy;
                if gamma > 0.0 {
                    q.iter_mut().for_each(|v| *v *= gamma);
                }
            }
        }
        for k in 0..m {
            let (s, y) = (masked(&s_hist[k]), masked(&y_hist[k]));
            let beta = rho[k] * dot(&y, &q);
            for (qi, si) in q.iter_mut().zip(&s) {
                *qi += (alpha[k] - beta) * si;
            }
        }
        let mut d: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&d, &g);
        let mut first_step = if m == 0 { (1.0 / inf_norm(&pg)).min(1.0) } else { 1.0 };
        if !(slope < 0.0) {
            s_hist.clear();
            y_hist.clear();
            d = masked(&g).iter().map(|v| -v).collect();
            slope = dot(&d, &g);
            first_step = (1.0 / inf_norm(&pg)).min(1.0);
        }

        // Armijo backtracking along the projected path.
        let mut step = first_step;
        let mut accepted = None;
        for _ in 0..50 {
            if evaluations >= settings.max_evaluations {
                break;
            }
            let mut trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            project(&mut trial, bounds);
            let moved: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            let decrease = dot(&g, &moved);
            if inf_norm(&moved) == 0.0 {
                break;
            }
            let (ft, gt) = eval(&trial, &mut evaluations)?;
            if ft <= fx + 1e-4 * decrease.min(0.0) && decrease < 0.0 {
                accepted = Some((trial, ft, gt));
                break;
            }
            // Quadratic interpolation, safeguarded.
            let denom = 2.0 * (ft - fx - step * slope);
            let mut next = if denom > 0.0 { -slope * step * step / denom } else { 0.5 * step };
            next = next.clamp(0.1 * step, 0.5 * step);
            step = next;
        }

        let Some((x_new, f_new, g_new)) = accepted else {
            if !s_hist.is_empty() {
                s_hist.clear();
                y_hist.clear();
                continue;
            }
            // No descent possible along steepest descent either: this is
            // as stationary as floating point allows.
            converged = inf_norm(&pg) < settings.grad_tol.max(1e-7);
            break;
        };

        iterations += 1;
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-16 * dot(&y, &y).max(1e-300) {
            s_hist.push_back(s);
            y_hist.push_back(y);
            if s_hist.len() > settings.memory {
                s_hist.pop_front();
                y_hist.pop_front();
            }
        }
        let change = (fx - f_new).abs();
        x = x_new;
        fx = f_new;
        g = g_new;
        history.push(fx);
        if change < settings.f_tol {
            small_changes += 1;
            if small_changes >= 2 {
                converged = true;
                break;
            }
        } else {
            small_changes = 0;
        }
    }

    Ok(OptimResult { x, f: fx, iterations, evaluations, converged, history })
}
