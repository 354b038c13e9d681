//! Leading eigenpair of a dense symmetric matrix by power iteration.

use rand_distr::{Distribution, StandardNormal};

use super::instance::SymMatrix;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Fixed seed for the starting vector, so eigenvectors are reproducible.
const START_SEED: u64 = 0x5eed_e16e;

#[derive(Debug, Clone, PartialEq)]
pub struct PowerResult {
    pub eigenvalue: f64,
    /// Unit-norm eigenvector estimate.
    pub vector: Vec<f64>,
    pub iterations: usize,
    /// `||Y v - theta v||`.
    pub residual: f64,
    pub converged: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn iterate(y: &SymMatrix, shift: f64, tol: f64, max_iters: usize) -> PowerResult {
    let n = y.n();
    let mut rng = stream_rng(START_SEED, 0);
    let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let target = tol * y.frobenius_norm();
    let mut w = vec![0.0; n];
    let mut result = PowerResult { eigenvalue: 0.0, vector: v.clone(), iterations: 0, residual: f64::INFINITY, converged: false };
    for it in 1..=max_iters {
        y.matvec(&v, &mut w);
        let theta: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let residual = w.iter().zip(&v).map(|(a, b)| (a - theta * b).powi(2)).sum::<f64>().sqrt();
        result = PowerResult { eigenvalue: theta, vector: v.clone(), iterations: it, residual, converged: residual <= target };
        if result.converged {
            break;
        }
        // Shifted step: w + shift v.
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi += shift * vi;
        }
        let nw = norm(&w);
        if nw == 0.0 {
            break;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
    }
    result
}

/// Power iteration for the algebraically largest eigenvalue.
///
/// Plain iteration finds the eigenvalue of largest magnitude. If that turns
/// out negative, the run is repeated on `Y + |theta| I`, whose spectrum is
/// non-negative, so the dominant eigenvalue is the largest one of `Y`.
/// Convergence: `||Y v - theta v|| <= tol ||Y||_F`.
pub fn power_iteration(y: &SymMatrix, tol: f64, max_iters: usize) -> PowerResult {
    let first = iterate(y, 0.0, tol, max_iters);
    if first.eigenvalue >= 0.0 {
        return first;
    }
    iterate(y, first.eigenvalue.abs(), tol, max_iters)
}

/// Leading eigenpair, or an error when the residual target is not met.
pub fn top_eigenvector(y: &SymMatrix, tol: f64, max_iters: usize) -> Result<(f64, Vec<f64>)> {
    let r = power_iteration(y, tol, max_iters);
    if !r.converged {
        return Err(Error::NotConverged { what: format!("power iteration (residual {:.3e})", r.residual), iterations: r.iterations });
    }
    Ok((r.eigenvalue, r.vector))
}
