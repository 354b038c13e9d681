//! Naive PCA baseline for the spiked Wigner model.

use serde::Serialize;

use super::eigen::power_iteration;
use super::instance::WignerInstance;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PcaResult {
    /// Top eigenvalue of `Y / sqrt(n)`.
    pub eigenvalue: f64,
    /// `(phi_1 . X)^2 / n`.
    pub overlap_sq: f64,
    /// `(2 / (n (n - 1))) sum_{i<j} (X_i X_j - delta xhat_i xhat_j)^2`.
    pub mse: f64,
    /// Rescaling `delta*` applied to `xhat xhat^T` with `||xhat||^2 = n`.
    pub delta: f64,
}

/// Optimal rescaling of the PCA estimate: `m2 - 1 / (lambda m2)` above the
/// spectral threshold `lambda m2^2 > 1`, else `0`.
pub fn pca_delta(m2: f64, lambda: f64) -> f64 {
    if lambda * m2 * m2 > 1.0 {
        m2 - 1.0 / (lambda * m2)
    } else {
        0.0
    }
}

/// PCA estimate `theta = delta* xhat xhat^T`, `xhat = sqrt(n) phi_1`.
///
/// Below the threshold the estimator is zero regardless of `phi_1`, so an
/// unconverged power iteration (the edge eigenvalues are nearly degenerate)
/// is tolerated there; the reported eigenvalue is then the Rayleigh quotient
/// of the last iterate.
pub fn pca_estimate_wigner(instance: &WignerInstance, tol: f64, max_iters: usize) -> Result<PcaResult> {
    let n = instance.n as f64;
    let m2 = instance.prior.moments().m2;
    let delta = pca_delta(m2, instance.lambda);
    let eig = power_iteration(&instance.y, tol, max_iters);
    if !eig.converged && delta > 0.0 {
        return Err(Error::NotConverged { what: "PCA power iteration".into(), iterations: eig.iterations });
    }
    let x = &instance.x;
    let dot: f64 = eig.vector.iter().zip(x).map(|(a, b)| a * b).sum();
    let overlap_sq = dot * dot / n;
    // With xhat = sqrt(n) phi: sum_{i != j} (X_i X_j - delta xhat_i xhat_j)^2
    // = full sum minus diagonal, both O(n).
    let xx: f64 = x.iter().map(|v| v * v).sum();
    let full = xx * xx - 2.0 * delta * n * dot * dot + delta * delta * n * n;
    let diag: f64 = x.iter().zip(&eig.vector).map(|(a, p)| (a * a - delta * n * p * p).powi(2)).sum();
    let mse = (full - diag) / (n * (n - 1.0));
    Ok(PcaResult { eigenvalue: eig.eigenvalue / n.sqrt(), overlap_sq, mse, delta })
}
