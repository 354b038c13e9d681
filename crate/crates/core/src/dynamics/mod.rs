//! Synthetic instances, spectral estimators, AMP and state evolution.

pub mod amp;
pub mod eigen;
pub mod instance;
pub mod pca;
pub mod state_evolution;

use rayon::prelude::*;

pub use amp::{amp_wigner, amp_wigner_with, AmpOptions, AmpRecord, AmpStatus, AmpTrace};
pub use eigen::{power_iteration, top_eigenvector, PowerResult};
pub use instance::{generate_wigner, generate_wishart, SymMatrix, WignerInstance, WishartInstance};
pub use pca::{pca_delta, pca_estimate_wigner, PcaResult};
pub use state_evolution::{state_evolution_wigner, state_evolution_wishart, SeTrace, WishartSeTrace};

use crate::error::Result;
use crate::priors::Prior;
use crate::scalar_channel::ScalarChannel;

/// `|<a, b>| / (||a|| ||b||)`, `0` when either vector vanishes.
pub fn empirical_overlap(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "overlap of vectors with different lengths");
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot.abs() / (na * nb)).min(1.0)
    }
}

/// `(1/n^2) ||X X^T - xhat xhat^T||_F^2`, computed in O(n).
pub fn matrix_mse(x: &[f64], xhat: &[f64]) -> f64 {
    let n = x.len() as f64;
    let xx: f64 = x.iter().map(|v| v * v).sum();
    let hh: f64 = xhat.iter().map(|v| v * v).sum();
    let xh: f64 = x.iter().zip(xhat).map(|(a, b)| a * b).sum();
    ((xx * xx - 2.0 * xh * xh + hh * hh) / (n * n)).max(0.0)
}

/// AMP on independent instances, one per seed, run concurrently. Each run
/// holds its own `n x n` matrix, so peak memory grows with the thread count.
pub fn amp_runs(prior: &Prior, lambda: f64, n: usize, iters: usize, seeds: &[u64], options: &AmpOptions) -> Result<Vec<(u64, AmpTrace)>> {
    amp_runs_with(&ScalarChannel::new(prior.clone()), lambda, n, iters, seeds, options)
}

/// [`amp_runs`] with the denoiser and state evolution of a given channel.
pub fn amp_runs_with(
    channel: &ScalarChannel,
    lambda: f64,
    n: usize,
    iters: usize,
    seeds: &[u64],
    options: &AmpOptions,
) -> Result<Vec<(u64, AmpTrace)>> {
    let prior = channel.prior();
    seeds
        .par_iter()
        .map(|&seed| {
            let inst = generate_wigner(prior, n, lambda, seed)?;
            let opts = AmpOptions { init_seed: seed, ..*options };
            Ok((seed, amp_wigner_with(channel, &inst, iters, &opts)?))
        })
        .collect()
}

pub fn pca_runs(prior: &Prior, lambda: f64, n: usize, seeds: &[u64], tol: f64, max_iters: usize) -> Result<Vec<(u64, PcaResult)>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let inst = generate_wigner(prior, n, lambda, seed)?;
            Ok((seed, pca_estimate_wigner(&inst, tol, max_iters)?))
        })
        .collect()
}
