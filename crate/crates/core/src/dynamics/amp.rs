//! AMP for the spiked Wigner model with the Bayes-optimal denoiser.
//!
//! Iteration: `x^{t+1} = (Y / sqrt(n)) f_t(x^t) - b_t f_{t-1}(x^{t-1})` with
//! `f_t(x) = g(x / sqrt(q_t), lambda q_t)`, `g` the posterior mean of the
//! scalar channel and `b_t = mean(f_t'(x^t))`.
//!
//! Spectral start: `x^0 = sqrt(n (lambda - 1)) phi_1`, so that
//! `x^0 / sqrt(q_0) ~ sqrt(lambda q_0) X + Z` with `q_0 = 1 - 1/lambda` (unit
//! second moment), exactly the scalar channel the first denoiser expects. The
//! Onsager term of the first step uses `f_{-1}(x^{-1}) = x^0 / sqrt(lambda)`,
//! which makes the eigenvector a fixed point of the linear (Gaussian-prior)
//! iteration.
//!
//! Record `t` describes `xhat^t = f_{t-1}(x^{t-1})`, whose overlap and
//! normalized norm state evolution predicts to be `sqrt(q_t)` and whose
//! matrix MSE is `1 - q_t^2`. Record 0 is the spectral estimate
//! `sqrt(n q_0) phi_1`.

use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::eigen::power_iteration;
use super::instance::WignerInstance;
use super::state_evolution::{check_unit_moment, state_evolution_wigner};
use super::{empirical_overlap, matrix_mse};
use crate::error::{invalid, Error, Result};
use crate::rng::{stream, stream_rng};
use crate::scalar_channel::ScalarChannel;

/// Floor applied to `q_t` only inside `x / sqrt(q_t)`.
const Q_FLOOR: f64 = 1e-12;
/// Norm of the random start below the spectral threshold, relative to `sqrt(n)`.
const RANDOM_INIT_SCALE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AmpStatus {
    Completed,
    /// State evolution sits at `q = 0`; the denoiser returns the prior mean.
    StuckAtTrivial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmpRecord {
    pub t: usize,
    pub overlap_emp: f64,
    pub overlap_se: f64,
    pub norm_emp: f64,
    pub mse_emp: f64,
    pub mse_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmpTrace {
    pub records: Vec<AmpRecord>,
    pub status: AmpStatus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmpOptions {
    /// Residual tolerance for the spectral start, relative to `||Y||_F`.
    pub eig_tol: f64,
    pub eig_max_iters: usize,
    pub allow_non_unit_moment: bool,
    /// Seed of the random start used when `lambda <= 1`.
    pub init_seed: u64,
}

impl Default for AmpOptions {
    fn default() -> Self {
        AmpOptions { eig_tol: 1e-6, eig_max_iters: 20_000, allow_non_unit_moment: false, init_seed: 0 }
    }
}

fn record(t: usize, xhat: &[f64], x: &[f64], q: f64, m2: f64) -> AmpRecord {
    let n = x.len() as f64;
    AmpRecord {
        t,
        overlap_emp: empirical_overlap(xhat, x),
        overlap_se: q.sqrt(),
        norm_emp: (xhat.iter().map(|v| v * v).sum::<f64>() / n).sqrt(),
        mse_emp: matrix_mse(x, xhat),
        mse_se: m2 * m2 - q * q,
    }
}

/// Runs `iters` AMP steps on `instance`.
pub fn amp_wigner(instance: &WignerInstance, iters: usize, options: &AmpOptions) -> Result<AmpTrace> {
    amp_wigner_with(&ScalarChannel::new(instance.prior.clone()), instance, iters, options)
}

/// As [`amp_wigner`], reusing an existing channel (and its tables).
pub fn amp_wigner_with(channel: &ScalarChannel, instance: &WignerInstance, iters: usize, options: &AmpOptions) -> Result<AmpTrace> {
    if iters == 0 {
        return Err(invalid("AMP needs at least one iteration"));
    }
    check_unit_moment(channel, options.allow_non_unit_moment)?;
    let n = instance.n;
    let lambda = instance.lambda;
    let sqrt_n = (n as f64).sqrt();
    let m2 = channel.moments().m2;
    let se = state_evolution_wigner(channel, lambda, iters, None, true)?;
    let spectral = lambda > 1.0;

    let x0: Vec<f64> = if spectral {
        let eig = power_iteration(&instance.y, options.eig_tol, options.eig_max_iters);
        if !eig.converged {
            return Err(Error::NotConverged { what: "spectral initialization".into(), iterations: eig.iterations });
        }
        let mut phi = eig.vector;
        // The sign of phi_1 is arbitrary. Odd denoisers do not care; for a
        // skewed prior align the empirical skewness with the prior's.
        let skew = channel.prior().third_moment();
        if skew.abs() > 1e-12 && skew * phi.iter().map(|v| v.powi(3)).sum::<f64>() < 0.0 {
            phi.iter_mut().for_each(|v| *v = -*v);
        }
        let scale = (n as f64 * (lambda - 1.0)).sqrt();
        phi.iter().map(|v| scale * v).collect()
    } else {
        let mut rng = stream_rng(options.init_seed, stream::AMP_INIT);
        let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let nz = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        z.iter().map(|v| RANDOM_INIT_SCALE * sqrt_n * v / nz).collect()
    };

    let mut records = Vec::with_capacity(iters + 1);
    let q0 = se.q(0);
    let xhat0: Vec<f64> = if spectral {
        // sqrt(n q_0) phi_1 = x^0 sqrt(q_0 / (lambda - 1)).
        let c = (q0 / (lambda - 1.0)).sqrt();
        x0.iter().map(|v| c * v).collect()
    } else {
        x0.clone()
    };
    records.push(record(0, &xhat0, &instance.x, q0, m2));

    let mut x = x0.clone();
    let mut f_prev: Vec<f64> = x0.iter().map(|v| v / lambda.sqrt()).collect();
    let mut fx = vec![0.0; n];
    let mut yf = vec![0.0; n];
    let mut status = AmpStatus::Completed;
    for t in 0..iters {
        let q = se.q(t);
        if q <= 0.0 {
            status = AmpStatus::StuckAtTrivial;
            break;
        }
        let sq = q.max(Q_FLOOR).sqrt();
        let gamma = lambda * q;
        let mut b = 0.0;
        for (f, &xi) in fx.iter_mut().zip(&x) {
            let y = xi / sq;
            *f = channel.denoise(y, gamma);
            b += channel.denoise_derivative(y, gamma) / sq;
        }
        b /= n as f64;
        records.push(record(t + 1, &fx, &instance.x, se.q(t + 1), m2));
        instance.y.matvec(&fx, &mut yf);
        for i in 0..n {
            x[i] = yf[i] / sqrt_n - b * f_prev[i];
        }
        std::mem::swap(&mut f_prev, &mut fx);
    }
    Ok(AmpTrace { records, status })
}
