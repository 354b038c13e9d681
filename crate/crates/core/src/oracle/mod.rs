//! Small-`n` ground truth for the spiked Wigner model.
//!
//! All estimators average exact-enumeration quantities over independent
//! instances. Trial `t` of seed `s` draws its signal and noise from streams
//! that depend only on `(s, t)`, so estimates at different `lambda` (or for a
//! prior and its quantization) share their random numbers, and instances of
//! different sizes are nested.

mod enumerate;
mod rem;

pub use enumerate::{PosteriorMoments, MAX_STATES};
pub use rem::{rem_free_energy, rem_mc, MAX_REM_N};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::SymMatrix;
use crate::error::{invalid, Result};
use crate::priors::Prior;
use crate::rng::{stream, trial_rng};
use crate::rs_wigner::SpikedWigner;
use enumerate::{enumerate, support};

/// Sample mean with its standard error `sd / sqrt(trials)` (zero for a
/// single trial).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Estimate {
        let k = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / k;
        if samples.len() < 2 {
            return Estimate { mean, stderr: 0.0 };
        }
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (k - 1.0);
        Estimate { mean, stderr: (var / k).sqrt() }
    }
}

/// Finite-`n` estimates next to their replica-symmetric limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub n: usize,
    pub lambda: f64,
    pub trials: usize,
    pub f_n: Estimate,
    pub mmse_n: Estimate,
    /// `sup_q F(lambda, q)`.
    pub rs_free_energy: f64,
    /// `m2^2 - q*^2`.
    pub rs_mmse: f64,
    pub overlap_variance: Option<f64>,
}

/// Finite-difference check of `F_n'(lambda) = (n-1)/(4n) (m2^2 - MMSE_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IMmseCheck {
    pub residual: f64,
    /// Difference quotient of `F_n` (central, or forward when `lambda < h`).
    pub slope_fd: f64,
    pub slope_fd_stderr: f64,
    pub slope_mmse: f64,
    pub slope_mmse_stderr: f64,
}

/// `|F_n(P) - F_n(P_bar)|` against the transport bound for a prior and its
/// image under a coordinate-wise map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WassersteinCheck {
    pub lhs: f64,
    pub lhs_stderr: f64,
    pub rhs: f64,
    /// Distance between the laws of `(X_i X_j / sqrt(n))_{i<j}` realized by
    /// the coupling (an upper bound on their `W_2`).
    pub coupling_distance: f64,
    pub holds: bool,
}

fn check_common(n: usize, lambda: f64, trials: usize) -> Result<()> {
    if n < 2 {
        return Err(invalid(format!("need n >= 2, got {n}")));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    Ok(())
}

/// Signal indices into `support` and unit-scale noise for trial `t`.
struct Draw {
    idx: Vec<usize>,
    z: Vec<f64>,
}

fn draw(support: &[(f64, f64)], n: usize, seed: u64, t: usize) -> Draw {
    let mut rng = trial_rng(seed, t, stream::SIGNAL);
    let idx = (0..n)
        .map(|_| {
            let mut u: f64 = rng.random();
            for (k, s) in support.iter().enumerate() {
                if u < s.1 {
                    return k;
                }
                u -= s.1;
            }
            support.len() - 1
        })
        .collect();
    let mut noise = trial_rng(seed, t, stream::NOISE);
    // Column by column, so the instance of size n' < n (same seed and
    // trial) is the leading n' x n' block of this one.
    let mut z = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..j {
            let v: f64 = StandardNormal.sample(&mut noise);
            z[i * n + j] = v;
            z[j * n + i] = v;
        }
    }
    Draw { idx, z }
}

fn observation(x: &[f64], z: &[f64], lambda: f64) -> Vec<f64> {
    let n = x.len();
    let scale = (lambda / n as f64).sqrt();
    let mut y = z.to_vec();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                y[i * n + j] += scale * x[i] * x[j];
            }
        }
    }
    y
}

fn signal(support: &[(f64, f64)], d: &Draw) -> Vec<f64> {
    d.idx.iter().map(|&k| support[k].0).collect()
}

fn pair_mse(x: &[f64], second: &[f64]) -> f64 {
    let n = x.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            acc += (x[i] * x[j] - second[i * n + j]).powi(2);
        }
    }
    2.0 * acc / (n * (n - 1)) as f64
}

fn par_trials<T: Send>(trials: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..trials).into_par_iter().map(f).collect()
}

/// Exact posterior moments for one observed matrix (zero diagonal assumed).
pub fn exact_posterior(prior: &Prior, y: &SymMatrix, lambda: f64) -> Result<PosteriorMoments> {
    let n = y.n();
    check_common(n, lambda, 1)?;
    let sup = support(prior)?;
    let mut buf = Vec::with_capacity(n * n);
    for i in 0..n {
        buf.extend_from_slice(y.row(i));
    }
    enumerate(&sup, &buf, n, lambda, None, true)
}

/// `E[X_i X_j | Y]` for all pairs, `n x n` row-major.
pub fn exact_posterior_products(prior: &Prior, y: &SymMatrix, lambda: f64) -> Result<Vec<f64>> {
    Ok(exact_posterior(prior, y, lambda)?.second)
}

/// Per-trial `(log Z / n, pair MSE)`.
fn wigner_trials(prior: &Prior, n: usize, lambda: f64, trials: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    check_common(n, lambda, trials)?;
    let sup = support(prior)?;
    enumerate::check_states(sup.len(), n)?;
    par_trials(trials, |t| {
        let d = draw(&sup, n, seed, t);
        let x = signal(&sup, &d);
        let post = enumerate(&sup, &observation(&x, &d.z, lambda), n, lambda, None, true)?;
        Ok((post.log_z / n as f64, pair_mse(&x, &post.second)))
    })
}

/// Monte Carlo `MMSE_n = (2/(n(n-1))) sum_{i<j} E[(X_i X_j - E[X_i X_j|Y])^2]`.
pub fn mmse_mc(prior: &Prior, n: usize, lambda: f64, trials: usize, seed: u64) -> Result<Estimate> {
    let samples: Vec<f64> = wigner_trials(prior, n, lambda, trials, seed)?.into_iter().map(|s| s.1).collect();
    Ok(Estimate::from_samples(&samples))
}

/// Per-trial `(log Z / n, C)` where `C = (1/n) sum_{i<j} sqrt(lambda/n) Z_ij X_i X_j`
/// is a mean-zero quantity correlated with `log Z`.
fn free_energy_trials(prior: &Prior, n: usize, lambda: f64, trials: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    check_common(n, lambda, trials)?;
    let sup = support(prior)?;
    enumerate::check_states(sup.len(), n)?;
    let a = (lambda / n as f64).sqrt();
    par_trials(trials, |t| {
        let d = draw(&sup, n, seed, t);
        let x = signal(&sup, &d);
        let f = enumerate(&sup, &observation(&x, &d.z, lambda), n, lambda, None, false)?.log_z / n as f64;
        let mut c = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                c += a * d.z[i * n + j] * x[i] * x[j];
            }
        }
        Ok((f, c / n as f64))
    })
}

/// Per-trial `log Z_n / n`. Trial `t` uses the same instance for every
/// `lambda`, and its size-`n'` block for smaller `n'`.
pub fn free_energy_samples(prior: &Prior, n: usize, lambda: f64, trials: usize, seed: u64) -> Result<Vec<f64>> {
    Ok(free_energy_trials(prior, n, lambda, trials, seed)?.into_iter().map(|s| s.0).collect())
}

/// Monte Carlo `F_n(lambda) = (1/n) E log Z_n(lambda)`.
pub fn free_energy_mc(prior: &Prior, n: usize, lambda: f64, trials: usize, seed: u64) -> Result<Estimate> {
    Ok(Estimate::from_samples(&free_energy_samples(prior, n, lambda, trials, seed)?))
}

/// [`free_energy_mc`] with the noise-signal correlation
/// `(1/n) sum_{i<j} sqrt(lambda/n) Z_ij X_i X_j` (mean zero) as a control
/// variate, coefficient fitted by least squares on the same trials.
pub fn free_energy_mc_cv(prior: &Prior, n: usize, lambda: f64, trials: usize, seed: u64) -> Result<Estimate> {
    let s = free_energy_trials(prior, n, lambda, trials, seed)?;
    let k = s.len() as f64;
    let (mf, mc) = (s.iter().map(|v| v.0).sum::<f64>() / k, s.iter().map(|v| v.1).sum::<f64>() / k);
    let cov: f64 = s.iter().map(|v| (v.0 - mf) * (v.1 - mc)).sum();
    let var: f64 = s.iter().map(|v| (v.1 - mc).powi(2)).sum();
    let beta = if var > 0.0 { cov / var } else { 0.0 };
    let adjusted: Vec<f64> = s.iter().map(|v| v.0 - beta * v.1).collect();
    Ok(Estimate::from_samples(&adjusted))
}

/// `F_n` and `MMSE_n` from the same enumerations, with the RS limits.
pub fn wigner_report(prior: &Prior, n: usize, lambda: f64, trials: usize, seed: u64) -> Result<OracleReport> {
    let samples = wigner_trials(prior, n, lambda, trials, seed)?;
    let f: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let m: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let model = SpikedWigner::new(prior.clone());
    let sol = model.solve(lambda)?;
    Ok(OracleReport {
        n,
        lambda,
        trials,
        f_n: Estimate::from_samples(&f),
        mmse_n: Estimate::from_samples(&m),
        rs_free_energy: sol.value,
        rs_mmse: model.mmse_from_overlap(sol.q_star),
        overlap_variance: None,
    })
}

/// Compares a difference quotient of `F_n` with the MMSE side of the I-MMSE
/// relation. The three evaluations share every instance.
pub fn i_mmse_check(prior: &Prior, n: usize, lambda: f64, h: f64, trials: usize, seed: u64) -> Result<IMmseCheck> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid(format!("step h must be positive, got {h}")));
    }
    let (lo, width) = if lambda >= h { (lambda - h, 2.0 * h) } else { (lambda, h) };
    let hi = lo + width;
    let fl = free_energy_samples(prior, n, lo, trials, seed)?;
    let fh = free_energy_samples(prior, n, hi, trials, seed)?;
    let mmse = mmse_mc(prior, n, lambda, trials, seed)?;
    let quotients: Vec<f64> = fh.iter().zip(&fl).map(|(a, b)| (a - b) / width).collect();
    let fd = Estimate::from_samples(&quotients);
    let m2 = prior.second_moment();
    let slope_mmse = (n - 1) as f64 / (4.0 * n as f64) * (m2 * m2 - mmse.mean);
    Ok(IMmseCheck {
        residual: (fd.mean - slope_mmse).abs(),
        slope_fd: fd.mean,
        slope_fd_stderr: fd.stderr,
        slope_mmse,
        slope_mmse_stderr: (n - 1) as f64 / (4.0 * n as f64) * mmse.stderr,
    })
}

/// Variance of the replica overlap `R = x1 . x2 / n` under the posterior
/// given `Y` and the revealed coordinates `X_i` (each revealed with
/// probability `epsilon`), averaged over instances:
/// `E[<R^2> - <R>^2] = E[(1/n^2) sum_{ij} (<x_i x_j>^2 - <x_i>^2 <x_j>^2)]`.
pub fn pinned_overlap_variance(
    prior: &Prior,
    n: usize,
    lambda: f64,
    epsilon: f64,
    trials: usize,
    seed: u64,
) -> Result<Estimate> {
    check_common(n, lambda, trials)?;
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(invalid(format!("epsilon must lie in [0, 1], got {epsilon}")));
    }
    let sup = support(prior)?;
    let samples = par_trials(trials, |t| {
        let d = draw(&sup, n, seed, t);
        let x = signal(&sup, &d);
        let mut rng = trial_rng(seed, t, stream::PINNING);
        let pins: Vec<Option<f64>> = x.iter().map(|&xi| (rng.random::<f64>() < epsilon).then_some(xi)).collect();
        let post = enumerate(&sup, &observation(&x, &d.z, lambda), n, lambda, Some(&pins), true)?;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += post.second[i * n + j].powi(2) - (post.mean[i] * post.mean[j]).powi(2);
            }
        }
        Ok(acc / (n * n) as f64)
    })?;
    Ok(Estimate::from_samples(&samples))
}

/// `F_n(P) - F_n(P_bar)` where `P_bar` is the image of `prior` under
/// `map` (one entry per atom), using the coupling `X_bar_i = map(X_i)` and
/// the same noise. The bound is the transport inequality for the Gaussian
/// channel on the pairs `i < j` with signal `X_i X_j / sqrt(n)`, with `W_2`
/// replaced by the distance realized by this coupling.
pub fn wasserstein_coupling_check(
    prior: &Prior,
    map: &[f64],
    n: usize,
    lambda: f64,
    trials: usize,
    seed: u64,
) -> Result<WassersteinCheck> {
    check_common(n, lambda, trials)?;
    let sup = support(prior)?;
    if map.len() != sup.len() {
        return Err(invalid(format!("map has {} entries for {} atoms", map.len(), sup.len())));
    }
    let mut bar: Vec<(f64, f64)> = Vec::new();
    let mut bar_index = Vec::with_capacity(sup.len());
    for (s, &v) in sup.iter().zip(map) {
        match bar.iter().position(|b| b.0 == v) {
            Some(k) => {
                bar[k].1 += s.1;
                bar_index.push(k);
            }
            None => {
                bar_index.push(bar.len());
                bar.push((v, s.1));
            }
        }
    }
    enumerate::check_states(sup.len(), n)?;
    let diffs = par_trials(trials, |t| {
        let d = draw(&sup, n, seed, t);
        let x = signal(&sup, &d);
        let xb: Vec<f64> = d.idx.iter().map(|&k| bar[bar_index[k]].0).collect();
        let f = enumerate(&sup, &observation(&x, &d.z, lambda), n, lambda, None, false)?.log_z;
        let fb = enumerate(&bar, &observation(&xb, &d.z, lambda), n, lambda, None, false)?.log_z;
        Ok((f - fb) / n as f64)
    })?;
    let est = Estimate::from_samples(&diffs);

    let m2: f64 = sup.iter().map(|s| s.1 * s.0 * s.0).sum();
    let m2b: f64 = sup.iter().zip(map).map(|(s, v)| s.1 * v * v).sum();
    // E[(X1 X2 - X1_bar X2_bar)^2] over two independent coordinates.
    let mut d2 = 0.0;
    for (a, va) in sup.iter().zip(map) {
        for (b, vb) in sup.iter().zip(map) {
            d2 += a.1 * b.1 * (a.0 * b.0 - va * vb).powi(2);
        }
    }
    // Norms and distance of the pair signal, each sqrt(((n-1)/2) * ...),
    // and the free energy difference is divided by n.
    let pairs = (n - 1) as f64 / 2.0;
    let rhs = lambda / 2.0 * pairs * (m2 + m2b) * d2.sqrt() / n as f64;
    let lhs = est.mean.abs();
    Ok(WassersteinCheck {
        lhs,
        lhs_stderr: est.stderr,
        rhs,
        coupling_distance: (pairs * d2).sqrt(),
        holds: lhs <= rhs + 3.0 * est.stderr,
    })
}

/// [`wasserstein_coupling_check`] for the quantization
/// `x -> (K/m) floor(x m / K)` with `K = max |atom|`.
pub fn wasserstein_stability_check(
    prior: &Prior,
    n: usize,
    lambda: f64,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<WassersteinCheck> {
    let k = prior.atoms().iter().map(|a| a.value.abs()).fold(0.0, f64::max);
    if k == 0.0 {
        return wasserstein_coupling_check(prior, &vec![0.0; prior.atoms().len()], n, lambda, trials, seed);
    }
    let (_, map) = prior.quantize(k, m)?;
    wasserstein_coupling_check(prior, &map, n, lambda, trials, seed)
}
