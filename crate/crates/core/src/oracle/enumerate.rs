//! Exact posterior of the spiked Wigner model by enumerating `S^n`.
//!
//! Configurations are visited in reflected mixed-radix Gray-code order, so
//! consecutive states differ in one coordinate and the Hamiltonian is
//! updated in `O(n)` through the local fields `h_i = sum_j Y_ij x_j`.

use crate::error::{Error, Result};
use crate::priors::Prior;

/// Largest number of configurations that will be enumerated.
pub const MAX_STATES: f64 = 1e7;

/// Posterior summaries from one enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMoments {
    /// `log sum_x P0(x) exp(H(x))` over the free coordinates.
    pub log_z: f64,
    /// `E[x_i | Y]`; empty when moments were not requested.
    pub mean: Vec<f64>,
    /// `E[x_i x_j | Y]`, `n x n` row-major (diagonal included); empty when
    /// moments were not requested.
    pub second: Vec<f64>,
}

/// The `(value, weight)` support of a finite prior.
pub(crate) fn support(prior: &Prior) -> Result<Vec<(f64, f64)>> {
    if !prior.is_finite_support() {
        return Err(Error::Unsupported(format!("exact enumeration needs a finite-support prior, got {prior}")));
    }
    Ok(prior.atoms().iter().map(|a| (a.value, a.weight)).collect())
}

pub(crate) fn check_states(support: usize, free: usize) -> Result<()> {
    let states = (support as f64).powi(free as i32);
    if states > MAX_STATES {
        return Err(Error::StateSpaceTooLarge { states, limit: MAX_STATES });
    }
    Ok(())
}

/// Enumerates the posterior
/// `P(x | Y) ∝ prod_i P0(x_i) exp(sum_{i<j} sqrt(lambda/n) Y_ij x_i x_j - lambda/(2n) x_i^2 x_j^2)`
/// with `y` a full symmetric `n x n` buffer with zero diagonal. Coordinates
/// with `pinned[i] = Some(v)` are held at `v` and contribute no prior weight.
pub(crate) fn enumerate(
    support: &[(f64, f64)],
    y: &[f64],
    n: usize,
    lambda: f64,
    pinned: Option<&[Option<f64>]>,
    moments: bool,
) -> Result<PosteriorMoments> {
    debug_assert_eq!(y.len(), n * n);
    let k = support.len();
    let values: Vec<f64> = support.iter().map(|s| s.0).collect();
    let log_w: Vec<f64> = support.iter().map(|s| s.1.ln()).collect();

    let mut x = vec![values[0]; n];
    let mut free = Vec::with_capacity(n);
    for i in 0..n {
        match pinned.and_then(|p| p[i]) {
            Some(v) => x[i] = v,
            None => free.push(i),
        }
    }
    check_states(k, free.len())?;

    let a = (lambda / n as f64).sqrt();
    let b = lambda / (2.0 * n as f64);
    let mut h: Vec<f64> = (0..n).map(|i| (0..n).map(|j| y[i * n + j] * x[j]).sum()).collect();
    let mut cross = 0.5 * x.iter().zip(&h).map(|(xi, hi)| xi * hi).sum::<f64>();
    let mut s2: f64 = x.iter().map(|v| v * v).sum();
    let mut s4: f64 = x.iter().map(|v| v.powi(4)).sum();
    let mut lw = free.len() as f64 * log_w[0];

    let mut digits = vec![0usize; free.len()];
    let mut up = vec![true; free.len()];

    // Running log-sum-exp: weights are exp(energy - reference), and the
    // accumulators are rescaled only when the reference falls far behind.
    let mut reference = f64::NEG_INFINITY;
    let mut total = 0.0;
    let mut mean = if moments { vec![0.0; n] } else { Vec::new() };
    let mut second = if moments { vec![0.0; n * n] } else { Vec::new() };

    loop {
        let energy = lw + a * cross - b * 0.5 * (s2 * s2 - s4);
        if energy > reference + 40.0 {
            let scale = (reference - energy).exp();
            total *= scale;
            mean.iter_mut().for_each(|m| *m *= scale);
            second.iter_mut().for_each(|m| *m *= scale);
            reference = energy;
        }
        let w = (energy - reference).exp();
        total += w;
        if moments {
            for i in 0..n {
                let wi = w * x[i];
                mean[i] += wi;
                let row = &mut second[i * n..(i + 1) * n];
                for j in i..n {
                    row[j] += wi * x[j];
                }
            }
        }

        let Some(p) = (0..free.len()).find(|&p| {
            let movable = if up[p] { digits[p] + 1 < k } else { digits[p] > 0 };
            if !movable {
                up[p] = !up[p];
            }
            movable
        }) else {
            break;
        };
        let old = digits[p];
        let new = if up[p] { old + 1 } else { old - 1 };
        digits[p] = new;
        let i = free[p];
        let (xo, xn) = (values[old], values[new]);
        let delta = xn - xo;
        cross += delta * h[i];
        for (j, hj) in h.iter_mut().enumerate() {
            *hj += y[j * n + i] * delta;
        }
        x[i] = xn;
        s2 += xn * xn - xo * xo;
        s4 += xn.powi(4) - xo.powi(4);
        lw += log_w[new] - log_w[old];
    }

    if moments {
        mean.iter_mut().for_each(|m| *m /= total);
        for i in 0..n {
            for j in i..n {
                let v = second[i * n + j] / total;
                second[i * n + j] = v;
                second[j * n + i] = v;
            }
        }
    }
    // Without coupling the weights sum to one exactly.
    let log_z = if lambda == 0.0 { 0.0 } else { reference + total.ln() };
    Ok(PosteriorMoments { log_z, mean, second })
}
