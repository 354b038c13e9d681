//! Planted random energy model: `Y = sqrt(lambda n) e_sigma0 + Z` over the
//! canonical basis of `R^(2^n)`.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::Estimate;
use crate::error::{invalid, Result};
use crate::rng::{stream, trial_rng};

pub const MAX_REM_N: usize = 22;

/// Limit of `F_n`: `0` up to `2 log 2`, then `lambda/2 - log 2`.
pub fn rem_free_energy(lambda: f64) -> f64 {
    (lambda / 2.0 - std::f64::consts::LN_2).max(0.0)
}

/// Monte Carlo `(1/n) E log Z_n` with
/// `Z_n = 2^-n sum_sigma exp(sqrt(lambda n) Z_sigma + lambda n 1(sigma = sigma0) - lambda n / 2)`.
/// By symmetry the planted index is the first one.
pub fn rem_mc(n: usize, lambda: f64, trials: usize, seed: u64) -> Result<Estimate> {
    if n == 0 || n > MAX_REM_N {
        return Err(invalid(format!("planted REM needs 1 <= n <= {MAX_REM_N}, got {n}")));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    let ln = lambda * n as f64;
    let a = ln.sqrt();
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t, stream::REM);
            let mut reference = f64::NEG_INFINITY;
            let mut total = 0.0;
            for sigma in 0..1usize << n {
                let z: f64 = StandardNormal.sample(&mut rng);
                let e = a * z + if sigma == 0 { ln } else { 0.0 } - ln / 2.0;
                if e > reference + 40.0 {
                    total *= (reference - e).exp();
                    reference = e;
                }
                total += (e - reference).exp();
            }
            (reference + total.ln()) / n as f64 - std::f64::consts::LN_2
        })
        .collect();
    Ok(Estimate::from_samples(&samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limit_values() {
        assert!(rem_free_energy(2.0 * std::f64::consts::LN_2).abs() < 1e-15);
        assert!((rem_free_energy(2.0) - 0.306_852_819_440_054_7).abs() < 1e-12);
        assert_eq!(rem_free_energy(1.0), 0.0);
        assert!((rem_free_energy(3.0) - (1.5 - std::f64::consts::LN_2)).abs() < 1e-15);
    }

    #[test]
    fn zero_lambda_is_zero() {
        let e = rem_mc(6, 0.0, 4, 1).unwrap();
        assert!(e.mean.abs() < 1e-12);
    }

    #[test]
    fn mc_above_lower_bound() {
        for &lambda in &[1.0, 2.0, 3.0] {
            let e = rem_mc(12, lambda, 40, 2).unwrap();
            assert!(e.mean >= lambda / 2.0 - std::f64::consts::LN_2 - 3.0 * e.stderr, "{lambda}: {e:?}");
            assert!(e.mean >= -3.0 * e.stderr);
        }
        assert!(rem_mc(23, 1.0, 1, 0).is_err());
    }
}
