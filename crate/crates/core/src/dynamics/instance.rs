//! Synthetic spiked instances.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::priors::Prior;
use crate::rng::{stream, stream_rng};

/// Dense symmetric matrix stored row-major in full.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds from a full row-major buffer; only symmetry up to rounding is
    /// checked in debug builds.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(invalid(format!("expected {} entries for n = {n}, got {}", n * n, data.len())));
        }
        debug_assert!((0..n).all(|i| (0..i).all(|j| data[i * n + j] == data[j * n + i])));
        Ok(SymMatrix { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// `out = self * x`, rows in parallel.
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(out.len(), self.n);
        out.par_iter_mut()
            .zip(self.data.par_chunks(self.n))
            .for_each(|(o, row)| *o = row.iter().zip(x).map(|(a, b)| a * b).sum());
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Spiked Wigner instance `Y_ij = sqrt(lambda / n) X_i X_j + Z_ij` for
/// `i < j`, symmetrized, with zero diagonal.
#[derive(Debug, Clone)]
pub struct WignerInstance {
    pub n: usize,
    pub lambda: f64,
    pub prior: Prior,
    pub x: Vec<f64>,
    pub y: SymMatrix,
}

/// Spiked Wishart instance `Y = sqrt(lambda / n) U V^T + Z`, `n x m` row-major.
#[derive(Debug, Clone)]
pub struct WishartInstance {
    pub n: usize,
    pub m: usize,
    pub lambda: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub y: Vec<f64>,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("lambda must be finite and >= 0, got {lambda}")))
    }
}

/// Signal from stream `SIGNAL`, noise from stream `NOISE` (upper triangle,
/// row by row), both keyed by `seed`.
pub fn generate_wigner(prior: &Prior, n: usize, lambda: f64, seed: u64) -> Result<WignerInstance> {
    if n < 2 {
        return Err(invalid(format!("need n >= 2, got {n}")));
    }
    check_lambda(lambda)?;
    let x = prior.sample_with(&mut stream_rng(seed, stream::SIGNAL), n);
    let mut noise = stream_rng(seed, stream::NOISE);
    let scale = (lambda / n as f64).sqrt();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let z: f64 = StandardNormal.sample(&mut noise);
            let v = scale * x[i] * x[j] + z;
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    Ok(WignerInstance { n, lambda, prior: prior.clone(), x, y: SymMatrix { n, data } })
}

pub fn generate_wishart(pu: &Prior, pv: &Prior, n: usize, m: usize, lambda: f64, seed: u64) -> Result<WishartInstance> {
    if n == 0 || m == 0 {
        return Err(invalid("matrix dimensions must be positive"));
    }
    check_lambda(lambda)?;
    let u = pu.sample_with(&mut stream_rng(seed, stream::SIGNAL), n);
    let v = pv.sample_with(&mut stream_rng(seed, stream::SIGNAL_V), m);
    let mut noise = stream_rng(seed, stream::NOISE);
    let scale = (lambda / n as f64).sqrt();
    let mut y = Vec::with_capacity(n * m);
    for ui in &u {
        for vj in &v {
            let z: f64 = StandardNormal.sample(&mut noise);
            y.push(scale * ui * vj + z);
        }
    }
    Ok(WishartInstance { n, m, lambda, u, v, y })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_and_symmetric() {
        let p = Prior::rademacher();
        let a = generate_wigner(&p, 50, 2.0, 7).unwrap();
        let b = generate_wigner(&p, 50, 2.0, 7).unwrap();
        assert_eq!(a.y, b.y);
        assert_eq!(a.x, b.x);
        let c = generate_wigner(&p, 50, 2.0, 8).unwrap();
        assert_ne!(a.y, c.y);
        for i in 0..50 {
            assert_eq!(a.y.get(i, i), 0.0);
            for j in 0..50 {
                assert_eq!(a.y.get(i, j), a.y.get(j, i));
            }
        }
        assert!(generate_wigner(&p, 1, 1.0, 0).is_err());
        assert!(generate_wigner(&p, 5, -1.0, 0).is_err());
    }

    #[test]
    fn lambda_zero_is_pure_noise_and_same_noise() {
        // Signal and noise streams are independent of lambda.
        let p = Prior::rademacher();
        let a = generate_wigner(&p, 30, 0.0, 3).unwrap();
        let b = generate_wigner(&p, 30, 5.0, 3).unwrap();
        let s = (5.0f64 / 30.0).sqrt();
        for i in 0..30 {
            for j in 0..30 {
                if i != j {
                    assert!((b.y.get(i, j) - a.y.get(i, j) - s * b.x[i] * b.x[j]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn noise_residual_moments() {
        let p = Prior::sparse_gaussian(0.4).unwrap();
        let n = 400;
        let inst = generate_wigner(&p, n, 3.0, 11).unwrap();
        let s = (3.0 / n as f64).sqrt();
        let r: Vec<f64> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| inst.y.get(i, j) - s * inst.x[i] * inst.x[j])
            .collect();
        let k = r.len() as f64;
        let mean = r.iter().sum::<f64>() / k;
        let var = r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
        // Var of the sample variance of N(0,1) data is 2 / (k - 1).
        assert!((var - 1.0).abs() < 3.0 * (2.0 / (k - 1.0)).sqrt(), "{var}");
        assert!(mean.abs() < 3.0 / k.sqrt());
    }

    #[test]
    fn wishart_shape() {
        let w = generate_wishart(&Prior::rademacher(), &Prior::standard_gaussian(), 20, 30, 1.0, 1).unwrap();
        assert_eq!(w.y.len(), 600);
        assert_eq!((w.u.len(), w.v.len()), (20, 30));
    }
}
