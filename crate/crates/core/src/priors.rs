//! One-dimensional signal priors.
//!
//! A [`Prior`] is a finite mixture of point masses ("atoms") and Gaussian
//! components. Every distribution the toolkit needs (Rademacher, Gaussian,
//! sparse Gaussian, the two-point community prior, Bernoulli) fits this form,
//! and the scalar-channel integrals have a closed-form inner part for it.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, stream_rng};

const WEIGHT_TOL: f64 = 1e-9;

/// Point mass at `value` with probability `weight`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub value: f64,
    pub weight: f64,
}

/// Gaussian component `N(mean, var)` with probability `weight`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianComponent {
    pub mean: f64,
    pub var: f64,
    pub weight: f64,
}

/// Exact first and second moments of a prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub m1: f64,
    pub m2: f64,
    pub var: f64,
}

/// A mixture of atoms and Gaussian components.
///
/// Weights are non-negative and normalized to sum to one; zero-weight
/// components are dropped on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPrior", into = "RawPrior")]
pub struct Prior {
    atoms: Vec<Atom>,
    gaussians: Vec<GaussianComponent>,
}

#[derive(Serialize, Deserialize)]
struct RawPrior {
    #[serde(default)]
    atoms: Vec<(f64, f64)>,
    #[serde(default)]
    gaussians: Vec<(f64, f64, f64)>,
}

impl TryFrom<RawPrior> for Prior {
    type Error = Error;

    fn try_from(raw: RawPrior) -> Result<Self> {
        Prior::new(
            raw.atoms.into_iter().map(|(value, weight)| Atom { value, weight }).collect(),
            raw.gaussians
                .into_iter()
                .map(|(mean, var, weight)| GaussianComponent { mean, var, weight })
                .collect(),
        )
    }
}

impl From<Prior> for RawPrior {
    fn from(p: Prior) -> Self {
        RawPrior {
            atoms: p.atoms.iter().map(|a| (a.value, a.weight)).collect(),
            gaussians: p.gaussians.iter().map(|g| (g.mean, g.var, g.weight)).collect(),
        }
    }
}

impl Prior {
    /// Validates and normalizes a mixture.
    pub fn new(atoms: Vec<Atom>, gaussians: Vec<GaussianComponent>) -> Result<Self> {
        let mut total = 0.0;
        for a in &atoms {
            if !a.value.is_finite() {
                return Err(Error::InvalidPrior(format!("atom value {} is not finite", a.value)));
            }
            if !(a.weight >= 0.0 && a.weight.is_finite()) {
                return Err(Error::InvalidPrior(format!("atom weight {} is invalid", a.weight)));
            }
            total += a.weight;
        }
        for g in &gaussians {
            if !g.mean.is_finite() {
                return Err(Error::InvalidPrior(format!("gaussian mean {} is not finite", g.mean)));
            }
            if !(g.var > 0.0 && g.var.is_finite()) {
                return Err(Error::InvalidPrior(format!(
                    "gaussian variance {} must be positive and finite",
                    g.var
                )));
            }
            if !(g.weight >= 0.0 && g.weight.is_finite()) {
                return Err(Error::InvalidPrior(format!("gaussian weight {} is invalid", g.weight)));
            }
            total += g.weight;
        }
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidPrior(format!("weights sum to {total}, expected 1")));
        }
        let atoms: Vec<Atom> = atoms
            .into_iter()
            .filter(|a| a.weight > 0.0)
            .map(|a| Atom { weight: a.weight / total, ..a })
            .collect();
        let gaussians: Vec<GaussianComponent> = gaussians
            .into_iter()
            .filter(|g| g.weight > 0.0)
            .map(|g| GaussianComponent { weight: g.weight / total, ..g })
            .collect();
        if atoms.is_empty() && gaussians.is_empty() {
            return Err(Error::InvalidPrior("prior has no component".into()));
        }
        Ok(Prior { atoms, gaussians })
    }

    /// Finite-support prior from `(value, weight)` pairs.
    pub fn from_atoms(atoms: &[(f64, f64)]) -> Result<Self> {
        Prior::new(atoms.iter().map(|&(value, weight)| Atom { value, weight }).collect(), vec![])
    }

    /// Uniform on `{-1, +1}`.
    pub fn rademacher() -> Self {
        Prior::from_atoms(&[(1.0, 0.5), (-1.0, 0.5)]).expect("valid")
    }

    /// Standard normal.
    pub fn standard_gaussian() -> Self {
        Prior::gaussian(0.0, 1.0).expect("valid")
    }

    pub fn gaussian(mean: f64, var: f64) -> Result<Self> {
        Prior::new(vec![], vec![GaussianComponent { mean, var, weight: 1.0 }])
    }

    /// Two-point community prior: `+sqrt((1-p)/p)` with probability `p`,
    /// `-sqrt(p/(1-p))` otherwise. Mean zero and unit variance for every `p`.
    pub fn sbm(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidPrior(format!("sbm parameter p={p} must lie in (0,1)")));
        }
        Prior::from_atoms(&[(((1.0 - p) / p).sqrt(), p), (-(p / (1.0 - p)).sqrt(), 1.0 - p)])
    }

    /// Sparse Gaussian `s N(0, 1/s) + (1-s) delta_0`, unit second moment.
    pub fn sparse_gaussian(s: f64) -> Result<Self> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::InvalidPrior(format!("sparsity s={s} must lie in (0,1]")));
        }
        Prior::new(
            vec![Atom { value: 0.0, weight: 1.0 - s }],
            vec![GaussianComponent { mean: 0.0, var: 1.0 / s, weight: s }],
        )
    }

    /// `eps delta_1 + (1-eps) delta_0`.
    pub fn bernoulli(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidPrior(format!("bernoulli eps={eps} must lie in (0,1]")));
        }
        Prior::from_atoms(&[(1.0, eps), (0.0, 1.0 - eps)])
    }

    /// `k`-atom discretization of `N(0,1)` on the Gauss-Hermite nodes. Matches
    /// the Gaussian moments up to order `2k-1`.
    pub fn discrete_gaussian(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidPrior("discrete gaussian needs k >= 1".into()));
        }
        let rule = crate::scalar_channel::QuadratureRule::gauss_hermite(k)?;
        let atoms: Vec<(f64, f64)> = rule.nodes().iter().copied().zip(rule.weights().iter().copied()).collect();
        Prior::from_atoms(&atoms)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn gaussians(&self) -> &[GaussianComponent] {
        &self.gaussians
    }

    pub fn is_finite_support(&self) -> bool {
        self.gaussians.is_empty()
    }

    /// A single point mass. Downstream solvers return the trivial answers.
    pub fn is_degenerate(&self) -> bool {
        self.gaussians.is_empty() && self.atoms.len() == 1
    }

    /// The single centered Gaussian, if that is what this prior is.
    pub(crate) fn as_single_gaussian(&self) -> Option<GaussianComponent> {
        match (self.atoms.as_slice(), self.gaussians.as_slice()) {
            ([], [g]) => Some(*g),
            _ => None,
        }
    }

    pub fn moments(&self) -> Moments {
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for a in &self.atoms {
            m1 += a.weight * a.value;
            m2 += a.weight * a.value * a.value;
        }
        for g in &self.gaussians {
            m1 += g.weight * g.mean;
            m2 += g.weight * (g.mean * g.mean + g.var);
        }
        Moments { m1, m2, var: (m2 - m1 * m1).max(0.0) }
    }

    pub fn mean(&self) -> f64 {
        self.moments().m1
    }

    pub fn second_moment(&self) -> f64 {
        self.moments().m2
    }

    pub fn third_moment(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.weight * a.value.powi(3)).sum();
        let gauss: f64 = self
            .gaussians
            .iter()
            .map(|g| g.weight * (g.mean.powi(3) + 3.0 * g.mean * g.var))
            .sum();
        atoms + gauss
    }

    /// `count` independent draws, reproducible from `seed`.
    pub fn sample(&self, seed: u64, count: usize) -> Vec<f64> {
        let mut rng = stream_rng(seed, stream::PRIOR_SAMPLE);
        self.sample_with(&mut rng, count)
    }

    /// Draws from a caller-provided generator.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.draw(rng)).collect()
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut u: f64 = rng.random();
        for a in &self.atoms {
            if u < a.weight {
                return a.value;
            }
            u -= a.weight;
        }
        for g in &self.gaussians {
            if u < g.weight {
                let z: f64 = StandardNormal.sample(rng);
                return g.mean + g.var.sqrt() * z;
            }
            u -= g.weight;
        }
        // Rounding left u slightly above the last cumulative weight.
        match (self.gaussians.last(), self.atoms.last()) {
            (Some(g), _) => {
                let z: f64 = StandardNormal.sample(rng);
                g.mean + g.var.sqrt() * z
            }
            (None, Some(a)) => a.value,
            (None, None) => unreachable!("validated prior has a component"),
        }
    }

    /// Image of a finite-support prior under `x -> (K/m) floor(x m / K)` on
    /// `[-K, K]` and `0` outside. Returns the quantized prior and the map
    /// applied to every atom (same order as [`Prior::atoms`]).
    pub fn quantize(&self, k: f64, m: usize) -> Result<(Prior, Vec<f64>)> {
        if !self.is_finite_support() {
            return Err(Error::Unsupported("quantization needs a finite-support prior".into()));
        }
        if !(k > 0.0) || m == 0 {
            return Err(Error::InvalidArgument("quantization needs K > 0 and m >= 1".into()));
        }
        let step = k / m as f64;
        let map: Vec<f64> = self
            .atoms
            .iter()
            .map(|a| if a.value.abs() <= k { step * (a.value / step).floor() } else { 0.0 })
            .collect();
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (a, &v) in self.atoms.iter().zip(&map) {
            match merged.iter_mut().find(|(x, _)| *x == v) {
                Some(slot) => slot.1 += a.weight,
                None => merged.push((v, a.weight)),
            }
        }
        Ok((Prior::from_atoms(&merged)?, map))
    }
}

impl fmt::Display for Prior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serde_json::to_string(self).map_err(|_| fmt::Error)?)
    }
}

/// Parses the shorthand forms `rademacher`, `gaussian`, `gaussian:mean=0,var=1`,
/// `sbm:p=0.05`, `sparse:s=0.15`, `bernoulli:eps=0.1`, `discrete-gaussian:k=5`,
/// or an inline JSON object.
impl FromStr for Prior {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec.starts_with('{') {
            return serde_json::from_str(spec).map_err(|e| Error::InvalidPrior(format!("bad prior JSON: {e}")));
        }
        let (name, args) = match spec.split_once(':') {
            Some((n, a)) => (n, a),
            None => (spec, ""),
        };
        let mut params: Vec<(&str, f64)> = Vec::new();
        for kv in args.split(',').filter(|s| !s.trim().is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::InvalidPrior(format!("expected key=value, got '{kv}'")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidPrior(format!("bad number '{v}' in prior spec")))?;
            params.push((k.trim(), v));
        }
        let take = |key: &str, default: Option<f64>| -> Result<f64> {
            params
                .iter()
                .find(|(k, _)| *k == key)
                .map(|&(_, v)| v)
                .or(default)
                .ok_or_else(|| Error::InvalidPrior(format!("prior '{name}' needs parameter '{key}'")))
        };
        let allowed: &[&str] = match name {
            "rademacher" => &[],
            "gaussian" => &["mean", "var"],
            "sbm" => &["p"],
            "sparse" => &["s"],
            "bernoulli" => &["eps"],
            "discrete-gaussian" => &["k"],
            _ => return Err(Error::InvalidPrior(format!("unknown prior '{name}'"))),
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(k)) {
            return Err(Error::InvalidPrior(format!("prior '{name}' has no parameter '{k}'")));
        }
        match name {
            "rademacher" => Ok(Prior::rademacher()),
            "gaussian" => Prior::gaussian(take("mean", Some(0.0))?, take("var", Some(1.0))?),
            "sbm" => Prior::sbm(take("p", None)?),
            "sparse" => Prior::sparse_gaussian(take("s", None)?),
            "bernoulli" => Prior::bernoulli(take("eps", None)?),
            "discrete-gaussian" => {
                let k = take("k", None)?;
                if k < 1.0 || k.fract() != 0.0 {
                    return Err(Error::InvalidPrior(format!("k={k} must be a positive integer")));
                }
                Prior::discrete_gaussian(k as usize)
            }
            _ => unreachable!(),
        }
    }
}
