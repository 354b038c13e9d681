//! Replica-symmetric analysis of the spiked Wigner model
//! `Y = sqrt(lambda / n) X X^T + W`.
//!
//! The limit free energy is `sup_{q >= 0} F(lambda, q)` with potential
//! `F(lambda, q) = psi(lambda q) - lambda q^2 / 4`. Stationary points solve
//! `q = 2 psi'(lambda q)`; they are located by a sign-change scan of
//! `h(q) = 2 psi'(lambda q) - q` and refined on the exact channel.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::optim::{guarded_scan, scan_grid};
use crate::priors::Prior;
use crate::scalar_channel::ScalarChannel;

/// Uniform scan steps over `[0, m2]`.
const SCAN_STEPS: usize = 2000;
const ROOT_TOL: f64 = 1e-12;
const ROOT_DEDUP: f64 = 1e-9;
/// Scan values this close to zero are recomputed exactly before their sign
/// is trusted (the tabulated overlap is accurate to well below this).
const APPROX_GUARD: f64 = 1e-6;
pub const DEGENERACY_TOL: f64 = 1e-10;
/// `q*` must exceed `m1^2` by this much to count as informative.
pub const INFORMATIVE_TOL: f64 = 1e-8;
/// Initial state-evolution signal used to decide easy versus hard.
pub const SE_INIT_EPS: f64 = 1e-9;
const THRESHOLD_TOL: f64 = 1e-6;
const THRESHOLD_LO: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Impossible,
    Hard,
    Easy,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Impossible => "impossible",
            Phase::Hard => "hard",
            Phase::Easy => "easy",
        })
    }
}

impl FromStr for Phase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "impossible" => Ok(Phase::Impossible),
            "hard" => Ok(Phase::Hard),
            "easy" => Ok(Phase::Easy),
            _ => Err(invalid(format!("unknown phase '{s}'"))),
        }
    }
}

/// Stationary points of `F(lambda, .)` and the global maximizer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WignerSolution {
    pub lambda: f64,
    pub stationary_points: Vec<f64>,
    /// `F(lambda, q)` at each stationary point.
    pub potentials: Vec<f64>,
    pub q_star: f64,
    /// `sup_q F(lambda, q)`.
    pub value: f64,
    /// Top two stationary values within [`DEGENERACY_TOL`].
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Landscape {
    pub lambda: f64,
    pub q_grid: Vec<f64>,
    pub potential_values: Vec<f64>,
    pub stationary_points: Vec<f64>,
    pub q_star: f64,
    pub degenerate: bool,
    /// `None` for priors with non-zero mean, where the classification does
    /// not apply.
    pub phase: Option<Phase>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseCell {
    pub p: f64,
    pub lambda: f64,
    pub phase: Phase,
    pub q_star: f64,
    /// First cell of its column at or above the column's `lambda_c`.
    pub lambda_c_marker: bool,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("lambda must be finite and > 0, got {lambda}")))
    }
}

/// Spiked Wigner model with a fixed prior.
#[derive(Debug, Clone)]
pub struct SpikedWigner {
    channel: ScalarChannel,
}

impl SpikedWigner {
    pub fn new(prior: Prior) -> Self {
        SpikedWigner { channel: ScalarChannel::new(prior) }
    }

    pub fn from_channel(channel: ScalarChannel) -> Self {
        SpikedWigner { channel }
    }

    pub fn channel(&self) -> &ScalarChannel {
        &self.channel
    }

    fn m1(&self) -> f64 {
        self.channel.moments().m1
    }

    fn m2(&self) -> f64 {
        self.channel.moments().m2
    }

    fn zero_mean(&self) -> bool {
        self.m1().abs() <= 1e-12
    }

    /// `F(lambda, q) = psi(lambda q) - lambda q^2 / 4`.
    pub fn potential(&self, lambda: f64, q: f64) -> Result<f64> {
        check_lambda(lambda)?;
        if !(q >= 0.0 && q.is_finite()) {
            return Err(invalid(format!("overlap q must be finite and >= 0, got {q}")));
        }
        Ok(self.channel.psi_unchecked(lambda * q) - lambda * q * q / 4.0)
    }

    /// `h(q) = 2 psi'(lambda q) - q`, exact.
    pub fn stationarity_residual(&self, lambda: f64, q: f64) -> f64 {
        self.channel.overlap_unchecked(lambda * q) - q
    }

    /// All roots of `h` on `[0, m2]`, sorted.
    pub fn stationary_points(&self, lambda: f64) -> Result<Vec<f64>> {
        check_lambda(lambda)?;
        let exact = |q: f64| {
            // Exactly zero at the origin for centred priors (h(0) = m1^2).
            if q == 0.0 && self.zero_mean() {
                0.0
            } else {
                self.stationarity_residual(lambda, q)
            }
        };
        let approx = |q: f64| self.channel.overlap_approx(lambda * q) - q;
        let grid = scan_grid(self.m2(), SCAN_STEPS);
        let roots = guarded_scan(exact, approx, 0.0, &grid, APPROX_GUARD, ROOT_TOL, ROOT_DEDUP);
        Ok(roots)
    }

    pub fn solve(&self, lambda: f64) -> Result<WignerSolution> {
        let stationary_points = self.stationary_points(lambda)?;
        if stationary_points.is_empty() {
            return Err(Error::Inconsistent(format!("no stationary point found at lambda = {lambda}")));
        }
        let potentials: Vec<f64> =
            stationary_points.iter().map(|&q| self.channel.psi_unchecked(lambda * q) - lambda * q * q / 4.0).collect();
        let (q_star, value, degenerate) = pick_maximizer(&stationary_points, &potentials);
        Ok(WignerSolution { lambda, stationary_points, potentials, q_star, value, degenerate })
    }

    pub fn q_star(&self, lambda: f64) -> Result<(f64, bool)> {
        let s = self.solve(lambda)?;
        Ok((s.q_star, s.degenerate))
    }

    /// `m2^2 - q*^2`, clamped to `[0, m2^2 - m1^4]`.
    pub fn mmse_limit(&self, lambda: f64) -> Result<f64> {
        let q = self.solve(lambda)?.q_star;
        Ok(self.mmse_from_overlap(q))
    }

    pub fn mmse_from_overlap(&self, q: f64) -> f64 {
        let (m1, m2) = (self.m1(), self.m2());
        (m2 * m2 - q * q).clamp(0.0, m2 * m2 - m1.powi(4))
    }

    /// `lambda m2^2 / 4 - sup_q F(lambda, q)`.
    pub fn mutual_information_limit(&self, lambda: f64) -> Result<f64> {
        let v = self.solve(lambda)?.value;
        Ok((lambda * self.m2().powi(2) / 4.0 - v).max(0.0))
    }

    /// MSE of the rescaled top eigenvector of `Y / sqrt(n)`.
    pub fn mse_pca_limit(&self, lambda: f64) -> Result<f64> {
        check_lambda(lambda)?;
        Ok(mse_pca_limit(self.m2(), lambda))
    }

    /// Limit of state evolution `q_{t+1} = 2 psi'(lambda q_t)` from `q0`.
    ///
    /// The map is non-decreasing, so the iterates are monotone and converge to
    /// the nearest fixed point in the direction of `h(q0)`.
    pub fn se_limit(&self, lambda: f64, q0: f64, stationary_points: &[f64]) -> f64 {
        let h0 = self.stationarity_residual(lambda, q0);
        if h0 > 0.0 {
            stationary_points.iter().copied().find(|&s| s > q0).unwrap_or(self.m2())
        } else if h0 < 0.0 {
            stationary_points.iter().rev().copied().find(|&s| s < q0).unwrap_or(0.0)
        } else {
            q0
        }
    }

    fn phase_of(&self, sol: &WignerSolution) -> Phase {
        let m1 = self.m1();
        if sol.q_star <= m1 * m1 + INFORMATIVE_TOL {
            return Phase::Impossible;
        }
        let q0 = self.channel.overlap_unchecked(sol.lambda * SE_INIT_EPS);
        let limit = self.se_limit(sol.lambda, q0, &sol.stationary_points);
        if (limit - sol.q_star).abs() <= ROOT_DEDUP {
            Phase::Easy
        } else {
            Phase::Hard
        }
    }

    /// Easy / hard / impossible classification for zero-mean priors.
    pub fn classify_phase(&self, lambda: f64) -> Result<Phase> {
        if !self.zero_mean() {
            return Err(Error::Unsupported(format!(
                "phase classification needs a zero-mean prior (mean is {}): q = 0 is then always stationary",
                self.m1()
            )));
        }
        let sol = self.solve(lambda)?;
        Ok(self.phase_of(&sol))
    }

    pub fn landscape(&self, lambda: f64, q_grid: &[f64]) -> Result<Landscape> {
        let sol = self.solve(lambda)?;
        let potential_values = q_grid.iter().map(|&q| self.potential(lambda, q)).collect::<Result<Vec<_>>>()?;
        let phase = self.zero_mean().then(|| self.phase_of(&sol));
        Ok(Landscape {
            lambda,
            q_grid: q_grid.to_vec(),
            potential_values,
            stationary_points: sol.stationary_points,
            q_star: sol.q_star,
            degenerate: sol.degenerate,
            phase,
        })
    }

    /// `lambda_c`: smallest `lambda` with `q*(lambda) > m1^2`, by bisection
    /// on `[1e-3, 4 / m2^2]`.
    pub fn it_threshold(&self) -> Result<f64> {
        if self.channel.prior().is_degenerate() {
            return Err(Error::InvalidPrior("threshold undefined for a point-mass prior".into()));
        }
        let m1 = self.m1();
        let informative = |lambda: f64| -> Result<bool> { Ok(self.solve(lambda)?.q_star > m1 * m1 + INFORMATIVE_TOL) };
        let mut lo = THRESHOLD_LO;
        let mut hi = 4.0 / self.m2().powi(2);
        if informative(lo)? {
            return Ok(0.0);
        }
        if !informative(hi)? {
            return Err(Error::BracketFailure(format!("overlap stays trivial up to lambda = {hi}")));
        }
        while hi - lo > THRESHOLD_TOL {
            let mid = 0.5 * (lo + hi);
            if informative(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// PCA MSE limit for a prior with second moment `m2`.
pub fn mse_pca_limit(m2: f64, lambda: f64) -> f64 {
    if lambda * m2 * m2 <= 1.0 {
        m2 * m2
    } else {
        (2.0 - 1.0 / (lambda * m2 * m2)) / lambda
    }
}

/// Maximum of `values`, ties (within [`DEGENERACY_TOL`]) broken towards the
/// larger point. Returns `(point, value, degenerate)`.
pub(crate) fn pick_maximizer(points: &[f64], values: &[f64]) -> (f64, f64, bool) {
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let near: Vec<usize> = (0..values.len()).filter(|&i| values[i] >= top - DEGENERACY_TOL).collect();
    let best = *near.iter().max_by(|&&a, &&b| points[a].total_cmp(&points[b])).expect("non-empty");
    (points[best], values[best], near.len() > 1)
}

/// Phase diagram over `sbm(p)` priors. Columns (one per `p`) run in parallel;
/// the output is ordered by `p`, then `lambda`.
pub fn phase_diagram(p_grid: &[f64], lambda_grid: &[f64]) -> Result<Vec<PhaseCell>> {
    for &p in p_grid {
        if !(p > 0.0 && p < 1.0) {
            return Err(invalid(format!("p must lie in (0, 1), got {p}")));
        }
    }
    for &l in lambda_grid {
        check_lambda(l)?;
    }
    let columns: Vec<Vec<PhaseCell>> = p_grid
        .par_iter()
        .map(|&p| -> Result<Vec<PhaseCell>> {
            let model = SpikedWigner::new(Prior::sbm(p)?);
            let lambda_c = model.it_threshold().ok();
            let mut marker_done = false;
            lambda_grid
                .iter()
                .map(|&lambda| {
                    let sol = model.solve(lambda)?;
                    let phase = model.phase_of(&sol);
                    let lambda_c_marker = match lambda_c {
                        Some(c) if !marker_done && lambda >= c => {
                            marker_done = true;
                            true
                        }
                        _ => false,
                    };
                    Ok(PhaseCell { p, lambda, phase, q_star: sol.q_star, lambda_c_marker })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(columns.into_iter().flatten().collect())
}
