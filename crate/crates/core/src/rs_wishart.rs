//! Replica-symmetric analysis of the spiked Wishart model
//! `Y = sqrt(lambda / n) U V^T + Z` with `U` of length `n`, `V` of length
//! `m = alpha n`.
//!
//! The potential is
//! `F(q_u, q_v) = psi_U(lambda alpha q_v) + alpha psi_V(lambda q_u) - lambda alpha q_u q_v / 2`
//! and the limit is its supremum over the fixed-point set
//! `Gamma = { q_u = 2 psi'_U(lambda alpha q_v), q_v = 2 psi'_V(lambda q_u) }`.
//! The set is enumerated through the one-dimensional composition
//! `q_v = 2 psi'_V(lambda 2 psi'_U(lambda alpha q_v))`.

use std::collections::HashMap;

use serde::Serialize;

use crate::dynamics::state_evolution::state_evolution_wishart;
use crate::error::{invalid, Error, Result};
use crate::optim::{golden_max, guarded_scan, linspace, scan_grid};
use crate::priors::Prior;
use crate::rs_wigner::{pick_maximizer, SE_INIT_EPS};
use crate::scalar_channel::ScalarChannel;

const SCAN_STEPS: usize = 2000;
const ROOT_TOL: f64 = 1e-12;
const ROOT_DEDUP: f64 = 1e-9;
const APPROX_GUARD: f64 = 1e-6;
/// Allowed gap between sup over `Gamma` and the direct sup-inf value.
pub const SUP_INF_TOL: f64 = 1e-6;
const SUP_INF_GRID: usize = 400;
const MIXED_GRID: usize = 200;
/// Upper end of the spiked-covariance search, away from the log singularity.
const COVARIANCE_Q_MAX: f64 = 1.0 - 1e-12;
const SE_ITERS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WishartSolution {
    pub lambda: f64,
    pub alpha: f64,
    pub gamma_set: Vec<(f64, f64)>,
    pub q_u_star: f64,
    pub q_v_star: f64,
    pub value: f64,
    pub degenerate: bool,
    /// The independent sup-inf evaluation of the same limit.
    pub sup_inf_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PcaWishartLimits {
    pub overlap_sq: f64,
    pub top_sv: f64,
    pub mse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovariancePoint {
    pub alpha: f64,
    /// Maximizer of `psi_U(lambda alpha q) + alpha (q + ln(1 - q)) / 2`.
    pub q: f64,
    pub q_u_star: f64,
    pub mmse_uu: f64,
    pub mse_pca: f64,
    pub mse_amp_se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixedSolution {
    pub value: f64,
    pub q_u_star: f64,
    pub q_v_star: f64,
    pub mmse_uu: f64,
}

/// One row of a Wishart curve over `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WishartCurvePoint {
    pub alpha: f64,
    pub q_u_star: f64,
    pub q_v_star: f64,
    pub mmse_uv: f64,
    pub mmse_uu: f64,
    pub mse_pca: f64,
    pub mse_amp_se: f64,
}

fn check_params(lambda: f64, alpha: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() && alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("need finite lambda > 0 and alpha > 0, got ({lambda}, {alpha})")))
    }
}

/// Spiked Wishart model with fixed priors for `U` and `V`.
#[derive(Debug, Clone)]
pub struct SpikedWishart {
    u: ScalarChannel,
    v: ScalarChannel,
}

impl SpikedWishart {
    pub fn new(pu: Prior, pv: Prior) -> Self {
        SpikedWishart { u: ScalarChannel::new(pu), v: ScalarChannel::new(pv) }
    }

    pub fn from_channels(u: ScalarChannel, v: ScalarChannel) -> Self {
        SpikedWishart { u, v }
    }

    pub fn u(&self) -> &ScalarChannel {
        &self.u
    }

    pub fn v(&self) -> &ScalarChannel {
        &self.v
    }

    pub fn potential2(&self, lambda: f64, alpha: f64, q_u: f64, q_v: f64) -> Result<f64> {
        check_params(lambda, alpha)?;
        if !(q_u >= 0.0 && q_v >= 0.0 && q_u.is_finite() && q_v.is_finite()) {
            return Err(invalid(format!("overlaps must be finite and >= 0, got ({q_u}, {q_v})")));
        }
        Ok(self.potential_unchecked(lambda, alpha, q_u, q_v))
    }

    fn potential_unchecked(&self, lambda: f64, alpha: f64, q_u: f64, q_v: f64) -> f64 {
        self.u.psi_unchecked(lambda * alpha * q_v) + alpha * self.v.psi_unchecked(lambda * q_u)
            - lambda * alpha * q_u * q_v / 2.0
    }

    /// Residuals `(q_u - 2 psi'_U(lambda alpha q_v), q_v - 2 psi'_V(lambda q_u))`.
    pub fn fixed_point_residuals(&self, lambda: f64, alpha: f64, q_u: f64, q_v: f64) -> (f64, f64) {
        (
            q_u - self.u.overlap_unchecked(lambda * alpha * q_v),
            q_v - self.v.overlap_unchecked(lambda * q_u),
        )
    }

    /// All members of `Gamma(lambda, alpha)`, sorted by `q_v`.
    pub fn gamma_fixed_points(&self, lambda: f64, alpha: f64) -> Result<Vec<(f64, f64)>> {
        check_params(lambda, alpha)?;
        let exact = |qv: f64| self.v.overlap_unchecked(lambda * self.u.overlap_unchecked(lambda * alpha * qv)) - qv;
        let approx = |qv: f64| self.v.overlap_approx(lambda * self.u.overlap_approx(lambda * alpha * qv)) - qv;
        let grid = scan_grid(self.v.moments().m2, SCAN_STEPS);
        let exact0 = |qv: f64| {
            let g = exact(qv);
            if qv == 0.0 && g.abs() <= 1e-15 {
                0.0
            } else {
                g
            }
        };
        let roots = guarded_scan(exact0, approx, 0.0, &grid, APPROX_GUARD, ROOT_TOL, ROOT_DEDUP);
        if roots.is_empty() {
            return Err(Error::Inconsistent(format!("empty fixed-point set at ({lambda}, {alpha})")));
        }
        Ok(roots.into_iter().map(|qv| (self.u.overlap_unchecked(lambda * alpha * qv), qv)).collect())
    }

    /// `max_{q_u} { alpha psi_V(lambda q_u) - psi*_U(q_u / 2) }`, which is the
    /// sup-inf form of the limit: the inner infimum over `q_v` of the potential
    /// equals `alpha psi_V(lambda q_u) - psi*_U(q_u / 2)`, attained where
    /// `2 psi'_U(lambda alpha q_v) = q_u`.
    pub fn sup_inf_value(&self, lambda: f64, alpha: f64) -> Result<f64> {
        check_params(lambda, alpha)?;
        let m2u = self.u.moments().m2;
        let objective = |qu: f64| -> f64 {
            match self.u.monotone_conjugate(qu / 2.0) {
                Ok(c) if c.is_finite() => alpha * self.v.psi_unchecked(lambda * qu) - c,
                _ => f64::NEG_INFINITY,
            }
        };
        let top = m2u * (1.0 - 1e-9);
        let grid = linspace(0.0, top, SUP_INF_GRID + 1);
        let values: Vec<f64> = grid.iter().map(|&q| objective(q)).collect();
        let best = (0..values.len()).max_by(|&a, &b| values[a].total_cmp(&values[b])).expect("non-empty grid");
        let lo = grid[best.saturating_sub(1)];
        let hi = grid[(best + 1).min(grid.len() - 1)];
        let (_, refined) = golden_max(objective, lo, hi, 1e-11);
        Ok(refined.max(values[best]))
    }

    pub fn solve(&self, lambda: f64, alpha: f64) -> Result<WishartSolution> {
        let gamma_set = self.gamma_fixed_points(lambda, alpha)?;
        let values: Vec<f64> =
            gamma_set.iter().map(|&(qu, qv)| self.potential_unchecked(lambda, alpha, qu, qv)).collect();
        let qus: Vec<f64> = gamma_set.iter().map(|p| p.0).collect();
        let (q_u_star, value, degenerate) = pick_maximizer(&qus, &values);
        let q_v_star = gamma_set
            .iter()
            .zip(&values)
            .filter(|(p, &v)| p.0 == q_u_star && v == value)
            .map(|(p, _)| p.1)
            .next()
            .expect("maximizer is a member");
        let sup_inf_value = self.sup_inf_value(lambda, alpha)?;
        if (sup_inf_value - value).abs() > SUP_INF_TOL {
            return Err(Error::Inconsistent(format!(
                "sup over fixed points {value} disagrees with sup-inf {sup_inf_value} at lambda = {lambda}, alpha = {alpha}"
            )));
        }
        Ok(WishartSolution { lambda, alpha, gamma_set, q_u_star, q_v_star, value, degenerate, sup_inf_value })
    }

    fn m2s(&self) -> (f64, f64) {
        (self.u.moments().m2, self.v.moments().m2)
    }

    /// `E[U^2] E[V^2] - q_u* q_v*`.
    pub fn mmse_uv_limit(&self, lambda: f64, alpha: f64) -> Result<f64> {
        let s = self.solve(lambda, alpha)?;
        Ok(self.mmse_uv_from(&s))
    }

    pub fn mmse_uv_from(&self, s: &WishartSolution) -> f64 {
        let (mu, mv) = self.m2s();
        (mu * mv - s.q_u_star * s.q_v_star).max(0.0)
    }

    pub fn mmse_uu_limit(&self, lambda: f64, alpha: f64) -> Result<f64> {
        let s = self.solve(lambda, alpha)?;
        Ok((self.m2s().0.powi(2) - s.q_u_star.powi(2)).max(0.0))
    }

    pub fn mmse_vv_limit(&self, lambda: f64, alpha: f64) -> Result<f64> {
        let s = self.solve(lambda, alpha)?;
        Ok((self.m2s().1.powi(2) - s.q_v_star.powi(2)).max(0.0))
    }

    /// State-evolution limit from a tiny positive start.
    pub fn amp_se_limit(&self, lambda: f64, alpha: f64) -> Result<(f64, f64)> {
        let tr = state_evolution_wishart(&self.u, &self.v, lambda, alpha, SE_ITERS, Some((SE_INIT_EPS, SE_INIT_EPS)))?;
        Ok(tr.q_infinity)
    }

    pub fn curve(&self, lambda: f64, alpha_grid: &[f64]) -> Result<Vec<WishartCurvePoint>> {
        let (mu, _) = self.m2s();
        alpha_grid
            .iter()
            .map(|&alpha| {
                let s = self.solve(lambda, alpha)?;
                let (qu_amp, _) = self.amp_se_limit(lambda, alpha)?;
                Ok(WishartCurvePoint {
                    alpha,
                    q_u_star: s.q_u_star,
                    q_v_star: s.q_v_star,
                    mmse_uv: self.mmse_uv_from(&s),
                    mmse_uu: (mu * mu - s.q_u_star.powi(2)).max(0.0),
                    mse_pca: pca_wishart_limits(lambda, alpha)?.mse,
                    mse_amp_se: (mu * mu - qu_amp * qu_amp).max(0.0),
                })
            })
            .collect()
    }

    /// Limit of the model observed together with `sqrt(gamma / n) U U^T + Z'`:
    /// `sup { gamma q_u^2 / 4 + alpha lambda q_u q_v / 2 - psi*_U(q_u/2) - alpha psi*_V(q_v/2) }`
    /// over `[0, m2_U] x [0, m2_V]`.
    ///
    /// A 200 x 200 grid (conjugates memoized per axis) picks the starting cell.
    /// The polish then alternates the exact `q_v` update, `q_v = 2 psi'_V(lambda q_u)`
    /// (the maximizer of the concave `q_v` section), with golden-section
    /// search in `q_u`.
    pub fn mixed_model_value(&self, lambda: f64, gamma_side: f64, alpha: f64) -> Result<MixedSolution> {
        if !(lambda >= 0.0 && gamma_side >= 0.0 && alpha > 0.0 && lambda.is_finite() && gamma_side.is_finite()) {
            return Err(invalid(format!(
                "need lambda, gamma >= 0 and alpha > 0, got ({lambda}, {gamma_side}, {alpha})"
            )));
        }
        let (mu, mv) = self.m2s();
        let mut memo_u = ConjugateMemo::new(&self.u);
        let mut memo_v = ConjugateMemo::new(&self.v);
        let qus = linspace(0.0, mu, MIXED_GRID + 1);
        let qvs = linspace(0.0, mv, MIXED_GRID + 1);
        let cu: Vec<f64> = qus.iter().map(|&q| memo_u.get(q / 2.0)).collect::<Result<_>>()?;
        let cv: Vec<f64> = qvs.iter().map(|&q| memo_v.get(q / 2.0)).collect::<Result<_>>()?;
        let phi = |qu: f64, qv: f64, cu: f64, cv: f64| {
            gamma_side * qu * qu / 4.0 + alpha * lambda * qu * qv / 2.0 - cu - alpha * cv
        };
        let mut best = (0usize, 0usize, f64::NEG_INFINITY);
        for (i, &qu) in qus.iter().enumerate() {
            if !cu[i].is_finite() {
                continue;
            }
            for (j, &qv) in qvs.iter().enumerate() {
                if !cv[j].is_finite() {
                    continue;
                }
                let val = phi(qu, qv, cu[i], cv[j]);
                if val > best.2 {
                    best = (i, j, val);
                }
            }
        }
        let step = mu / MIXED_GRID as f64;
        let (i, j, grid_value) = best;
        let mut qu = qus[i];
        let mut qv = qvs[j];
        let mut value = grid_value;
        for _ in 0..200 {
            let new_qv = self.v.overlap_unchecked(lambda * qu).min(mv);
            let (lo, hi) = ((qu - 2.0 * step).max(0.0), (qu + 2.0 * step).min(mu));
            let (new_qu, _) = golden_max(
                |x| match memo_u.get(x / 2.0) {
                    Ok(c) if c.is_finite() => gamma_side * x * x / 4.0 + alpha * lambda * x * new_qv / 2.0 - c,
                    _ => f64::NEG_INFINITY,
                },
                lo,
                hi,
                1e-12,
            );
            let cu_new = memo_u.get(new_qu / 2.0)?;
            let cv_new = memo_v.get(new_qv / 2.0)?;
            let new_value = phi(new_qu, new_qv, cu_new, cv_new);
            let moved = (new_qu - qu).abs().max((new_qv - qv).abs());
            if new_value.is_finite() && new_value >= value - 1e-15 {
                qu = new_qu;
                qv = new_qv;
                value = value.max(new_value);
            } else {
                break;
            }
            if moved < 1e-12 {
                break;
            }
        }
        Ok(MixedSolution { value, q_u_star: qu, q_v_star: qv, mmse_uu: (mu * mu - qu * qu).max(0.0) })
    }
}

/// Monotone conjugate memo keyed on arguments rounded to `1e-12`; each call
/// site owns its table, so no synchronization is needed.
struct ConjugateMemo<'a> {
    channel: &'a ScalarChannel,
    table: HashMap<i64, f64>,
}

impl<'a> ConjugateMemo<'a> {
    fn new(channel: &'a ScalarChannel) -> Self {
        ConjugateMemo { channel, table: HashMap::new() }
    }

    fn get(&mut self, x: f64) -> Result<f64> {
        let key = (x * 1e12).round() as i64;
        if let Some(&v) = self.table.get(&key) {
            return Ok(v);
        }
        let v = self.channel.monotone_conjugate(x)?;
        self.table.insert(key, v);
        Ok(v)
    }
}

/// Wishart PCA limits: squared overlap of the top left singular vector,
/// top singular value of `Y / sqrt(n)` and the resulting MSE.
pub fn pca_wishart_limits(lambda: f64, alpha: f64) -> Result<PcaWishartLimits> {
    check_params(lambda, alpha)?;
    if lambda * lambda * alpha >= 1.0 {
        let overlap_sq = (lambda * lambda * alpha - 1.0) / (lambda * (lambda * alpha + 1.0));
        let r = (1.0 + lambda) / (lambda * (lambda * alpha + 1.0));
        Ok(PcaWishartLimits {
            overlap_sq,
            top_sv: ((1.0 + lambda) * (1.0 / alpha + lambda) / lambda).sqrt(),
            mse: r * (2.0 - r),
        })
    } else {
        Ok(PcaWishartLimits { overlap_sq: 0.0, top_sv: 1.0 + 1.0 / alpha.sqrt(), mse: 1.0 })
    }
}

/// Spiked covariance (`P_V = N(0,1)`): maximizes
/// `psi_U(lambda alpha q) + alpha (q + ln(1 - q)) / 2` on `[0, 1)` for each
/// `alpha`, returning `q_u* = q / (lambda (1 - q))` and the associated errors.
pub fn spiked_covariance_curve(pu: &ScalarChannel, lambda: f64, alpha_grid: &[f64]) -> Result<Vec<CovariancePoint>> {
    let gaussian = ScalarChannel::new(Prior::standard_gaussian());
    let model = SpikedWishart::from_channels(pu.clone(), gaussian);
    alpha_grid.iter().map(|&alpha| covariance_point(&model, lambda, alpha)).collect()
}

fn covariance_point(model: &SpikedWishart, lambda: f64, alpha: f64) -> Result<CovariancePoint> {
    check_params(lambda, alpha)?;
    let u = model.u();
    let m = u.moments();
    let objective = |q: f64| u.psi_unchecked(lambda * alpha * q) + alpha / 2.0 * (q + (-q).ln_1p());
    // Stationarity: lambda (1 - q) 2 psi'_U(lambda alpha q) = q. Every root lies
    // below lambda m2 / (1 + lambda m2).
    let exact = |q: f64| lambda * (1.0 - q) * u.overlap_unchecked(lambda * alpha * q) - q;
    let approx = |q: f64| lambda * (1.0 - q) * u.overlap_approx(lambda * alpha * q) - q;
    let top = (lambda * m.m2 / (1.0 + lambda * m.m2) * (1.0 + 1e-6)).min(COVARIANCE_Q_MAX);
    let grid = scan_grid(top, SCAN_STEPS);
    let mut candidates = guarded_scan(exact, approx, 0.0, &grid, APPROX_GUARD, ROOT_TOL, ROOT_DEDUP);
    // The origin competes even when it is not stationary (then the objective
    // increases there and the origin loses).
    if candidates.first() != Some(&0.0) {
        candidates.insert(0, 0.0);
    }
    let values: Vec<f64> = candidates.iter().map(|&q| objective(q)).collect();
    let (q, _, _) = pick_maximizer(&candidates, &values);
    let q_u_star = q / (lambda * (1.0 - q));
    let (qu_amp, _) = model.amp_se_limit(lambda, alpha)?;
    Ok(CovariancePoint {
        alpha,
        q,
        q_u_star,
        mmse_uu: (m.m2 * m.m2 - q_u_star * q_u_star).max(0.0),
        mse_pca: pca_wishart_limits(lambda, alpha)?.mse,
        mse_amp_se: (m.m2 * m.m2 - qu_amp * qu_amp).max(0.0),
    })
}
