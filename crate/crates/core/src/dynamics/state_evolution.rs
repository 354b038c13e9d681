//! Deterministic state evolution for the Wigner and Wishart models.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::scalar_channel::ScalarChannel;

/// Successive iterates closer than this count as converged.
pub const SE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeTrace {
    /// `q_0, ..., q_T` (shorter if converged early).
    pub q_values: Vec<f64>,
    pub converged: bool,
    pub q_infinity: f64,
}

impl SeTrace {
    /// `q_t`, repeating the limit past the end of the trace.
    pub fn q(&self, t: usize) -> f64 {
        self.q_values.get(t).copied().unwrap_or(self.q_infinity)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WishartSeTrace {
    /// `(q_u^t, q_v^t)` for `t = 0, ..., T`.
    pub q_values: Vec<(f64, f64)>,
    pub converged: bool,
    pub q_infinity: (f64, f64),
}

/// Rejects priors without unit second moment unless explicitly allowed.
pub(crate) fn check_unit_moment(channel: &ScalarChannel, allow_non_unit: bool) -> Result<()> {
    let m2 = channel.moments().m2;
    if !allow_non_unit && (m2 - 1.0).abs() > 1e-9 {
        return Err(Error::Unsupported(format!(
            "state evolution and AMP assume a unit second moment (prior has E[X^2] = {m2}); \
             rescale the prior or allow non-unit moments explicitly"
        )));
    }
    Ok(())
}

/// `q_{t+1} = 2 psi'(lambda q_t)` for up to `iters` steps.
///
/// Without an override the start is the spectral value `q_0 = (1 - 1/lambda)_+`.
pub fn state_evolution_wigner(
    channel: &ScalarChannel,
    lambda: f64,
    iters: usize,
    q0_override: Option<f64>,
    allow_non_unit: bool,
) -> Result<SeTrace> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    if iters == 0 {
        return Err(invalid("state evolution needs at least one iteration"));
    }
    check_unit_moment(channel, allow_non_unit)?;
    let q0 = match q0_override {
        Some(q) if q >= 0.0 && q.is_finite() => q,
        Some(q) => return Err(invalid(format!("initial overlap must be finite and >= 0, got {q}"))),
        None => (1.0 - 1.0 / lambda).max(0.0),
    };
    let mut q_values = vec![q0];
    let mut converged = false;
    let mut q = q0;
    for _ in 0..iters {
        let next = channel.overlap_unchecked(lambda * q);
        q_values.push(next);
        let step = (next - q).abs();
        q = next;
        if step < SE_TOL {
            converged = true;
            break;
        }
    }
    Ok(SeTrace { q_values, converged, q_infinity: q })
}

/// Coupled recursion `q_v^{t+1} = 2 psi'_V(lambda q_u^t)`,
/// `q_u^{t+1} = 2 psi'_U(lambda alpha q_v^{t+1})` from `init` (default `(0, 0)`).
pub fn state_evolution_wishart(
    u: &ScalarChannel,
    v: &ScalarChannel,
    lambda: f64,
    alpha: f64,
    iters: usize,
    init: Option<(f64, f64)>,
) -> Result<WishartSeTrace> {
    if !(lambda >= 0.0 && lambda.is_finite() && alpha > 0.0 && alpha.is_finite()) {
        return Err(invalid(format!("need lambda >= 0 and alpha > 0, got ({lambda}, {alpha})")));
    }
    if iters == 0 {
        return Err(invalid("state evolution needs at least one iteration"));
    }
    let (mut qu, mut qv) = init.unwrap_or((0.0, 0.0));
    if !(qu >= 0.0 && qv >= 0.0) {
        return Err(invalid("initial overlaps must be >= 0"));
    }
    let mut q_values = vec![(qu, qv)];
    let mut converged = false;
    for _ in 0..iters {
        let nv = v.overlap_unchecked(lambda * qu);
        let nu = u.overlap_unchecked(lambda * alpha * nv);
        q_values.push((nu, nv));
        let step = (nu - qu).abs().max((nv - qv).abs());
        qu = nu;
        qv = nv;
        if step < SE_TOL {
            converged = true;
            break;
        }
    }
    Ok(WishartSeTrace { q_values, converged, q_infinity: (qu, qv) })
}
