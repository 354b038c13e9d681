//! The scalar Gaussian channel `Y = sqrt(gamma) X + Z`, `X ~ prior`, `Z ~ N(0,1)`.
//!
//! Everything downstream reduces to three functions of the signal-to-noise
//! ratio `gamma`:
//!
//! - free energy `psi(gamma) = E log ∫ dP(x) exp(sqrt(gamma) Y x - gamma x^2 / 2)`,
//! - `mmse(gamma) = E (X - E[X|Y])^2`,
//! - `psi'(gamma) = (m2 - mmse(gamma)) / 2`.
//!
//! The inner integral over the prior is exact: a finite sum over atoms plus a
//! closed-form Gaussian integral per Gaussian component, combined with a
//! log-sum-exp shift. Conditionally on the mixture component, `Y` is Gaussian,
//! so the outer expectation is a sum over components of one-dimensional
//! normal expectations, evaluated by the configured [`Integrator`].
//! A single Gaussian prior uses its closed forms directly.

mod quadrature;
mod table;

pub use quadrature::{Integrator, QuadratureRule};

use std::sync::{Arc, OnceLock};

use crate::error::{invalid, Result};
use crate::optim::{brent_root, golden_max};
use table::{node_gamma, OverlapTable};
use crate::priors::{Moments, Prior};

/// All scalar-channel quantities at one `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelEval {
    pub gamma: f64,
    pub psi: f64,
    pub psi_prime: f64,
    pub mmse: f64,
}

#[derive(Debug, Clone, Copy)]
enum Component {
    Atom { value: f64, weight: f64, log_weight: f64 },
    Gauss { mean: f64, var: f64, weight: f64, log_weight: f64 },
}

impl Component {
    fn weight(&self) -> f64 {
        match *self {
            Component::Atom { weight, .. } | Component::Gauss { weight, .. } => weight,
        }
    }

    /// Location and scale of `Y` given this component.
    fn channel_law(&self, sg: f64) -> (f64, f64) {
        match *self {
            Component::Atom { value, .. } => (sg * value, 1.0),
            Component::Gauss { mean, var, .. } => (sg * mean, (1.0 + sg * sg * var).sqrt()),
        }
    }

    /// `(log joint weight, posterior mean, posterior second moment)` given
    /// this component, at observation `y`.
    #[inline]
    fn term(&self, y: f64, sg: f64, gamma: f64) -> (f64, f64, f64) {
        match *self {
            Component::Atom { value, log_weight, .. } => {
                (log_weight + sg * y * value - 0.5 * gamma * value * value, value, value * value)
            }
            Component::Gauss { mean, var, log_weight, .. } => {
                let d = 1.0 + gamma * var;
                let b = mean + sg * y * var;
                let log_z = log_weight - 0.5 * d.ln() + b * b / (2.0 * var * d) - mean * mean / (2.0 * var);
                let m = b / d;
                (log_z, m, m * m + var / d)
            }
        }
    }
}

/// Posterior summary at one observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posterior {
    /// `log ∫ dP(x) exp(sqrt(gamma) y x - gamma x^2 / 2)`.
    pub log_partition: f64,
    pub mean: f64,
    pub second_moment: f64,
}

/// Scalar channel bound to one prior and one integration scheme.
#[derive(Debug, Clone)]
pub struct ScalarChannel {
    prior: Prior,
    moments: Moments,
    components: Vec<Component>,
    integrator: Integrator,
    table: OnceLock<Arc<OverlapTable>>,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma >= 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("signal-to-noise ratio must be finite and >= 0, got {gamma}")))
    }
}

/// `x - ln(1 + x)` without cancellation at small `x`.
fn x_minus_ln1p(x: f64) -> f64 {
    if x < 1e-3 {
        // Alternating series x^2/2 - x^3/3 + ...; truncation error below x^8.
        let mut term = x;
        let mut sum = 0.0;
        for k in 2..9 {
            term *= -x;
            sum -= term / k as f64;
        }
        sum
    } else {
        x - x.ln_1p()
    }
}

/// Upper limit for the conjugate's inner search over `gamma`.
const CONJUGATE_GAMMA_CAP: f64 = 1e6;

impl ScalarChannel {
    pub fn new(prior: Prior) -> Self {
        Self::with_integrator(prior, Integrator::default())
    }

    pub fn with_integrator(prior: Prior, integrator: Integrator) -> Self {
        let mut components = Vec::new();
        for a in prior.atoms() {
            components.push(Component::Atom { value: a.value, weight: a.weight, log_weight: a.weight.ln() });
        }
        for g in prior.gaussians() {
            components.push(Component::Gauss {
                mean: g.mean,
                var: g.var,
                weight: g.weight,
                log_weight: g.weight.ln(),
            });
        }
        let moments = prior.moments();
        ScalarChannel { prior, moments, components, integrator, table: OnceLock::new() }
    }

    pub fn prior(&self) -> &Prior {
        &self.prior
    }

    pub fn moments(&self) -> Moments {
        self.moments
    }

    pub fn integrator(&self) -> &Integrator {
        &self.integrator
    }

    /// Posterior at observation `y`, stabilized by a max shift over
    /// components.
    pub fn posterior(&self, y: f64, gamma: f64) -> Posterior {
        let sg = gamma.sqrt();
        let mut top = f64::NEG_INFINITY;
        for c in &self.components {
            top = top.max(c.term(y, sg, gamma).0);
        }
        let (mut z, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for c in &self.components {
            let (l, m, q) = c.term(y, sg, gamma);
            let e = (l - top).exp();
            z += e;
            s1 += e * m;
            s2 += e * q;
        }
        Posterior { log_partition: top + z.ln(), mean: s1 / z, second_moment: s2 / z }
    }

    /// `sum_c w_c E[f(Y) | c]` with `f` evaluated on the posterior at `Y`.
    fn expect_over_y<const K: usize, F>(&self, gamma: f64, f: F) -> [f64; K]
    where
        F: Fn(&Component, f64, &Posterior) -> [f64; K],
    {
        let sg = gamma.sqrt();
        let mut acc = [0.0; K];
        for c in &self.components {
            let (loc, scale) = c.channel_law(sg);
            let v = self.integrator.expect(|z| {
                let y = loc + scale * z;
                f(c, y, &self.posterior(y, gamma))
            });
            for k in 0..K {
                acc[k] += c.weight() * v[k];
            }
        }
        acc
    }

    pub(crate) fn psi_unchecked(&self, gamma: f64) -> f64 {
        if gamma == 0.0 {
            return 0.0;
        }
        if let Some(g) = self.prior.as_single_gaussian() {
            return 0.5 * (gamma * g.mean * g.mean + x_minus_ln1p(gamma * g.var));
        }
        self.expect_over_y(gamma, |_, _, post| [post.log_partition])[0]
    }

    /// `E[g(Y)^2]` where `g` is the posterior mean; equals `2 psi'(gamma)`.
    pub(crate) fn overlap_unchecked(&self, gamma: f64) -> f64 {
        let Moments { m1, m2, .. } = self.moments;
        if gamma == 0.0 {
            return m1 * m1;
        }
        if let Some(g) = self.prior.as_single_gaussian() {
            return g.mean * g.mean + gamma * g.var * g.var / (1.0 + gamma * g.var);
        }
        self.expect_over_y(gamma, |_, _, post| [post.mean * post.mean])[0].clamp(m1 * m1, m2)
    }

    fn table(&self) -> &OverlapTable {
        self.table.get_or_init(|| Arc::new(OverlapTable::build(|g| self.overlap_unchecked(g))))
    }

    /// Cheap approximation of `2 psi'(gamma)` from a lazily built table
    /// (accurate to roughly `1e-9`); exact outside the tabulated range.
    /// Intended for scanning, with exact refinement afterwards.
    pub(crate) fn overlap_approx(&self, gamma: f64) -> f64 {
        if self.prior.as_single_gaussian().is_some() {
            return self.overlap_unchecked(gamma);
        }
        self.table().interpolate(gamma).unwrap_or_else(|| self.overlap_unchecked(gamma))
    }

    /// Solves `2 psi'(gamma) = target` for `target` strictly inside
    /// `(m1^2, m2)`. Returns `None` when the root lies beyond the table.
    pub(crate) fn invert_overlap(&self, target: f64) -> Option<f64> {
        let table = self.table();
        let k = table.upper_index(target)?;
        let (a, b) = (node_gamma(k - 1), node_gamma(k));
        let (fa, fb) = (table.value(k - 1) - target, table.value(k) - target);
        let tol = 1e-13 * b.max(1.0);
        Some(brent_root(|g| self.overlap_unchecked(g) - target, a, b, fa, fb, tol))
    }

    /// Free energy of the channel.
    pub fn psi(&self, gamma: f64) -> Result<f64> {
        check_gamma(gamma)?;
        Ok(self.psi_unchecked(gamma))
    }

    /// Minimum mean squared error `m2 - E[g(Y)^2]`.
    pub fn mmse(&self, gamma: f64) -> Result<f64> {
        check_gamma(gamma)?;
        Ok(self.moments.m2 - self.overlap_unchecked(gamma))
    }

    pub fn psi_prime(&self, gamma: f64) -> Result<f64> {
        check_gamma(gamma)?;
        Ok(0.5 * self.overlap_unchecked(gamma))
    }

    pub fn eval(&self, gamma: f64) -> Result<ChannelEval> {
        check_gamma(gamma)?;
        let overlap = self.overlap_unchecked(gamma);
        Ok(ChannelEval {
            gamma,
            psi: self.psi_unchecked(gamma),
            psi_prime: 0.5 * overlap,
            mmse: self.moments.m2 - overlap,
        })
    }

    /// Posterior-mean denoiser `E[X | sqrt(gamma) X + Z = y]`.
    pub fn denoise(&self, y: f64, gamma: f64) -> f64 {
        if gamma <= 0.0 {
            return self.moments.m1;
        }
        self.posterior(y, gamma).mean
    }

    /// `d/dy` of the denoiser: `sqrt(gamma) Var(X | Y = y)`.
    pub fn denoise_derivative(&self, y: f64, gamma: f64) -> f64 {
        if gamma <= 0.0 {
            return 0.0;
        }
        let p = self.posterior(y, gamma);
        gamma.sqrt() * (p.second_moment - p.mean * p.mean).max(0.0)
    }

    /// The two sides of the Nishimori identity, `(E[g(Y)^2], E[X g(Y)])`.
    /// The second side uses the conditional mean of `X` within each mixture
    /// component, not the posterior mean, so the pair is an independent check
    /// on the integration.
    pub fn nishimori_pair(&self, gamma: f64) -> Result<(f64, f64)> {
        check_gamma(gamma)?;
        let sg = gamma.sqrt();
        let [a, b] = self.expect_over_y(gamma, |c, y, post| {
            let x_given_c = match *c {
                Component::Atom { value, .. } => value,
                Component::Gauss { mean, var, .. } => mean + sg * var * (y - sg * mean) / (1.0 + gamma * var),
            };
            [post.mean * post.mean, x_given_c * post.mean]
        });
        Ok((a, b))
    }

    /// Monotone conjugate `psi*(x) = sup_{gamma >= 0} { x gamma - psi(gamma) }`.
    ///
    /// `psi'` increases from `m1^2 / 2` to `m2 / 2`, so the supremum is `0` for
    /// `x <= m1^2 / 2` and `+inf` for `x > m2 / 2`. In between it is attained
    /// where `2 psi'(gamma) = 2x`; that root is bracketed from the overlap table
    /// and polished with Brent's method. Targets beyond the table (maximizer
    /// past `gamma ~ 2000`) fall back to a golden-section search capped at
    /// `gamma = 1e6`.
    pub fn monotone_conjugate(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(invalid(format!("monotone conjugate needs x >= 0, got {x}")));
        }
        let half_m2 = 0.5 * self.moments.m2;
        if x > half_m2 * (1.0 + 1e-12) {
            return Ok(f64::INFINITY);
        }
        if x <= 0.5 * self.moments.m1 * self.moments.m1 {
            return Ok(0.0);
        }
        let obj = |g: f64| x * g - self.psi_unchecked(g);
        // The maximizer solves 2 psi'(gamma) = 2x.
        if let Some(g) = self.invert_overlap(2.0 * x) {
            return Ok(obj(g).max(0.0));
        }
        let mut hi = self.table().gamma_max();
        let mut prev = obj(hi / 2.0);
        loop {
            let cur = obj(hi);
            if cur < prev || hi >= CONJUGATE_GAMMA_CAP {
                break;
            }
            prev = cur;
            hi *= 2.0;
        }
        let hi = hi.min(CONJUGATE_GAMMA_CAP);
        let lo = hi / 4.0;
        let (_, v) = golden_max(obj, lo, hi, 1e-10 * hi.max(1.0));
        Ok(v.max(0.0))
    }
}
