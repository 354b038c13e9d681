//! Property checks shared by the proptest suite and the acceptance run.
//! Each returns `Err(description)` on violation.
#![allow(dead_code)]

use spikelab_core::dynamics::{generate_wigner, state_evolution_wigner};
use spikelab_core::oracle::{self, Estimate};
use spikelab_core::optim::golden_max;
use spikelab_core::rs_wigner::{Phase, SpikedWigner};
use spikelab_core::rs_wishart::{pca_wishart_limits, spiked_covariance_curve, SpikedWishart};
use spikelab_core::{Prior, ScalarChannel};

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn ok<T>(r: spikelab_core::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// Priors exercised by the randomized checks, with display names.
pub fn prior_pool() -> Vec<Prior> {
    vec![
        Prior::rademacher(),
        Prior::standard_gaussian(),
        Prior::sbm(0.1).unwrap(),
        Prior::sbm(0.3).unwrap(),
        Prior::sparse_gaussian(0.2).unwrap(),
        Prior::bernoulli(0.3).unwrap(),
        Prior::discrete_gaussian(5).unwrap(),
        Prior::from_atoms(&[(-1.5, 0.2), (0.2, 0.5), (1.0, 0.3)]).unwrap(),
        Prior::gaussian(0.5, 2.0).unwrap(),
    ]
}

/// The unit-second-moment priors of the pool.
pub fn unit_prior_pool() -> Vec<Prior> {
    prior_pool().into_iter().filter(|p| (p.second_moment() - 1.0).abs() < 1e-12).collect()
}

pub fn fourth_moment(p: &Prior) -> f64 {
    let atoms: f64 = p.atoms().iter().map(|a| a.weight * a.value.powi(4)).sum();
    let gauss: f64 = p
        .gaussians()
        .iter()
        .map(|g| g.weight * (g.mean.powi(4) + 6.0 * g.mean * g.mean * g.var + 3.0 * g.var * g.var))
        .sum();
    atoms + gauss
}

// Scalar channel.

pub fn psi_convex(ch: &ScalarChannel, g1: f64, g2: f64, t: f64) -> Check {
    let mid = ok(ch.psi(t * g1 + (1.0 - t) * g2))?;
    let chord = t * ok(ch.psi(g1))? + (1.0 - t) * ok(ch.psi(g2))?;
    ensure!(mid <= chord + 1e-9, "psi not convex at ({g1}, {g2}, {t}): {mid} > {chord}");
    Ok(())
}

pub fn psi_lipschitz(ch: &ScalarChannel, g1: f64, g2: f64) -> Check {
    let d = (ok(ch.psi(g1))? - ok(ch.psi(g2))?).abs();
    let bound = ch.moments().m2 / 2.0 * (g1 - g2).abs() + 1e-9;
    ensure!(d <= bound, "psi Lipschitz violated at ({g1}, {g2}): {d} > {bound}");
    ensure!(ok(ch.psi(g1))? >= -1e-12, "psi negative at {g1}");
    Ok(())
}

/// Central differences of `psi` converge to `psi'` at second order.
pub fn psi_prime_second_order(ch: &ScalarChannel, g: f64) -> Check {
    let d = ok(ch.psi_prime(g))?;
    let err = |h: f64| -> Result<f64, String> { Ok(((ok(ch.psi(g + h))? - ok(ch.psi(g - h))?) / (2.0 * h) - d).abs()) };
    let (e2, e3) = (err(1e-2)?, err(1e-3)?);
    ensure!(e2 <= 1e-2 && e3 <= (e2 / 30.0).max(2e-9), "psi' at {g}: errors {e2:e} (h=1e-2), {e3:e} (h=1e-3)");
    Ok(())
}

pub fn denoiser_nishimori(ch: &ScalarChannel, g: f64) -> Check {
    let (a, b) = ok(ch.nishimori_pair(g))?;
    ensure!((a - b).abs() <= 1e-8, "Nishimori at gamma {g}: {a} vs {b}");
    Ok(())
}

pub fn mmse_monotone_continuous(ch: &ScalarChannel, grid: &[f64]) -> Check {
    let vals: Vec<f64> = grid.iter().map(|&g| ch.mmse(g)).collect::<spikelab_core::Result<_>>().map_err(|e| e.to_string())?;
    for (w, g) in vals.windows(2).zip(grid.windows(2)) {
        ensure!(w[1] <= w[0] + 1e-10, "mmse increases between {} and {}: {} -> {}", g[0], g[1], w[0], w[1]);
        // |mmse'(gamma)| = E[Var(X|Y)^2] <= E[X^4].
        let jump = w[0] - w[1];
        let bound = fourth_moment(ch.prior()) * (g[1] - g[0]) + 1e-9;
        ensure!(jump <= bound, "mmse jumps by {jump} on [{}, {}]", g[0], g[1]);
    }
    Ok(())
}

pub fn worst_case_gaussian(ch: &ScalarChannel, g: f64) -> Check {
    let psi = ok(ch.psi(g))?;
    let gauss = 0.5 * (g - g.ln_1p());
    ensure!(psi >= gauss - 1e-8, "psi {psi} below the Gaussian {gauss} at {g}");
    Ok(())
}

/// `(psi*)*(gamma) = sup_x { x gamma - psi*(x) } = psi(gamma)`.
pub fn conjugate_duality(ch: &ScalarChannel, g: f64) -> Check {
    let m2 = ch.moments().m2;
    let mut err = None;
    let (_, bi) = golden_max(
        |x| match ch.monotone_conjugate(x) {
            Ok(c) if c.is_finite() => x * g - c,
            Ok(_) => f64::NEG_INFINITY,
            Err(e) => {
                err = Some(e.to_string());
                f64::NEG_INFINITY
            }
        },
        0.0,
        m2 / 2.0,
        1e-12,
    );
    if let Some(e) = err {
        return Err(e);
    }
    let psi = ok(ch.psi(g))?;
    ensure!((bi - psi).abs() <= 1e-6, "biconjugate {bi} vs psi {psi} at {g}");
    Ok(())
}

// Symmetric RS formula.

pub fn stationary_residuals(model: &SpikedWigner, lambda: f64) -> Check {
    for q in ok(model.stationary_points(lambda))? {
        let r = model.stationarity_residual(lambda, q);
        ensure!(r.abs() <= 1e-9, "residual {r:e} at q = {q}, lambda = {lambda}");
    }
    Ok(())
}

/// `d/dlambda sup_q F(lambda, q) = q*^2 / 4` away from jumps of `q*`.
pub fn envelope_derivative(model: &SpikedWigner, lambda: f64) -> Check {
    let h = 1e-3;
    let s = ok(model.solve(lambda))?;
    let (lo, hi) = (ok(model.solve(lambda - h))?, ok(model.solve(lambda + h))?);
    if s.degenerate || (hi.q_star - lo.q_star).abs() > 0.05 {
        return Ok(());
    }
    let fd = (hi.value - lo.value) / (2.0 * h);
    let want = s.q_star * s.q_star / 4.0;
    ensure!((fd - want).abs() <= 1e-5, "envelope at {lambda}: {fd} vs {want}");
    Ok(())
}

pub fn sup_value_convex_nondecreasing(model: &SpikedWigner, grid: &[f64]) -> Check {
    let v: Vec<f64> = grid.iter().map(|&l| model.solve(l).map(|s| s.value)).collect::<spikelab_core::Result<_>>().map_err(|e| e.to_string())?;
    for w in v.windows(2) {
        ensure!(w[1] >= w[0] - 1e-10, "sup F decreases: {v:?}");
    }
    for (w, g) in v.windows(3).zip(grid.windows(3)) {
        let (d1, d2) = ((w[1] - w[0]) / (g[1] - g[0]), (w[2] - w[1]) / (g[2] - g[1]));
        ensure!(d2 >= d1 - 1e-8, "sup F not convex around {}: slopes {d1} then {d2}", g[1]);
    }
    Ok(())
}

pub fn wigner_mmse_bounds(model: &SpikedWigner, lambda: f64) -> Check {
    let mmse = ok(model.mmse_limit(lambda))?;
    let pca = ok(model.mse_pca_limit(lambda))?;
    let m = model.channel().moments();
    ensure!(mmse <= pca + 1e-9, "mmse {mmse} above PCA {pca} at {lambda}");
    ensure!(mmse <= m.m2 * m.m2 - m.m1.powi(4) + 1e-9, "mmse {mmse} above the dummy error at {lambda}");
    ensure!(mmse >= -1e-12, "negative mmse {mmse}");
    Ok(())
}

pub fn classification_monotone(p: f64, lambda_grid: &[f64]) -> Check {
    let model = SpikedWigner::new(ok(Prior::sbm(p))?);
    let rank = |ph: Phase| match ph {
        Phase::Impossible => 0,
        Phase::Hard => 1,
        Phase::Easy => 2,
    };
    let mut last = 0;
    for &l in lambda_grid {
        let r = rank(ok(model.classify_phase(l))?);
        ensure!(r >= last, "phase order reverses at p = {p}, lambda = {l}");
        last = r;
    }
    Ok(())
}

// Rectangular RS formula.

pub fn gamma_residuals(model: &SpikedWishart, lambda: f64, alpha: f64) -> Check {
    for (qu, qv) in ok(model.gamma_fixed_points(lambda, alpha))? {
        let (a, b) = model.fixed_point_residuals(lambda, alpha, qu, qv);
        ensure!(a.abs() <= 1e-9 && b.abs() <= 1e-9, "residuals ({a:e}, {b:e}) at ({qu}, {qv})");
    }
    Ok(())
}

/// `solve` itself refuses a disagreement beyond 1e-6; this reports the gap.
pub fn sup_inf_consistent(model: &SpikedWishart, lambda: f64, alpha: f64) -> Result<f64, String> {
    let s = ok(model.solve(lambda, alpha))?;
    let gap = (s.value - s.sup_inf_value).abs();
    ensure!(gap <= 1e-6, "sup over fixed points {} vs sup-inf {} at ({lambda}, {alpha})", s.value, s.sup_inf_value);
    Ok(gap)
}

pub fn gaussian_wishart_closed_form(lambda: f64, alpha: f64) -> Check {
    let model = SpikedWishart::new(Prior::standard_gaussian(), Prior::standard_gaussian());
    let s = ok(model.solve(lambda, alpha))?;
    let snr = lambda * lambda * alpha;
    if snr > 1.0 {
        let qu = (snr - 1.0) / (lambda * (lambda * alpha + 1.0));
        let qv = (snr - 1.0) / (lambda * alpha * (1.0 + lambda));
        let found = s.gamma_set.iter().any(|p| (p.0 - qu).abs() <= 1e-8 && (p.1 - qv).abs() <= 1e-8);
        ensure!(found, "closed-form fixed point ({qu}, {qv}) missing from {:?}", s.gamma_set);
        let pca = ok(pca_wishart_limits(lambda, alpha))?;
        ensure!((s.q_u_star - pca.overlap_sq).abs() <= 1e-8, "q_u* {} vs PCA {}", s.q_u_star, pca.overlap_sq);
    } else {
        ensure!(s.q_u_star.abs() <= 1e-8, "nonzero q_u* {} below the spectral threshold", s.q_u_star);
    }
    Ok(())
}

pub fn wishart_mmse_consistency(model: &SpikedWishart, lambda: f64, alpha: f64) -> Check {
    let (mu, mv) = (model.u().moments(), model.v().moments());
    let uv = ok(model.mmse_uv_limit(lambda, alpha))?;
    let uu = ok(model.mmse_uu_limit(lambda, alpha))?;
    let vv = ok(model.mmse_vv_limit(lambda, alpha))?;
    let dmse = mu.m2 * mv.m2 - mu.m1.powi(2) * mv.m1.powi(2);
    ensure!(uv <= dmse + 1e-9, "mmse_uv {uv} above the dummy error {dmse}");
    ensure!(uu <= mu.m2 * mu.m2 + 1e-12, "mmse_uu {uu} above m2_U^2");
    let qu = (mu.m2 * mu.m2 - uu).max(0.0).sqrt();
    let qv = (mv.m2 * mv.m2 - vv).max(0.0).sqrt();
    let rebuilt = mu.m2 * mv.m2 - qu * qv;
    ensure!((uv - rebuilt).abs() <= 1e-9, "mmse_uv {uv} vs reconstruction {rebuilt}");
    Ok(())
}

pub fn covariance_reduction(pu: &Prior, lambda: f64, alpha: f64) -> Check {
    let curve = ok(spiked_covariance_curve(&ScalarChannel::new(pu.clone()), lambda, &[alpha]))?;
    let s = ok(SpikedWishart::new(pu.clone(), Prior::standard_gaussian()).solve(lambda, alpha))?;
    ensure!(
        (curve[0].q_u_star - s.q_u_star).abs() <= 1e-7,
        "covariance q_u* {} vs solve {} at ({lambda}, {alpha})",
        curve[0].q_u_star,
        s.q_u_star
    );
    Ok(())
}

// Dynamics.

pub fn se_monotone(ch: &ScalarChannel, lambda: f64, q0: f64) -> Check {
    let tr = ok(state_evolution_wigner(ch, lambda, 300, Some(q0), true))?;
    let q = &tr.q_values;
    let up = q.windows(2).all(|w| w[1] >= w[0] - 1e-15);
    let down = q.windows(2).all(|w| w[1] <= w[0] + 1e-15);
    ensure!(up || down, "state evolution from {q0} at {lambda} is not monotone: {:?}", &q[..q.len().min(8)]);
    Ok(())
}

/// Converged state evolution lands on a reported stationary point.
/// Returns whether the trace converged (unconverged traces are not judged).
pub fn se_limit_stationary(model: &SpikedWigner, lambda: f64, q0: f64) -> Result<bool, String> {
    let tr = ok(state_evolution_wigner(model.channel(), lambda, 20_000, Some(q0), true))?;
    if !tr.converged {
        return Ok(false);
    }
    let q = tr.q_infinity;
    let r = model.stationarity_residual(lambda, q);
    ensure!(r.abs() <= 1e-10, "SE limit {q} has residual {r:e}");
    let pts = ok(model.stationary_points(lambda))?;
    let d = pts.iter().map(|p| (p - q).abs()).fold(f64::INFINITY, f64::min);
    ensure!(d <= 1e-8, "SE limit {q} is {d:e} from the stationary points {pts:?}");
    Ok(true)
}

pub fn noise_moment(prior: &Prior, n: usize, lambda: f64, seed: u64) -> Check {
    let inst = ok(generate_wigner(prior, n, lambda, seed))?;
    let scale = (lambda / n as f64).sqrt();
    let mut acc = 0.0;
    let mut count = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            acc += (inst.y.get(i, j) - scale * inst.x[i] * inst.x[j]).powi(2);
            count += 1.0;
        }
    }
    let var = acc / count;
    let se = (2.0 / count).sqrt();
    ensure!((var - 1.0).abs() <= 3.0 * se, "noise variance {var} (se {se})");
    Ok(())
}

// Oracle.

pub fn oracle_prior_marginals(prior: &Prior, n: usize, seed: u64) -> Check {
    let inst = ok(generate_wigner(prior, n, 0.0, seed))?;
    let post = ok(oracle::exact_posterior(prior, &inst.y, 0.0))?;
    ensure!(post.log_z == 0.0, "normalizer {} at lambda = 0", post.log_z);
    let m = prior.moments();
    for i in 0..n {
        ensure!((post.mean[i] - m.m1).abs() <= 1e-12, "marginal mean {} vs {}", post.mean[i], m.m1);
        ensure!((post.second[i * n + i] - m.m2).abs() <= 1e-12, "marginal m2 {}", post.second[i * n + i]);
    }
    let live = ok(oracle::exact_posterior(prior, &ok(generate_wigner(prior, n, 3.0, seed))?.y, 3.0))?;
    ensure!(live.log_z.is_finite(), "normalizer not finite");
    Ok(())
}

/// `E ||<x>||^2 = E <x> . X` over instances.
pub fn oracle_nishimori(prior: &Prior, n: usize, lambda: f64, instances: u64) -> Check {
    let mut d = Vec::new();
    for seed in 0..instances {
        let inst = ok(generate_wigner(prior, n, lambda, seed))?;
        let post = ok(oracle::exact_posterior(prior, &inst.y, lambda))?;
        let a: f64 = post.mean.iter().map(|m| m * m).sum();
        let b: f64 = post.mean.iter().zip(&inst.x).map(|(m, x)| m * x).sum();
        d.push(a - b);
    }
    let e = Estimate::from_samples(&d);
    ensure!(e.mean.abs() <= 3.0 * e.stderr + 1e-12, "finite-n Nishimori gap {e:?}");
    Ok(())
}

pub fn oracle_mmse_bounds(prior: &Prior, n: usize, lambda: f64, trials: usize, seed: u64) -> Check {
    let e = ok(oracle::mmse_mc(prior, n, lambda, trials, seed))?;
    let m = prior.moments();
    let dmse = m.m2 * m.m2 - m.m1.powi(4);
    ensure!(e.mean >= 0.0 && e.mean <= dmse + 3.0 * e.stderr, "MMSE_n {e:?} outside [0, {dmse}]");
    Ok(())
}

pub fn oracle_gap_trend(prior: &Prior, n: usize, lambda: f64, trials: usize, seed: u64) -> Check {
    let f = |k| ok(oracle::free_energy_mc_cv(prior, k, lambda, trials, seed)).map(|e| e.mean);
    let (a, b, c) = (f(n)?, f(2 * n)?, f(4 * n)?);
    ensure!((b - c).abs() < (a - b).abs(), "|F_n - F_2n| does not shrink: {a} {b} {c}");
    Ok(())
}

pub fn rem_lower_bound(n: usize, lambda: f64, trials: usize, seed: u64) -> Check {
    let e = ok(oracle::rem_mc(n, lambda, trials, seed))?;
    let bound = lambda / 2.0 - std::f64::consts::LN_2;
    ensure!(e.mean >= bound - 3.0 * e.stderr, "REM F_n {e:?} below {bound}");
    Ok(())
}

pub fn pinning_full_reveal(prior: &Prior, n: usize, lambda: f64, seed: u64) -> Check {
    let v = ok(oracle::pinned_overlap_variance(prior, n, lambda, 1.0, 4, seed))?;
    ensure!(v.mean == 0.0, "overlap variance {} with every coordinate revealed", v.mean);
    Ok(())
}

pub fn wasserstein_inequality(prior: &Prior, n: usize, lambda: f64, m: usize, trials: usize, seed: u64) -> Check {
    let c = ok(oracle::wasserstein_stability_check(prior, n, lambda, m, trials, seed))?;
    ensure!(c.holds, "transport bound violated: {c:?}");
    Ok(())
}
