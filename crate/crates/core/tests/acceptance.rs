//! End-to-end acceptance run: one line per criterion.
//!
//! Criteria listed in `EXPECTED_FAIL`
//! are computed and reported like the others, but do not fail the run; the
//! reason is printed on their line.

mod common;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use spikelab_core::dynamics::{amp_runs, pca_runs, AmpOptions, AmpStatus};
use spikelab_core::oracle::{self, Estimate};
use spikelab_core::rs_wigner::{phase_diagram, Phase, SpikedWigner};
use spikelab_core::rs_wishart::{pca_wishart_limits, SpikedWishart};
use spikelab_core::{Prior, ScalarChannel};

const EXPECTED_FAIL: &[(usize, &str)] = &[(
    7,
    "under Y' = sqrt(gamma/n) U U^T the variational formula flips at gamma + alpha lambda^2 = 1, not gamma^2 + alpha lambda^2 = 1",
)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn c1() -> Outcome {
    let ch = ScalarChannel::new(Prior::standard_gaussian());
    let (mut dpsi, mut dmmse) = (0.0f64, 0.0f64);
    for k in 0..=2000 {
        let g = 0.05 * k as f64;
        dpsi = dpsi.max((ch.psi(g).unwrap() - 0.5 * (g - g.ln_1p())).abs());
        dmmse = dmmse.max((ch.mmse(g).unwrap() - 1.0 / (1.0 + g)).abs());
    }
    outcome(dpsi <= 1e-9 && dmmse <= 1e-9, format!("max |psi err| = {dpsi:.2e}, max |mmse err| = {dmmse:.2e} on 2001 gammas in [0, 100]"))
}

fn c2() -> Outcome {
    let m = SpikedWigner::new(Prior::standard_gaussian());
    let (mut dq, mut dm, mut dp) = (0.0f64, 0.0f64, 0.0f64);
    for k in 1..=50 {
        let l = 0.1 * k as f64 - 0.0123;
        let q = m.q_star(l).unwrap().0;
        dq = dq.max((q - (1.0 - 1.0 / l).max(0.0)).abs());
        let mmse = m.mmse_limit(l).unwrap();
        let want = if l >= 1.0 { (2.0 - 1.0 / l) / l } else { 1.0 };
        dm = dm.max((mmse - want).abs());
        dp = dp.max((mmse - m.mse_pca_limit(l).unwrap()).abs());
    }
    outcome(
        dq <= 1e-8 && dm <= 1e-8 && dp <= 1e-8,
        format!("50 lambdas in (0, 5): max |q* err| = {dq:.2e}, |mmse err| = {dm:.2e}, |mmse - pca| = {dp:.2e}"),
    )
}

fn c3() -> Outcome {
    let m = SpikedWigner::new(Prior::sbm(0.05).unwrap());
    let lc = m.it_threshold().unwrap();
    let phases: Vec<Phase> = [0.4, 0.8, 1.5].iter().map(|&l| m.classify_phase(l).unwrap()).collect();
    let pass = (0.55..=0.65).contains(&lc) && phases == [Phase::Impossible, Phase::Hard, Phase::Easy];
    outcome(pass, format!("lambda_c = {lc:.6}, phases at 0.4/0.8/1.5 = {phases:?}"))
}

fn c4() -> Outcome {
    let ps = [0.15, 0.18, 0.20, 0.22, 0.25, 0.30];
    let pstar = 0.5 - 1.0 / (2.0 * 3f64.sqrt());
    let mut lambdas: Vec<f64> = (0..=1200).map(|k| 0.3 + 1e-3 * k as f64).collect();
    lambdas.extend((1..200).map(|k| 0.99 + 5e-5 * k as f64));
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let cells = phase_diagram(&ps, &lambdas).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for &p in &ps {
        let hard = cells.iter().filter(|c| c.p == p && c.phase == Phase::Hard).count();
        pass &= (hard > 0) == (p < pstar);
        parts.push(format!("p={p}: {hard} hard"));
    }
    // Boundary bracket: hard cells exist iff lambda_c < 1.
    let below = SpikedWigner::new(Prior::sbm(pstar - 0.003).unwrap()).it_threshold().unwrap();
    let above = SpikedWigner::new(Prior::sbm(pstar + 0.003).unwrap()).it_threshold().unwrap();
    let bracket = below < 1.0 - 1e-6 && above >= 1.0 - 1e-6;
    pass &= bracket;
    outcome(
        pass,
        format!(
            "{} lambda cells; {}; lambda_c(p*-0.003) = {below:.6}, lambda_c(p*+0.003) = {above:.6}",
            lambdas.len(),
            parts.join(", ")
        ),
    )
}

fn c5() -> Outcome {
    let g = SpikedWishart::new(Prior::standard_gaussian(), Prior::standard_gaussian());
    let pts = g.gamma_fixed_points(1.0, 4.0).unwrap();
    let found = pts.iter().any(|p| (p.0 - 0.6).abs() <= 1e-8 && (p.1 - 0.375).abs() <= 1e-8);
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut count = 0;
    while count < 20 {
        let (l, a): (f64, f64) = (rng.random_range(0.2..3.0), rng.random_range(0.25..4.0));
        if l * l * a <= 1.05 {
            continue;
        }
        let s = g.solve(l, a).unwrap();
        let pca = pca_wishart_limits(l, a).unwrap().overlap_sq;
        worst = worst.max((s.q_u_star - pca).abs());
        count += 1;
    }
    outcome(found && worst <= 1e-8, format!("(0.6, 0.375) in Gamma: {found}; max |q_u* - PCA| over 20 pairs = {worst:.2e}"))
}

fn pool4() -> Vec<(&'static str, Prior)> {
    vec![
        ("rademacher", Prior::rademacher()),
        ("gaussian", Prior::standard_gaussian()),
        ("sbm(0.1)", Prior::sbm(0.1).unwrap()),
        ("sparse_gaussian(0.2)", Prior::sparse_gaussian(0.2).unwrap()),
    ]
}

fn c6() -> Outcome {
    let pool = pool4();
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for _ in 0..50 {
        let (i, j) = (rng.random_range(0..4), rng.random_range(0..4));
        let (l, a): (f64, f64) = (rng.random_range(0.2..3.0), rng.random_range(0.25..4.0));
        let m = SpikedWishart::new(pool[i].1.clone(), pool[j].1.clone());
        match common::sup_inf_consistent(&m, l, a) {
            Ok(gap) => worst = worst.max(gap),
            Err(e) => failures.push(format!("{}x{} ({l:.3}, {a:.3}): {e}", pool[i].0, pool[j].0)),
        }
    }
    outcome(failures.is_empty(), format!("max gap = {worst:.2e} over 50 configs; failures: {failures:?}"))
}

fn c7() -> Outcome {
    let pool = pool4();
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (i, j) = (rng.random_range(0..4), rng.random_range(0..4));
        let (l, a): (f64, f64) = (rng.random_range(0.2..3.0), rng.random_range(0.25..4.0));
        let m = SpikedWishart::new(pool[i].1.clone(), pool[j].1.clone());
        let mixed = m.mixed_model_value(l, 0.0, a).unwrap().value;
        worst = worst.max((mixed - m.solve(l, a).unwrap().value).abs());
    }
    let reduction = worst <= 1e-6;

    // Sign of q_u* along lambda (step 0.02) for several side strengths.
    let m = SpikedWishart::new(Prior::rademacher(), Prior::standard_gaussian());
    let alpha = 1.0;
    let mut on_curve = true;
    let mut parts = Vec::new();
    for gamma in [0.0, 0.25, 0.5, 0.75] {
        let flip = (0..=75)
            .map(|k| 0.02 * k as f64)
            .find(|&l| m.mixed_model_value(l, gamma, alpha).unwrap().q_u_star > 1e-4)
            .unwrap_or(f64::NAN);
        let quad = ((1.0 - gamma * gamma) / alpha).sqrt();
        let lin = ((1.0 - gamma) / alpha).sqrt();
        on_curve &= (flip - quad).abs() <= 0.02 + 1e-12;
        parts.push(format!("gamma={gamma}: flip {flip:.2} (quadratic {quad:.3}, linear {lin:.3})"));
    }
    outcome(
        reduction && on_curve,
        format!("gamma=0 reduction max err {worst:.2e} over 20 configs; {}", parts.join("; ")),
    )
}

struct AmpStats {
    overlap_gap: f64,
    mse_gap: f64,
    norm_gap_worst_t: f64,
    completed: bool,
}

fn amp_stats() -> AmpStats {
    let n = 4000;
    let seeds: Vec<u64> = (0..20).collect();
    let runs = amp_runs(&Prior::rademacher(), 2.0, n, 10, &seeds, &AmpOptions::default()).unwrap();
    let k = runs.len() as f64;
    let mut s = AmpStats { overlap_gap: 0.0, mse_gap: 0.0, norm_gap_worst_t: 0.0, completed: true };
    let mut norm = vec![0.0; 11];
    for (_, tr) in &runs {
        s.completed &= tr.status == AmpStatus::Completed && tr.records.len() == 11;
        let r = &tr.records[10];
        s.overlap_gap += (r.overlap_emp - r.overlap_se).abs() / k;
        s.mse_gap += (r.mse_emp - r.mse_se).abs() / k;
        for (t, r) in tr.records.iter().enumerate() {
            norm[t] += (r.norm_emp - r.overlap_se).abs() / k;
        }
    }
    s.norm_gap_worst_t = norm.iter().cloned().fold(0.0, f64::max);
    s
}

fn c8(s: &AmpStats) -> Outcome {
    outcome(
        s.completed && s.overlap_gap <= 0.08 && s.mse_gap <= 0.08,
        format!("20 seeds, n=4000, t=10: mean |overlap - sqrt(q)| = {:.4}, mean |mse - (1-q^2)| = {:.4}", s.overlap_gap, s.mse_gap),
    )
}

fn pca_means(lambda: f64, seeds: u64) -> (f64, f64) {
    let s: Vec<u64> = (0..seeds).collect();
    let runs = pca_runs(&Prior::standard_gaussian(), lambda, 4000, &s, 1e-6, 20_000).unwrap();
    let k = runs.len() as f64;
    (runs.iter().map(|r| r.1.eigenvalue).sum::<f64>() / k, runs.iter().map(|r| r.1.overlap_sq).sum::<f64>() / k)
}

fn c9(top: f64, ov: f64) -> Outcome {
    outcome(
        (top - 2.5).abs() <= 0.05 && (ov - 0.75).abs() <= 0.05,
        format!("20 seeds, n=4000: mean top eigenvalue = {top:.4} (2.5), mean overlap^2 = {ov:.4} (0.75)"),
    )
}

fn c10() -> Outcome {
    let p = Prior::rademacher();
    let rs = SpikedWigner::new(p.clone()).solve(2.0).unwrap().value;
    let seed = 10;
    let f: Vec<Estimate> = [6, 10, 14].iter().map(|&n| oracle::free_energy_mc(&p, n, 2.0, 500, seed).unwrap()).collect();
    let gaps: Vec<f64> = f.iter().map(|e| (e.mean - rs).abs()).collect();
    let monotone = gaps[0] > gaps[1] && gaps[1] > gaps[2];
    let close = gaps[2] <= 0.05;
    let im = oracle::i_mmse_check(&p, 10, 1.0, 0.05, 2000, seed).unwrap();
    let cv: Vec<f64> = [6, 10, 14]
        .iter()
        .map(|&n| (oracle::free_energy_mc_cv(&p, n, 2.0, 500, seed).unwrap().mean - rs).abs())
        .collect();
    outcome(
        monotone && close && im.residual < 0.02,
        format!(
            "RS = {rs:.5}; F_6/F_10/F_14 = {:.4}±{:.4} / {:.4}±{:.4} / {:.4}±{:.4}; gaps {:.4} {:.4} {:.4}; \
             I-MMSE residual {:.4} (fd {:.4}±{:.4}, mmse side {:.4}); control-variate gaps {:.4} {:.4} {:.4}",
            f[0].mean, f[0].stderr, f[1].mean, f[1].stderr, f[2].mean, f[2].stderr, gaps[0], gaps[1], gaps[2],
            im.residual, im.slope_fd, im.slope_fd_stderr, im.slope_mmse, cv[0], cv[1], cv[2]
        ),
    )
}

fn c11() -> Outcome {
    let ln2 = std::f64::consts::LN_2;
    let exact = oracle::rem_free_energy(2.0 * ln2) == 0.0
        && oracle::rem_free_energy(1.0) == 0.0
        && (oracle::rem_free_energy(2.0) - (1.0 - ln2)).abs() < 1e-15
        && (oracle::rem_free_energy(3.0) - (1.5 - ln2)).abs() < 1e-15;
    let e = oracle::rem_mc(18, 3.0, 200, 11).unwrap();
    let target = 1.5 - ln2;
    outcome(
        exact && (e.mean - target).abs() <= 0.05,
        format!("piecewise exact: {exact}; rem_mc(18, 3) = {:.4}±{:.4} vs {target:.5}", e.mean, e.stderr),
    )
}

fn c12(amp: &AmpStats, pca4: (f64, f64)) -> Outcome {
    use common::*;
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    let channels: Vec<ScalarChannel> = prior_pool().into_iter().map(ScalarChannel::new).collect();
    let units: Vec<&ScalarChannel> = channels.iter().filter(|c| (c.moments().m2 - 1.0).abs() < 1e-12).collect();
    let models: Vec<SpikedWigner> = channels.iter().cloned().map(SpikedWigner::from_channel).collect();
    let mut checks = 0usize;
    let mut fails: Vec<String> = Vec::new();
    let mut run = |name: &str, r: Check| {
        checks += 1;
        if let Err(e) = r {
            fails.push(format!("{name}: {e}"));
        }
    };

    for _ in 0..200 {
        let ch = &channels[rng.random_range(0..channels.len())];
        let (g1, g2, t) = (rng.random_range(0.0..20.0), rng.random_range(0.0..20.0), rng.random_range(0.0..1.0));
        run("psi convexity", psi_convex(ch, g1, g2, t));
        run("psi Lipschitz", psi_lipschitz(ch, g1, g2));
    }
    for _ in 0..30 {
        let ch = &channels[rng.random_range(0..channels.len())];
        run("scalar I-MMSE", psi_prime_second_order(ch, rng.random_range(0.05..10.0)));
        run("denoiser Nishimori", denoiser_nishimori(ch, rng.random_range(0.0..30.0)));
        run("conjugate duality", conjugate_duality(ch, rng.random_range(0.05..8.0)));
        run("worst-case prior", worst_case_gaussian(units[rng.random_range(0..units.len())], rng.random_range(0.0..40.0)));
    }
    let gamma_grid: Vec<f64> = (0..=200).map(|k| 0.05 * k as f64).collect();
    for ch in &channels {
        run("mmse monotone", mmse_monotone_continuous(ch, &gamma_grid));
    }

    let lambda_grid: Vec<f64> = (1..=40).map(|k| 0.1 * k as f64).collect();
    for m in &models {
        run("sup F convex", sup_value_convex_nondecreasing(m, &lambda_grid));
        for _ in 0..10 {
            let l = rng.random_range(0.05..5.0);
            run("stationarity residual", stationary_residuals(m, l));
            run("envelope derivative", envelope_derivative(m, l.max(0.1)));
            run("mmse bounds", wigner_mmse_bounds(m, l));
        }
    }
    let phase_lambdas: Vec<f64> = (1..=30).map(|k| 0.05 * k as f64).collect();
    for p in [0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.45] {
        run("phase monotone", classification_monotone(p, &phase_lambdas));
    }

    let pool = pool4();
    for _ in 0..20 {
        let (i, j) = (rng.random_range(0..4), rng.random_range(0..4));
        let (l, a): (f64, f64) = (rng.random_range(0.2..3.0), rng.random_range(0.25..4.0));
        let m = SpikedWishart::new(pool[i].1.clone(), pool[j].1.clone());
        run("Gamma residuals", gamma_residuals(&m, l, a));
        run("Wishart errors", wishart_mmse_consistency(&m, l, a));
        run("covariance reduction", covariance_reduction(&pool[i].1, l, a));
        run("Gaussian Wishart", gaussian_wishart_closed_form(l, a));
    }

    let unit_models: Vec<SpikedWigner> = units.iter().map(|c| SpikedWigner::from_channel((*c).clone())).collect();
    let mut converged = 0;
    for _ in 0..40 {
        let k = rng.random_range(0..unit_models.len());
        let (l, q0) = (rng.random_range(0.1..4.0), rng.random_range(0.0..1.0));
        run("SE monotone", se_monotone(unit_models[k].channel(), l, q0));
        let r = se_limit_stationary(&unit_models[k], l, q0);
        if let Ok(true) = r {
            converged += 1;
        }
        run("SE limit stationary", r.map(|_| ()));
    }
    for seed in 0..4 {
        run("noise moment", noise_moment(&pool[seed as usize].1, 400, 1.5, seed));
    }
    let bound = 5.0 / 4000f64.sqrt();
    run(
        "AMP tracking",
        if amp.overlap_gap <= bound { Ok(()) } else { Err(format!("mean gap {} > {bound}", amp.overlap_gap)) },
    );
    run(
        "AMP norm",
        if amp.norm_gap_worst_t <= bound { Ok(()) } else { Err(format!("mean norm gap {} > {bound}", amp.norm_gap_worst_t)) },
    );
    let (_, ov2) = pca_means(2.0, 5);
    for (l, ov) in [(2.0, ov2), (4.0, pca4.1)] {
        let want = 1.0 - 1.0 / l;
        run("PCA overlap", if (ov - want).abs() <= 0.05 { Ok(()) } else { Err(format!("lambda {l}: {ov} vs {want}")) });
    }

    let rad = Prior::rademacher();
    let bern = Prior::bernoulli(0.3).unwrap();
    for seed in 0..3 {
        run("oracle marginals", oracle_prior_marginals(&bern, 6, seed));
        run("pinning eps=1", pinning_full_reveal(&rad, 10, 0.5 + seed as f64, seed));
        run("REM lower bound", rem_lower_bound(14, 1.0 + seed as f64, 50, seed));
    }
    run("oracle Nishimori", oracle_nishimori(&rad, 8, 1.5, 200));
    run("oracle mmse bounds", oracle_mmse_bounds(&rad, 8, 1.0, 200, 1));
    run("oracle mmse bounds", oracle_mmse_bounds(&bern, 6, 3.0, 200, 2));
    run("oracle F_n trend", oracle_gap_trend(&rad, 4, 0.5, 300, 3));
    run("Wasserstein", wasserstein_inequality(&Prior::discrete_gaussian(5).unwrap(), 8, 1.0, 20, 40, 4));

    outcome(
        fails.is_empty(),
        format!("{checks} checks ({converged}/40 SE traces converged), {} violations {:?}", fails.len(), fails),
    )
}

fn main() {
    let mut unexpected = Vec::new();
    let mut report = |k: usize, start: Instant, o: Outcome| {
        let secs = start.elapsed().as_secs_f64();
        let expected = EXPECTED_FAIL.iter().find(|e| e.0 == k);
        let tag = match (o.pass, expected) {
            (true, _) => "PASS".to_string(),
            (false, Some((_, why))) => format!("FAIL (expected: {why})"),
            (false, None) => {
                unexpected.push(k);
                "FAIL".to_string()
            }
        };
        println!("criterion {k:>2}: {tag} [{secs:.1}s] {}", o.detail);
    };
    let t = Instant::now();
    report(1, t, c1());
    let t = Instant::now();
    report(2, t, c2());
    let t = Instant::now();
    report(3, t, c3());
    let t = Instant::now();
    report(4, t, c4());
    let t = Instant::now();
    report(5, t, c5());
    let t = Instant::now();
    report(6, t, c6());
    let t = Instant::now();
    report(7, t, c7());
    let t = Instant::now();
    let amp = amp_stats();
    report(8, t, c8(&amp));
    let t = Instant::now();
    let pca4 = pca_means(4.0, 20);
    report(9, t, c9(pca4.0, pca4.1));
    let t = Instant::now();
    report(10, t, c10());
    let t = Instant::now();
    report(11, t, c11());
    let t = Instant::now();
    report(12, t, c12(&amp, pca4));
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
