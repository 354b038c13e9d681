//! Command handlers: a resolved [`RunConfig`] in, an [`Output`] out.

use rayon::prelude::*;
use serde_json::{json, Value};
use spikelab_core::dynamics::{amp_runs_with, pca_runs, state_evolution_wigner, state_evolution_wishart, AmpOptions};
use spikelab_core::oracle::{pinned_overlap_variance, rem_free_energy, rem_mc, wasserstein_stability_check, wigner_report};
use spikelab_core::rs_wigner::{phase_diagram, SpikedWigner};
use spikelab_core::rs_wishart::SpikedWishart;
use spikelab_core::{Error, Integrator, Prior, ScalarChannel};

use crate::config::{ConfigError, Format, RunConfig, DEFAULT_SEED};
use crate::output::{num, Output};

const DEFAULT_ITERS: usize = 50;
const DEFAULT_TRIALS: usize = 200;
const PCA_TOL: f64 = 1e-6;
const PCA_MAX_ITERS: usize = 20_000;

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Core(Error),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Core(e)
    }
}

type Result<T> = std::result::Result<T, RunError>;

/// Every subcommand path the dispatcher knows.
pub const COMMANDS: &[&str] = &[
    "scalar",
    "wigner curves",
    "wigner landscape",
    "wigner phase-diagram",
    "wigner threshold",
    "wishart curves",
    "wishart mixed",
    "se",
    "amp run",
    "pca run",
    "oracle wigner",
    "oracle pin",
    "oracle rem",
    "oracle wasserstein",
];

struct Ctx<'a> {
    cfg: &'a RunConfig,
    command: &'a str,
}

impl Ctx<'_> {
    fn need<T: Clone>(&self, v: &Option<T>, option: &'static str) -> Result<T> {
        v.clone().ok_or_else(|| ConfigError::Missing { command: self.command.to_string(), option }.into())
    }

    fn prior_spec(&self, spec: &Option<String>, option: &'static str) -> Result<Prior> {
        Ok(self.need(spec, option)?.parse::<Prior>()?)
    }

    fn prior(&self) -> Result<Prior> {
        self.prior_spec(&self.cfg.prior, "prior")
    }

    fn channel(&self, prior: Prior) -> Result<ScalarChannel> {
        Ok(match self.cfg.quad_order {
            Some(k) => ScalarChannel::with_integrator(prior, Integrator::gauss_hermite(k)?),
            None => ScalarChannel::new(prior),
        })
    }

    fn grid(&self, g: &Option<crate::config::GridSpec>, option: &'static str) -> Result<Vec<f64>> {
        Ok(self.need(g, option)?.values()?)
    }

    fn lambdas(&self) -> Result<Vec<f64>> {
        Ok(self.need(&self.cfg.lambda, "lambda")?.values()?)
    }

    fn lambda(&self) -> Result<f64> {
        match self.lambdas()?.as_slice() {
            [l] => Ok(*l),
            _ => Err(crate::config::invalid(format!("`{}` takes a single --lambda", self.command)).into()),
        }
    }

    fn seed(&self) -> u64 {
        self.cfg.seed.unwrap_or(DEFAULT_SEED)
    }

    fn seeds(&self) -> Vec<u64> {
        let k = self.cfg.seeds.unwrap_or(1) as u64;
        (0..k).map(|i| self.seed().wrapping_add(i)).collect()
    }
}

fn envelope(command: &str, results: Value) -> Value {
    json!({ "command": command, "results": results })
}

fn csv_output(command: &str, header: Vec<&'static str>, rows: Vec<Vec<String>>, results: Value) -> Output {
    Output { header, rows, json: envelope(command, results), default_format: Format::Csv }
}

pub fn dispatch(cfg: &RunConfig, command: &str) -> Result<Output> {
    let ctx = Ctx { cfg, command };
    match command {
        "scalar" => scalar(&ctx),
        "wigner curves" => wigner_curves(&ctx),
        "wigner landscape" => wigner_landscape(&ctx),
        "wigner phase-diagram" => wigner_phase_diagram(&ctx),
        "wigner threshold" => wigner_threshold(&ctx),
        "wishart curves" => wishart_curves(&ctx),
        "wishart mixed" => wishart_mixed(&ctx),
        "se" => se(&ctx),
        "amp run" => amp_run(&ctx),
        "pca run" => pca_run(&ctx),
        "oracle wigner" => oracle_wigner(&ctx),
        "oracle pin" => oracle_pin(&ctx),
        "oracle rem" => oracle_rem(&ctx),
        "oracle wasserstein" => oracle_wasserstein(&ctx),
        other => Err(crate::config::invalid(format!(
            "unknown command '{other}' (expected one of: {})",
            COMMANDS.join(", ")
        ))
        .into()),
    }
}

fn scalar(ctx: &Ctx) -> Result<Output> {
    let ch = ctx.channel(ctx.prior()?)?;
    let gammas = ctx.grid(&ctx.cfg.gamma_grid, "gamma-grid")?;
    let evals = gammas.par_iter().map(|&g| ch.eval(g)).collect::<std::result::Result<Vec<_>, _>>()?;
    let rows = evals.iter().map(|e| vec![num(e.gamma), num(e.psi), num(e.psi_prime), num(e.mmse)]).collect();
    let points: Vec<Value> = evals
        .iter()
        .map(|e| json!({ "gamma": e.gamma, "psi": e.psi, "psi_prime": e.psi_prime, "mmse": e.mmse }))
        .collect();
    Ok(csv_output(ctx.command, vec!["gamma", "psi", "psi_prime", "mmse"], rows, json!(points)))
}

fn wigner_curves(ctx: &Ctx) -> Result<Output> {
    let model = SpikedWigner::from_channel(ctx.channel(ctx.prior()?)?);
    let lambdas = ctx.grid(&ctx.cfg.lambda_grid, "lambda-grid")?;
    let centered = model.channel().moments().m1 == 0.0;
    let points = lambdas
        .par_iter()
        .map(|&l| {
            let sol = model.solve(l)?;
            let phase = if centered { Some(model.classify_phase(l)?) } else { None };
            Ok(json!({
                "lambda": l,
                "q_star": sol.q_star,
                "mmse_limit": model.mmse_from_overlap(sol.q_star),
                "mse_pca": model.mse_pca_limit(l)?,
                "mutual_info": model.mutual_information_limit(l)?,
                "phase": phase,
                "stationary_points": sol.stationary_points,
                "degenerate": sol.degenerate,
            }))
        })
        .collect::<std::result::Result<Vec<Value>, Error>>()?;
    let rows = points
        .iter()
        .map(|p| {
            let mut row: Vec<String> =
                ["lambda", "q_star", "mmse_limit", "mse_pca", "mutual_info"].iter().map(|k| num(p[k].as_f64().unwrap())).collect();
            row.push(p["phase"].as_str().unwrap_or("").to_string());
            row
        })
        .collect();
    let header = vec!["lambda", "q_star", "mmse_limit", "mse_pca", "mutual_info", "phase"];
    Ok(csv_output(ctx.command, header, rows, json!(points)))
}

fn wigner_landscape(ctx: &Ctx) -> Result<Output> {
    let model = SpikedWigner::from_channel(ctx.channel(ctx.prior()?)?);
    let lambdas = ctx.lambdas()?;
    let q_grid = ctx.grid(&ctx.cfg.q_grid, "q-grid")?;
    let scapes = lambdas
        .par_iter()
        .map(|&l| model.landscape(l, &q_grid))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for s in &scapes {
        for (q, f) in s.q_grid.iter().zip(&s.potential_values) {
            rows.push(vec![num(s.lambda), num(*q), num(-f)]);
        }
    }
    Ok(csv_output(ctx.command, vec!["lambda", "q", "neg_potential"], rows, json!(scapes)))
}

fn wigner_phase_diagram(ctx: &Ctx) -> Result<Output> {
    let p_grid = ctx.grid(&ctx.cfg.p_grid, "p-grid")?;
    let lambda_grid = ctx.grid(&ctx.cfg.lambda_grid, "lambda-grid")?;
    let cells = phase_diagram(&p_grid, &lambda_grid)?;
    let rows = cells.iter().map(|c| vec![num(c.p), num(c.lambda), c.phase.to_string(), num(c.q_star)]).collect();
    Ok(csv_output(ctx.command, vec!["p", "lambda", "phase", "q_star"], rows, json!(cells)))
}

fn wigner_threshold(ctx: &Ctx) -> Result<Output> {
    let model = SpikedWigner::from_channel(ctx.channel(ctx.prior()?)?);
    let lc = model.it_threshold()?;
    Ok(csv_output(ctx.command, vec!["lambda_c"], vec![vec![num(lc)]], json!({ "lambda_c": lc })))
}

fn wishart_model(ctx: &Ctx) -> Result<SpikedWishart> {
    let u = ctx.channel(ctx.prior_spec(&ctx.cfg.pu, "pu")?)?;
    let v = ctx.channel(ctx.prior_spec(&ctx.cfg.pv, "pv")?)?;
    Ok(SpikedWishart::from_channels(u, v))
}

fn wishart_curves(ctx: &Ctx) -> Result<Output> {
    let model = wishart_model(ctx)?;
    let lambda = ctx.lambda()?;
    let alphas = ctx.grid(&ctx.cfg.alpha_grid, "alpha-grid")?;
    let points = model.curve(lambda, &alphas)?;
    let rows = points
        .iter()
        .map(|p| {
            [p.alpha, p.q_u_star, p.q_v_star, p.mmse_uv, p.mmse_uu, p.mse_pca, p.mse_amp_se].iter().map(|x| num(*x)).collect()
        })
        .collect();
    let header = vec!["alpha", "q_u_star", "q_v_star", "mmse_uv", "mmse_uu", "mse_pca", "mse_amp_se"];
    Ok(csv_output(ctx.command, header, rows, json!({ "lambda": lambda, "points": points })))
}

fn wishart_mixed(ctx: &Ctx) -> Result<Output> {
    let model = wishart_model(ctx)?;
    let lambda = ctx.lambda()?;
    let gamma = ctx.need(&ctx.cfg.gamma, "gamma")?;
    let alpha = ctx.need(&ctx.cfg.alpha, "alpha")?;
    let s = model.mixed_model_value(lambda, gamma, alpha)?;
    let rows = vec![vec![num(lambda), num(gamma), num(alpha), num(s.value), num(s.q_u_star), num(s.q_v_star), num(s.mmse_uu)]];
    let header = vec!["lambda", "gamma", "alpha", "value", "q_u_star", "q_v_star", "mmse_uu"];
    let results = json!({
        "lambda": lambda, "gamma": gamma, "alpha": alpha,
        "value": s.value, "q_u_star": s.q_u_star, "q_v_star": s.q_v_star, "mmse_uu": s.mmse_uu,
    });
    Ok(Output { header, rows, json: envelope(ctx.command, results), default_format: Format::Json })
}

fn se(ctx: &Ctx) -> Result<Output> {
    let iters = ctx.cfg.iters.unwrap_or(DEFAULT_ITERS);
    let lambdas = ctx.lambdas()?;
    let q0 = ctx.cfg.q0.as_ref().map(|q| q.values()).transpose()?;
    match ctx.cfg.model.as_deref().unwrap_or("wigner") {
        "wigner" => {
            let ch = ctx.channel(ctx.prior()?)?;
            let start = match q0.as_deref() {
                None => None,
                Some([q]) => Some(*q),
                Some(_) => return Err(crate::config::invalid("wigner --q0 takes one value").into()),
            };
            let traces = lambdas
                .iter()
                .map(|&l| state_evolution_wigner(&ch, l, iters, start, false))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let mut rows = Vec::new();
            for (l, tr) in lambdas.iter().zip(&traces) {
                for (t, q) in tr.q_values.iter().enumerate() {
                    rows.push(vec![num(*l), t.to_string(), num(*q)]);
                }
            }
            let results: Vec<Value> = lambdas.iter().zip(&traces).map(|(l, tr)| json!({ "lambda": l, "trace": tr })).collect();
            Ok(csv_output(ctx.command, vec!["lambda", "t", "q"], rows, json!({ "model": "wigner", "traces": results })))
        }
        "wishart" => {
            let model = wishart_model(ctx)?;
            let alpha = ctx.need(&ctx.cfg.alpha, "alpha")?;
            let start = match q0.as_deref() {
                None => None,
                Some([qu, qv]) => Some((*qu, *qv)),
                Some(_) => return Err(crate::config::invalid("wishart --q0 takes two values q_u,q_v").into()),
            };
            let traces = lambdas
                .iter()
                .map(|&l| state_evolution_wishart(model.u(), model.v(), l, alpha, iters, start))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let mut rows = Vec::new();
            for (l, tr) in lambdas.iter().zip(&traces) {
                for (t, (qu, qv)) in tr.q_values.iter().enumerate() {
                    rows.push(vec![num(*l), t.to_string(), num(*qu), num(*qv)]);
                }
            }
            let results: Vec<Value> = lambdas.iter().zip(&traces).map(|(l, tr)| json!({ "lambda": l, "trace": tr })).collect();
            let results = json!({ "model": "wishart", "alpha": alpha, "traces": results });
            Ok(csv_output(ctx.command, vec!["lambda", "t", "q_u", "q_v"], rows, results))
        }
        other => Err(crate::config::invalid(format!("unknown model '{other}' (expected wigner or wishart)")).into()),
    }
}

fn amp_run(ctx: &Ctx) -> Result<Output> {
    let ch = ctx.channel(ctx.prior()?)?;
    let lambda = ctx.lambda()?;
    let n = ctx.need(&ctx.cfg.n, "n")?;
    let iters = ctx.cfg.iters.unwrap_or(DEFAULT_ITERS);
    let options = AmpOptions { init_seed: ctx.seed(), ..AmpOptions::default() };
    let runs = amp_runs_with(&ch, lambda, n, iters, &ctx.seeds(), &options)?;
    let mut rows = Vec::new();
    for (seed, trace) in &runs {
        for r in &trace.records {
            rows.push(vec![
                seed.to_string(),
                r.t.to_string(),
                num(r.overlap_emp),
                num(r.overlap_se),
                num(r.norm_emp),
                num(r.mse_emp),
                num(r.mse_se),
            ]);
        }
    }
    let results: Vec<Value> = runs
        .iter()
        .map(|(seed, tr)| json!({ "seed": seed, "status": tr.status, "records": tr.records }))
        .collect();
    let header = vec!["seed", "t", "overlap_emp", "overlap_se", "norm_emp", "mse_emp", "mse_se"];
    Ok(csv_output(ctx.command, header, rows, json!({ "lambda": lambda, "n": n, "runs": results })))
}

fn pca_run(ctx: &Ctx) -> Result<Output> {
    let prior = ctx.prior()?;
    let lambda = ctx.lambda()?;
    let n = ctx.need(&ctx.cfg.n, "n")?;
    let runs = pca_runs(&prior, lambda, n, &ctx.seeds(), PCA_TOL, PCA_MAX_ITERS)?;
    let rows = runs
        .iter()
        .map(|(s, r)| vec![s.to_string(), num(r.eigenvalue), num(r.overlap_sq), num(r.mse)])
        .collect();
    let results: Vec<Value> = runs
        .iter()
        .map(|(s, r)| json!({ "seed": s, "eigenvalue": r.eigenvalue, "overlap_sq": r.overlap_sq, "mse": r.mse, "delta": r.delta }))
        .collect();
    let header = vec!["seed", "eigenvalue", "overlap_sq", "mse"];
    Ok(csv_output(ctx.command, header, rows, json!({ "lambda": lambda, "n": n, "runs": results })))
}

fn oracle_wigner(ctx: &Ctx) -> Result<Output> {
    let prior = ctx.prior()?;
    let n = ctx.need(&ctx.cfg.n, "n")?;
    let lambdas = ctx.grid(&ctx.cfg.lambda_grid, "lambda-grid")?;
    let trials = ctx.cfg.trials.unwrap_or(DEFAULT_TRIALS);
    let reports = lambdas
        .iter()
        .map(|&l| wigner_report(&prior, n, l, trials, ctx.seed()))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let rows = reports
        .iter()
        .map(|r| {
            [r.lambda, r.f_n.mean, r.f_n.stderr, r.mmse_n.mean, r.mmse_n.stderr, r.rs_free_energy, r.rs_mmse]
                .iter()
                .map(|x| num(*x))
                .collect()
        })
        .collect();
    let header = vec!["lambda", "f_n", "f_n_err", "mmse_n", "mmse_n_err", "rs_f", "rs_mmse"];
    Ok(csv_output(ctx.command, header, rows, json!(reports)))
}

fn oracle_pin(ctx: &Ctx) -> Result<Output> {
    let prior = ctx.prior()?;
    let n = ctx.need(&ctx.cfg.n, "n")?;
    let lambda = ctx.lambda()?;
    let eps = ctx.grid(&ctx.cfg.epsilon_grid, "epsilon-grid")?;
    let trials = ctx.cfg.trials.unwrap_or(DEFAULT_TRIALS);
    let points = eps
        .iter()
        .map(|&e| pinned_overlap_variance(&prior, n, lambda, e, trials, ctx.seed()).map(|v| (e, v)))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let rows = points.iter().map(|(e, v)| vec![num(*e), num(v.mean), num(v.stderr)]).collect();
    let results: Vec<Value> = points.iter().map(|(e, v)| json!({ "epsilon": e, "overlap_variance": v })).collect();
    let header = vec!["epsilon", "overlap_variance", "overlap_variance_err"];
    Ok(csv_output(ctx.command, header, rows, json!({ "n": n, "lambda": lambda, "trials": trials, "points": results })))
}

fn oracle_rem(ctx: &Ctx) -> Result<Output> {
    let n = ctx.need(&ctx.cfg.n, "n")?;
    let lambdas = ctx.grid(&ctx.cfg.lambda_grid, "lambda-grid")?;
    let trials = ctx.cfg.trials.unwrap_or(DEFAULT_TRIALS);
    let points = lambdas
        .iter()
        .map(|&l| rem_mc(n, l, trials, ctx.seed()).map(|f| (l, f, rem_free_energy(l))))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let rows = points.iter().map(|(l, f, lim)| vec![num(*l), num(f.mean), num(f.stderr), num(*lim)]).collect();
    let results: Vec<Value> =
        points.iter().map(|(l, f, lim)| json!({ "lambda": l, "f_n": f, "rem_limit": lim })).collect();
    let header = vec!["lambda", "f_n", "f_n_err", "rem_limit"];
    Ok(csv_output(ctx.command, header, rows, json!({ "n": n, "trials": trials, "points": results })))
}

fn oracle_wasserstein(ctx: &Ctx) -> Result<Output> {
    let prior = ctx.prior()?;
    let n = ctx.need(&ctx.cfg.n, "n")?;
    let lambda = ctx.lambda()?;
    let m = ctx.need(&ctx.cfg.m, "m")?;
    let trials = ctx.cfg.trials.unwrap_or(DEFAULT_TRIALS);
    let c = wasserstein_stability_check(&prior, n, lambda, m, trials, ctx.seed())?;
    let rows = vec![vec![
        m.to_string(),
        num(c.lhs),
        num(c.lhs_stderr),
        num(c.rhs),
        num(c.coupling_distance),
        c.holds.to_string(),
    ]];
    let header = vec!["m", "lhs", "lhs_err", "rhs", "coupling_distance", "holds"];
    Ok(csv_output(ctx.command, header, rows, json!({ "n": n, "lambda": lambda, "m": m, "trials": trials, "check": c })))
}
