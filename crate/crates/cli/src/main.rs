mod cli;
mod config;
mod output;
mod run;

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::{CommandFactory, Parser};
use spikelab_core::Error;

use cli::Cli;
use config::{ConfigError, Format, RunConfig};
use run::RunError;

const THREADS_ENV: &str = "SPIKELAB_THREADS";

fn usage(command: &str) -> String {
    let mut sub = Cli::command();
    // Building fills in the full `spikelab <group> <command>` names.
    sub.build();
    for part in command.split_whitespace() {
        match sub.find_subcommand(part) {
            Some(s) => sub = s.clone(),
            None => break,
        }
    }
    sub.render_usage().to_string()
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("spikelab: error: {msg}");
    ExitCode::from(code)
}

fn threads(cfg: &RunConfig) -> Result<Option<usize>, ConfigError> {
    if let Some(t) = cfg.threads {
        return Ok(Some(t));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| config::invalid(format!("{THREADS_ENV}='{v}' is not a thread count"))),
        _ => Ok(None),
    }
}

/// Preset, then config file, then global flags.
fn layered(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &cli.preset {
        Some(name) => config::preset(name)?,
        None => RunConfig::default(),
    };
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config::invalid(format!("cannot read config {}: {e}", path.display())))?;
        cfg = cfg.overlay(RunConfig::from_toml(&text)?);
    }
    cfg = cfg.overlay(cli.global_config());
    Ok(cfg)
}

fn main() -> ExitCode {
    let mut cli = Cli::parse();
    let command = cli.command.take();
    if matches!(command, Some(cli::Command::Presets)) {
        let mut listing = String::new();
        for (name, preset) in config::presets() {
            listing.push_str(&format!("[{name}]\n{}\n", preset.to_toml()));
        }
        print!("{listing}");
        return ExitCode::SUCCESS;
    }

    let cfg = match layered(&cli) {
        Ok(cfg) => match command.and_then(cli::Command::to_config) {
            Some(flags) => cfg.overlay(flags),
            None => cfg,
        },
        Err(e) => return fail(2, e),
    };
    let Some(name) = cfg.command.clone() else {
        eprintln!("spikelab: error: no subcommand given (directly, via --config or via --preset)\n");
        eprintln!("{}", Cli::command().render_help());
        return ExitCode::from(2);
    };

    match threads(&cfg) {
        Ok(Some(t)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
                return fail(1, format!("cannot configure thread pool: {e}"));
            }
        }
        Ok(None) => {}
        Err(e) => return fail(2, e),
    }
    if let Some(path) = &cfg.output {
        if let Err(e) = output::preflight(path) {
            return fail(2, format!("cannot write {}: {e}", path.display()));
        }
    }

    let start = Instant::now();
    let out = match run::dispatch(&cfg, &name) {
        Ok(out) => out,
        Err(RunError::Config(e @ ConfigError::Missing { .. })) => {
            return fail(2, format!("{e}\n\n{}", usage(&name)));
        }
        Err(RunError::Config(e)) => return fail(2, e),
        Err(RunError::Core(e)) => {
            let code = match e {
                Error::InvalidArgument(_) | Error::InvalidPrior(_) | Error::Unsupported(_) | Error::StateSpaceTooLarge { .. } => 2,
                _ => 1,
            };
            return fail(code, e);
        }
    };

    let format = cfg.format.unwrap_or(out.default_format);
    let bytes = out.render(format);
    let target = match &cfg.output {
        Some(path) => {
            if let Err(e) = output::write_atomic(path, &bytes) {
                return fail(1, format!("cannot write {}: {e}", path.display()));
            }
            path.display().to_string()
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            if let Err(e) = stdout.write_all(&bytes).and_then(|_| stdout.flush()) {
                return fail(1, format!("cannot write to stdout: {e}"));
            }
            "stdout".to_string()
        }
    };
    let kind = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    eprintln!(
        "spikelab {name}: {} rows ({kind}) -> {target} in {:.2}s",
        out.rows.len(),
        start.elapsed().as_secs_f64()
    );
    ExitCode::SUCCESS
}
