//! `ipaal` command line: batch experiments and instance generation.
//!
//! Exit status is 0 on success, 2 when any row hit a safety cap and 1 on
//! configuration or runtime errors. Log verbosity comes from `IPAAL_LOG`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use ipaal::experiment::{emit_report, run, InstanceSource, ReportFormat, RunConfig};
use ipaal::lcqm::{generate_instance, RhsRule};
use ipaal::{Termination, Variant};
use log::info;

#[derive(Parser, Debug)]
#[command(name = "ipaal", version, about = "θ-IPAAL solver experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every (θ, variant) row of a TOML experiment config.
    Run(RunArgs),
    /// Generate an LCQM instance file.
    Gen(GenArgs),
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Instance seed for generated instances.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "theta", num_args = 1..)]
    thetas: Vec<f64>,
    #[arg(long = "variant", num_args = 1..)]
    variants: Vec<Variant>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    mode: Option<Termination>,
    /// Initial penalty; overrides the formula.
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    penalty_factor: Option<f64>,
    #[arg(long)]
    no_warm_start: bool,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    max_cycles: Option<usize>,
    #[arg(long)]
    start_seed: Option<u64>,
    /// Drop per-iteration records from the report.
    #[arg(long)]
    no_records: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "table")]
    format: ReportFormat,
}

#[derive(clap::Args, Debug)]
struct GenArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    l: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    density: f64,
    #[arg(long = "Lmax")]
    l_max: f64,
    #[arg(long)]
    m: f64,
    #[arg(long, default_value = "feasible")]
    rhs: RhsRule,
    #[arg(long)]
    out: PathBuf,
}

/// Errors in this category exit with status 1 before any solve starts.
#[derive(Debug)]
struct ConfigError(anyhow::Error);

fn load_config(args: &RunArgs) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))
        .map_err(ConfigError)?;
    let mut cfg: RunConfig = toml::from_str(&text)
        .with_context(|| format!("parsing {}", args.config.display()))
        .map_err(ConfigError)?;
    let base = args.config.parent().unwrap_or(Path::new("."));
    apply_overrides(&mut cfg, args, base);
    cfg.validate()
        .with_context(|| format!("invalid config {}", args.config.display()))
        .map_err(ConfigError)?;
    Ok(cfg)
}

fn apply_overrides(cfg: &mut RunConfig, args: &RunArgs, base: &Path) {
    match &mut cfg.instance {
        InstanceSource::Generate { seed, .. } => {
            if let Some(s) = args.seed {
                *seed = s;
            }
        }
        InstanceSource::Load { path } => {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }
    if !args.thetas.is_empty() {
        cfg.thetas = args.thetas.clone();
    }
    if !args.variants.is_empty() {
        cfg.variants = args.variants.clone();
    }
    if let Some(v) = args.rho {
        cfg.rho_hat = v;
    }
    if let Some(v) = args.eta {
        cfg.eta_hat = v;
    }
    if let Some(v) = args.mode {
        cfg.termination = v;
    }
    if let Some(v) = args.c1 {
        cfg.c1 = ipaal::experiment::C1Rule::Value(v);
    }
    if let Some(v) = args.penalty_factor {
        cfg.penalty_factor = v;
    }
    if args.no_warm_start {
        cfg.warm_start = false;
    }
    if let Some(v) = args.jobs {
        cfg.jobs = v;
    }
    if let Some(v) = args.max_outer {
        cfg.caps.max_outer = v;
    }
    if let Some(v) = args.max_cycles {
        cfg.caps.max_cycles = v;
    }
    if let Some(v) = args.start_seed {
        cfg.start_seed = Some(v);
    }
    if args.no_records {
        cfg.keep_records = false;
    }
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn cmd_run(args: &RunArgs) -> Result<ExitCode> {
    let cfg = match load_config(args) {
        Ok(cfg) => cfg,
        Err(ConfigError(e)) => {
            eprintln!("error: {e:#}");
            return Ok(ExitCode::from(1));
        }
    };
    let report = run(&cfg)?;
    write_output(args.out.as_deref(), &emit_report(&report, args.format)?)?;
    if report.any_capped() {
        eprintln!("warning: at least one row stopped at a safety cap");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_gen(args: &GenArgs) -> Result<ExitCode> {
    let inst = generate_instance(args.seed, args.l, args.n, args.density, args.l_max, args.m, args.rhs)?;
    info!("alpha1 = {:e}, alpha2 = {:e}", inst.alpha1, inst.alpha2);
    inst.save(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("IPAAL_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Gen(args) => cmd_gen(args),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(1)
    })
}
