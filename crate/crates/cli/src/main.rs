mod commands;
mod config;
mod error;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;
use crate::report::{Format, Report};

#[derive(Parser, Debug)]
#[command(name = "tracelab", version, about = "Trace approximation and quadratic-form experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON configuration of the experiment.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed; overrides the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all logical cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rows (T, S, M, delta) of a trace experiment.
    TraceApprox(Common),
    /// Log-log slope of delta(T) against a theorem's exponent.
    RateFit(Common),
    /// Residuals of a two-term trace expansion.
    SecondOrder(Common),
    /// Monte-Carlo study of a normalized quadratic form.
    CltSim(Common),
    /// Large-deviation rate function on a grid.
    Ldp(Common),
    /// Fejer and Dirichlet kernel identities (configuration optional).
    KernelCheck(Common),
}

fn required(common: &Common) -> Result<&Path, CliError> {
    common.config.as_deref().ok_or_else(|| CliError::Config("--config <path> is required".into()))
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn output_dir(common: &Common, output: &Option<config::OutputConfig>) -> (PathBuf, String) {
    let dir = common
        .out
        .clone()
        .or_else(|| output.as_ref().and_then(|o| o.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("."));
    let prefix = output.as_ref().and_then(|o| o.prefix.clone()).unwrap_or_default();
    (dir, prefix)
}

fn emit(report: &Report, common: &Common, output: &Option<config::OutputConfig>) -> Result<(), CliError> {
    let (dir, prefix) = output_dir(common, output);
    let files = report.write(&dir, &prefix, common.format)?;
    for line in &report.summary {
        println!("{line}");
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = match &cli.command {
        Command::TraceApprox(c)
        | Command::RateFit(c)
        | Command::SecondOrder(c)
        | Command::CltSim(c)
        | Command::Ldp(c)
        | Command::KernelCheck(c) => c.clone(),
    };
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot size the thread pool: {e}")))?;
    }
    match cli.command {
        Command::TraceApprox(_) => {
            let path = required(&common)?;
            let cfg: config::TraceApproxConfig = config::load(path, "trace-approx")?;
            let report = commands::trace_approx(&cfg, &base_dir(path))?;
            emit(&report, &common, &cfg.output)
        }
        Command::RateFit(_) => {
            let path = required(&common)?;
            let cfg: config::RateFitConfig = config::load(path, "rate-fit")?;
            let report = commands::rate_fit(&cfg, &base_dir(path))?;
            emit(&report, &common, &cfg.output)
        }
        Command::SecondOrder(_) => {
            let path = required(&common)?;
            let cfg: config::SecondOrderConfig = config::load(path, "second-order")?;
            let report = commands::second_order(&cfg)?;
            emit(&report, &common, &cfg.output)
        }
        Command::CltSim(_) => {
            let path = required(&common)?;
            let cfg: config::CltSimConfig = config::load(path, "clt-sim")?;
            let report = commands::clt_sim(&cfg, &base_dir(path), common.seed)?;
            emit(&report, &common, &cfg.output)
        }
        Command::Ldp(_) => {
            let path = required(&common)?;
            let cfg: config::LdpConfig = config::load(path, "ldp")?;
            let report = commands::ldp(&cfg, &base_dir(path))?;
            emit(&report, &common, &cfg.output)
        }
        Command::KernelCheck(_) => {
            let cfg: config::KernelCheckConfig = match &common.config {
                Some(path) => config::load(path, "kernel-check")?,
                None => config::KernelCheckConfig::default(),
            };
            let (report, all_passed) = commands::kernel_check(&cfg)?;
            emit(&report, &common, &cfg.output)?;
            if all_passed {
                Ok(())
            } else {
                Err(CliError::ChecksFailed("some kernel identities failed".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
