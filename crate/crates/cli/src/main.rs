use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ghzchain::fitting::FitModel;
use ghzchain_cli::commands::{self, FitColumn};
use ghzchain_cli::config::{Displacement, ExperimentConfig, MethodSpec};
use ghzchain_cli::CliError;

#[derive(Parser)]
#[command(
    name = "ghzchain",
    version,
    about = "Entangled-state protocol runs, sweeps and error estimates for spin chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON config, or a CSV previously written by this tool.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// exact | two_level | estimate (sweep only).
    #[arg(long)]
    method: Option<MethodSpec>,
    /// Fixed displacement `k:v` of site k by v lattice units; repeatable.
    #[arg(long, allow_hyphen_values = true)]
    displace: Vec<Displacement>,
    /// Inter-chain spacing in nm; `inf` disables the correction.
    #[arg(long)]
    chain_spacing_nm: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Pulse table of the protocol.
    Pulses(Common),
    /// One protocol run, as JSON.
    Run(Common),
    /// Single-chain runs over the sweep variable.
    Sweep(Common),
    /// Noisy ensemble averages over the sweep variable.
    Ensemble(Common),
    /// Closed-form error budget over the sweep variable.
    Estimate(Common),
    /// Longest chain that fits in T2.
    Lmax(Common),
    /// Fit a sweep CSV.
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// linear | power_law
        #[arg(long, default_value = "linear", value_parser = parse_model)]
        model: FitModel,
        /// P | M
        #[arg(long, default_value = "P")]
        column: FitColumn,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_model(s: &str) -> Result<FitModel, String> {
    match s {
        "linear" => Ok(FitModel::Linear),
        "power_law" => Ok(FitModel::PowerLaw),
        _ => Err(format!("unknown model '{s}' (linear | power_law)")),
    }
}

fn resolve(c: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(m) = c.method {
        cfg.method = m;
    }
    if !c.displace.is_empty() {
        cfg.displace = c.displace.clone();
    }
    if let Some(d) = c.chain_spacing_nm {
        cfg.set_chain_spacing(d)?;
    }
    if let Some(o) = &c.out {
        cfg.output = Some(o.display().to_string());
    }
    Ok(cfg)
}

fn emit(text: &str, out: Option<&str>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Output(format!("{path}: {e}"))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Output(e.to_string())),
    }
}

type Body = fn(&ExperimentConfig) -> Result<String, CliError>;

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, body): (&Common, Body) = match &cli.command {
        Command::Pulses(c) => (c, commands::cmd_pulses),
        Command::Run(c) => (c, commands::cmd_run),
        Command::Sweep(c) => (c, commands::cmd_sweep),
        Command::Ensemble(c) => (c, commands::cmd_ensemble),
        Command::Estimate(c) => (c, commands::cmd_estimate),
        Command::Lmax(c) => (c, commands::cmd_lmax),
        Command::Fit {
            input,
            model,
            column,
            out,
        } => {
            let text = std::fs::read_to_string(input)
                .map_err(|e| CliError::Input(format!("{}: {e}", input.display())))?;
            let result = commands::cmd_fit(&text, *model, *column)?;
            return emit(&result, out.as_ref().and_then(|p| p.to_str()));
        }
    };
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let cfg = resolve(common)?;
    let text = body(&cfg)?;
    emit(&text, cfg.output.as_deref())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
