//! `latla` command-line front end.
//!
//! Exit codes: 0 success, 1 configuration error, 2 data error.

mod analyze;
mod config;
mod error;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{
    parse_arms, parse_bandwidth, parse_design, parse_null, parse_tau, Mode, RunConfig,
};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "latla",
    version,
    about = "Locally adaptive transfer learning for multiple testing"
)]
struct Cli {
    /// TOML configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print the resolved configuration as TOML and exit.
    #[arg(long, global = true)]
    print_config: bool,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Test user-supplied statistics against a distance matrix.
    Analyze(AnalyzeArgs),
    /// Run a simulation study over a design grid.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct Estimation {
    /// Nominal level(s); repeat or comma-separate for several.
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
    /// Neighbourhood exponent: neighbourhoods hold ceil(m^(1-eps)) hypotheses.
    #[arg(long)]
    eps: Option<f64>,
    /// Weight clipping constant.
    #[arg(long)]
    xi: Option<f64>,
    /// Screening threshold: `bh<level>` or a fixed value.
    #[arg(long)]
    tau: Option<String>,
    /// Bandwidth: `sj`, `silverman` or a number.
    #[arg(long)]
    bandwidth: Option<String>,
    /// Separate bandwidth for the distance kernel.
    #[arg(long)]
    distance_bandwidth: Option<String>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// CSV with `id` and `t` and/or `p` columns.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Distance matrix, dense CSV or triplets.
    #[arg(long)]
    dist: Option<PathBuf>,
    /// Distance file format (`dense-csv` or `triplet`).
    #[arg(long)]
    dist_format: Option<String>,
    /// Null distribution of the statistics: `normal` or `t:<df>`.
    #[arg(long)]
    null: Option<String>,
    #[command(flatten)]
    estimation: Estimation,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// network, regression, latent or multi-aux.
    #[arg(long)]
    design: Option<String>,
    /// Standard grid (1 or 2).
    #[arg(long)]
    setting: Option<u8>,
    /// Replicates per design point
    #[arg(long)]
    reps: Option<usize>,
    /// Master seed shared by every design point
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated procedures, e.g. `BH,LATLA.DD`.
    #[arg(long)]
    procedures: Option<String>,
    /// Number of hypotheses at every design point.
    #[arg(long)]
    m: Option<usize>,
    /// Run only this point of the grid.
    #[arg(long)]
    point: Option<usize>,
    /// Also write per-replicate results.
    #[arg(long)]
    trace: bool,
    /// Write each replicate's data under this directory.
    #[arg(long)]
    export_data: Option<PathBuf>,
    /// `rep,index` rejection sets from an external procedure.
    #[arg(long)]
    external: Option<PathBuf>,
    #[command(flatten)]
    estimation: Estimation,
}

fn apply_estimation(config: &mut RunConfig, args: &Estimation) -> anyhow::Result<()> {
    if !args.alpha.is_empty() {
        config.alpha = args.alpha.clone();
    }
    let est = &mut config.estimation;
    if let Some(v) = args.eps {
        est.epsilon = v;
    }
    if let Some(v) = args.xi {
        est.xi = v;
    }
    if let Some(v) = &args.tau {
        est.tau = parse_tau(v)?;
    }
    if let Some(v) = &args.bandwidth {
        est.bandwidth = parse_bandwidth(v)?;
    }
    if let Some(v) = &args.distance_bandwidth {
        est.distance_bandwidth = Some(parse_bandwidth(v)?);
    }
    Ok(())
}

fn resolve(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(|e| e.source)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }
    match &cli.command {
        Command::Analyze(a) => {
            config.mode = Mode::Analyze;
            apply_estimation(&mut config, &a.estimation)?;
            let inputs = &mut config.analyze;
            if let Some(v) = &a.stats {
                inputs.stats = Some(v.clone());
            }
            if let Some(v) = &a.dist {
                inputs.dist = Some(v.clone());
            }
            if let Some(v) = &a.dist_format {
                inputs.dist_format = Some(v.clone());
            }
            if let Some(v) = &a.null {
                inputs.null = parse_null(v)?;
            }
        }
        Command::Simulate(s) => {
            config.mode = Mode::Simulate;
            apply_estimation(&mut config, &s.estimation)?;
            let opts = &mut config.simulate;
            if let Some(v) = &s.design {
                opts.design = Some(parse_design(v)?);
            }
            if let Some(v) = s.setting {
                opts.setting = v;
            }
            if let Some(v) = s.reps {
                opts.reps = v;
            }
            if let Some(v) = s.seed {
                opts.seed = v;
            }
            if let Some(v) = &s.procedures {
                opts.procedures = Some(parse_arms(v)?);
            }
            if s.m.is_some() {
                opts.m = s.m;
            }
            if s.point.is_some() {
                opts.point = s.point;
            }
            opts.trace |= s.trace;
            if let Some(v) = &s.export_data {
                opts.export_data = Some(v.clone());
            }
            if let Some(v) = &s.external {
                opts.external = Some(v.clone());
            }
        }
    }
    Ok(config)
}

fn execute(cli: &Cli) -> CliResult<()> {
    let config = resolve(cli).map_err(CliError::config)?;
    if cli.print_config {
        print!("{}", config.to_toml().map_err(CliError::config)?);
        return Ok(());
    }
    config.validate()?;
    match config.mode {
        Mode::Analyze => analyze::run(&config),
        Mode::Simulate => simulate::run(&config),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.kind.exit_code()
        }
    }
}
