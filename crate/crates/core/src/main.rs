use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use schatten::io::{self, ExperimentConfig, Format};

#[derive(Parser)]
#[command(
    name = "schatten",
    version,
    about = "Schatten-norm bias-constrained regression experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration file
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed (overrides the config file)
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Output file; stdout if omitted
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Limiting test-error curves
    TheoryCurve(Common),
    /// Simulated vs predicted test error
    Simulate(Common),
    /// Cross-validation benchmark on a synthetic ensemble
    CvBench(Common),
    /// Cross-validation benchmark on random Fourier features
    RffBench(Common),
    /// Basin depth and curvature table
    Basin(Common),
    /// Cross-validation benchmark on a CSV file
    RealData {
        #[command(flatten)]
        common: Common,
        /// CSV file with a header row
        #[arg(long, value_name = "PATH")]
        data: Option<PathBuf>,
    },
}

fn load(common: &Common) -> schatten::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    if common.out.is_some() {
        cfg.out = common.out.clone();
    }
    if common.format.is_some() {
        cfg.format = common.format;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> schatten::Result<()> {
    let (common, data) = match &cli.command {
        Command::TheoryCurve(c)
        | Command::Simulate(c)
        | Command::CvBench(c)
        | Command::RffBench(c)
        | Command::Basin(c) => (c, None),
        Command::RealData { common, data } => (common, data.as_deref()),
    };
    let cfg = load(common)?;
    let rendered = match cli.command {
        Command::TheoryCurve(_) => io::cmd_theory_curve(&cfg)?,
        Command::Simulate(_) => io::cmd_simulate(&cfg)?,
        Command::CvBench(_) => io::cmd_cv_bench(&cfg)?,
        Command::RffBench(_) => io::cmd_rff_bench(&cfg)?,
        Command::Basin(_) => io::cmd_basin(&cfg)?,
        Command::RealData { .. } => io::cmd_real_data(data, &cfg)?,
    };
    for path in io::write_rendered(&rendered, cfg.out.as_deref())? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
