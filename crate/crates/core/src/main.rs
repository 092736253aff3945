use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lcgp::cli::{cmd_analyze, cmd_compare, cmd_simulate, resolve_config};

#[derive(Debug, Parser)]
#[command(name = "lcgp", version, about = "Locally coupled Gaussian process regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML analysis configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Built-in parameter set: chirp-paper, twostate-paper or meg-alpha.
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Overrides the configured noise seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate clean.csv, noisy.csv and truth.csv for the configured signal.
    Simulate,
    /// Fit the coupled model and write posterior, estimates and covariance.
    Analyze,
    /// Compare the coupled model with the configured stationary baselines.
    Compare,
}

fn run(cli: Cli) -> lcgp::Result<()> {
    let config = resolve_config(cli.config.as_deref(), cli.preset.as_deref(), cli.seed, cli.output_dir)?;
    let out = config.output.dir.clone();
    match cli.command {
        Command::Simulate => {
            for f in cmd_simulate(&config, &out)? {
                println!("{}", f.display());
            }
        }
        Command::Analyze => {
            let report = cmd_analyze(&config, &out)?;
            println!("log evidence {:.6}", report.fit.marginals.log_evidence);
            for f in report.files {
                println!("{}", f.display());
            }
        }
        Command::Compare => {
            let comparison = cmd_compare(&config, &out)?;
            for m in comparison.methods {
                match m.correlation {
                    Some(r) => println!("{:<32} r = {r:.4}", m.name),
                    None => println!("{}", m.name),
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
