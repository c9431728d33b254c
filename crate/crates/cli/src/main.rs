use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use yawrl_cli::{commands, ExperimentConfig, Options};

/// Yaw-control experiments: data, baseline calibration, PPO training,
/// evaluation and reports.
#[derive(Parser)]
#[command(name = "yawrl", version)]
struct Cli {
    /// Experiment config (TOML). Built-in defaults when omitted.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set ppo.total_steps=50000`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Write outputs here instead of the configured `output_dir`.
    #[arg(short, long, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or ingest the wind data.
    GenData,
    /// Tune the threshold controller to the target time spent yawing.
    CalibrateCyca,
    /// Train one PPO agent per seed.
    Train,
    /// Run all controllers on the test split.
    Eval {
        /// Checkpoint to evaluate for every seed instead of the per-seed default.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Build comparison tables and plot data from evaluation traces.
    Compare,
    /// Every stage in order.
    Run,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| {
        let mut cfg = ExperimentConfig::load(cli.config.as_deref(), &cli.overrides)?;
        if let Some(dir) = cli.output_dir {
            cfg.output_dir = dir;
        }
        let opts = Options { quiet: cli.quiet };
        match cli.command {
            Command::GenData => commands::gen_data(&cfg, opts).map(drop),
            Command::CalibrateCyca => commands::calibrate_cyca(&cfg, opts).map(drop),
            Command::Train => commands::train(&cfg, opts).map(drop),
            Command::Eval { checkpoint } => commands::eval(&cfg, checkpoint.as_deref(), opts).map(drop),
            Command::Compare => commands::compare_runs(&cfg, opts).map(drop),
            Command::Run => commands::run_all(&cfg, opts).map(drop),
        }
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
