//! Command-line driver for the offline pipeline.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "gatefuse", version, about = "Probe-aligned multimodal engagement estimation")]
#[command(after_help = "Overrides take the form --key=value or --key value, e.g. --seed=7, --train.epochs=50, --baseline mean.\n\
GATEFUSE_THREADS caps the worker count.\nExit codes: 0 ok, 1 runtime error, 2 usage error.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Config overrides
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cohort with planted ground truth
    Synth(Common),
    /// Load and clock-normalize the raw cohort; write per-session diagnostics
    Ingest(Common),
    /// Build probe-aligned windows and the grouped fold split
    Window(Common),
    /// Compute native-rate window features
    Featurize(Common),
    /// Train the fusion model on every window
    Train(Common),
    /// Cross-validate one predictor (eval.baseline)
    Eval(Common),
    /// Greedy backward modality ablation
    Ablate(Common),
    /// Correlate per-video difficulty with normalized learning gain
    GainCorr(Common),
    /// Render stored reports as tables
    Report(Common),
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("GATEFUSE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.parse().ok().filter(|&n| n > 0).ok_or_else(|| CliError::Usage(format!("GATEFUSE_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Usage(e.to_string()))
}

fn run(command: Command) -> Result<String, CliError> {
    init_threads()?;
    let (run, common): (fn(&RunConfig) -> Result<String, CliError>, Common) = match command {
        Command::Synth(c) => (commands::synth, c),
        Command::Ingest(c) => (commands::ingest, c),
        Command::Window(c) => (commands::window, c),
        Command::Featurize(c) => (commands::featurize, c),
        Command::Train(c) => (commands::train, c),
        Command::Eval(c) => (commands::eval, c),
        Command::Ablate(c) => (commands::ablate, c),
        Command::GainCorr(c) => (commands::gain_corr, c),
        Command::Report(c) => (commands::report, c),
    };
    let config = RunConfig::resolve(common.config.as_deref(), &common.overrides)?;
    run(&config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(message) => {
            println!("{message}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {message}", e.code());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
