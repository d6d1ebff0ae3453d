use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use unexq_cli::{CliError, Overrides, Settings};

#[derive(Parser)]
#[command(name = "unexq", version, about = "Unexpected-engagement analytics for social media posts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML config file; required for `run`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for all artifacts.
    #[arg(long, global = true, default_value = "out")]
    output: PathBuf,
    /// Line-delimited JSON corpus; overrides `input` in the config.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Seed for cross-validation folds and the synthetic generator.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Baseline quantile level.
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// Minimum largest count for the robustness threshold.
    #[arg(long, global = true)]
    min_any: Option<u64>,
    /// Scale of the baseline quantile regressions: raw or log1p.
    #[arg(long, global = true)]
    quantile_scale: Option<String>,
    /// Number of cross-validation folds.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Number of synthetic records.
    #[arg(long, global = true)]
    n: Option<usize>,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Every stage from ingest to report.
    Run,
    /// Parse and filter the input corpus.
    Ingest,
    /// Compute per-post features.
    Featurize,
    /// Fit baselines and score unexpectedness.
    Score,
    /// Determinant regressions and tau robustness.
    Analyze,
    /// K-fold coefficient stability.
    Cv,
    /// Generate a synthetic corpus.
    Synth,
    /// Write the summary report and manifest.
    Report,
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if cli.command == Command::Run && cli.config.is_none() {
        return Err(CliError::Usage("`run` requires --config".into()));
    }
    let overrides = Overrides {
        input: cli.input.clone(),
        seed: cli.seed,
        tau: cli.tau,
        min_any: cli.min_any,
        quantile_scale: cli.quantile_scale.clone(),
        k: cli.k,
        n: cli.n,
    };
    let settings = Settings::load(cli.config.as_deref(), &cli.output, &overrides)?;
    match cli.command {
        Command::Run => {
            let manifest = unexq_cli::run(&settings)?;
            eprintln!("wrote {} files to {}", manifest.outputs.len() + 1, settings.output.display());
        }
        Command::Ingest => {
            let n = unexq_cli::ingest(&settings)?;
            eprintln!("kept {n} records");
        }
        Command::Featurize => {
            unexq_cli::featurize(&settings)?;
        }
        Command::Score => {
            unexq_cli::score(&settings)?;
        }
        Command::Analyze => {
            unexq_cli::analyze(&settings)?;
        }
        Command::Cv => unexq_cli::cv(&settings)?,
        Command::Synth => {
            let path = unexq_cli::synth(&settings)?;
            eprintln!("wrote {}", path.display());
        }
        Command::Report => {
            unexq_cli::report(&settings)?;
        }
    }
    Ok(())
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
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
