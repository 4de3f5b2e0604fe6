//! `svdd`: fixtures, training, scoring, fusion and evaluation for the
//! layer-gated singing-voice deepfake detector head.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use svdd_core::par::Execution;

#[derive(Debug, Parser)]
#[command(
    name = "svdd",
    version,
    about = "Singing-voice deepfake detection head: train, score, fuse, evaluate"
)]
struct Cli {
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic train/dev fixture of hidden-state stacks.
    Fixtures(FixturesArgs),
    /// Train the head and write a checkpoint plus per-epoch history.
    Train(TrainArgs),
    /// Score every manifest utterance with a checkpoint.
    Score(ScoreArgs),
    /// Fuse two score files by keeping the larger-magnitude score.
    Fuse(FuseArgs),
    /// Compute EERs and render the results table.
    Eval(EvalArgs),
    /// Render a results CSV (computed or hand-entered) as a table.
    Report(ReportArgs),
    /// Export per-utterance layer weights as CSV.
    Weights(WeightsArgs),
    /// Emit crop-offset parity vectors for the window rule.
    WindowGolden(WindowGoldenArgs),
    /// Convert an external whitespace-separated key file into a manifest.
    ImportKey(ImportKeyArgs),
}

#[derive(Debug, Args)]
pub struct FixturesArgs {
    /// Output directory; receives train/, dev/ and fixture.txt.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub per_class: usize,
    /// Dev utterances per class; 0 skips the dev split.
    #[arg(long, default_value_t = 100)]
    pub dev_per_class: usize,
    #[arg(long, default_value_t = 4)]
    pub layers: usize,
    #[arg(long, default_value_t = 16)]
    pub frames: usize,
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    /// Class mean separation on the signal features.
    #[arg(long, default_value_t = 4.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory holding `<utterance_id>.hstk`.
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, requires = "dev_features")]
    pub dev_manifest: Option<PathBuf>,
    #[arg(long, requires = "dev_manifest")]
    pub dev_features: Option<PathBuf>,
    /// `key=value` hyperparameter file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one hyperparameter, e.g. `--set learning_rate=0`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Checkpoint path (best epoch by dev EER, else final epoch).
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch history CSV; written to stdout when absent.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// First system; wins magnitude ties.
    #[arg(long)]
    pub scores_x: PathBuf,
    #[arg(long)]
    pub scores_w: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub per_attack: bool,
    #[arg(long)]
    pub per_origin: bool,
    /// Pooled EER without this origin; repeatable.
    #[arg(long, value_name = "ORIGIN")]
    pub exclude_origin: Vec<String>,
    /// Full-precision results CSV.
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WeightsArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct WindowGoldenArgs {
    /// Extra `length:seed` case; repeatable. Built-in cases come first.
    #[arg(long = "case", value_name = "LENGTH:SEED")]
    pub cases: Vec<String>,
    #[arg(long, default_value_t = svdd_core::preprocess::DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ImportKeyArgs {
    #[arg(long)]
    pub key: PathBuf,
    /// Column map, e.g. `id=1,label=4,attack=3,origin=none`.
    #[arg(long, default_value = "")]
    pub map: String,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let outcome = match &cli.command {
        Command::Fixtures(a) => commands::fixtures(a, exec),
        Command::Train(a) => commands::train(a, exec),
        Command::Score(a) => commands::score(a, exec),
        Command::Fuse(a) => commands::fuse(a, exec),
        Command::Eval(a) => commands::eval(a, exec),
        Command::Report(a) => commands::report(a),
        Command::Weights(a) => commands::weights(a, exec),
        Command::WindowGolden(a) => commands::window_golden(a),
        Command::ImportKey(a) => commands::import_key(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("svdd: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
