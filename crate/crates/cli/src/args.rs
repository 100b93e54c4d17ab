use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::Cap;

#[derive(Parser, Debug)]
#[command(name = "hqnet", version, about = "Huber quantile regression networks: data, training, evaluation and decisions")]
pub struct Cli {
    /// JSON file with option defaults; flags given on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate conditional log-normal regression data.
    Synth(SynthArgs),
    /// Split a table 40/30/30 and write it with a split column plus a manifest.
    Prepare(PrepareArgs),
    /// Train a network with early stopping, then refit on train+validation.
    Fit(FitArgs),
    /// Predict with a saved model.
    Predict(PredictArgs),
    /// Average scores, skill scores, level estimates and coverage.
    Evaluate(EvaluateArgs),
    /// Mean elementary scores over a threshold grid.
    Murphy(MurphyArgs),
    /// Quantile, expectile or Huber quantile of a sample or a log-normal law.
    Functional(FunctionalArgs),
    /// Maximum-likelihood log-normal fit.
    Distfit(DistfitArgs),
    /// Invest/refrain simulation with payoffs and regrets.
    Decide(DecideArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Prepare(_) => "prepare",
            Command::Fit(_) => "fit",
            Command::Predict(_) => "predict",
            Command::Evaluate(_) => "evaluate",
            Command::Murphy(_) => "murphy",
            Command::Functional(_) => "functional",
            Command::Distfit(_) => "distfit",
            Command::Decide(_) => "decide",
        }
    }
}

/// Level and caps of the scoring function.
#[derive(Args, Serialize, Debug, Default)]
pub struct ScoreOpts {
    /// Level in (0, 1).
    #[arg(long)]
    pub tau: Option<f64>,
    /// Cap on under-prediction (observation above prediction); `inf` for none.
    #[arg(long)]
    pub a: Option<Cap>,
    /// Cap on over-prediction; `inf` for none.
    #[arg(long)]
    pub b: Option<Cap>,
}

/// Column selection for CSV input.
#[derive(Args, Serialize, Debug, Default)]
pub struct TableOpts {
    /// Comma-separated feature columns (default: every column except id, split and target).
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<String>>,
    /// Target column.
    #[arg(long)]
    pub target: Option<String>,
    /// Divide target values by this factor on load.
    #[arg(long)]
    pub target_scale: Option<f64>,
}

#[derive(Args, Serialize, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of features.
    #[arg(long)]
    pub d: Option<usize>,
    /// Intercept followed by one slope per feature, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub coefficients: Option<Vec<f64>>,
    /// Log-scale noise standard deviation.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize, Debug)]
pub struct PrepareArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub table: TableOpts,
    /// Train, validation and test fractions.
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Manifest path (default: next to the output, `.manifest.json`).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Serialize, Debug)]
pub struct FitArgs {
    /// Input table; a `split` column, when present, fixes the partition.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub table: TableOpts,
    /// Architecture preset: model1, model2 or model3.
    #[arg(long)]
    pub arch: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub score: ScoreOpts,
    /// Fit one model per level; output names get a `_tau<level>` suffix.
    #[arg(long, value_delimiter = ',')]
    pub tau_list: Option<Vec<f64>>,
    /// Seed for initialization, shuffling and dropout.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seed for the train/validation/test split (default: --seed).
    #[arg(long)]
    pub split_seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    /// Model JSON output.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Per-epoch score CSV (default: next to the model, `.report.csv`).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Also write test-set predictions to this CSV.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
}

#[derive(Args, Serialize, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub table: TableOpts,
    /// Rows to predict: train, val, test or all (needs a split column unless `all`).
    #[arg(long)]
    pub split: Option<String>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize, Debug)]
pub struct EvaluateArgs {
    /// Prediction files as `label=path` (at least two).
    #[arg(long, num_args = 1..)]
    pub predictions: Option<Vec<String>>,
    /// Label of the reference method for skill scores.
    #[arg(long)]
    pub reference: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub score: ScoreOpts,
    /// Report CSV (default: stdout).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Report JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args, Serialize, Debug)]
pub struct MurphyArgs {
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub score: ScoreOpts,
    /// Number of equispaced thresholds.
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta_max: Option<f64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize, Debug)]
pub struct FunctionalArgs {
    /// quantile, expectile or huber.
    #[arg(long)]
    pub kind: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub score: ScoreOpts,
    /// CSV sample file.
    #[arg(long)]
    pub sample: Option<PathBuf>,
    /// Value column of the sample file.
    #[arg(long)]
    pub column: Option<String>,
    /// Group column: one functional value per group.
    #[arg(long)]
    pub group: Option<String>,
    /// Log-normal location (instead of --sample).
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    /// Log-normal scale (instead of --sample).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Tabulate Huber quantile / expectile and Huber quantile / quantile ratios over cap grids.
    #[arg(long)]
    pub ratio_grid: bool,
    #[arg(long, value_delimiter = ',')]
    pub a_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub b_grid: Option<Vec<f64>>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize, Debug)]
pub struct DistfitArgs {
    /// CSV sample file.
    #[arg(long)]
    pub sample: Option<PathBuf>,
    #[arg(long)]
    pub column: Option<String>,
    /// Fit to this many simulated draws from LogNormal(--mu, --sigma) instead.
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Serialize, Debug)]
pub struct DecideArgs {
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Investment amount.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Cap on gains.
    #[arg(long)]
    pub a: Option<Cap>,
    /// Cap on losses.
    #[arg(long)]
    pub b: Option<Cap>,
    /// Loss deduction rate in [0, 1).
    #[arg(long)]
    pub r_l: Option<f64>,
    /// Gain tax rate in [0, 1).
    #[arg(long)]
    pub r_g: Option<f64>,
    /// Per-row decisions CSV.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Totals JSON (also printed to stdout).
    #[arg(long)]
    pub totals: Option<PathBuf>,
}
