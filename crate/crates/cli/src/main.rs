mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use asrfair_core::fairness::FairnessWeights;
use asrfair_core::manifest::Partition;
use asrfair_core::metrics::{Level, MissingPolicy};
use asrfair_core::spectral::{Compression, LocalMetric, WindowFunction};
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

pub use error::CliError;

/// Fairness evaluation of speech recognition output across speaker groups
/// and severity levels.
#[derive(Debug, Parser)]
#[command(name = "asrfair")]
pub struct Cli {
    /// JSON file overriding flag defaults
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads [default: available cores]
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: Option<u16>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a manifest and print per-cell counts and violations
    Validate(ValidateArgs),
    /// Assign train/dev/eval partitions with a seeded shuffle
    Split(SplitArgs),
    /// Word or phoneme error rates per group and severity
    Score(ScoreArgs),
    /// Fairness scores for a pair of group error rates
    Fairness(FairnessArgs),
    /// DTW distances between normal and graded recordings
    Dtw(DtwArgs),
    /// Generate corrupted hypotheses from references
    Simulate(SimulateArgs),
    /// Score experiment plans and write the result table and chart
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LevelArg {
    Word,
    Phoneme,
}

impl From<LevelArg> for Level {
    fn from(l: LevelArg) -> Self {
        match l {
            LevelArg::Word => Level::Word,
            LevelArg::Phoneme => Level::Phoneme,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MissingArg {
    /// Leave out utterances without a hypothesis (counted separately)
    Exclude,
    /// Score them as empty transcripts
    Empty,
}

impl From<MissingArg> for MissingPolicy {
    fn from(m: MissingArg) -> Self {
        match m {
            MissingArg::Exclude => MissingPolicy::Exclude,
            MissingArg::Empty => MissingPolicy::ScoreAsEmpty,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScoreFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Md,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output manifest; `.jsonl` selects one JSON record per line
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Share of the non-eval remainder assigned to dev
    #[arg(long)]
    pub dev_fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Keep every speaker's utterances in one partition
    #[arg(long)]
    pub speaker_disjoint: bool,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Delimited file or directory of `<utterance_id>.txt`
    #[arg(long)]
    pub hypotheses: PathBuf,
    #[arg(long, value_enum)]
    pub level: Option<LevelArg>,
    #[arg(long, value_enum)]
    pub missing: Option<MissingArg>,
    /// Restrict scoring to one partition
    #[arg(long)]
    pub partition: Option<Partition>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: ScoreFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FairnessArgs {
    /// Normal-group error rate in percent
    #[arg(long, allow_negative_numbers = true)]
    pub wn: f64,
    /// CLP-group error rate in percent
    #[arg(long, allow_negative_numbers = true)]
    pub wc: f64,
    /// Comma-separated `alpha:beta` pairs [default: 0.5:0.5,0.1:0.9,0.9:0.1]
    #[arg(long, value_parser = parse_weight_list)]
    pub weights: Option<WeightList>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,
}

#[derive(Debug, Clone)]
pub struct WeightList(pub Vec<FairnessWeights>);

fn parse_weight_list(s: &str) -> Result<WeightList, String> {
    FairnessWeights::parse_list(s).map(WeightList).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct DtwArgs {
    /// Directory of reference (normal) WAV files
    #[arg(long)]
    pub normal_dir: PathBuf,
    /// Directory of graded WAV files
    #[arg(long)]
    pub graded_dir: PathBuf,
    /// CSV of `file_stem,severity` for the graded files
    #[arg(long)]
    pub severity_map: PathBuf,
    #[arg(long)]
    pub window_ms: Option<f64>,
    #[arg(long)]
    pub hop_ms: Option<f64>,
    #[arg(long)]
    pub fft_points: Option<usize>,
    /// hamming, hann or rectangular
    #[arg(long)]
    pub window: Option<WindowFunction>,
    /// euclidean, manhattan or cosine
    #[arg(long)]
    pub metric: Option<LocalMetric>,
    /// log or none
    #[arg(long)]
    pub compression: Option<Compression>,
    /// Voiced-frame energy threshold as a fraction of the mean
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// JSON corruption profile
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub level: Option<LevelArg>,
    /// Only simulate records of one partition
    #[arg(long)]
    pub partition: Option<Partition>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// JSON document `{"plans": [...]}`
    #[arg(long)]
    pub plans: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// File name stem for the `.md`, `.csv` and `.svg` outputs
    #[arg(long, default_value = "report")]
    pub stem: String,
    /// Weight pair plotted in the chart
    #[arg(long)]
    pub chart_weights: Option<FairnessWeights>,
    #[arg(long, value_enum)]
    pub level: Option<LevelArg>,
    #[arg(long, value_enum)]
    pub missing: Option<MissingArg>,
}

fn version() -> String {
    format!(
        "{} (manifest/hypothesis format v{})",
        env!("CARGO_PKG_VERSION"),
        asrfair_core::FORMAT_VERSION
    )
}

fn main() -> ExitCode {
    let matches = Cli::command().version(version()).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match commands::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
