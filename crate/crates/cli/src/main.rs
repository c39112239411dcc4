//! `geomae` command-line tool.

mod commands;
mod settings;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use settings::ConfigFile;

/// Failure reported as one line on stderr.
#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub msg: String,
}

impl CliError {
    pub fn new(kind: &'static str, msg: impl Into<String>) -> Self {
        Self { kind, msg: msg.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = self.msg.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n");
        write!(f, "error: kind={} msg=\"{msg}\"", self.kind)
    }
}

impl From<geomae::Error> for CliError {
    fn from(e: geomae::Error) -> Self {
        Self::new(e.kind(), e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "geomae",
    version,
    about = "Geometric autoencoders: data, training, diagnostics and metrics"
)]
struct Cli {
    /// Config file of key=value lines; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a dataset CSV
    GenData(GenDataArgs),
    /// Train an autoencoder (or fit PCA) on a dataset CSV
    Train(TrainArgs),
    /// Indicatrices, determinant heatmap or condition numbers of a trained decoder
    Diagnose(DiagnoseArgs),
    /// Embedding quality metrics and rank aggregation
    Evaluate(EvaluateArgs),
    /// Finite-difference gradient checks
    Gradcheck(GradcheckArgs),
    /// Property suites
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct GenDataArgs {
    /// earth | swiss_roll | hemisphere | two_moons_3d
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// vanilla | geometric | lee | pca
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long = "weight-decay")]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Hidden widths, comma separated
    #[arg(long)]
    pub hidden: Option<String>,
    #[arg(long = "latent-dim")]
    pub latent_dim: Option<usize>,
    /// Clamp determinants from below instead of failing
    #[arg(long = "det-floor")]
    pub det_floor: Option<f64>,
    /// Standardize input columns before training
    #[arg(long)]
    pub standardize: Option<bool>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-epoch loss CSV
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Also write the latent codes of the training data
    #[arg(long)]
    pub latent: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// indicatrices | determinant | condition
    #[arg(long)]
    pub what: Option<String>,
    /// Grid steps per axis (default 20 for indicatrices, 100 for condition)
    #[arg(long)]
    pub steps: Option<usize>,
    /// Directions per indicatrix
    #[arg(long)]
    pub samples: Option<usize>,
    /// Median indicatrix diameter as a fraction of the grid spacing
    #[arg(long = "target-fraction")]
    pub target_fraction: Option<f64>,
    #[arg(long)]
    pub standardize: Option<bool>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Embedding CSV, repeatable
    #[arg(long)]
    pub embedding: Vec<String>,
    #[arg(long)]
    pub subsample: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Largest neighborhood size
    #[arg(long = "k-max")]
    pub k_max: Option<usize>,
    /// Neighborhood sizes run k-step, 2·k-step, …, k-max
    #[arg(long = "k-step")]
    pub k_step: Option<usize>,
    #[arg(long)]
    pub standardize: Option<bool>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// invariance | pca | metrics | diagnostics
    #[arg(long)]
    pub suite: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn set_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("GEOMAE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::new(
            "config",
            format!("GEOMAE_THREADS must be a positive integer, got {raw:?}"),
        )
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::new("config", e.to_string()))
}

fn run(cli: Cli, args: Vec<String>) -> Result<(), CliError> {
    set_threads()?;
    let config = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::GenData(a) => commands::gen_data(a, &config, &args),
        Command::Train(a) => commands::train(a, &config, &args),
        Command::Diagnose(a) => commands::diagnose(a, &config, &args),
        Command::Evaluate(a) => commands::evaluate(a, &config, &args),
        Command::Gradcheck(a) => commands::gradcheck(a, &config),
        Command::Verify(a) => commands::verify(a, &config),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", CliError::new("usage", first));
            return ExitCode::from(2);
        }
    };
    match run(cli, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::FAILURE
        }
    }
}
