use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

#[derive(Parser)]
#[command(
    name = "pcsm",
    version,
    about = "Point-cloud saliency maps and point-dropping experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic shape dataset as train/ and test/ bundles.
    Generate {
        /// Preset: default or tiny.
        #[arg(long, default_value = "default")]
        spec: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a classifier and write a checkpoint.
    Train(TrainArgs),
    /// Score every point of one cloud; writes a CSV table and a colored PLY.
    Saliency(SaliencyArgs),
    /// Drop points from one cloud with a single scheme.
    Drop(DropArgs),
    /// Accuracy and mean loss against the number of dropped points.
    Curve(CurveArgs),
    /// Agreement between dropping points and shifting them onto the core.
    Consistency(ConsistencyArgs),
    /// Sweep alpha, the drop budget, or the number of rounds.
    Paramstudy(ParamStudyArgs),
    /// Attack with one model, evaluate with another.
    Generalize(GeneralizeArgs),
}

/// Where evaluation clouds come from: a bundle directory or a synthetic preset.
#[derive(Args, Clone)]
pub struct DataArgs {
    /// Dataset bundle: a directory of .xyz files plus labels.csv.
    #[arg(long, conflicts_with = "synthetic")]
    pub dataset: Option<PathBuf>,
    /// Use the test split of a synthetic preset (default or tiny).
    #[arg(long)]
    pub synthetic: Option<String>,
    /// Seed of the synthetic preset.
    #[arg(long, default_value_t = 0)]
    pub data_seed: u64,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Train on a synthetic preset (default or tiny).
    #[arg(long, conflicts_with = "train")]
    pub synthetic: Option<String>,
    /// Training bundle directory.
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Held-out bundle directory, reported after training.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// sgd or momentum
    #[arg(long, default_value = "momentum")]
    pub optimizer: String,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct CloudArgs {
    /// A single .xyz, .off or .ply file.
    #[arg(long, conflicts_with_all = ["dataset", "synthetic"])]
    pub cloud: Option<PathBuf>,
    /// Ground-truth label for --cloud; the predicted class is used if omitted.
    #[arg(long)]
    pub label: Option<usize>,
    /// Points sampled from .off meshes.
    #[arg(long, default_value_t = 1024)]
    pub samples: usize,
    #[command(flatten)]
    pub data: DataArgs,
    /// Which cloud of --dataset/--synthetic to use.
    #[arg(long, default_value_t = 0)]
    pub index: usize,
}

#[derive(Args)]
pub struct SaliencyArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub input: CloudArgs,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long)]
    pub out_csv: PathBuf,
    #[arg(long)]
    pub out_ply: Option<PathBuf>,
}

#[derive(Args)]
pub struct DropArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub input: CloudArgs,
    #[arg(long, default_value = "high")]
    pub scheme: String,
    #[arg(long)]
    pub n: usize,
    /// Number of rounds T; defaults to the iteration rule.
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long, default_value = "default")]
    pub t_rule: String,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_csv: PathBuf,
    /// Also write the remaining cloud as .xyz.
    #[arg(long)]
    pub out_xyz: Option<PathBuf>,
}

#[derive(Args)]
pub struct CurveArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "high,low,random,critical,furthest"
    )]
    pub schemes: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0,10,20,30,40,50")]
    pub grid: Vec<usize>,
    /// default, T=<t> or per=<s>
    #[arg(long, default_value = "default")]
    pub t_rule: String,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ConsistencyArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 25)]
    pub n: usize,
    #[arg(long, value_delimiter = ',', default_value = "high,random,furthest")]
    pub schemes: Vec<String>,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ParamStudyArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// alpha, n or T
    #[arg(long)]
    pub study: String,
    /// Budget for the alpha and T sweeps.
    #[arg(long, default_value_t = pcsm_core::experiments::DEFAULT_STUDY_BUDGET)]
    pub n: usize,
    #[arg(long, default_value = "default")]
    pub t_rule: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct GeneralizeArgs {
    /// Model used to pick the points to drop.
    #[arg(long)]
    pub checkpoint_a: PathBuf,
    /// Model evaluated on the attacked clouds.
    #[arg(long)]
    pub checkpoint_b: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[arg(long, default_value = "default")]
    pub t_rule: String,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = commands::configure_threads().and_then(|()| match cli.command {
        Command::Generate { spec, seed, out } => commands::generate(&spec, seed, &out),
        Command::Train(a) => commands::train(&a),
        Command::Saliency(a) => commands::saliency(&a),
        Command::Drop(a) => commands::drop(&a),
        Command::Curve(a) => commands::curve(&a),
        Command::Consistency(a) => commands::consistency(&a),
        Command::Paramstudy(a) => commands::paramstudy(&a),
        Command::Generalize(a) => commands::generalize(&a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
