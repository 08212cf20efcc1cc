use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use quakesift::{ErrorClass, PipelineConfig};

mod commands;

#[derive(Parser)]
#[command(name = "quakesift", version, about = "Feature-based detection of small seismic events")]
struct Cli {
    /// JSON file with flat pipeline settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Run every batch loop on the current thread.
    #[arg(long, global = true)]
    sequential: bool,

    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a labeled window corpus and a continuous multi-station record.
    Synth(SynthArgs),
    /// Pre-process windows and compute every candidate feature.
    Extract(ExtractArgs),
    /// Rank features by single-feature accuracy and prune correlated ones.
    Rank(RankArgs),
    /// Fit the four-feature logistic regression.
    Train(TrainArgs),
    /// Run a trained model over continuous traces and vote across stations.
    Scan(ScanArgs),
    /// Score a model on a matrix, or a scan report against a catalog.
    Eval(EvalArgs),
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Length of the continuous record; 0 skips it.
    #[arg(long, default_value_t = 4.0)]
    pub hours: f64,
    #[arg(long, default_value_t = 5)]
    pub stations: usize,
    /// Event origin in seconds after the record start; repeatable.
    #[arg(long = "event-time")]
    pub event_times: Vec<f64>,
    /// Record start as epoch seconds.
    #[arg(long, default_value_t = 1_477_958_400.0)]
    pub start: f64,
}

#[derive(Args)]
pub struct ExtractArgs {
    /// Window directory written by `synth`.
    #[arg(long, conflicts_with_all = ["traces", "catalog"])]
    pub windows: Option<PathBuf>,
    #[arg(long, num_args = 1.., requires = "catalog")]
    pub traces: Vec<PathBuf>,
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Output matrix CSV; the normalization report goes next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct RankArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated feature names.
    #[arg(long, value_delimiter = ',', conflicts_with = "from_report")]
    pub features: Vec<String>,
    /// Take the first four kept features of a selection report.
    #[arg(long)]
    pub from_report: Option<PathBuf>,
}

#[derive(Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Overrides the manifest's model path.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, requires = "model")]
    pub matrix: Option<PathBuf>,
    /// JSON scan report.
    #[arg(long, requires = "catalog", conflicts_with = "matrix")]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub catalog: Option<PathBuf>,
}

fn load_config(cli: &Cli) -> anyhow::Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| quakesift::Error::io(path, e))?;
            PipelineConfig::from_json(&text)?
        }
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.sequential {
        cfg.exec = quakesift::ExecMode::Sequential;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let cfg = load_config(cli)?;
    println!("seed: {}", cfg.seed);
    match &cli.command {
        Command::Synth(a) => commands::synth(&cfg, a),
        Command::Extract(a) => commands::extract(&cfg, a),
        Command::Rank(a) => commands::rank(&cfg, a),
        Command::Train(a) => commands::train(&cfg, a),
        Command::Scan(a) => commands::scan(&cfg, a),
        Command::Eval(a) => commands::eval(&cfg, a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<quakesift::Error>().map(|e| e.class()) {
        Some(ErrorClass::Data) => 3,
        Some(ErrorClass::Convergence) => 4,
        Some(ErrorClass::Config) | None => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
