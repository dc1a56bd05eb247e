use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod store;

pub use config::ExperimentConfig;

/// Failure of a command. Usage errors (bad flags, bad config, missing
/// inputs) exit with 2, everything else with 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(trafficbench::Error),
}

impl From<trafficbench::Error> for CliError {
    fn from(e: trafficbench::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Runtime(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "trafficbench", version, about = "Traffic-rate attack and defense benchmark")]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config's.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the synthetic four-device fixture as a trace store.
    Synth,
    /// Parse trace and label CSVs into a trace store.
    Ingest(IngestArgs),
    /// Apply a defense to a trace store.
    Defend(DefendArgs),
    /// Render the window images of a store as P6 rasters.
    Encode(EncodeArgs),
    /// Train an attack and write its test predictions.
    Attack(AttackArgs),
    /// Score predictions and write the report.
    Eval(EvalArgs),
    /// Run the whole pipeline from the experiment config.
    Run,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub traces: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub granularity: u32,
    /// Neighbours for imputing absent samples; 0 fills them with zero traffic.
    #[arg(long, default_value_t = 0)]
    pub impute_k: usize,
    /// Clip rates above this level (KB/s).
    #[arg(long)]
    pub background_cap: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DefendArgs {
    #[arg(long)]
    pub store: PathBuf,
    /// identity, pti, rtp or htr; defaults to the config's.
    #[arg(long)]
    pub method: Option<String>,
    /// Level V in KB/s; defaults to the home-wide 95th percentile.
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub store: PathBuf,
    /// Comma-separated representations; defaults to the config's.
    #[arg(long, value_delimiter = ',')]
    pub representations: Option<Vec<String>>,
    #[arg(long)]
    pub size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[arg(long)]
    pub store: PathBuf,
    /// fusion or a classifier name; defaults to the config's.
    #[arg(long)]
    pub attack: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    /// Comma-separated Top-k cut-offs; defaults to the config's.
    #[arg(long, value_delimiter = ',')]
    pub topk: Option<Vec<usize>>,
}

/// Global flags after merging with the config file.
pub struct Globals {
    pub config: Option<ExperimentConfig>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl Globals {
    pub fn seed(&self) -> Result<u64, CliError> {
        self.seed
            .or(self.config.as_ref().map(|c| c.seed))
            .ok_or_else(|| CliError::Usage("a seed is required: pass --seed or --config".into()))
    }

    pub fn out(&self) -> Result<PathBuf, CliError> {
        self.out
            .clone()
            .or_else(|| self.config.as_ref().and_then(|c| c.output_dir.clone()))
            .ok_or_else(|| CliError::Usage("an output directory is required: pass --out".into()))
    }

    /// The config, or defaults with the given seed.
    pub fn experiment(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(c) => c.clone(),
            None => serde_json::from_value(serde_json::json!({ "seed": self.seed()? }))
                .map_err(|e| CliError::Usage(e.to_string()))?,
        };
        cfg.seed = self.seed()?;
        Ok(cfg)
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size the worker pool: {e}")))?;
    }
    let config = cli.config.as_deref().map(ExperimentConfig::load).transpose()?;
    let g = Globals {
        config,
        seed: cli.seed,
        out: cli.out,
    };
    match cli.command {
        Command::Synth => commands::cmd_synth(&g),
        Command::Ingest(a) => commands::cmd_ingest(&g, &a),
        Command::Defend(a) => commands::cmd_defend(&g, &a),
        Command::Encode(a) => commands::cmd_encode(&g, &a),
        Command::Attack(a) => commands::cmd_attack(&g, &a),
        Command::Eval(a) => commands::cmd_eval(&g, &a),
        Command::Run => commands::cmd_run(&g),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TRAFFICBENCH_LOG", "warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Usage(_) => ExitCode::from(2),
                CliError::Runtime(_) => ExitCode::from(1),
            }
        }
    }
}
