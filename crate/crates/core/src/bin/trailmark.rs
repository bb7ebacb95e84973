use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use trailmark::config::RunConfig;
use trailmark::pipeline::{self, PipelineError};

#[derive(Parser)]
#[command(name = "trailmark", version, about = "Self-supervised traversability pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Run configuration (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Input dataset manifest
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Model checkpoint (predict)
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Output directory; defaults to `output_dir` from the config
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides every seed in the config (and the scene seed for synth)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset from a scene spec
    Synth {
        #[command(flatten)]
        common: Common,
        /// Scene spec (TOML)
        #[arg(long)]
        scene: PathBuf,
    },
    /// Project wheel trajectories and write trajectory masks
    Label(Common),
    /// Train the reconstruction model on masked frames
    Train(Common),
    /// Write risk maps, reconstructions and error images
    Predict(Common),
    /// Compare risk maps with semantic labels
    Eval(Common),
}

fn require(path: Option<PathBuf>, flag: &str) -> Result<PathBuf, PipelineError> {
    path.ok_or_else(|| PipelineError::Config(format!("--{flag} is required for this command")))
}

fn run(cli: Cli) -> Result<PathBuf, PipelineError> {
    let common = match &cli.command {
        Command::Synth { common, .. } => common,
        Command::Label(c) | Command::Train(c) | Command::Predict(c) | Command::Eval(c) => c,
    };
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.override_seed(seed);
    }
    pipeline::init_workers(cfg.workers);
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| PipelineError::Config("no --out given and no output_dir in the config".into()))?;
    match cli.command {
        Command::Synth { scene, common } => pipeline::cmd_synth(&cfg, &scene, &out, common.seed),
        Command::Label(c) => pipeline::cmd_label(&cfg, &require(c.manifest, "manifest")?, &out),
        Command::Train(c) => pipeline::cmd_train(&cfg, &require(c.manifest, "manifest")?, &out),
        Command::Predict(c) => pipeline::cmd_predict(&cfg, &require(c.checkpoint, "checkpoint")?, &require(c.manifest, "manifest")?, &out),
        Command::Eval(c) => pipeline::cmd_eval(&cfg, &require(c.manifest, "manifest")?, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(path) => {
            log::info!("wrote {}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("trailmark: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
