//! `pumpdown`: synthesize or load pump-down curves, build a speed dictionary,
//! augment, and test regression models for robustness.
//!
//! Exit codes: 0 ok, 1 runtime failure, 2 usage or config error, 3 external
//! model protocol failure.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pumpdown::models::{ExternalEndpoint, ModelKind};

use config::{ModelSpec, RunConfig};

/// Bad flags, config or missing inputs; exits with code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "pumpdown", version, about = "Pump-down curve augmentation and model robustness testing")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for synthesis, augmentation, the classic split and model training.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (the corpus directory for `synth`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic ground-truth corpus.
    Synth(SynthArgs),
    /// Fit the speed dictionary and P0/T distributions.
    Decompose(DecomposeArgs),
    /// Draw augmented curves from the dictionary.
    Augment(AugmentArgs),
    /// Train the configured models in both regimes and run the oracles.
    Test(TestArgs),
    /// Print a saved report.
    Report,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    events: Option<usize>,
    #[arg(long)]
    archetypes: Option<usize>,
    /// Relative pressure noise.
    #[arg(long)]
    noise: Option<f64>,
}

#[derive(Args)]
struct DecomposeArgs {
    /// Ground-truth directory or file.
    #[arg(long)]
    gt: Option<PathBuf>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct AugmentArgs {
    /// Number of augmented samples.
    #[arg(long, short)]
    m: Option<usize>,
    #[arg(long)]
    max_nnz: Option<usize>,
}

#[derive(Args)]
struct TestArgs {
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Built-in model kinds to test, replacing the configured list.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<ModelKind>>,
    /// Test an external model program (repeatable), replacing the configured list.
    #[arg(long)]
    external: Vec<String>,
}

fn build_config(cli: &Cli) -> Result<RunConfig, UsageError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.set_seed(seed);
    }
    if let Some(out) = &cli.out {
        config.paths.out_dir = Some(out.clone());
    }
    match &cli.command {
        Command::Synth(a) => {
            config.synth.events = a.events.or(config.synth.events);
            config.synth.archetypes = a.archetypes.or(config.synth.archetypes);
            config.synth.noise_rel = a.noise.or(config.synth.noise_rel);
        }
        Command::Decompose(a) => {
            if let Some(gt) = &a.gt {
                config.paths.gt_dir = Some(gt.clone());
            }
            if let Some(r) = a.resolution {
                config.decomposition.resolution = r;
            }
            if let Some(e) = a.epsilon {
                config.decomposition.epsilon = e;
            }
        }
        Command::Augment(a) => {
            if let Some(m) = a.m {
                config.augmentation.m = m;
            }
            if let Some(k) = a.max_nnz {
                config.augmentation.max_nnz = k;
            }
        }
        Command::Test(a) => {
            if let Some(gt) = &a.gt {
                config.paths.gt_dir = Some(gt.clone());
            }
            if a.models.is_some() || !a.external.is_empty() {
                let mut models: Vec<ModelSpec> =
                    a.models.iter().flatten().map(|&k| ModelSpec::builtin(k)).collect();
                for (i, program) in a.external.iter().enumerate() {
                    let mut spec = ModelSpec::builtin(ModelKind::External);
                    spec.name = Some(format!("external{i}"));
                    spec.endpoint = Some(ExternalEndpoint::new(program.clone(), Vec::new()));
                    models.push(spec);
                }
                config.models = models;
            }
        }
        Command::Report => {}
    }
    Ok(config)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<pumpdown::Error>() {
            return match e {
                pumpdown::Error::Protocol { .. } => 3,
                pumpdown::Error::Io { .. } | pumpdown::Error::Json(_) => 1,
                _ => 2,
            };
        }
    }
    1
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let config = build_config(cli)?;
    match cli.command {
        Command::Synth(_) => commands::synth(&config),
        Command::Decompose(_) => commands::decompose_cmd(&config),
        Command::Augment(_) => commands::augment(&config),
        Command::Test(_) => commands::test(&config),
        Command::Report => commands::report(&config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
