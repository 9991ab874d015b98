use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use games_cli::{run_pipeline, run_stage, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "games", version, about = "Representative-day selection and coupled power/gas expansion planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate (or ingest) the dataset and planning instance.
    Synth(Common),
    /// Train the autoencoder.
    Train(Common),
    /// Embed every day with the trained model.
    Embed(Common),
    /// Select representative days from embeddings and from raw signals.
    Cluster(Common),
    /// Solve the representative-day planning models.
    Plan(Common),
    /// Re-solve every plan over the full horizon.
    Evaluate(Common),
    /// Write the comparison report and plot data.
    Compare(Common),
    /// Run every stage in order.
    Pipeline(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// With `pipeline`, stop after this stage.
    #[arg(long)]
    stage: Option<String>,
    /// Relative MIP gap.
    #[arg(long)]
    gap: Option<f64>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(gap) = self.gap {
            cfg.solver.gap = gap;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (stage, common) = match &cli.command {
        Command::Synth(c) => ("synth", c),
        Command::Train(c) => ("train", c),
        Command::Embed(c) => ("embed", c),
        Command::Cluster(c) => ("cluster", c),
        Command::Plan(c) => ("plan", c),
        Command::Evaluate(c) => ("evaluate", c),
        Command::Compare(c) => ("compare", c),
        Command::Pipeline(c) => ("pipeline", c),
    };
    let cfg = common.config()?;
    let manifest = if stage == "pipeline" {
        run_pipeline(&cfg, common.stage.as_deref())?
    } else {
        if common.stage.as_deref().is_some_and(|s| s != stage) {
            return Err(CliError::Config(format!("--stage {} conflicts with the {stage} command", common.stage.as_deref().unwrap_or_default())));
        }
        run_stage(&cfg, stage)?
    };
    log::info!("{} outputs recorded in {}", manifest.files.len(), cfg.output_dir.join("manifest.json").display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
