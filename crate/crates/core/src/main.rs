use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use websample::experiment::{run_experiment, run_named_stage, stage_compare, ExperimentConfig, JumpModeConfig, Layout, RunManifest};
use websample::Result;

/// Random-walk web page sampling workbench.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    /// TOML experiment config; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: the config's `out`, else `./out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Walk C jumps uniformly over all seen pages instead of domain/host/page.
    #[arg(long, global = true)]
    verify_mode: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build or load the web graph.
    Generate,
    /// Run Walk AB and Walk C and derive Walk B.
    Walk,
    /// Draw the subsamples from the walk traces.
    Sample,
    /// Compute reports for every sample type.
    Analyze,
    /// Write the manifest and the comparison table, optionally against other runs.
    Compare {
        /// Manifests of other runs over the same graph.
        manifests: Vec<PathBuf>,
    },
    /// All stages in order.
    All,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if cli.verify_mode {
        config.walk.c.jump_mode = JumpModeConfig::GlobalUniform;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<()> {
    let config = load_config(cli)?;
    let out = cli.out.clone().or_else(|| config.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let layout = Layout::new(&out);
    match &cli.command {
        Command::Generate => run_named_stage(&config, &layout, "generate").map(drop),
        Command::Walk => run_named_stage(&config, &layout, "walk").map(drop),
        Command::Sample => run_named_stage(&config, &layout, "sample").map(drop),
        Command::Analyze => run_named_stage(&config, &layout, "analyze").map(drop),
        Command::Compare { manifests } => {
            let others = manifests
                .iter()
                .map(|p| RunManifest::load(p))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.in_stage("compare"))?;
            stage_compare(&config, &layout, &others).map(drop)
        }
        Command::All => run_experiment(&config, &out).map(drop),
    }?;
    log::info!("outputs in {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}

