//! Command-line interface over the spectra pipeline.
//!
//! Every subcommand takes a JSON config file plus a few overriding
//! flags, writes a complete artifact bundle into the output directory,
//! and exits nonzero if any part of the bundle could not be produced.

use clap::{Args, Parser, Subcommand};
use rmt_spectra::report::commands::{
    cmd_analyze, cmd_experiment, cmd_sample, cmd_train, install_worker_pool, resolve_out_dir,
};
use rmt_spectra::report::config::ExperimentConfig;
use rmt_spectra::Result;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "rmt-spectra",
    version,
    about = "Eigenvalue spectra of random-matrix ensembles and neural-network curvature"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample an ensemble and write one spectrum per matrix.
    Sample(RunArgs),
    /// Run the statistics pipeline over an existing spectra file.
    Analyze(RunArgs),
    /// Generate spectra from the configured source, then analyze them.
    Experiment(RunArgs),
    /// Train the configured network and save the loss trace and weights.
    Train(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the source seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config's out_dir.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Degeneracy cutoff for near-zero eigenvalue removal
    /// [config default: 1e-20].
    #[arg(long)]
    cutoff: Option<f64>,
    /// Spacing ratios above this value are dropped [config default: 10].
    #[arg(long)]
    truncation: Option<f64>,
    /// Number of histogram bins [config default: 50].
    #[arg(long)]
    bins: Option<usize>,
}

fn load(args: &RunArgs) -> Result<(ExperimentConfig, PathBuf)> {
    let mut config = ExperimentConfig::from_path(&args.config)?.with_overrides(
        args.seed,
        args.cutoff,
        args.truncation,
        args.bins,
    )?;
    let out_dir = resolve_out_dir(&config, args.out_dir.clone())?;
    // The echoed config must reproduce this run on its own, so the
    // resolved output directory is folded back in.
    config.out_dir = Some(out_dir.clone());
    Ok((config, out_dir))
}

fn run(cli: Cli) -> Result<()> {
    install_worker_pool()?;
    match cli.command {
        Command::Sample(args) => {
            let (config, out_dir) = load(&args)?;
            let bundle = cmd_sample(&config, &out_dir)?;
            println!(
                "sampled {} spectra into {}",
                bundle.summary.n_spectra,
                out_dir.display()
            );
        }
        Command::Analyze(args) => {
            let (config, out_dir) = load(&args)?;
            let bundle = cmd_analyze(&config, &out_dir)?;
            report_statistics(&bundle.summary);
            println!("wrote {} files to {}", bundle.files.len(), out_dir.display());
        }
        Command::Experiment(args) => {
            let (config, out_dir) = load(&args)?;
            let bundle = cmd_experiment(&config, &out_dir)?;
            report_statistics(&bundle.summary);
            println!("wrote {} files to {}", bundle.files.len(), out_dir.display());
        }
        Command::Train(args) => {
            let (config, out_dir) = load(&args)?;
            let files = cmd_train(&config, &out_dir)?;
            println!("wrote {} files to {}", files.len(), out_dir.display());
        }
    }
    Ok(())
}

fn report_statistics(summary: &rmt_spectra::report::bundle::RunSummary) {
    for stat in &summary.statistics {
        println!(
            "{}: n = {}, KS({}) = {:.5}",
            stat.statistic, stat.n_samples, stat.reference, stat.ks_statistic
        );
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}
