use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use trefoil_cli::config::load_config;
use trefoil_cli::pipeline;

/// Simulator of high-harmonic generation from bicircular drivers with
/// Gaussian field fluctuations.
#[derive(Parser)]
#[command(name = "trefoil", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a configuration file.
    Validate { config: PathBuf },
    /// Execute the full pipeline for one configuration.
    Run {
        config: PathBuf,
        /// Override the ensemble seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Dump the reference dipole trace (t_au, d_par, d_perp).
        #[arg(long)]
        dump_dipole: bool,
        /// Dump all fractional-q bins of the reference spectrum.
        #[arg(long)]
        dump_dense_spectrum: bool,
    },
    /// Run the configured fluctuation-intensity sweep.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Selection-rule predictions only (no simulation).
    Predict { config: PathBuf },
    /// Cross-check a finished run directory against its predictions.
    Compare { run_dir: PathBuf },
}

fn init_workers() {
    if let Ok(v) = std::env::var("TREFOIL_WORKERS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn run() -> Result<bool> {
    init_workers();
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => {
            let rc = load_config(&config)?;
            println!("ok: config_hash = {}", rc.config_hash);
            Ok(true)
        }
        Command::Run { config, seed, dump_dipole, dump_dense_spectrum } => {
            let mut rc = load_config(&config)?;
            if let Some(s) = seed {
                rc.seed = s;
            }
            rc.outputs.dump_dipole |= dump_dipole;
            rc.outputs.dump_dense_spectrum |= dump_dense_spectrum;
            let manifest = pipeline::run_pipeline(&rc).context("running pipeline")?;
            println!("wrote {} outputs to {}", manifest.outputs.len(), rc.outputs.dir);
            Ok(true)
        }
        Command::Sweep { config, seed } => {
            let mut rc = load_config(&config)?;
            if let Some(s) = seed {
                rc.seed = s;
            }
            let summary = pipeline::run_sweep(&rc).context("running sweep")?;
            println!(
                "swept {} intensities into {}",
                summary.intensities_au.len(),
                rc.outputs.dir
            );
            Ok(true)
        }
        Command::Predict { config } => {
            let rc = load_config(&config)?;
            let channels = pipeline::predict_channels(&rc)?;
            println!("{}", serde_json::to_string_pretty(&channels)?);
            Ok(true)
        }
        Command::Compare { run_dir } => {
            let report = pipeline::compare_prediction(&run_dir)?;
            let mut stdout = std::io::stdout().lock();
            pipeline::print_compare_report(&mut stdout, &report)?;
            Ok(report.all_match)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
