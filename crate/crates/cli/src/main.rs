//! `occlupose`: synthetic benchmark generation, pose estimation, evaluation,
//! augmentation and plotting from the command line.

mod commands;
mod config;
mod error;
mod manifest;
mod provider;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::evaluate::EvaluateArgs;
use commands::estimate::EstimateArgs;
use commands::Globals;
use config::RunConfig;
use error::{CliError, CliResult, ExitKind};

#[derive(Debug, Parser)]
#[command(name = "occlupose", version, about = "Occlusion-aware 6D pose estimation on synthetic BOP-style data")]
struct Cli {
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses one per core. Outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// TOML configuration; omitted tables and keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset in the BOP layout.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// Overrides `benchmark.n_scenes`.
        #[arg(long)]
        n_scenes: Option<usize>,
    },
    /// Estimate the pose of every annotated instance and write a BOP result CSV.
    Estimate {
        #[arg(long)]
        dataset: PathBuf,
        /// `oracle[:noise=<sigma>,dim=<n>]` or `random[:seed=<n>,dim=<n>]`.
        #[arg(long, default_value = "oracle")]
        provider: String,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `pipeline.k`.
        #[arg(long)]
        k: Option<usize>,
        /// Overrides `pipeline.n_refine`.
        #[arg(long)]
        refine: Option<usize>,
        /// Record per-instance wall-clock time (makes the CSV non-reproducible).
        #[arg(long)]
        record_time: bool,
    },
    /// Score a result CSV, or aggregate per-dataset reports with `--aggregate`.
    Evaluate {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        results: Option<PathBuf>,
        /// JSON list of `{scene_id, im_id, obj_id, bbox, score}` detections.
        #[arg(long)]
        detections: Option<PathBuf>,
        /// Method name stored in the report; defaults to the results file stem.
        #[arg(long)]
        method: Option<String>,
        #[arg(long, num_args = 1..)]
        aggregate: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Copy a dataset with corrupted depth images and visible masks.
    Augment {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render SVG plots from one evaluation report or a JSON list of them.
    Report {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.apply_seed(seed);
    }
    if cli.print_config {
        print!("{}", config.to_toml());
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(CliError::msg(ExitKind::Validation, "no subcommand given; see --help"));
    };
    let globals = Globals {
        seed: cli.seed,
        threads: cli.threads,
        config,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(CliError::internal)?;
    pool.install(|| match command {
        Command::Synth { out, n_scenes } => commands::synth::cmd_synth(&globals, &out, n_scenes),
        Command::Estimate {
            dataset,
            provider,
            out,
            k,
            refine,
            record_time,
        } => commands::estimate::cmd_estimate(
            &globals,
            &EstimateArgs {
                dataset: &dataset,
                provider: &provider,
                out: &out,
                k,
                refine,
                record_time,
            },
        ),
        Command::Evaluate {
            dataset,
            results,
            detections,
            method,
            aggregate,
            out,
        } => commands::evaluate::cmd_evaluate(
            &globals,
            &EvaluateArgs {
                dataset: dataset.as_deref(),
                results: results.as_deref(),
                detections: detections.as_deref(),
                method: method.as_deref(),
                aggregate: &aggregate,
                out: &out,
            },
        ),
        Command::Augment { dataset, out } => commands::augment::cmd_augment(&globals, &dataset, &out),
        Command::Report { report, out } => commands::report::cmd_report(&globals, &report, &out),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(ExitKind::Validation as u8) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
