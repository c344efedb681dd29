use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vmbcd::experiment::{compare_report, load_config, run_experiment, ExperimentOptions};

/// Randomized block-coordinate descent experiments.
#[derive(Parser)]
#[command(name = "vmbcd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every [run] section of a config file and write traces, aggregates and a plot.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config's `output`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for the per-seed runs.
        #[arg(long)]
        threads: Option<usize>,
        /// Added to every seed in the config.
        #[arg(long, default_value_t = 0)]
        seed_offset: u64,
    },
    /// Compare epochs-to-target across aggregate CSVs.
    Report {
        #[arg(required = true)]
        aggregates: Vec<PathBuf>,
        #[arg(long)]
        target: f64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            threads,
            seed_offset,
        } => load_config(&config).and_then(|cfg| {
            let summary = run_experiment(
                &cfg,
                &ExperimentOptions {
                    out,
                    threads,
                    seed_offset,
                },
            )?;
            println!("wrote {} trace files", summary.trace_files.len());
            println!("aggregate: {}", summary.aggregate.display());
            if let Some(p) = &summary.plot {
                println!("plot: {}", p.display());
            }
            if let Some(f) = summary.f_star {
                println!("F* = {f}");
            }
            Ok(())
        }),
        Command::Report { aggregates, target } => {
            compare_report(&aggregates, target).map(|s| print!("{s}"))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
