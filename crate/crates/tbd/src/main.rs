use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use glmb_tbd::config::{load_config, Mode};
use glmb_tbd::montecarlo::{run_monte_carlo, steady_state, steady_steps, RunOptions};
use glmb_tbd::{checks, output};

#[derive(Parser)]
#[command(name = "glmb-tbd", version, about = "Multi-target track-before-detect experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment and write CSVs and plots.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        mode: Option<Mode>,
        /// Write the frames of trial 0 as binary and CSV dumps.
        #[arg(long)]
        dump_frames: bool,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run the oracle-backed property checks.
    Selftest,
    /// Regenerate the SVG plots from the CSVs in a run directory.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            trials,
            seed,
            out,
            mode,
            dump_frames,
            threads,
        } => {
            let mut cfg = match load_config(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let mut opts = RunOptions::from_config(&cfg);
            opts.trials = trials.unwrap_or(cfg.trials);
            opts.mode = mode.unwrap_or(cfg.mode);
            opts.threads = threads;
            opts.dump_frames = dump_frames;
            if opts.trials == 0 {
                eprintln!("error: --trials must be at least 1");
                return ExitCode::from(1);
            }
            let summary = match run_monte_carlo(&cfg, &opts, &out) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            for w in &summary.truth.warnings {
                eprintln!("warning: {w}");
            }
            for f in &summary.failures {
                eprintln!("trial {} failed at step {}: {}", f.trial, f.step, f.message);
            }
            let steady = steady_state(&summary.outcomes, &steady_steps(&summary.truth, 5));
            println!(
                "{} trials ({} failed), {} steady steps: mean |card error| {:.3}, mean OSPA {:.2} m; results in {}",
                opts.trials,
                summary.failures.len(),
                steady.steps,
                steady.mean_abs_card_error,
                steady.mean_ospa,
                out.display()
            );
            if summary.failure_rate() > 0.1 {
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Command::Selftest => {
            let results = checks::oracle_checks();
            for r in &results {
                println!("{r}");
            }
            if results.iter().all(|r| r.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Plot { input } => match output::plot_dir(&input) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
    }
}
