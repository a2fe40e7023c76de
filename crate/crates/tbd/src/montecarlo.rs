//! Parallel Monte Carlo runs and their artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use glmb_core::metrics::{mc_aggregate, OspaParams, StepAggregate, StepMetrics};
use glmb_core::sensor::RadarGrid;
use rayon::prelude::*;

use crate::config::{Mode, ScenarioConfig};
use crate::output;
use crate::trial::{run_trial, Scenario, TrialFailure, TrialOutcome};
use crate::truth::{build_grid, generate_truth, Truth};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("output directory {path} is not writable: {source}")]
    Unwritable { path: PathBuf, source: std::io::Error },
    #[error("writing {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub trials: usize,
    pub mode: Mode,
    /// `None` uses rayon's default.
    pub threads: Option<usize>,
    pub ospa: OspaParams,
    pub dump_frames: bool,
}

impl RunOptions {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            trials: cfg.trials,
            mode: cfg.mode,
            threads: None,
            ospa: OspaParams::default(),
            dump_frames: false,
        }
    }
}

/// Everything a run produced, in trial order.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub grid: RadarGrid,
    pub truth: Truth,
    pub outcomes: Vec<TrialOutcome>,
    pub failures: Vec<TrialFailure>,
    /// Per-step statistics over the successful trials; empty if none.
    pub aggregate: Vec<StepAggregate>,
}

impl RunSummary {
    /// Share of trials stopped by a filter error.
    pub fn failure_rate(&self) -> f64 {
        self.failures.len() as f64 / (self.failures.len() + self.outcomes.len()) as f64
    }
}

/// Steps whose truth label set has not changed for `settle` steps.
pub fn steady_steps(truth: &Truth, settle: usize) -> Vec<usize> {
    let labels = |k: usize| truth.steps[k].iter().map(|s| s.label).collect::<Vec<_>>();
    (settle..truth.steps.len())
        .filter(|&k| (k - settle..k).all(|j| labels(j) == labels(k)))
        .collect()
}

/// Time averages over the given steps and all successful trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub mean_abs_card_error: f64,
    pub mean_ospa: f64,
    pub steps: usize,
}

pub fn steady_state(outcomes: &[TrialOutcome], steps: &[usize]) -> SteadyState {
    let mut card = 0.0;
    let mut ospa = 0.0;
    let mut n = 0usize;
    for o in outcomes {
        for &k in steps {
            let m: &StepMetrics = &o.steps[k].metrics;
            card += (m.est_card - m.true_card).abs();
            ospa += m.ospa;
            n += 1;
        }
    }
    let n_f = n.max(1) as f64;
    SteadyState {
        mean_abs_card_error: card / n_f,
        mean_ospa: ospa / n_f,
        steps: steps.len(),
    }
}

/// Runs all trials without touching the file system.
pub fn simulate(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunSummary, RunError> {
    simulate_with_frames(cfg, opts, None)
}

fn simulate_with_frames(
    cfg: &ScenarioConfig,
    opts: &RunOptions,
    frame_dir: Option<&Path>,
) -> Result<RunSummary, RunError> {
    let grid = build_grid(cfg);
    let truth = generate_truth(cfg, &grid);
    let sc = Scenario {
        cfg,
        grid: &grid,
        truth: &truth,
        mode: opts.mode,
        ospa: opts.ospa,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| RunError::Pool(e.to_string()))?;
    let dump_error = std::sync::Mutex::new(None);
    let results: Vec<Result<TrialOutcome, TrialFailure>> = pool.install(|| {
        (0..opts.trials)
            .into_par_iter()
            .map(|i| match frame_dir {
                Some(dir) if i == 0 => {
                    let mut dump = |k: usize, f: &glmb_core::sensor::RadarFrame| {
                        let base = dir.join(format!("frame_{k:04}"));
                        let r = output::write_frame_bin(&base.with_extension("bin"), f)
                            .and_then(|_| output::write_frame_csv(&base.with_extension("csv"), f));
                        if let Err(e) = r {
                            dump_error.lock().unwrap().get_or_insert((base, e));
                        }
                    };
                    run_trial(&sc, i, Some(&mut dump))
                }
                _ => run_trial(&sc, i, None),
            })
            .collect()
    });
    if let Some((path, source)) = dump_error.into_inner().unwrap() {
        return Err(RunError::Write { path, source });
    }
    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(o) => outcomes.push(o),
            Err(f) => failures.push(f),
        }
    }
    let per_trial: Vec<Vec<StepMetrics>> = outcomes
        .iter()
        .map(|o| o.steps.iter().map(|s| s.metrics).collect())
        .collect();
    let aggregate = mc_aggregate(&per_trial).unwrap_or_default();
    Ok(RunSummary {
        grid,
        truth,
        outcomes,
        failures,
        aggregate,
    })
}

/// Runs all trials and writes `ospa.csv`, `cardinality.csv`, `tracks.csv`,
/// `failures.csv` and the SVG plots into `out`. With `dump_frames`, the
/// frames of trial 0 go to `out/frames`.
pub fn run_monte_carlo(cfg: &ScenarioConfig, opts: &RunOptions, out: &Path) -> Result<RunSummary, RunError> {
    let unwritable = |source| RunError::Unwritable {
        path: out.to_path_buf(),
        source,
    };
    fs::create_dir_all(out).map_err(unwritable)?;
    let probe = out.join(".write-probe");
    fs::write(&probe, b"").map_err(unwritable)?;
    fs::remove_file(&probe).map_err(unwritable)?;
    let frame_dir = out.join("frames");
    if opts.dump_frames {
        fs::create_dir_all(&frame_dir).map_err(unwritable)?;
    }
    let summary = simulate_with_frames(cfg, opts, opts.dump_frames.then_some(frame_dir.as_path()))?;
    let write = |name: &str, r: std::io::Result<()>| {
        r.map_err(|source| RunError::Write {
            path: out.join(name),
            source,
        })
    };
    write("ospa.csv", output::write_ospa_csv(&out.join("ospa.csv"), &summary.aggregate))?;
    write(
        "cardinality.csv",
        output::write_cardinality_csv(&out.join("cardinality.csv"), &summary.aggregate),
    )?;
    write("tracks.csv", output::write_tracks_csv(&out.join("tracks.csv"), &summary.outcomes))?;
    write(
        "failures.csv",
        output::write_failures_csv(&out.join("failures.csv"), &summary.failures),
    )?;
    write("plots", output::plot_dir(out))?;
    Ok(summary)
}
