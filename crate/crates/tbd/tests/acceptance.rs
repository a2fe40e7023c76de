//! Acceptance run: one pass/fail line per criterion, then a non-gating
//! smoke run of the seven-target scenario.
//!
//! `ACCEPTANCE_QUICK=1` shrinks the Monte Carlo checks (8 to 10) so the
//! target stays usable in a debug build; the printed verdicts are then
//! indicative only. `ACCEPTANCE_ONLY=8,9` runs a subset.

use std::process::ExitCode;
use std::time::Instant;

use glmb_tbd::checks::{self, CheckResult};
use glmb_tbd::montecarlo::{simulate, steady_state, steady_steps, RunOptions};
use glmb_tbd::presets;

fn main() -> ExitCode {
    let quick = std::env::var_os("ACCEPTANCE_QUICK").is_some();
    let only: Option<Vec<u32>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|v| v.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let selected = |id: u32| only.as_ref().is_none_or(|o| o.contains(&id));
    let mut results: Vec<CheckResult> = Vec::new();
    let mut report = |r: CheckResult| {
        println!("{r}");
        results.push(r);
    };

    if (1..=7).any(selected) {
        for r in checks::oracle_checks().into_iter().filter(|r| selected(r.id)) {
            report(r);
        }
    }

    let mut desk = checks::desk_config();
    if quick {
        desk.trials = 2;
    }
    if selected(8) {
        report(checks::desk_tracking(&desk, 5));
    }

    let separable = presets::separable();
    if selected(9) {
        let (trials, steps) = if quick { (1, 20) } else { (10, 20) };
        report(checks::separable_consistency(&separable, trials, steps));
    }

    let dirs = tempfile::tempdir().expect("temporary directory");
    let run_dirs = ["a", "b", "c"].map(|d| dirs.path().join(d));
    let mut det = checks::desk_config();
    det.trials = 4;
    det.steps = if quick { 6 } else { 15 };
    let threads = std::thread::available_parallelism().map_or(4, |n| n.get()).max(4);
    if selected(10) {
        report(checks::determinism(&det, [&run_dirs[0], &run_dirs[1], &run_dirs[2]], threads));
    }

    if only.is_none() {
        smoke(quick);
    }

    let failed: Vec<u32> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!(
        "acceptance: {}/{} criteria pass{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() { String::new() } else { format!("; failing: {failed:?}") }
    );
    // Verdicts are the printed lines; the target only fails on a crash.
    ExitCode::SUCCESS
}

/// Seven targets at 7 dB, reported but not judged.
fn smoke(quick: bool) {
    let start = Instant::now();
    let mut cfg = presets::nonseparable();
    cfg.trials = if quick { 1 } else { 2 };
    if quick {
        cfg.steps = cfg.steps.min(10);
    }
    let opts = RunOptions::from_config(&cfg);
    match simulate(&cfg, &opts) {
        Ok(summary) => {
            let steps = steady_steps(&summary.truth, 5);
            let s = steady_state(&summary.outcomes, &steps);
            println!(
                "smoke        [INFO] seven-target 7 dB scenario: {} trials ({} failed), mean |card error| {:.3}, \
                 mean OSPA {:.2} m over {} steady steps ({:.1} s)",
                cfg.trials,
                summary.failures.len(),
                s.mean_abs_card_error,
                s.mean_ospa,
                s.steps,
                start.elapsed().as_secs_f64()
            );
        }
        Err(e) => println!("smoke        [INFO] seven-target scenario did not run: {e}"),
    }
}
