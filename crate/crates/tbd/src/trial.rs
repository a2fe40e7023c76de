//! One simulated run: truth, frames, filter recursion and per-step metrics.

use glmb_core::filter::{
    extract_tracks, generic_update_with, gaussian_cloud, predict, separable_update_path, BirthModel, FilterState,
    SurvivalModel, TrackEstimate,
};
use glmb_core::metrics::{ospa, OspaParams, StepMetrics};
use glmb_core::rng::{derive_seed, purpose, stream};
use glmb_core::sensor::{Amplitude, synthesize_frame, DynamicsParams, RadarFrame, RadarGrid, RadarLikelihood};
use glmb_core::{Label, LabeledState};

use crate::config::{Mode, ScenarioConfig};
use crate::truth::{in_coverage, Truth};

/// Frame summary kept for every step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameStats {
    pub mean_power: f64,
    pub max_power: f64,
    pub out_of_coverage: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub tracks: Vec<TrackEstimate>,
    pub truth: Vec<LabeledState>,
    pub frame: FrameStats,
    pub metrics: StepMetrics,
    pub components: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    pub steps: Vec<StepRecord>,
}

/// A trial stopped by a filter error.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialFailure {
    pub trial: usize,
    pub step: usize,
    pub message: String,
}

/// What the trial loop needs, built once per run.
pub struct Scenario<'a> {
    pub cfg: &'a ScenarioConfig,
    pub grid: &'a RadarGrid,
    pub truth: &'a Truth,
    pub mode: Mode,
    pub ospa: OspaParams,
}

/// Seed of trial `i` derived from the base seed.
pub fn trial_seed(base: u64, trial: usize) -> u64 {
    derive_seed(base, &[purpose::TRIAL, trial as u64])
}

/// Frame `k` is processed at filter time `k + 1`; labels born while
/// processing it are `(k + 1, index)`.
pub fn filter_time(step: usize) -> u32 {
    step as u32 + 1
}

pub fn frame_for_step(sc: &Scenario<'_>, seed: u64, k: usize) -> glmb_core::Result<(RadarFrame, usize)> {
    let mut rng = stream(seed, &[purpose::FRAME, k as u64]);
    let f = synthesize_frame(&sc.truth.steps[k], sc.grid, sc.cfg.sensor.eps_psf, &mut rng)?;
    Ok((f.frame, f.out_of_coverage))
}

pub fn birth_model(cfg: &ScenarioConfig, seed: u64, time: u32) -> glmb_core::Result<BirthModel> {
    let mut model = BirthModel::new();
    let a_bar = cfg.sensor.a_bar();
    for b in &cfg.births {
        let label = Label::new(time, b.index);
        let [px, vx, py, vy] = b.mean;
        let sd = b.cov_diag.map(f64::sqrt);
        let mut rng = stream(seed, &[purpose::BIRTH, time as u64, b.index as u64]);
        let cloud = gaussian_cloud(
            &[px, vx, py, vy, a_bar],
            &[sd[0], sd[1], sd[2], sd[3], cfg.filter.zeta_sd],
            cfg.filter.n_p,
            &mut rng,
        );
        model.insert(label, b.r_b, cloud.into())?;
    }
    Ok(model)
}

/// Constant `P_S` inside the grid coverage and zero outside it, where the
/// frame carries no evidence either way.
pub fn survival_model(cfg: &ScenarioConfig, grid: &RadarGrid) -> SurvivalModel<DynamicsParams> {
    let p_s = cfg.filter.p_s;
    let grid = *grid;
    SurvivalModel::new(move |x, _| if in_coverage(&grid, x) { p_s } else { 0.0 }, cfg.dynamics)
}

pub fn radar_likelihood<'a>(cfg: &ScenarioConfig, frame: &'a RadarFrame, grid: &'a RadarGrid) -> RadarLikelihood<'a> {
    let amplitude = if cfg.filter.state_amplitude {
        Amplitude::State
    } else {
        Amplitude::Mean(cfg.sensor.a_bar())
    };
    RadarLikelihood::new(frame, grid, cfg.sensor.eps_psf, amplitude)
}

/// Runs predict and update for frame `k`.
pub fn filter_step(
    sc: &Scenario<'_>,
    state: &FilterState,
    survival: &SurvivalModel<DynamicsParams>,
    frame: &RadarFrame,
    k: usize,
) -> glmb_core::Result<FilterState> {
    let cfg = sc.cfg;
    let births = birth_model(cfg, state.seed, filter_time(k))?;
    let predicted = predict(state, survival, &births, &cfg.filter.truncation)?;
    let lik = radar_likelihood(cfg, frame, sc.grid);
    match sc.mode {
        Mode::Generic => generic_update_with(&predicted, &lik, &cfg.filter.truncation, cfg.filter.coupling),
        Mode::Separable => separable_update_path(&predicted, &lik, &cfg.filter.truncation),
    }
}

fn frame_stats(frame: &RadarFrame, out_of_coverage: usize) -> FrameStats {
    let p = frame.powers();
    FrameStats {
        mean_power: p.iter().sum::<f64>() / p.len() as f64,
        max_power: p.iter().cloned().fold(0.0, f64::max),
        out_of_coverage,
    }
}

/// Receives each frame of a trial with its step index.
pub type FrameSink<'a> = &'a mut dyn FnMut(usize, &RadarFrame);

/// Runs every step of one trial; deterministic in `(cfg, seed)`. Frames go
/// to `on_frame` when one is given.
pub fn run_trial(
    sc: &Scenario<'_>,
    trial: usize,
    mut on_frame: Option<FrameSink<'_>>,
) -> Result<TrialOutcome, TrialFailure> {
    let seed = trial_seed(sc.cfg.seed, trial);
    let survival = survival_model(sc.cfg, sc.grid);
    let mut state = FilterState::new(seed);
    let mut steps = Vec::with_capacity(sc.cfg.steps);
    let fail = |step: usize, e: glmb_core::Error| TrialFailure {
        trial,
        step,
        message: e.to_string(),
    };
    for k in 0..sc.cfg.steps {
        let (frame, out) = frame_for_step(sc, seed, k).map_err(|e| fail(k, e))?;
        if let Some(f) = on_frame.as_mut() {
            f(k, &frame);
        }
        state = filter_step(sc, &state, &survival, &frame, k).map_err(|e| fail(k, e))?;
        let tracks = extract_tracks(&state);
        let truth = sc.truth.steps[k].clone();
        let est: Vec<[f64; 2]> = tracks.iter().map(|t| [t.kinematic_mean[0], t.kinematic_mean[2]]).collect();
        let tru: Vec<[f64; 2]> = truth.iter().map(|t| t.position()).collect();
        steps.push(StepRecord {
            metrics: StepMetrics {
                ospa: ospa(&est, &tru, &sc.ospa),
                est_card: tracks.len() as f64,
                true_card: truth.len() as f64,
            },
            tracks,
            truth,
            frame: frame_stats(&frame, out),
            components: state.density.len(),
        });
    }
    Ok(TrialOutcome { trial, seed, steps })
}
