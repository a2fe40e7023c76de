//! Scripted ground truth and the radar grid that covers it.

use glmb_core::sensor::{measurement, Axis, RadarGrid};
use glmb_core::{Kinematic, LabeledState};

use crate::config::ScenarioConfig;

/// Per-step truth sets plus any coverage warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub steps: Vec<Vec<LabeledState>>,
    pub warnings: Vec<String>,
}

impl Truth {
    pub fn cardinality(&self, k: usize) -> usize {
        self.steps[k].len()
    }
}

/// Noise-free drift of one script, `None` outside its life. The amplitude
/// stays at `Ā`.
fn trajectory(cfg: &ScenarioConfig, script: usize) -> Vec<Option<Kinematic>> {
    let s = &cfg.targets[script];
    let mut x = s.initial_state(cfg.sensor.a_bar());
    (0..cfg.steps)
        .map(|k| {
            if k < s.birth || k >= s.death {
                return None;
            }
            if k > s.birth {
                x = cfg.dynamics.drift(&x);
            }
            Some(x)
        })
        .collect()
}

/// Whether the nearest cell of `x` lies on the grid in every dimension.
pub fn in_coverage(grid: &RadarGrid, x: &Kinematic) -> bool {
    match measurement(x) {
        Ok([r, b, d]) => {
            grid.range.nearest(r).is_some() && grid.azimuth.nearest(b).is_some() && grid.doppler.nearest(d).is_some()
        }
        Err(_) => false,
    }
}

/// Grid with the configured resolutions whose extents either come from the
/// config or span every scripted state and birth mean. Each side is padded
/// by the configured fraction of the span, and never by less than a template
/// half-width plus one cell.
pub fn build_grid(cfg: &ScenarioConfig) -> RadarGrid {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    let mut add = |x: &Kinematic| {
        if let Ok(m) = measurement(x) {
            for k in 0..3 {
                lo[k] = lo[k].min(m[k]);
                hi[k] = hi[k].max(m[k]);
            }
        }
    };
    for i in 0..cfg.targets.len() {
        trajectory(cfg, i).iter().flatten().for_each(&mut add);
    }
    for b in &cfg.births {
        let [px, vx, py, vy] = b.mean;
        add(&[px, vx, py, vy, 0.0]);
    }
    let s = &cfg.sensor;
    let res = [s.range_res, s.azimuth_res, s.doppler_res];
    let fixed = [s.range, s.azimuth, s.doppler];
    let mut axes = Vec::with_capacity(3);
    for k in 0..3 {
        let (a, b) = match fixed[k] {
            Some([a, b]) => (a, b),
            None if lo[k].is_finite() => {
                let half = (2.0 * res[k] * (1.0 / s.eps_psf.max(f64::MIN_POSITIVE)).ln()).sqrt();
                let pad = (s.margin * (hi[k] - lo[k])).max(half + res[k]);
                (lo[k] - pad, hi[k] + pad)
            }
            None => (0.0, res[k]),
        };
        axes.push(Axis::covering(a, b, res[k]).expect("positive resolution"));
    }
    RadarGrid::new(axes[0], axes[1], axes[2], s.sigma_w_sq).expect("validated noise")
}

/// Truth sets for every step. A script whose drift leaves the grid ends at
/// the first uncovered step, with a warning.
pub fn generate_truth(cfg: &ScenarioConfig, grid: &RadarGrid) -> Truth {
    let mut steps = vec![Vec::new(); cfg.steps];
    let mut warnings = Vec::new();
    for (i, script) in cfg.targets.iter().enumerate() {
        for (k, x) in trajectory(cfg, i).into_iter().enumerate() {
            let Some(x) = x else { continue };
            if !in_coverage(grid, &x) {
                warnings.push(format!(
                    "target {} leaves grid coverage at step {k}; life truncated",
                    script.label
                ));
                break;
            }
            steps[k].push(LabeledState::new(x, script.label));
        }
    }
    for set in &mut steps {
        set.sort_by_key(|s| s.label);
    }
    Truth { steps, warnings }
}
