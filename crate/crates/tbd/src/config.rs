//! Scenario configuration files (TOML).
//!
//! Keys follow the usual symbols: `T_s`, `q`, `a_zeta`, `R`, `B_deg`, `D`,
//! `SNR_dB`, `N_p`, `P_S`, `x_B`, `Q_B`, `P_B`. Bearings are written in
//! degrees and converted to radians on load.

use std::fmt;
use std::path::Path;

use glmb_core::filter::{Coupling, Truncation};
use glmb_core::sensor::{amplitude_from_snr, DynamicsParams};
use glmb_core::{Kinematic, Label};
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.to_string(),
    }
}

/// Which update the filter runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Separable,
    Generic,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "separable" => Ok(Mode::Separable),
            "generic" => Ok(Mode::Generic),
            _ => Err(format!("unknown mode `{s}`, expected separable or generic")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Separable => "separable",
            Mode::Generic => "generic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawCoupling {
    #[default]
    Clustered,
    Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawAmplitude {
    #[default]
    Mean,
    State,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: String,
    mode: Mode,
    steps: usize,
    dynamics: RawDynamics,
    sensor: RawSensor,
    filter: RawFilter,
    #[serde(default)]
    birth: Vec<RawBirth>,
    #[serde(default)]
    target: Vec<RawTarget>,
    mc: RawMc,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDynamics {
    #[serde(rename = "T_s")]
    t_s: f64,
    q: f64,
    a_zeta: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSensor {
    #[serde(rename = "R")]
    r: f64,
    #[serde(rename = "B_deg")]
    b_deg: f64,
    #[serde(rename = "D")]
    d: f64,
    sigma_w_sq: f64,
    #[serde(rename = "SNR_dB")]
    snr_db: f64,
    #[serde(default = "default_eps")]
    eps_psf: f64,
    #[serde(default = "default_margin")]
    margin: f64,
    range: Option<[f64; 2]>,
    azimuth_deg: Option<[f64; 2]>,
    doppler: Option<[f64; 2]>,
}

fn default_eps() -> f64 {
    glmb_core::sensor::DEFAULT_PSF_THRESHOLD
}

fn default_margin() -> f64 {
    0.2
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFilter {
    #[serde(rename = "N_p")]
    n_p: usize,
    #[serde(rename = "P_S")]
    p_s: f64,
    #[serde(default = "default_max_components")]
    max_components: usize,
    #[serde(default = "default_min_weight")]
    min_weight: f64,
    zeta_sd: f64,
    #[serde(default)]
    coupling: RawCoupling,
    #[serde(default)]
    likelihood_amplitude: RawAmplitude,
}

fn default_max_components() -> usize {
    Truncation::default().max_components
}

fn default_min_weight() -> f64 {
    Truncation::default().min_weight
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBirth {
    index: Option<u32>,
    #[serde(rename = "x_B")]
    x_b: [f64; 4],
    #[serde(rename = "Q_B")]
    q_b: [f64; 4],
    #[serde(rename = "P_B")]
    p_b: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTarget {
    birth: usize,
    death: usize,
    x0: [f64; 4],
    label: Option<[u32; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMc {
    trials: usize,
    seed: u64,
}

/// Cell sizes, noise, SNR and optional fixed extents.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorConfig {
    pub range_res: f64,
    /// Radians.
    pub azimuth_res: f64,
    pub doppler_res: f64,
    pub sigma_w_sq: f64,
    pub snr_db: f64,
    pub eps_psf: f64,
    /// Extra coverage on each side, as a fraction of the truth span.
    pub margin: f64,
    pub range: Option<[f64; 2]>,
    /// Radians.
    pub azimuth: Option<[f64; 2]>,
    pub doppler: Option<[f64; 2]>,
}

impl SensorConfig {
    /// Mean echo modulus `Ā`.
    pub fn a_bar(&self) -> f64 {
        amplitude_from_snr(self.snr_db, self.sigma_w_sq)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    pub n_p: usize,
    pub p_s: f64,
    pub truncation: Truncation,
    /// Standard deviation of the birth amplitude around `Ā`.
    pub zeta_sd: f64,
    pub coupling: Coupling,
    /// `true`: the likelihood uses each particle's `ζ`; `false`: `Ā`.
    pub state_amplitude: bool,
}

/// One LMB birth point: label `(k, index)` is born at every step `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BirthPoint {
    pub index: u32,
    /// `[p_x, ṗ_x, p_y, ṗ_y]`.
    pub mean: [f64; 4],
    /// Diagonal of `Q_B`.
    pub cov_diag: [f64; 4],
    pub r_b: f64,
}

/// A scripted truth target alive on `[birth, death)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetScript {
    pub birth: usize,
    pub death: usize,
    pub initial: [f64; 4],
    pub label: Label,
}

impl TargetScript {
    pub fn initial_state(&self, a_bar: f64) -> Kinematic {
        let [px, vx, py, vy] = self.initial;
        [px, vx, py, vy, a_bar]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub mode: Mode,
    pub steps: usize,
    pub dynamics: DynamicsParams,
    pub sensor: SensorConfig,
    pub filter: FilterConfig,
    pub births: Vec<BirthPoint>,
    pub targets: Vec<TargetScript>,
    pub trials: usize,
    pub seed: u64,
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    validate(raw)
}

fn positive(field: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(field, format!("must be positive, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<f64, ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(field, format!("must be non-negative, got {v}")))
    }
}

fn probability(field: &str, v: f64) -> Result<f64, ConfigError> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(invalid(field, format!("must lie in [0, 1], got {v}")))
    }
}

fn interval(field: &str, v: Option<[f64; 2]>, scale: f64) -> Result<Option<[f64; 2]>, ConfigError> {
    match v {
        Some([lo, hi]) if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) => Err(invalid(field, format!("needs lo < hi, got [{lo}, {hi}]"))),
        Some([lo, hi]) => Ok(Some([lo * scale, hi * scale])),
        None => Ok(None),
    }
}

fn validate(raw: RawConfig) -> Result<ScenarioConfig, ConfigError> {
    if raw.steps == 0 {
        return Err(invalid("steps", "must be at least 1"));
    }
    let d = &raw.dynamics;
    let dynamics = DynamicsParams::new(
        positive("dynamics.T_s", d.t_s)?,
        non_negative("dynamics.q", d.q)?,
        non_negative("dynamics.a_zeta", d.a_zeta)?,
    )
    .map_err(|e| invalid("dynamics", e))?;
    let s = &raw.sensor;
    let deg = std::f64::consts::PI / 180.0;
    let sensor = SensorConfig {
        range_res: positive("sensor.R", s.r)?,
        azimuth_res: positive("sensor.B_deg", s.b_deg)? * deg,
        doppler_res: positive("sensor.D", s.d)?,
        sigma_w_sq: positive("sensor.sigma_w_sq", s.sigma_w_sq)?,
        snr_db: if s.snr_db.is_finite() {
            s.snr_db
        } else {
            return Err(invalid("sensor.SNR_dB", "must be finite"));
        },
        eps_psf: if s.eps_psf > 0.0 && s.eps_psf <= 1.0 {
            s.eps_psf
        } else {
            return Err(invalid("sensor.eps_psf", format!("must lie in (0, 1], got {}", s.eps_psf)));
        },
        margin: non_negative("sensor.margin", s.margin)?,
        range: interval("sensor.range", s.range, 1.0)?,
        azimuth: interval("sensor.azimuth_deg", s.azimuth_deg, deg)?,
        doppler: interval("sensor.doppler", s.doppler, 1.0)?,
    };
    let f = &raw.filter;
    if f.n_p == 0 {
        return Err(invalid("filter.N_p", "must be at least 1"));
    }
    if f.max_components == 0 {
        return Err(invalid("filter.max_components", "must be at least 1"));
    }
    let filter = FilterConfig {
        n_p: f.n_p,
        p_s: probability("filter.P_S", f.p_s)?,
        truncation: Truncation {
            max_components: f.max_components,
            min_weight: probability("filter.min_weight", f.min_weight)?,
        },
        zeta_sd: non_negative("filter.zeta_sd", f.zeta_sd)?,
        coupling: match f.coupling {
            RawCoupling::Clustered => Coupling::Clustered,
            RawCoupling::Common => Coupling::Common,
        },
        state_amplitude: f.likelihood_amplitude == RawAmplitude::State,
    };
    let mut births = Vec::with_capacity(raw.birth.len());
    for (i, b) in raw.birth.iter().enumerate() {
        let field = |name: &str| format!("birth[{i}].{name}");
        for (k, v) in b.q_b.iter().enumerate() {
            non_negative(&format!("birth[{i}].Q_B[{k}]"), *v)?;
        }
        if b.x_b.iter().any(|v| !v.is_finite()) {
            return Err(invalid(field("x_B"), "must be finite"));
        }
        let index = b.index.unwrap_or(i as u32);
        if births.iter().any(|p: &BirthPoint| p.index == index) {
            return Err(invalid(field("index"), format!("duplicate birth index {index}")));
        }
        births.push(BirthPoint {
            index,
            mean: b.x_b,
            cov_diag: b.q_b,
            r_b: probability(&field("P_B"), b.p_b)?,
        });
    }
    let mut targets = Vec::with_capacity(raw.target.len());
    for (i, t) in raw.target.iter().enumerate() {
        if t.x0.iter().any(|v| !v.is_finite()) {
            return Err(invalid(format!("target[{i}].x0"), "must be finite"));
        }
        let label = match t.label {
            Some([b, idx]) => Label::new(b, idx),
            None => Label::new(t.birth as u32, i as u32),
        };
        if targets.iter().any(|s: &TargetScript| s.label == label) {
            return Err(invalid(format!("target[{i}].label"), format!("duplicate label {label:?}")));
        }
        targets.push(TargetScript {
            birth: t.birth,
            death: t.death,
            initial: t.x0,
            label,
        });
    }
    if raw.mc.trials == 0 {
        return Err(invalid("mc.trials", "must be at least 1"));
    }
    Ok(ScenarioConfig {
        name: raw.name,
        mode: raw.mode,
        steps: raw.steps,
        dynamics,
        sensor,
        filter,
        births,
        targets,
        trials: raw.mc.trials,
        seed: raw.mc.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> String {
        r#"
name = "t"
mode = "generic"
steps = 5
[dynamics]
T_s = 1.0
q = 3.0
a_zeta = 1.0
[sensor]
R = 20.0
B_deg = 2.0
D = 2.0
sigma_w_sq = 1.0
SNR_dB = 7.0
[filter]
N_p = 10
P_S = 0.99
zeta_sd = 1.0
[[birth]]
x_B = [1250.0, -10.0, 1000.0, -10.0]
Q_B = [400.0, 100.0, 400.0, 100.0]
P_B = 0.01
[mc]
trials = 1
seed = 3
"#
        .to_string()
    }

    #[test]
    fn parses_and_converts_degrees() {
        let c = parse_config(&minimal()).unwrap();
        assert!((c.sensor.azimuth_res - 2.0f64.to_radians()).abs() < 1e-15);
        assert_eq!(c.filter.truncation, Truncation::default());
        assert_eq!(c.filter.coupling, Coupling::Clustered);
        assert_eq!(c.births[0].index, 0);
        assert_eq!(c.sensor.eps_psf, 1e-2);
    }

    #[test]
    fn rejects_bad_probability_naming_the_field() {
        let text = minimal().replace("P_S = 0.99", "P_S = 1.5");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("filter.P_S"), "{err}");
    }

    #[test]
    fn rejects_non_positive_resolution_and_bad_birth() {
        let err = parse_config(&minimal().replace("R = 20.0", "R = 0.0")).unwrap_err().to_string();
        assert!(err.contains("sensor.R"), "{err}");
        let err = parse_config(&minimal().replace("P_B = 0.01", "P_B = 2.0")).unwrap_err().to_string();
        assert!(err.contains("birth[0].P_B"), "{err}");
    }

    #[test]
    fn missing_field_is_reported() {
        let err = parse_config(&minimal().replace("q = 3.0\n", "")).unwrap_err().to_string();
        assert!(err.contains("missing field `q`"), "{err}");
    }
}
