//! Bundled scenario files.

use crate::config::{parse_config, ScenarioConfig};

pub const SEPARABLE: &str = include_str!("../presets/separable.cfg");
pub const NONSEPARABLE: &str = include_str!("../presets/nonseparable.cfg");
pub const DESK: &str = include_str!("../presets/desk.cfg");

fn load(text: &str) -> ScenarioConfig {
    parse_config(text).expect("bundled preset is valid")
}

/// Fine-resolution scenario with disjoint templates throughout.
pub fn separable() -> ScenarioConfig {
    load(SEPARABLE)
}

/// Coarse-resolution scenario with up to seven targets.
pub fn nonseparable() -> ScenarioConfig {
    load(NONSEPARABLE)
}

/// Three coarse-resolution targets at 10 dB, one cell-sharing crossing.
pub fn desk() -> ScenarioConfig {
    load(DESK)
}

pub fn by_name(name: &str) -> Option<ScenarioConfig> {
    match name {
        "separable" => Some(separable()),
        "nonseparable" => Some(nonseparable()),
        "desk" => Some(desk()),
        _ => None,
    }
}
