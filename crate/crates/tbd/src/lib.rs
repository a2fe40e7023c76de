//! Radar track-before-detect experiments on top of `glmb-core`: scenario
//! files, scripted truth, Monte Carlo runs, CSV/SVG output and the
//! oracle-backed self checks.

pub mod checks;
pub mod config;
pub mod montecarlo;
pub mod output;
pub mod presets;
pub mod trial;
pub mod truth;

pub use config::{load_config, parse_config, ConfigError, Mode, ScenarioConfig};
pub use montecarlo::{run_monte_carlo, simulate, RunOptions, RunSummary};
