use glmb_tbd::montecarlo::{run_monte_carlo, simulate, RunOptions};
use glmb_tbd::{parse_config, presets, ConfigError, Mode};

fn small_desk() -> glmb_tbd::ScenarioConfig {
    let mut cfg = presets::desk();
    cfg.steps = 8;
    cfg.trials = 3;
    cfg.filter.n_p = 100;
    cfg
}

#[test]
fn csvs_are_byte_identical_across_threads() {
    let cfg = small_desk();
    let dir = tempfile::tempdir().unwrap();
    let mut opts = RunOptions::from_config(&cfg);
    for (name, threads) in [("a", 1), ("b", 3), ("c", 3)] {
        opts.threads = Some(threads);
        run_monte_carlo(&cfg, &opts, &dir.path().join(name)).unwrap();
    }
    for f in ["ospa.csv", "cardinality.csv", "tracks.csv", "failures.csv"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        assert_eq!(a, std::fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
        assert_eq!(a, std::fs::read(dir.path().join("c").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seed_changes_the_run() {
    let mut cfg = small_desk();
    let a = simulate(&cfg, &RunOptions::from_config(&cfg)).unwrap();
    cfg.seed += 1;
    let b = simulate(&cfg, &RunOptions::from_config(&cfg)).unwrap();
    assert_ne!(a.outcomes, b.outcomes);
}

#[test]
fn separable_mode_runs_on_the_separable_preset() {
    let mut cfg = presets::separable();
    cfg.steps = 6;
    cfg.filter.n_p = 100;
    let mut opts = RunOptions::from_config(&cfg);
    opts.trials = 2;
    assert_eq!(opts.mode, Mode::Separable);
    let s = simulate(&cfg, &opts).unwrap();
    assert!(s.failures.is_empty());
    assert_eq!(s.aggregate.len(), 6);
}

#[test]
fn config_errors_name_the_field() {
    let bad = |from: &str, to: &str| parse_config(&presets::DESK.replace(from, to)).unwrap_err();
    match bad("N_p = 500", "N_p = 0") {
        ConfigError::Invalid { field, .. } => assert!(field.contains("N_p"), "{field}"),
        e => panic!("{e}"),
    }
    match bad("P_S = 0.99", "P_S = 1.5") {
        ConfigError::Invalid { field, .. } => assert!(field.contains("P_S"), "{field}"),
        e => panic!("{e}"),
    }
    assert!(matches!(bad("[dynamics]", "[dynamics"), ConfigError::Parse(_)));
}
