use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_glmb-tbd"))
}

fn write_config(dir: &std::path::Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("s.cfg");
    std::fs::write(&p, text).unwrap();
    p
}

fn short_desk() -> String {
    glmb_tbd::presets::DESK.replace("steps = 40", "steps = 3").replace("N_p = 500", "N_p = 50")
}

#[test]
fn run_writes_outputs_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &short_desk());
    let out = dir.path().join("out");
    let st = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--trials", "2", "--dump-frames", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    for f in ["ospa.csv", "cardinality.csv", "tracks.csv", "failures.csv", "frames/frame_0000.bin"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let ospa = std::fs::read_to_string(out.join("ospa.csv")).unwrap();
    assert!(ospa.starts_with("time,mean_ospa,se_ospa\n"));
    assert_eq!(ospa.lines().count(), 4);
    let frame = glmb_tbd::output::read_frame_bin(&out.join("frames/frame_0000.bin")).unwrap();
    assert!(frame.powers().iter().all(|p| *p >= 0.0));

    let replot = bin().args(["plot", "--in"]).arg(&out).output().unwrap();
    assert!(replot.status.success());
}

#[test]
fn bad_config_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &short_desk().replace("SNR_dB = 10.0", "SNR_dB = \"loud\""));
    let st = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(st.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&st.stderr).starts_with("error:"));

    let missing = bin().args(["run", "--config", "/nonexistent/x.cfg"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn zero_trials_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &short_desk());
    let st = bin().args(["run", "--trials", "0", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(st.status.code(), Some(1));
}

#[test]
fn unwritable_output_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &short_desk());
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let st = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(blocker.join("sub")).output().unwrap();
    assert_eq!(st.status.code(), Some(1));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let st = bin().arg("frobnicate").output().unwrap();
    assert_eq!(st.status.code(), Some(2));
}
