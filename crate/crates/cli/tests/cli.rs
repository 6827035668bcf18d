use std::fs;
use std::process::Command;

fn homlab() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_homlab"));
    cmd.env("RUST_LOG", "warn");
    cmd
}

#[test]
fn analytic_run_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a6");
    let status = homlab().args(["example6-analytic", "--out"]).arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("eps,c_eps,"));
    assert!(header.ends_with(",config_hash"));
    assert_eq!(csv.lines().count(), 5);
    for name in ["report.json", "meta.txt", "config.toml"] {
        assert!(out.join(name).exists(), "{name}");
    }
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mms.toml");
    fs::write(&cfg, "experiment = \"mms\"\nlevels = [8, 16, 32]\n").unwrap();
    let out = dir.path().join("mms");
    let status = homlab().args(["mms", "--tol", "0.25", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let echoed = fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(echoed.contains("levels = [8, 16, 32]"), "{echoed}");
    assert!(echoed.contains("tol = 0.25"), "{echoed}");
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "experiment = \"mms\"\nunknown_key = 1\n").unwrap();
    let status = homlab().args(["mms", "--config"]).arg(&cfg).status().unwrap();
    assert_eq!(status.code(), Some(2));

    let status = homlab().args(["strange-term", "--eps", "0.25,0.5", "--out"]).arg(dir.path()).status().unwrap();
    assert_eq!(status.code(), Some(2));

    // holes of radius 1/8^3 are not resolved on a 32^3 grid
    let status = homlab().args(["strange-term", "--eps", "0.125", "--grid", "32", "--out"]).arg(dir.path()).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn failed_check_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("neg.toml");
    fs::write(&cfg, "experiment = \"mms\"\nlevels = [8, 16]\nnegative_control = true\n").unwrap();
    let status = homlab().args(["mms", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("o")).status().unwrap();
    assert_eq!(status.code(), Some(1));
}
