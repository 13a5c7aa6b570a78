use std::process::Command;

fn lab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rlsvi-lab"))
}

#[test]
fn writes_csv_summary_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("chain.csv");
    let status = lab()
        .args(["chain-coherent", "--N", "4", "--K", "3", "--runs", "2", "--episodes", "5", "--sigma2", "0.01"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 11);
    assert!(dir.path().join("chain.summary.csv").exists());
    let manifest = std::fs::read_to_string(dir.path().join("chain.manifest.json")).unwrap();
    assert!(manifest.contains("\"sigma\": 0.1"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"num_states": 4, "num_features": 3, "runs": 3, "episodes": 4}"#).unwrap();
    let out = dir.path().join("c.csv");
    let status = lab()
        .args(["chain-coherent", "--runs", "1", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 5);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    for args in [
        vec!["chain-coherent", "--N", "5", "--H", "4"],
        vec!["no-such-study"],
        vec!["chain-coherent", "--runs", "0"],
        vec!["recommendation", "--algo", "lsvi-epsilon-greedy"],
    ] {
        let status = lab().args(&args).arg("--out").arg(&out).status().unwrap();
        assert_eq!(status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn unwritable_output_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let status = lab()
        .args(["chain-coherent", "--N", "3", "--K", "2", "--runs", "1", "--episodes", "2", "--out"])
        .arg(blocker.join("out.csv"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
