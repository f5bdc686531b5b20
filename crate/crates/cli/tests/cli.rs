use std::path::Path;
use std::process::{Command, Output};

fn clozeclass(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clozeclass"))
        .current_dir(dir)
        .env_remove("CLOZECLASS_ENDPOINT")
        .args(args)
        .output()
        .unwrap()
}

fn synth(dir: &Path) {
    let out = clozeclass(
        dir,
        &["synth", "--out", "ws", "--train-docs", "60", "--test-docs", "30"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn filter_before_pseudo_names_the_missing_stage() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let cfg = ["--config", "ws/config.toml", "--offline"];
    for stage in ["signals", "embed"] {
        let out = clozeclass(dir.path(), &[&cfg[..], &[stage]].concat());
        assert!(out.status.success());
    }
    let out = clozeclass(dir.path(), &[&cfg[..], &["filter"]].concat());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("pseudo"), "{err}");
}

#[test]
fn rerun_with_unchanged_inputs_is_skipped() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let args = ["--config", "ws/config.toml", "--offline", "signals"];
    assert!(clozeclass(dir.path(), &args).status.success());
    let again = clozeclass(dir.path(), &args);
    assert!(again.status.success());
    assert_eq!(String::from_utf8_lossy(&again.stdout).trim(), "signals: up to date");
    let forced = clozeclass(dir.path(), &[&args[..], &["--force"]].concat());
    assert_eq!(String::from_utf8_lossy(&forced.stdout).trim(), "signals: done");
}

#[test]
fn cached_responses_need_no_service() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    for stage in ["signals", "embed"] {
        let out = Command::new(env!("CARGO_BIN_EXE_clozeclass"))
            .current_dir(dir.path())
            .env("CLOZECLASS_ENDPOINT", "http://127.0.0.1:9")
            .args(["--config", "ws/config.toml", "--seed", "3", stage])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn unreachable_service_exits_with_transport_code() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let cfg = dir.path().join("ws/config.toml");
    let text = std::fs::read_to_string(&cfg).unwrap();
    assert!(text.contains("k = 20"));
    std::fs::write(&cfg, text.replace("k = 20", "k = 7")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_clozeclass"))
        .current_dir(dir.path())
        .env("CLOZECLASS_ENDPOINT", "http://127.0.0.1:9")
        .args(["--config", "ws/config.toml", "signals"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_config_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("config.toml"), "[paths]\nschema = 1\n").unwrap();
    let out = clozeclass(dir.path(), &["signals"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_aggregates_run_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("runs.jsonl"),
        "{\"micro_f1\":0.8826,\"macro_f1\":0.8822}\n{\"micro_f1\":0.8826,\"macro_f1\":0.8822}\n",
    )
    .unwrap();
    let out = clozeclass(dir.path(), &["report", "--name", "agnews", "runs.jsonl"]);
    assert!(out.status.success());
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("0.8826") && table.contains("0.0000"), "{table}");
}
