use std::path::Path;
use std::process::{Command, Output};

fn gendisc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gendisc")).args(args).env("RUST_LOG", "error").output().unwrap()
}

fn error_json(out: &Output) -> serde_json::Value {
    let line = String::from_utf8_lossy(&out.stderr);
    let last = line.lines().last().expect("an error line on stderr");
    serde_json::from_str(last).expect("machine-readable error")
}

fn synth(dir: &Path) -> String {
    let out = gendisc(&["synth", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success());
    dir.join("gendisc.toml").to_string_lossy().into_owned()
}

#[test]
fn dweat_without_word_lists_reports_the_missing_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth(dir.path());
    let out = gendisc(&["-c", &cfg, "dweat"]);
    assert!(!out.status.success());
    let err = error_json(&out);
    assert_eq!(err["error"], "missing_artifact");
    assert!(err["missing"].as_str().unwrap().ends_with("word_lists.json"));
}

#[test]
fn stage_order_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth(dir.path());
    let out = gendisc(&["-c", &cfg, "correlate"]);
    assert!(!out.status.success());
    assert!(error_json(&out)["missing"].as_str().unwrap().ends_with("corpus.filtered.jsonl"));
    assert!(gendisc(&["-c", &cfg, "ingest"]).status.success());
    let out = gendisc(&["-c", &cfg, "correlate"]);
    assert!(error_json(&out)["missing"].as_str().unwrap().ends_with("topic_model.json"));
}

#[test]
fn explicit_word_list_file_unblocks_dweat_and_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth(dir.path());
    let lists = dir.path().join("lists.json");
    std::fs::write(&lists, serde_json::to_string(&gendisc::dweat::WordLists::published()).unwrap()).unwrap();
    let other_out = dir.path().join("elsewhere");
    let common = ["-c", &cfg, "--output-dir", other_out.to_str().unwrap()];
    assert!(gendisc(&[&common[..], &["ingest"]].concat()).status.success());
    let out = gendisc(
        &[&common[..], &["--word-lists", lists.to_str().unwrap(), "--taus", "20", "--gammas", "1,2", "--dweat-seeds", "0", "--repeats", "1", "dweat"]]
            .concat(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: gendisc::dweat::DweatReport =
        serde_json::from_slice(&std::fs::read(other_out.join("dweat_report.json")).unwrap()).unwrap();
    assert_eq!(report.config.taus, vec![20.0]);
    assert_eq!(report.cells.len(), 4);
    assert!(!dir.path().join("out").exists());
    let snapshot = std::fs::read_to_string(other_out.join("run_config.toml")).unwrap();
    assert!(snapshot.contains("repeats = 1"));
}

#[test]
fn invalid_config_is_rejected_before_work() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[paths]\ncorpus = \"c.jsonl\"\n[correlate]\nalpha0 = 2.0\n").unwrap();
    let out = gendisc(&["-c", cfg.to_str().unwrap(), "ingest"]);
    assert!(!out.status.success());
    assert_eq!(error_json(&out)["error"], "config");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn bundled_synthetic_data_matches_the_generator() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let bundled = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic");
    for name in ["corpus.jsonl", "vectors.txt", "gendisc.toml"] {
        let fresh = std::fs::read(dir.path().join(name)).unwrap();
        assert!(fresh == std::fs::read(bundled.join(name)).unwrap(), "{name} is stale; regenerate with `gendisc synth`");
    }
}
