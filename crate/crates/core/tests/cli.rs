use std::process::Command;

fn patchleak(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_patchleak")).args(args).output().unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(patchleak(&["--help"]).status.code(), Some(0));
    assert_eq!(patchleak(&["--version"]).status.code(), Some(0));
    assert_eq!(patchleak(&[]).status.code(), Some(2));
    assert_eq!(patchleak(&["simulate", "--ranker", "psychic"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing");
    let out = dir.path().join("rank.csv");
    let r = patchleak(&["features", "rank", "--corpus", missing.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("missing"));
}

#[test]
fn bad_synth_config_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"days": 10, "dayz": 3}"#).unwrap();
    let r = patchleak(&["synth", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("c").to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("cfg.json"));
}

#[test]
fn synth_then_linkattack_writes_one_row_per_day() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"days": 40, "daily_rate": 10.0}"#).unwrap();
    assert!(patchleak(&["synth", "--config", cfg.to_str().unwrap(), "--out", corpus.to_str().unwrap()])
        .status
        .success());
    let csv = dir.path().join("link.csv");
    let r =
        patchleak(&["linkattack", "--corpus", corpus.to_str().unwrap(), "--k", "1", "--out", csv.to_str().unwrap()]);
    assert!(r.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("day,found_count,first_found_patch_id,window_contribution_days"));
    assert_eq!(lines.count(), 40);
}
