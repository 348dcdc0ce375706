use std::process::Command;

fn gegraph() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gegraph"))
}

const FAST: [&str; 6] = ["--epochs", "1", "--walks-per-node", "4", "--iterations", "100"];

#[test]
fn layout_writes_json_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("layout.json");
    let svg = dir.path().join("layout.svg");
    let status = gegraph()
        .args(["layout", "--dataset", "lesmis", "--out"])
        .arg(&out)
        .arg("--svg")
        .arg(&svg)
        .args(FAST)
        .status()
        .unwrap();
    assert!(status.success());
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["nodes"].as_array().unwrap().len(), 77);
    assert_eq!(doc["params"]["epochs"], 1);
    assert_eq!(std::fs::read_to_string(&svg).unwrap().matches("<circle").count(), 77);
}

#[test]
fn baseline_is_flagged() {
    let out = gegraph()
        .args(["layout", "--w", "1", "--t-ein", "0", "--t-eout", "0"])
        .args(FAST)
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["params"]["baseline"], true);
    assert_eq!(doc["params"]["method"], "fr");
}

#[test]
fn metrics_rows_and_failures() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    let bad = dir.path().join("bad.json");
    assert!(gegraph().args(["layout", "--out"]).arg(&good).args(FAST).status().unwrap().success());
    std::fs::write(&bad, "{ not json").unwrap();

    let empty = gegraph().arg("metrics").output().unwrap();
    assert!(empty.status.success());
    assert_eq!(String::from_utf8(empty.stdout).unwrap().lines().count(), 1);

    let two = gegraph().arg("metrics").arg(&good).arg(&good).output().unwrap();
    assert!(two.status.success());
    let text = String::from_utf8(two.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "dataset,method,N_sp,N_oc,E_c,E_c_outside,M_a,M_l,G_o,H,C");
    assert!(lines[1].starts_with("lesmis,gegraph,"));

    let mixed = gegraph().arg("metrics").arg(&good).arg(&bad).output().unwrap();
    assert!(!mixed.status.success());
    assert_eq!(String::from_utf8(mixed.stdout).unwrap().lines().count(), 2);
    assert!(String::from_utf8(mixed.stderr).unwrap().contains("bad.json"));
}

#[test]
fn stage_errors_exit_nonzero() {
    let out = gegraph().args(["layout", "--dataset", "no-such-dataset"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("no-such-dataset"));
    let out = gegraph().args(["layout", "--w", "2"]).args(FAST).output().unwrap();
    assert!(!out.status.success());
    let out = gegraph().args(["aggregate", "--expand", "999"]).args(FAST).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn config_file_is_read_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "epochs = 1\nwalks_per_node = 4\niterations = 100\nseed = 5\nw = 0.3\n").unwrap();
    let out = gegraph().args(["layout", "--seed", "6", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["params"]["seed"], 6);
    assert_eq!(doc["params"]["w"], 0.3);
}

#[test]
fn related_and_aggregate_print_json() {
    let out = gegraph().args(["related", "--node", "Valjean", "--top", "5"]).args(FAST).output().unwrap();
    assert!(out.status.success());
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["results"].as_array().unwrap().len(), 5);
    let out = gegraph().args(["aggregate"]).args(FAST).output().unwrap();
    assert!(out.status.success());
    let a: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!a["nodes"].as_array().unwrap().is_empty());
}
