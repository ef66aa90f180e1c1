use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn levelset(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levelset"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = levelset(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Two tight groups on a line, 5 apart.
fn write_two_groups(path: &Path) {
    let mut text = String::from("x,y\n");
    for i in 0..40 {
        let x = if i < 20 { i as f64 * 0.05 } else { 5.0 + i as f64 * 0.05 };
        text.push_str(&format!("{x},0\n"));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn build_then_cluster() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("points.csv");
    let tree = dir.path().join("tree.json");
    write_two_groups(&data);
    ok(&["build", "--input", s(&data), "--k", "5", "--gamma", "0.05", "--output", s(&tree)]);

    let out = ok(&["cluster", "--tree", s(&tree), "--method", "leaf"]);
    let labeling: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(labeling["method"], "leaf");
    assert_eq!(labeling["labels"].as_array().unwrap().len(), 40);

    let labels = dir.path().join("labels.json");
    ok(&[
        "cluster", "--tree", s(&tree), "--method", "first-k", "--K", "2", "--assign-background",
        "--input", s(&data), "--output", s(&labels),
    ]);
    let labeling: serde_json::Value = serde_json::from_str(&fs::read_to_string(&labels).unwrap()).unwrap();
    let labels = labeling["labels"].as_array().unwrap();
    assert!(labels.iter().all(|l| l.is_u64()));
    assert!(labels[..20].iter().all(|l| *l == labels[0]));
    assert!(labels[20..].iter().all(|l| *l == labels[20]));
    assert_ne!(labels[0], labels[20]);

    let out = levelset(&["cluster", "--tree", s(&tree), "--method", "first-k", "--K", "7"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unachievable-k"));

    let out = levelset(&["cluster", "--tree", s(&tree), "--method", "cut"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "1,2\n3\n").unwrap();
    let out = levelset(&["build", "--input", s(&bad), "--k", "1", "--output", s(&dir.path().join("t.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let out = levelset(&["simulate", "--scenario", "nine-gaussians"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let truth = dir.path().join("truth.txt");
    let a = ok(&["simulate", "--scenario", "six-gaussians", "--n", "300", "--r", "0.8", "--seed", "4", "--truth", s(&truth)]);
    let b = ok(&["simulate", "--scenario", "six-gaussians", "--n", "300", "--r", "0.8", "--seed", "4"]);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 300);
    assert!(rows.iter().all(|r| r.split(',').count() == 3));
    let groups: Vec<usize> = fs::read_to_string(&truth).unwrap().lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(groups.len(), 300);
    assert!(groups.iter().all(|g| (1..=6).contains(g)));
}

#[test]
fn small_benchmark_and_stability() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bench.toml");
    fs::write(
        &config,
        "n = 300\nreplicates = 2\nscenarios = [\"six-gaussians\"]\nr_values = [1.2]\n\n[level_set_tree]\nk = 20\n",
    )
    .unwrap();
    let csv = dir.path().join("errors.csv");
    ok(&["--threads", "2", "benchmark", "--config", s(&config), "--output", s(&csv)]);
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("# format_version: 1\nscenario,r,method,mean_error,sd_error,replicates\n"));
    assert_eq!(text.lines().count(), 2 + 5);

    fs::write(&config, "n = 300\nbogus = 1\n").unwrap();
    let out = levelset(&["benchmark", "--config", s(&config), "--output", s(&csv)]);
    assert_eq!(out.status.code(), Some(2));

    let data = dir.path().join("points.csv");
    write_two_groups(&data);
    let report = dir.path().join("stability.json");
    let modes = dir.path().join("modes.csv");
    ok(&[
        "stability", "--input", s(&data), "--subsamples", "4", "--size", "30", "--k", "4", "--output", s(&report),
        "--mode-csv", s(&modes),
    ]);
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["trees"].as_array().unwrap().len(), 4);
    assert!(fs::read_to_string(&modes).unwrap().starts_with("# format_version: 1\nmass,subsample_id,count\n"));
}

#[test]
fn fibers_build() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("fibers.jsonl");
    let mut text = String::new();
    for i in 0..30 {
        let o = if i < 15 { 0.0 } else { 40.0 } + i as f64 * 0.1;
        text.push_str(&format!("[[{o},0,0],[{o},1,0],[{o},2,0.5]]\n"));
    }
    fs::write(&data, text).unwrap();
    let tree = dir.path().join("tree.json");
    ok(&["build", "--input", s(&data), "--kind", "fibers", "--k", "3", "--cutoff", "0", "--output", s(&tree)]);
    let out = ok(&[
        "cluster", "--tree", s(&tree), "--method", "leaf", "--assign-background", "--input", s(&data), "--kind",
        "fibers",
    ]);
    let labeling: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(labeling["labels"].as_array().unwrap().len(), 30);
}
