use std::path::Path;
use std::process::{Command, Output};

fn riskcore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riskcore"))
        .args(args)
        .env("RISKCORE_LOG", "error")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = r#"{
  "data": {"synthetic": {"n_samples": 600, "seed": 1}},
  "models": ["baseline", "lr", "knn", "dt"],
  "repeats": 2,
  "seed": 3
}"#;

#[test]
fn run_is_deterministic_and_checkable() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let outputs: Vec<Output> = ["a", "b"]
        .iter()
        .map(|o| riskcore(&["run", "--config", &config, "--out", dir.path().join(o).to_str().unwrap()]))
        .collect();
    for o in &outputs {
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(outputs[0].stdout, outputs[1].stdout);
    let table = String::from_utf8(outputs[0].stdout.clone()).unwrap();
    assert!(table.starts_with("Model,Sensitivity,FPR,Specificity,FNR,Accuracy,AUC\n"));
    assert!(table.contains("\nKNN,"));

    let read = |o: &str| std::fs::read(dir.path().join(o).join("metrics.json")).unwrap();
    assert_eq!(read("a"), read("b"));

    let check = riskcore(&["check", "--out", dir.path().join("a").to_str().unwrap()]);
    assert!(check.status.success());
    assert!(String::from_utf8_lossy(&check.stdout).contains("1 manifests"));
}

#[test]
fn command_line_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out = dir.path().join("o");
    let status = riskcore(&[
        "run", "--config", &config, "--out", out.to_str().unwrap(), "--repeats", "3", "--models", "lr", "--seed", "11",
    ]);
    assert!(status.status.success());
    let metrics: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["repeats"], 3);
    assert_eq!(metrics["seed"], 11);
    assert_eq!(metrics["models"], serde_json::json!(["lr"]));
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();

    let bad_field = write_config(dir.path(), r#"{"repeatz": 3}"#);
    assert_eq!(riskcore(&["run", "--config", &bad_field, "--out", out]).status.code(), Some(2));
    assert_eq!(riskcore(&["run", "--models", "forest", "--out", out]).status.code(), Some(2));
    assert_eq!(riskcore(&["ablate", "--fractions", "0", "--out", out]).status.code(), Some(2));

    let missing_csv = write_config(dir.path(), r#"{"data": {"csv": "nowhere.csv"}}"#);
    assert_eq!(riskcore(&["run", "--config", &missing_csv, "--out", out]).status.code(), Some(3));
    assert_eq!(riskcore(&["check", "--out", out]).status.code(), Some(3));

    let csv = dir.path().join("one_class.csv");
    std::fs::write(&csv, "label,a,b\n0,1,2\n0,2,3\n0,3,1\n0,1,1\n").unwrap();
    let one_class = write_config(dir.path(), &format!(r#"{{"data": {{"csv": "{}"}}, "models": ["lr"]}}"#, csv.display()));
    assert_eq!(riskcore(&["run", "--config", &one_class, "--out", out]).status.code(), Some(3));
}

#[test]
fn synth_writes_dataset_and_truth() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out = dir.path().join("synth");
    let o = riskcore(&["synth", "--config", &config, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(out.join("dataset.csv")).unwrap();
    assert_eq!(csv.lines().count(), 601);
    let truth: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("truth.json")).unwrap()).unwrap();
    assert_eq!(truth["informative_dims"].as_array().unwrap().len(), 9);
    assert!(riskcore(&["check", "--out", out.to_str().unwrap()]).status.success());
}
