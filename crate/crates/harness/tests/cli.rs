use std::path::Path;
use std::process::{Command, Output};

use serde_json::json;

fn harshnet(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_harshnet"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn harshnet")
}

fn small_scenario(dir: &Path, extra: serde_json::Value) -> String {
    let mut cfg = json!({
        "dataset_size": 48,
        "training": { "epochs": 2 },
        "output_dir": "out",
    });
    if let (Some(base), Some(more)) = (cfg.as_object_mut(), extra.as_object()) {
        base.extend(more.clone());
    }
    let path = dir.join("scenario.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    path.to_string_lossy().into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn help_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&harshnet(&["--help"], dir.path())), 0);
    assert_eq!(code(&harshnet(&["no-such-command"], dir.path())), 2);
    assert_eq!(
        code(&harshnet(&["allocate"], dir.path())),
        2,
        "--r-hat is required"
    );
}

#[test]
fn invalid_scenario_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_scenario(dir.path(), json!({ "split_fraction": 1.5 }));
    let out = harshnet(&["--config", &cfg, "compare"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("split_fraction"));

    std::fs::write(dir.path().join("broken.json"), "{ not json").unwrap();
    assert_eq!(
        code(&harshnet(
            &["--config", "broken.json", "compare"],
            dir.path()
        )),
        2
    );
}

#[test]
fn missing_files_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&harshnet(
            &["--config", "absent.json", "compare"],
            dir.path()
        )),
        1
    );
    let cfg = small_scenario(dir.path(), json!({}));
    assert_eq!(
        code(&harshnet(&["--config", &cfg, "plot"], dir.path())),
        1,
        "no report.json yet"
    );
}

#[test]
fn non_convergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_scenario(dir.path(), json!({ "lambda_search": { "max_iter": 1 } }));
    let out = harshnet(&["--config", &cfg, "compare"], dir.path());
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    // Outputs are still written before the check fails.
    assert!(dir.path().join("out/metrics.csv").exists());
}

#[test]
fn every_subcommand_on_a_small_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_scenario(dir.path(), json!({}));
    let run = |args: &[&str]| {
        let mut full = vec!["--config", cfg.as_str()];
        full.extend_from_slice(args);
        let out = harshnet(&full, dir.path());
        assert_eq!(
            code(&out),
            0,
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    };
    let out = dir.path().join("out");

    run(&["gen-data"]);
    let csv = std::fs::read_to_string(out.join("dataset.csv")).unwrap();
    assert_eq!(csv.lines().count(), 49);
    assert!(out.join("dataset.json").exists());

    run(&["train"]);
    assert!(out.join("model.json").exists());
    let training: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("training.json")).unwrap()).unwrap();
    assert_eq!(training["train_samples"], 36);
    assert_eq!(training["loss_history"].as_array().unwrap().len(), 2);

    run(&["eval"]);
    let eval: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("evaluation.json")).unwrap())
            .unwrap();
    assert_eq!(eval, training["test_metrics"]);

    let predictions = run(&["predict", "--input", "out/dataset.csv"]);
    let lines: Vec<&str> = predictions.lines().collect();
    assert_eq!(lines[0], "row,predicted");
    assert_eq!(lines.len(), 49);
    assert!(lines[1..]
        .iter()
        .all(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap() >= 0.0));

    run(&["allocate", "--r-hat", "40,0.000001,40"]);
    let rounds: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("allocation.json")).unwrap())
            .unwrap();
    let rounds = rounds.as_array().unwrap();
    assert_eq!(rounds.len(), 3);
    assert!(rounds[0]["total_rate"].as_f64().unwrap() <= 40.0);
    let events = std::fs::read_to_string(out.join("events.csv")).unwrap();
    assert!(events.starts_with("time_step,event,service_id,group_id\n"));
    assert!(events.contains(",suspended,"));
    assert!(events.contains(",reactivated,"));

    run(&["compare"]);
    for name in [
        "metrics.csv",
        "convergence.csv",
        "prediction.csv",
        "report.json",
    ] {
        assert!(out.join(name).exists(), "{name}");
    }
    let before = std::fs::read(out.join("fig4c_power.svg")).unwrap();
    std::fs::remove_file(out.join("fig4c_power.svg")).unwrap();
    run(&["plot"]);
    assert_eq!(std::fs::read(out.join("fig4c_power.svg")).unwrap(), before);
}

#[test]
fn seed_flag_changes_the_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_scenario(dir.path(), json!({}));
    let read = |seed: &str, name: &str| {
        let out = harshnet(
            &["--config", &cfg, "--seed", seed, "--out", name, "gen-data"],
            dir.path(),
        );
        assert_eq!(code(&out), 0);
        std::fs::read(dir.path().join(name).join("dataset.csv")).unwrap()
    };
    assert_eq!(read("5", "a"), read("5", "b"));
    assert_ne!(read("5", "a"), read("6", "c"));
}
