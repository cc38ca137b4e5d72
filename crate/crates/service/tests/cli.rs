use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn glovespot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glovespot"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn quick_config(dir: &Path) -> String {
    let path = dir.join("quick.json");
    fs::write(
        &path,
        r#"{"name":"quick","epochs":300,"alpha":0.5,"beta":0.5,"eval_repetitions":1}"#,
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn exit_codes() {
    assert_eq!(glovespot(&["--help"]).status.code(), Some(0));
    assert_eq!(glovespot(&["--version"]).status.code(), Some(0));
    assert_eq!(glovespot(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(glovespot(&["spot"]).status.code(), Some(1));

    let o = glovespot(&["train", "--config", "/nonexistent/exp.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("/nonexistent/exp.json"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn invalid_config_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{"lag": 0}"#).unwrap();
    let o = glovespot(&["train", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    fs::write(&path, r#"{"lagg": 1}"#).unwrap();
    let o = glovespot(&["train", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lagg"));
}

#[test]
fn generated_data_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let o = glovespot(&["gen-templates", "--seed", "5", "--out", d.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let ta = fs::read_to_string(a.join("templates.json")).unwrap();
    assert_eq!(ta, fs::read_to_string(b.join("templates.json")).unwrap());
    let templates: Value = serde_json::from_str(&ta).unwrap();
    assert_eq!(templates.as_array().unwrap().len(), 10);

    let tpath = a.join("templates.json");
    let args = [
        "gen-stream",
        "--templates",
        tpath.to_str().unwrap(),
        "--sequence",
        "2,3,1",
        "--reps",
        "2",
        "--seed",
        "9",
    ];
    let s1 = stdout(&glovespot(&args));
    assert_eq!(s1, stdout(&glovespot(&args)));
    let lines: Vec<Value> = s1
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    // six holds of 30 frames plus five transitions of 10..=30 frames
    assert!((180 + 50..=180 + 150).contains(&lines.len()));
    for (i, l) in lines.iter().enumerate() {
        assert_eq!(l["t"], i as u64);
    }
}

#[test]
fn train_then_spot_one_line_per_frame() {
    let dir = tempfile::tempdir().unwrap();
    let config = quick_config(dir.path());
    let model_dir = dir.path().join("model");
    let o = glovespot(&[
        "train",
        "--config",
        &config,
        "--out",
        model_dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in [
        "model.json",
        "templates.json",
        "config.json",
        "training.json",
    ] {
        assert!(model_dir.join(f).exists(), "{f}");
    }

    let stream_dir = dir.path().join("stream");
    let o = glovespot(&[
        "gen-stream",
        "--templates",
        model_dir.join("templates.json").to_str().unwrap(),
        "--sequence",
        "4,8,1",
        "--out",
        stream_dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stream = stream_dir.join("stream.jsonl");
    let frames = fs::read_to_string(&stream).unwrap().lines().count();

    let o = glovespot(&[
        "spot",
        "--model",
        model_dir.join("model.json").to_str().unwrap(),
        "--stream",
        stream.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let replies: Vec<Value> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(replies.len(), frames);
    assert!(replies.iter().all(|r| r["type"] == "spot"));
    let commands: Vec<&str> = replies
        .iter()
        .filter_map(|r| r["command"].as_str())
        .collect();
    for c in ["Y+", "SavePose", "Stop"] {
        assert!(commands.contains(&c), "{c} missing");
    }
}

#[test]
fn eval_writes_reports_under_the_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let config = quick_config(dir.path());
    let results = dir.path().join("results");
    let o = glovespot(&[
        "eval",
        "--config",
        &config,
        "--out",
        results.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("quick: mean RR"));

    let runs: Vec<_> = fs::read_dir(&results).unwrap().collect();
    assert_eq!(runs.len(), 1);
    let run = runs[0].as_ref().unwrap().path();
    assert_eq!(run.file_name().unwrap().len(), 16);
    let report: Value =
        serde_json::from_str(&fs::read_to_string(run.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["per_gesture"].as_array().unwrap().len(), 10);
    assert_eq!(report["latency"], Value::Null);
    let md = fs::read_to_string(run.join("report.md")).unwrap();
    assert!(md.contains("Mean"));
    assert!(run.join("config.json").exists());
}

#[test]
fn shipped_configs_match_the_presets() {
    use glovespot::cli::load_config;
    use glovespot_core::harness::ExperimentConfig;

    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["test1", "test2", "test3", "test4"] {
        let path = dir.join(format!("{name}.json"));
        let loaded = load_config(Some(&path), None).unwrap();
        assert_eq!(loaded, ExperimentConfig::preset(name).unwrap(), "{name}");
    }
    load_config(Some(&dir.join("quick.json")), None).unwrap();
}
