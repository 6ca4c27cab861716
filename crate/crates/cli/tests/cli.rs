use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn interleaf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_interleaf"))
        .args(args)
        .env_remove("INTERLEAF_MATCHER_URL")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn generate(dir: &Path) {
    let out = interleaf(&[
        "generate",
        "--seed",
        "3",
        "--count",
        "24",
        "--raster-size",
        "64",
        "-o",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

fn ids(dir: &Path) -> Vec<Value> {
    fs::read_to_string(dir.join("instances.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn write_jsonl(path: &Path, rows: &[Value]) {
    let text: String = rows.iter().map(|r| format!("{r}\n")).collect();
    fs::write(path, text).unwrap();
}

#[test]
fn full_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let d = data.to_str().unwrap();
    generate(&data);

    let stats = interleaf(&["stats", d, "--json"]);
    assert_eq!(code(&stats), 0);
    let stats: Value = serde_json::from_slice(&stats.stdout).unwrap();
    assert_eq!(stats["total_instances"], 24);

    let instances = ids(&data);
    let mut trials = Vec::new();
    for (i, inst) in instances.iter().enumerate() {
        for t in 0..10 {
            trials.push(json!({
                "question_id": inst["id"],
                "model_id": "m",
                "trial_index": t,
                "correct": t < i % 11,
            }));
        }
    }
    let logs = tmp.path().join("trials.jsonl");
    write_jsonl(&logs, &trials);
    let records = tmp.path().join("difficulty.jsonl");
    let out = interleaf(&["filter", d, "--logs", logs.to_str().unwrap(), "--out", records.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let classes: Vec<Value> = fs::read_to_string(&records)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(classes.len(), 24);
    for (i, r) in classes.iter().enumerate() {
        let want = if i % 11 >= 7 { "simple" } else { "challenging" };
        assert_eq!(r["class"].as_str().unwrap().to_lowercase(), want, "{r}");
    }

    let stages = tmp.path().join("stages");
    let out = interleaf(&["stage", d, "--records", records.to_str().unwrap(), "--out", stages.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for k in 0..=5 {
        assert!(stages.join(format!("stage{k}.jsonl")).exists(), "stage{k}");
    }

    let preds: Vec<Value> = instances
        .iter()
        .map(|inst| json!({"question_id": inst["id"], "output": format!("The answer is {}.", inst["answer"].as_str().unwrap())}))
        .collect();
    let pred_path = tmp.path().join("preds.jsonl");
    write_jsonl(&pred_path, &preds);
    let report = tmp.path().join("report.json");
    let out = interleaf(&["eval", d, "--predictions", pred_path.to_str().unwrap(), "--report", report.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(report["overall"]["accuracy"], 1.0);
    assert_eq!(report["unmatched"], 0);

    let out = interleaf(&["eval", d, "--predictions", pred_path.to_str().unwrap(), "--external"]);
    assert_eq!(code(&out), 3);

    let preview = tmp.path().join("preview");
    let out = interleaf(&["render-preview", "--size", "32", "-o", preview.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    for view in ["front", "side", "top"] {
        assert!(preview.join(format!("preview_{view}.png")).exists());
    }
}

#[test]
fn regeneration_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    generate(&tmp.path().join("a"));
    generate(&tmp.path().join("b"));
    for f in ["instances.jsonl", "manifest.json"] {
        assert_eq!(fs::read(tmp.path().join("a").join(f)).unwrap(), fs::read(tmp.path().join("b").join(f)).unwrap());
    }
}

#[test]
fn error_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"images_per_instance": {"min": 1, "max": 2}}"#).unwrap();
    assert_eq!(code(&interleaf(&["generate", "--config", bad.to_str().unwrap()])), 1);
    assert_eq!(code(&interleaf(&["generate", "--mix", "0.5,0.5"])), 1);
    assert_eq!(code(&interleaf(&["frobnicate"])), 1);
    let missing = tmp.path().join("nope.json");
    assert_eq!(code(&interleaf(&["generate", "--config", missing.to_str().unwrap()])), 2);

    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let out = interleaf(&["stats", empty.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("manifest"));

    let data = tmp.path().join("data");
    generate(&data);
    let d = data.to_str().unwrap();
    let out = interleaf(&["filter", d, "--logs", missing.to_str().unwrap()]);
    assert_eq!(code(&out), 2);

    let image = fs::read_dir(data.join("images")).unwrap().next().unwrap().unwrap().path();
    fs::remove_file(image).unwrap();
    let out = interleaf(&["stats", d]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("total images"), "{}", String::from_utf8_lossy(&out.stderr));
}
