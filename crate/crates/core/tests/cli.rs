use illum_align::image::io::save_gray16;
use illum_align::image::load_image;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_illum-align"));
    cmd.args(args).env_remove("ILLUM_ALIGN_JOBS").env_remove("SOURCE_DATE_EPOCH");
    cmd
}

fn run(args: &[&str]) -> Output {
    cli(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn synth(dir: &Path, count: &str) -> String {
    let corpus = dir.join("corpus");
    let out = run(&["synth", "--count", count, "--size", "32", "--seed", "3", "--out", corpus.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    corpus.to_str().unwrap().to_string()
}

#[test]
fn csv_mean_row_matches_pair_rows() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "6");
    let report = dir.path().join("r.csv");
    let out = run(&["run", "--dataset", &corpus, "--method", "grayworld", "--report", report.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("grayworld: 6 evaluated, 0 skipped"));

    let text = fs::read_to_string(&report).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 8);
    assert_eq!(rows[0], ["id", "method", "psnr", "ssim", "rmse", "residual"]);
    let mean_row = rows.last().unwrap();
    assert_eq!(mean_row[0], "__mean__");
    for col in 2..6 {
        let values: Vec<f64> = rows[1..7].iter().map(|r| r[col].parse().unwrap()).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let printed: f64 = mean_row[col].parse().unwrap();
        assert!((mean - printed).abs() < 1e-6, "column {col}: {mean} vs {printed}");
    }
}

#[test]
fn json_report_accounts_for_skipped_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "3");
    fs::remove_file(Path::new(&corpus).join("B/0001.png")).unwrap();
    let report = dir.path().join("r.json");
    let out = run(&["run", "--dataset", &corpus, "--metrics", "residual", "--report", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["meta"]["pairs_total"], 3);
    assert_eq!(v["meta"]["pairs_evaluated"], 2);
    assert_eq!(v["meta"]["pairs_skipped"], 1);
    assert_eq!(v["meta"]["skipped"][0]["id"], "0001");
    assert_eq!(v["meta"]["dataset"], "corpus");
    assert!(v["meta"]["timestamp"].is_null());
    assert_eq!(v["pairs"].as_array().unwrap().len(), 2);
    assert!(v["pairs"][0]["psnr"].is_null());
    assert_eq!(v["aggregates"]["residual"]["count"], 2);
}

#[test]
fn timestamp_comes_from_source_date_epoch() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "1");
    let report = dir.path().join("r.json");
    let out = cli(&["run", "--dataset", &corpus, "--metrics", "rmse", "--report", report.to_str().unwrap()])
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["meta"]["timestamp"], 1_700_000_000u64);
}

#[test]
fn jobs_environment_overrides_flag() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "2");
    let report = dir.path().join("r.json");
    let args = ["run", "--dataset", &corpus, "--report", report.to_str().unwrap(), "--jobs", "2"];
    let bad = cli(&args).env("ILLUM_ALIGN_JOBS", "0").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let good = cli(&args).env("ILLUM_ALIGN_JOBS", "3").output().unwrap();
    assert_eq!(good.status.code(), Some(0));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let report = report.to_str().unwrap();
    // Invalid arguments.
    assert_eq!(run(&["run", "--dataset", ".", "--report", report, "--method", "magic"]).status.code(), Some(2));
    assert_eq!(run(&["run", "--dataset", ".", "--report", report, "--format", "xml"]).status.code(), Some(2));
    assert_eq!(run(&["run", "--dataset", "."]).status.code(), Some(2));
    assert_eq!(run(&["synth", "--out", report, "--count", "0"]).status.code(), Some(2));
    assert_eq!(run(&["gsra-check", "--dim", "0"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    // Fatal runtime errors.
    let missing = dir.path().join("missing");
    let out = run(&["run", "--dataset", missing.to_str().unwrap(), "--report", report]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not exist"));
    let empty = dir.path().join("empty");
    fs::create_dir_all(empty.join("A")).unwrap();
    fs::create_dir_all(empty.join("B")).unwrap();
    assert_eq!(run(&["run", "--dataset", empty.to_str().unwrap(), "--report", report]).status.code(), Some(1));
}

#[test]
fn gsra_check_prints_table() {
    let out = run(&["gsra-check", "--seed", "7", "--tokens", "4", "--dim", "8"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("gsra-check seed=7 tokens=4 dim=8"));
    assert_eq!(text.matches("PASS").count(), 6);
    assert!(text.trim_end().ends_with("all checks passed"));
}

#[test]
fn depth_to_normal_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let depth = dir.path().join("depth.png");
    let normal = dir.path().join("normal.png");
    save_gray16(&vec![0.25; 20 * 12], 20, 12, &depth).unwrap();
    let out = run(&["depth2normal", "--fov", "60", "--in", depth.to_str().unwrap(), "--out", normal.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let img = load_image(&normal).unwrap();
    assert_eq!((img.height(), img.width()), (12, 20));
    for y in 0..12 {
        for x in 0..20 {
            assert_eq!(img.pixel(y, x), [128.0 / 255.0, 128.0 / 255.0, 0.0]);
        }
    }
    let bad = run(&["depth2normal", "--fov", "180", "--in", depth.to_str().unwrap(), "--out", normal.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn apply_writes_normalized_image() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "1");
    let input = Path::new(&corpus).join("A/0000.png");
    let output = dir.path().join("out.ppm");
    let out = run(&["apply", "--method", "pan", "--in", input.to_str().unwrap(), "--out", output.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let img = load_image(&output).unwrap();
    let values = img.as_slice();
    assert_eq!(values.iter().cloned().fold(f64::INFINITY, f64::min), 0.0);
    assert!(values.iter().cloned().fold(0.0, f64::max) >= 254.0 / 255.0);
}
