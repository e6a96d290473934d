//! CLI contract tests: exit codes, config-file overrides, and the run
//! manifest written next to every command's artifacts.

mod common;

use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_vocdet");

fn vocdet(cwd: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

#[test]
fn help_exits_zero_unknown_flag_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let help = vocdet(dir.path(), &["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("subsample"));

    let sub_help = vocdet(dir.path(), &["tile", "--help"]);
    assert_eq!(sub_help.status.code(), Some(0));

    let unknown = vocdet(dir.path(), &["tile", "--definitely-not-a-flag"]);
    assert_eq!(unknown.status.code(), Some(1));
    let text = String::from_utf8_lossy(&unknown.stderr);
    assert!(text.to_lowercase().contains("usage"), "stderr was: {text}");
}

#[test]
fn io_failures_exit_two_validation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // Missing input file: IO error, exit 2.
    let missing = vocdet(
        dir.path(),
        &["subsample", "--frames", "nope.csv", "--interval", "3", "--out-dir", "out"],
    );
    assert_eq!(missing.status.code(), Some(2));

    // Validation error: tile size larger than the frame, exit 1.
    common::write_corpus(&dir.path().join("frames"), &dir.path().join("ann"), 1, 5);
    let invalid = vocdet(
        dir.path(),
        &[
            "tile",
            "--annotations", "ann",
            "--images", "frames",
            "--out-dir", "tiles",
            "--size", "2000",
        ],
    );
    assert_eq!(invalid.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&invalid.stderr).contains("error"));
}

#[test]
fn config_file_supplies_defaults_and_cli_overrides() {
    let dir = tempfile::tempdir().unwrap();
    common::write_corpus(&dir.path().join("frames"), &dir.path().join("ann"), 1, 9);
    std::fs::write(dir.path().join("pipeline.toml"), "tile_size = 360\nmin_overlap = 0.2\n")
        .unwrap();

    // Config value applies when the flag is absent: 360 px tiles on a
    // 1280x720 frame give a 5x3 grid.
    let out = vocdet(
        dir.path(),
        &[
            "tile",
            "--config", "pipeline.toml",
            "--annotations", "ann",
            "--images", "frames",
            "--out-dir", "tiles_cfg",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("emitted 15 tiles"));

    // The command line wins over the config.
    let out = vocdet(
        dir.path(),
        &[
            "tile",
            "--config", "pipeline.toml",
            "--annotations", "ann",
            "--images", "frames",
            "--out-dir", "tiles_cli",
            "--size", "300",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("emitted 18 tiles"));

    // The run manifest records the config hash and the resolved settings.
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("tiles_cfg/run_manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["command"], "tile");
    assert_eq!(manifest["settings"]["tile_size"], 360);
    assert!(manifest["config_hash"]
        .as_str()
        .unwrap()
        .starts_with("sha256:"));
    assert!(manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .any(|v| v.as_str().unwrap().ends_with(".png")));
}

#[test]
fn evaluate_rejects_orphan_detection_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(dir.path().join("gt")).unwrap();
    std::fs::create_dir_all(dir.path().join("det")).unwrap();
    std::fs::write(
        dir.path().join("gt/a.xml"),
        "<annotation><filename>a.png</filename>\
         <size><width>100</width><height>100</height><depth>3</depth></size>\
         <object><name>tomato</name><bndbox>\
         <xmin>10</xmin><ymin>10</ymin><xmax>50</xmax><ymax>50</ymax>\
         </bndbox></object></annotation>",
    )
    .unwrap();
    std::fs::write(dir.path().join("det/a.txt"), "tomato 0.9 9 9 49 49\n").unwrap();
    std::fs::write(dir.path().join("det/ghost.txt"), "tomato 0.9 0 0 10 10\n").unwrap();

    let out = vocdet(
        dir.path(),
        &["evaluate", "--gt", "gt", "--det", "det", "--out-dir", "eval"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ghost"));

    std::fs::remove_file(dir.path().join("det/ghost.txt")).unwrap();
    let out = vocdet(
        dir.path(),
        &["evaluate", "--gt", "gt", "--det", "det", "--out-dir", "eval"],
    );
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("eval/report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["per_class"]["tomato"]["tp"], 1);
    assert_eq!(report["map"], 1.0);
    assert!(dir.path().join("eval/pr_curve.csv").is_file());
}

#[test]
fn calibrate_then_evaluate_threshold_from_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(dir.path().join("gt")).unwrap();
    std::fs::create_dir_all(dir.path().join("det")).unwrap();
    std::fs::write(
        dir.path().join("gt/a.xml"),
        "<annotation><filename>a.png</filename>\
         <size><width>100</width><height>100</height><depth>3</depth></size>\
         <object><name>tomato</name><bndbox>\
         <xmin>11</xmin><ymin>11</ymin><xmax>50</xmax><ymax>50</ymax>\
         </bndbox></object></annotation>",
    )
    .unwrap();
    std::fs::write(
        dir.path().join("det/a.txt"),
        "tomato 0.60 10 10 50 50\ntomato 0.30 60 60 90 90\n",
    )
    .unwrap();

    let out = vocdet(
        dir.path(),
        &["calibrate", "--gt", "gt", "--det", "det", "--out-dir", "calib"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let calib: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("calib/calibration.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(calib["best_threshold_pct"], 31.0);
    assert_eq!(calib["best_f1"], 1.0);

    let sweep_csv = std::fs::read_to_string(dir.path().join("calib/sweep.csv")).unwrap();
    assert!(sweep_csv.starts_with("threshold_pct,tp,fp,fn,precision,recall,f1"));
    assert_eq!(sweep_csv.lines().count(), 102, "header plus 101 rows");

    let out = vocdet(
        dir.path(),
        &[
            "evaluate",
            "--gt", "gt",
            "--det", "det",
            "--out-dir", "eval",
            "--threshold-from", "calib/calibration.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("eval/report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["config"]["confidence_threshold"], 0.31);
    assert_eq!(report["per_class"]["tomato"]["fp"], 0);
}
