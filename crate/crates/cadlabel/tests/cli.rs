//! CLI surface tests: synth -> label -> evaluate -> ablate flows through the
//! real binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cadlabel(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cadlabel"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawning cadlabel")
}

fn write_demo_spec(path: &Path) {
    fs::write(
        path,
        r#"
seed = 5
density = 900.0
noise_sigma = 0.001
outlier_fraction = 0.01
occlusion_clearance = 0.015

[misalignment]
sigma_t = 0.004

[[objects]]
shape = "box"
size = [0.6, 0.4, 0.5]
category = "crate"
translation = [0.7, 0.5, 0.25]
yaw_deg = 20.0

[[objects]]
shape = "cylinder"
radius = 0.2
height = 0.6
category = "drum"
translation = [-0.8, -0.4, 0.3]

[[background]]
center = [0.0, 0.0, 0.0]
edge_u = [4.0, 0.0, 0.0]
edge_v = [0.0, 4.0, 0.0]
"#,
    )
    .unwrap();
}

#[test]
fn synth_label_evaluate_flow() {
    let dir = tempfile::tempdir().unwrap();
    write_demo_spec(&dir.path().join("scene.toml"));

    let synth = cadlabel(&["synth", "scene.toml", "--out", "bundle"], dir.path());
    assert!(synth.status.success(), "synth failed: {}", String::from_utf8_lossy(&synth.stderr));
    assert!(dir.path().join("bundle/manifest.toml").is_file());
    assert!(dir.path().join("bundle/cloud.ply").is_file());

    let label = cadlabel(
        &["label", "bundle/manifest.toml", "--out", "labels", "--seed", "7", "--threads", "1", "--debug-ply"],
        dir.path(),
    );
    assert!(label.status.success(), "label failed: {}", String::from_utf8_lossy(&label.stderr));
    for file in [
        "labels/labels_hard.ply",
        "labels/labels_weak.ply",
        "labels/labels_soft.slbl",
        "labels/classes.txt",
        "labels/report.toml",
        "labels/debug.ply",
        "labels/labels_soft.csv",
        "labels/svm_section_01.txt",
    ] {
        assert!(dir.path().join(file).is_file(), "missing {file}");
    }

    let evaluate = cadlabel(
        &[
            "evaluate",
            "--pred",
            "labels/labels_hard.ply",
            "--gt",
            "bundle/cloud.ply",
            "--cloud",
            "bundle/cloud.ply",
            "--out",
            "report.toml",
            "--json-report",
        ],
        dir.path(),
    );
    assert!(evaluate.status.success(), "evaluate failed: {}", String::from_utf8_lossy(&evaluate.stderr));
    let report = fs::read_to_string(dir.path().join("report.toml")).unwrap();
    for key in ["oa", "macc", "mf1", "miou", "pct_labeled", "bins", "confusion"] {
        assert!(report.contains(key), "report lacks {key}:\n{report}");
    }
    assert!(dir.path().join("report.json").is_file());
    let parsed: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(parsed["oa"].as_f64().unwrap() > 90.0);
}

#[test]
fn evaluate_identical_labels_scores_100() {
    let dir = tempfile::tempdir().unwrap();
    write_demo_spec(&dir.path().join("scene.toml"));
    let synth = cadlabel(&["synth", "scene.toml", "--out", "bundle", "--seed", "9"], dir.path());
    assert!(synth.status.success());
    let evaluate = cadlabel(
        &[
            "evaluate",
            "--pred",
            "bundle/cloud.ply",
            "--gt",
            "bundle/cloud.ply",
            "--cloud",
            "bundle/cloud.ply",
            "--out",
            "self.toml",
        ],
        dir.path(),
    );
    assert!(evaluate.status.success(), "{}", String::from_utf8_lossy(&evaluate.stderr));
    let stdout = String::from_utf8_lossy(&evaluate.stdout);
    assert!(stdout.contains("OA               : 100.00"), "{stdout}");
    let report = fs::read_to_string(dir.path().join("self.toml")).unwrap();
    assert!(report.contains("oa = 100.0"), "{report}");
}

#[test]
fn label_runs_are_deterministic_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    write_demo_spec(&dir.path().join("scene.toml"));
    assert!(cadlabel(&["synth", "scene.toml", "--out", "bundle"], dir.path()).status.success());
    for out in ["a", "b"] {
        let run = cadlabel(
            &["label", "bundle/manifest.toml", "--out", out, "--seed", "3"],
            dir.path(),
        );
        assert!(run.status.success());
    }
    for file in ["labels_hard.ply", "labels_weak.ply", "labels_soft.slbl"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
}

#[test]
fn ablate_emits_four_rows_matching_metric_columns() {
    let dir = tempfile::tempdir().unwrap();
    write_demo_spec(&dir.path().join("scene.toml"));
    assert!(cadlabel(&["synth", "scene.toml", "--out", "bundle"], dir.path()).status.success());
    fs::write(dir.path().join("list.txt"), "bundle/manifest.toml\n").unwrap();

    let run = cadlabel(
        &["ablate", "list.txt", "--gt-available", "--out", "ablation", "--seed", "3"],
        dir.path(),
    );
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let table = fs::read_to_string(dir.path().join("ablation/ablation.toml")).unwrap();
    let parsed: toml::Value = toml::from_str(&table).unwrap();
    let rows = parsed["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    let subsets: Vec<&str> = rows.iter().map(|r| r["scores"].as_str().unwrap()).collect();
    assert_eq!(subsets, vec!["dist", "dist+reg", "svm+reg", "all"]);
    for row in rows {
        for key in ["oa", "macc", "mf1", "miou"] {
            assert!(row.get(key).is_some(), "row lacks {key}");
        }
    }

    // the "all" row must match an individual label+evaluate run
    assert!(cadlabel(
        &["label", "bundle/manifest.toml", "--out", "ind", "--seed", "3"],
        dir.path()
    )
    .status
    .success());
    assert!(cadlabel(
        &[
            "evaluate",
            "--pred",
            "ind/labels_hard.ply",
            "--gt",
            "bundle/cloud.ply",
            "--cloud",
            "bundle/cloud.ply",
            "--out",
            "ind.toml",
        ],
        dir.path()
    )
    .status
    .success());
    let individual: toml::Value =
        toml::from_str(&fs::read_to_string(dir.path().join("ind.toml")).unwrap()).unwrap();
    let all_row = &rows[3];
    for key in ["oa", "macc", "miou"] {
        let a = all_row[key].as_float().unwrap();
        let b = individual[key].as_float().unwrap();
        assert!((a - b).abs() < 1e-9, "{key}: ablate {a} vs individual {b}");
    }
}

#[test]
fn missing_gt_available_flag_fails() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("list.txt"), "whatever.toml\n").unwrap();
    let run = cadlabel(&["ablate", "list.txt", "--out", "x"], dir.path());
    assert!(!run.status.success());
}

#[test]
fn errors_exit_nonzero_with_context() {
    let dir = tempfile::tempdir().unwrap();
    let run = cadlabel(&["label", "missing.toml", "--out", "x"], dir.path());
    assert!(!run.status.success());
    let stderr = String::from_utf8_lossy(&run.stderr);
    assert!(stderr.contains("missing.toml"), "{stderr}");

    fs::write(dir.path().join("broken.toml"), "cloud = 5\n").unwrap();
    let run = cadlabel(&["label", "broken.toml", "--out", "x"], dir.path());
    assert!(!run.status.success());
}

#[test]
fn version_flag_works() {
    let dir = tempfile::tempdir().unwrap();
    let run = cadlabel(&["--version"], dir.path());
    assert!(run.status.success());
    assert!(String::from_utf8_lossy(&run.stdout).contains("cadlabel"));
}
