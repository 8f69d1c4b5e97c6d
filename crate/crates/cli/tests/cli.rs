use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn fpamsuit(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpamsuit"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Data rows of an output CSV: everything after the manifest and header lines.
fn data_rows(path: &Path) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# manifest: {"));
    lines.skip(1).map(str::to_string).collect()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn empty_tensile_csv_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("empty.csv");
    fs::write(&csv, "pressure_kpa,length_m,force_n\n").unwrap();
    let o = fpamsuit(dir.path(), &["fit", "--csv", csv.to_str().unwrap(), "--l0", "0.3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no samples"), "{}", stderr(&o));
    assert!(!dir.path().join("fit.json").exists());
}

#[test]
fn missing_column_is_named() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("bad.csv");
    fs::write(&csv, "pressure_kpa,force_n\n0,12.3\n").unwrap();
    let o = fpamsuit(dir.path(), &["fit", "--csv", csv.to_str().unwrap(), "--l0", "0.3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("length_m"), "{}", stderr(&o));
}

#[test]
fn rank_deficient_fit_is_a_numerical_failure() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("thin.csv");
    fs::write(&csv, "pressure_kpa,length_m,force_n\n0,0.30,12.3\n0,0.29,7.0\n").unwrap();
    let o = fpamsuit(dir.path(), &["fit", "--csv", csv.to_str().unwrap(), "--l0", "0.3"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn synthetic_data_fits_back() {
    let dir = TempDir::new().unwrap();
    assert!(fpamsuit(dir.path(), &["synth", "--l0", "0.3"]).status.success());
    let csv = dir.path().join("tensile.csv");
    assert_eq!(data_rows(&csv).len(), 7 * 25);
    let o = fpamsuit(dir.path(), &["fit", "--csv", csv.to_str().unwrap(), "--l0", "0.3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let fit = json(&dir.path().join("fit.json"));
    for level in fit["level_rmse"].as_array().unwrap() {
        assert!(level["rmse_n"].as_f64().unwrap() < 1e-6);
    }
}

#[test]
fn bad_pose_is_rejected() {
    let dir = TempDir::new().unwrap();
    let o = fpamsuit(dir.path(), &["solve", "--pose", "10,0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = fpamsuit(dir.path(), &["solve"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn batch_solve_writes_one_row_per_pose() {
    let dir = TempDir::new().unwrap();
    let poses = dir.path().join("poses.csv");
    fs::write(&poses, "theta_x,theta_y,theta_z\n0,0,0\n-20,0,0\n0,15,0\n0,0,-30\n").unwrap();
    let o = fpamsuit(dir.path(), &["solve", "--poses", poses.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = data_rows(&dir.path().join("solve.csv"));
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.split(',').count() == 11));
}

#[test]
fn rom_single_axis_has_one_row_per_sample() {
    let dir = TempDir::new().unwrap();
    let o = fpamsuit(dir.path(), &["rom", "--axis", "AR"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(data_rows(&dir.path().join("rom_AR.csv")).len(), 100);
    assert!(!dir.path().join("rom_FE.csv").exists());
    let summary = json(&dir.path().join("rom.json"));
    assert_eq!(summary["axes"].as_array().unwrap().len(), 1);
}

#[test]
fn workspace_covers_the_whole_grid() {
    let dir = TempDir::new().unwrap();
    let o = fpamsuit(dir.path(), &["workspace", "--limits", "100,50"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("workspace.csv")).unwrap();
    let header = text.lines().nth(1).unwrap();
    assert!(header.ends_with("compression_ok_100,compression_ok_50"));
    assert_eq!(data_rows(&dir.path().join("workspace.csv")).len(), 73 * 41);
}

#[test]
fn unknown_design_is_rejected() {
    let dir = TempDir::new().unwrap();
    let o = fpamsuit(dir.path(), &["design", "--configs", "2,7"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains('7'));
}

#[test]
fn design_table_has_a_column_per_evaluation() {
    let dir = TempDir::new().unwrap();
    assert!(fpamsuit(dir.path(), &["design"]).status.success());
    let text = fs::read_to_string(dir.path().join("design.csv")).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "metric,unit,1_FE,1_LD,2_FE,2_LD,3_AR,4_AR,5_AR,6_AR");
    assert!(dir.path().join("profile_5_AR.csv").exists());
}

#[test]
fn reruns_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        assert!(fpamsuit(dir.path(), &["design", "--resolution", "2"]).status.success());
    }
    let strip = |p: &Path| fs::read_to_string(p).unwrap().replace(&p.parent().unwrap().display().to_string(), "");
    for name in ["design.csv", "design.json", "profile_1_LD.csv"] {
        assert_eq!(strip(&a.path().join(name)), strip(&b.path().join(name)), "{name}");
    }
}

#[test]
fn track_reports_metrics() {
    let dir = TempDir::new().unwrap();
    let o = fpamsuit(dir.path(), &["track", "--axis", "LD", "--period", "10", "--cycles", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = json(&dir.path().join("track_LD.json"));
    assert!(summary["delay_s"].as_f64().unwrap() >= 0.0);
    assert!(summary["rmse_deg"].as_f64().unwrap().is_finite());
    assert_eq!(summary["samples"], 2000);
    let rows = data_rows(&dir.path().join("track_LD.csv"));
    assert_eq!(rows.len(), 2000);
    assert_eq!(rows[0].split(',').count(), 8);
}

#[test]
fn shipped_defaults_read_back() {
    let dir = TempDir::new().unwrap();
    assert!(fpamsuit(dir.path(), &["defaults"]).status.success());
    let p = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    let o = fpamsuit(
        dir.path(),
        &[
            "--config",
            &p("default_suit.json"),
            "track",
            "--plant",
            &p("plant.json"),
            "--controller",
            &p("controller_FE.json"),
            "--cycles",
            "1",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn malformed_config_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("suit.json");
    fs::write(&cfg, r#"{"name": "x", "actuators": []}"#).unwrap();
    let o = fpamsuit(dir.path(), &["--config", cfg.to_str().unwrap(), "solve", "--pose", "0,0,0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("solve.json").exists());
}

#[test]
fn neutral_pose_is_compensated() {
    let dir = TempDir::new().unwrap();
    let o = fpamsuit(dir.path(), &["solve", "--pose", "0,0,0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = json(&dir.path().join("solve.json"));
    assert_eq!(report["grav_ok"], true);
    assert_eq!(report["pressures"].as_array().unwrap().len(), 5);
    assert_eq!(report["manifest"]["command"], "solve");
}
