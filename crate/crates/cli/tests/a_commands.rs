use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use rancova::calibrate::draw_null_groups;
use rancova::rng::stream;
use rancova_cli::cache::Origin;
use rancova_cli::commands::{RESULTS_FILE, STUDY_CSV, SUMMARY_FILE, SURFACE_FILE};
use rancova_cli::{
    cmd_analyze, cmd_calibrate, cmd_simulate, read_surface, AnalyzeOptions, CalibrateOptions, ColumnMap, Kind, Method,
    Tuning,
};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rancova"))
}

/// Writes a two-group file; group 2 is a copy of group 1 when `copy` is set.
fn write_data(path: &Path, seed: u64, shift2: f64, copy: bool) {
    let mut rng = stream(seed, 42, 0, 0);
    let (g1, g2) = draw_null_groups(50, 50, &mut rng).unwrap();
    let g2 = if copy { g1.clone() } else { g2 };
    let mut s = String::from("y,x1,x2,group\n");
    for (g, data, shift) in [(1, &g1, 0.0), (2, &g2, shift2)] {
        for (i, y) in data.y().iter().enumerate() {
            let x = data.x().row(i);
            let _ = writeln!(s, "{},{},{},{g}", y + shift, x[0], x[1]);
        }
    }
    fs::write(path, s).unwrap();
}

fn tuning() -> Tuning {
    Tuning { replicates: 300, ..Tuning::default() }
}

fn analyze(dir: &Path, data: PathBuf, method: Method) -> AnalyzeOptions {
    AnalyzeOptions {
        data,
        columns: ColumnMap::default(),
        out_dir: dir.join("out"),
        method,
        tuning: tuning(),
        cache_dir: dir.join("cache"),
        force: false,
    }
}

#[test]
fn identical_groups_show_no_difference() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("same.csv");
    write_data(&data, 1, 0.0, true);
    let report = cmd_analyze(&analyze(tmp.path(), data, Method::All)).unwrap();
    assert_eq!(report.m2.len(), 2);
    assert!(report.m2.iter().all(|m| !m.reject));
    assert_eq!(report.m1.as_ref().unwrap().rejected, 0);
    let rows = read_surface(&tmp.path().join("out").join(SURFACE_FILE)).unwrap();
    assert_eq!(rows.len(), 25);
    assert!(rows.iter().filter_map(|r| r.diff).all(|d| d == 0.0));
    assert!(rows.iter().filter_map(|r| r.p_value).all(|p| p == 1.0));
}

#[test]
fn large_shift_rejects_and_surface_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("shift.csv");
    write_data(&data, 2, 5.0, false);
    let opts = analyze(tmp.path(), data, Method::All);
    let report = cmd_analyze(&opts).unwrap();
    assert!(report.m2.iter().all(|m| m.reject), "{:?}", report.m2);
    assert!(report.m1.as_ref().unwrap().rejected > 0);
    assert_eq!(report.surface.points, 25);

    let out = tmp.path().join("out");
    let rows = read_surface(&out.join(SURFACE_FILE)).unwrap();
    assert!(rows.iter().filter_map(|r| r.diff).all(|d| d < -3.0));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join(RESULTS_FILE)).unwrap()).unwrap();
    assert_eq!(json["m2"][1]["combiner"]["kind"], "qbar");
    assert_eq!(json["m2"][0]["k"], 25);
    assert!(fs::read_to_string(out.join(SUMMARY_FILE)).unwrap().contains("with p <= .05"));

    // write the rows again and re-read: every value survives
    let again = tmp.path().join("again.csv");
    rancova_cli::write_surface(&again, &rows).unwrap();
    assert_eq!(read_surface(&again).unwrap(), rows);
    assert_eq!(fs::read(&again).unwrap(), fs::read(out.join(SURFACE_FILE)).unwrap());

    // a second run reuses the cache and reproduces every file
    let first: Vec<Vec<u8>> = [RESULTS_FILE, SURFACE_FILE, SUMMARY_FILE].iter().map(|f| fs::read(out.join(f)).unwrap()).collect();
    cmd_analyze(&opts).unwrap();
    let second: Vec<Vec<u8>> = [RESULTS_FILE, SURFACE_FILE, SUMMARY_FILE].iter().map(|f| fs::read(out.join(f)).unwrap()).collect();
    assert_eq!(first, second);
}

#[test]
fn m1_only_surface_uses_m1_points() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("d.csv");
    write_data(&data, 3, 0.0, false);
    let report = cmd_analyze(&analyze(tmp.path(), data, Method::M1)).unwrap();
    assert!(report.m2.is_empty());
    assert_eq!(report.surface.points, report.m1.unwrap().points.len());
    assert!(!tmp.path().join("cache").exists());
}

#[test]
fn calibration_cache_is_reused_and_versioned() {
    let tmp = tempfile::tempdir().unwrap();
    let mut opts = CalibrateOptions {
        n1: 50,
        n2: 50,
        kind: Kind::Qbar,
        tuning: tuning(),
        cache_dir: tmp.path().to_path_buf(),
        force: false,
    };
    let first = cmd_calibrate(&opts).unwrap();
    assert_eq!(first[0].origin, Origin::Built);
    let bytes = fs::read(&first[0].path).unwrap();
    let second = cmd_calibrate(&opts).unwrap();
    assert_eq!(second[0].origin, Origin::Cached);
    assert_eq!(fs::read(&second[0].path).unwrap(), bytes);

    opts.force = true;
    let forced = cmd_calibrate(&opts).unwrap();
    assert_eq!(forced[0].origin, Origin::Built);
    assert_eq!(fs::read(&forced[0].path).unwrap(), bytes);

    // a table written by another algorithm version is not reused
    let text = String::from_utf8(bytes.clone()).unwrap().replace(rancova::calibrate::ALGORITHM_VERSION, "older");
    fs::write(&first[0].path, text).unwrap();
    opts.force = false;
    let rebuilt = cmd_calibrate(&opts).unwrap();
    assert_eq!(rebuilt[0].origin, Origin::Built);
    assert_eq!(fs::read(&rebuilt[0].path).unwrap(), bytes);

    opts.tuning.alpha = 0.10;
    let wider = cmd_calibrate(&opts).unwrap();
    assert!(first[0].critical <= wider[0].critical);
    assert_ne!(wider[0].path, first[0].path);
}

#[test]
fn simulate_single_condition() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("one.toml");
    fs::write(&config, "reps = 100\ncalibration_reps = 200\n[[condition]]\ng = 0.0\nh = 0.0\nassoc = \"S1\"\n").unwrap();
    let reports = cmd_simulate(&config, &tmp.path().join("sim")).unwrap();
    assert_eq!(reports.len(), 1);
    let csv = fs::read_to_string(tmp.path().join("sim").join(STUDY_CSV)).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("g,h,S,Qbar,TPM,M1"));
}

fn exit_code(args: &[&str], dir: &Path) -> (i32, String) {
    let out = bin().args(args).current_dir(dir).env_remove("RANCOVA_CACHE_DIR").output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    fs::write(dir.join("bad_group.csv"), "y,x1,x2,group\n1,0,0,1\n2,0,1,3\n").unwrap();
    let (code, err) = exit_code(&["analyze", "bad_group.csv"], dir);
    assert_eq!(code, 3);
    assert!(err.contains("line 3"), "{err}");

    fs::write(dir.join("tiny.csv"), "y,x1,x2,group\n1,0,0,1\n2,1,1,1\n3,0,1,2\n4,1,0,2\n").unwrap();
    let (code, err) = exit_code(&["analyze", "tiny.csv"], dir);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("too small"), "{err}");

    // covariate clouds far apart: no design point is comparable
    let mut rng = stream(8, 0, 0, 0);
    let (g1, g2) = draw_null_groups(30, 30, &mut rng).unwrap();
    let mut s = String::from("y,x1,x2,group\n");
    for (g, data, off) in [(1, &g1, 0.0), (2, &g2, 50.0)] {
        for (i, y) in data.y().iter().enumerate() {
            let x = data.x().row(i);
            let _ = writeln!(s, "{y},{},{},{g}", x[0] + off, x[1] + off);
        }
    }
    fs::write(dir.join("apart.csv"), s).unwrap();
    let (code, err) = exit_code(&["analyze", "apart.csv", "--method", "m1"], dir);
    assert_eq!(code, 4, "{err}");

    fs::write(dir.join("broken.toml"), "reps = 100\n\n[[condition]]\ng = 0\nh = \"big\"\nassoc = \"S1\"\n").unwrap();
    let (code, err) = exit_code(&["simulate", "broken.toml"], dir);
    assert_eq!(code, 8);
    assert!(err.contains("broken.toml:5"), "{err}");

    let (code, _) = exit_code(&["analyze", "missing.csv"], dir);
    assert_eq!(code, 3);
    let (code, _) = exit_code(&["calibrate", "--n1", "50"], dir);
    assert_eq!(code, 2);
}

#[test]
fn binary_analyze_writes_outputs_and_honors_cache_env() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    write_data(&dir.join("d.csv"), 4, 0.0, false);
    let out = bin()
        .args(["analyze", "d.csv", "--method", "m2-qbar", "--B", "200", "--out", "res"])
        .current_dir(dir)
        .env("RANCOVA_CACHE_DIR", dir.join("envcache"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("M2 (Qbar)"), "{stdout}");
    assert_eq!(fs::read_dir(dir.join("envcache")).unwrap().count(), 1);
    for f in [RESULTS_FILE, SURFACE_FILE, SUMMARY_FILE] {
        assert!(dir.join("res").join(f).exists());
    }
}
