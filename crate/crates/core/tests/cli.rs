mod common;

use std::path::Path;
use std::process::{Command, Output};

use robvario::app::{load_asc, AscRaster};

fn robvario(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robvario")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn simulate_contaminate_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let (g, c, cells, out) = (dir.path().join("g.asc"), dir.path().join("c.asc"), dir.path().join("cells.csv"), dir.path().join("v.csv"));
    let o = robvario(&["simulate", "--nx", "20", "--ny", "18", "--seed", "4", "--mean", "-2.5", "--out", path(&g)]);
    assert!(o.status.success(), "{o:?}");
    let grid = load_asc(&g).unwrap();
    assert_eq!((grid.nx(), grid.ny()), (20, 18));

    let o = robvario(&[
        "contaminate", path(&g), "--contam", "kind=block,eps=0.05,mu0=3,sigma0=1", "--seed", "2", "--out", path(&c),
        "--cells", path(&cells),
    ]);
    assert!(o.status.success(), "{o:?}");
    let replaced = std::fs::read_to_string(&cells).unwrap().lines().count() - 1;
    assert_eq!(replaced, 18);
    let contaminated = load_asc(&c).unwrap();
    let changed = grid.values().iter().zip(contaminated.values()).filter(|(a, b)| a != b).count();
    assert_eq!(changed, replaced);

    let o = robvario(&["estimate", path(&c), "--hmax", "3", "--estimators", "matheron,mcd.org.re", "--out", path(&out)]);
    assert!(o.status.success(), "{o:?}");
    let rows = csv_rows(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(rows[0], ["estimator", "direction", "lag", "dx", "dy", "distance", "gamma2", "count"]);
    // two estimators x (3 + 3 axis lags + 2 + 2 diagonal lags)
    assert_eq!(rows.len(), 1 + 2 * 10);
    let swne = rows.iter().find(|r| r[0] == "matheron" && r[1] == "swne" && r[2] == "2").unwrap();
    assert_eq!((swne[3].as_str(), swne[4].as_str()), ("2", "2"));
    assert_eq!(swne[5].parse::<f64>().unwrap(), 8f64.sqrt());
    assert_eq!(swne[7], (18 * 16).to_string());
    // 17 significant digits
    assert!(swne[6].contains('e') && swne[6].split('e').next().unwrap().len() == 18);
}

#[test]
fn standardize_scales_by_mad() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.asc");
    robvario(&["simulate", "--nx", "12", "--ny", "12", "--seed", "9", "--out", path(&g)]);
    let raw = robvario(&["estimate", path(&g), "--estimators", "matheron,genton", "--directions", "ew"]);
    let std = robvario(&["estimate", path(&g), "--estimators", "matheron,genton", "--directions", "ew", "--standardize"]);
    assert!(raw.status.success() && std.status.success());
    let note = String::from_utf8(std.stderr).unwrap();
    let scale: f64 = note.trim().rsplit(' ').next().unwrap().parse().unwrap();
    let (a, b) = (csv_rows(&String::from_utf8(raw.stdout).unwrap()), csv_rows(&String::from_utf8(std.stdout).unwrap()));
    for (ra, rb) in a.iter().zip(&b).skip(1) {
        let (x, y): (f64, f64) = (ra[6].parse().unwrap(), rb[6].parse().unwrap());
        assert!((x - y * scale * scale).abs() <= 1e-8 * x, "{x} vs {}", y * scale * scale);
    }
}

#[test]
fn quality_mask_on_fixture() {
    let dir = common::fixture_dir();
    let scene = dir.join("cloud_scene.asc");
    let quality = dir.join("cloud_quality.asc");
    let o = robvario(&["estimate", path(&scene), "--quality", path(&quality), "--estimators", "matheron", "--directions", "ew", "--hmax", "1"]);
    assert!(o.status.success(), "{o:?}");
    let clear = csv_rows(&String::from_utf8(o.stdout).unwrap());
    let o = robvario(&["estimate", path(&scene), "--quality", path(&quality), "--clear-codes", "0,2,4", "--estimators", "matheron", "--directions", "ew", "--hmax", "1"]);
    let all = csv_rows(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(all[1][7], (60 * 59).to_string());
    assert!(clear[1][7].parse::<usize>().unwrap() < 60 * 59);
}

#[test]
fn studies_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cf = dir.path().join("cf.csv");
    let common = ["--nx", "8", "--ny", "8", "--hmax", "3", "--hmax-diag", "2", "--reps", "10", "--estimators", "matheron,genton"];
    let mut args = vec!["study-corrfac"];
    args.extend(common);
    args.extend(["--out", path(&cf)]);
    let o = robvario(&args);
    assert!(o.status.success(), "{o:?}");
    let rows = csv_rows(&std::fs::read_to_string(&cf).unwrap());
    assert_eq!(rows[0], ["estimator", "direction", "c_opt", "se"]);
    assert_eq!(rows.len(), 1 + 2 * 4);

    let mut args = vec!["study-biasrmse"];
    args.extend(common);
    args.extend(["--contam", "kind=isolated,eps=0.1,mu0=5,sigma0=1", "--corrfac-csv", path(&cf), "--table", "--table-lags", "1,3"]);
    let o = robvario(&args);
    assert!(o.status.success(), "{o:?}");
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.starts_with("estimator"));
    assert_eq!(table.lines().count(), 1 + 2 * 4);

    let mut args = vec!["study-biasrmse"];
    args.extend(common);
    args.extend(["--correction", "matheron:ew=2"]);
    let o = robvario(&args);
    let rows = csv_rows(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(rows[0][..5], ["estimator", "direction", "lag", "bias", "rmse"]);
    assert_eq!(rows.len(), 1 + 2 * (3 + 3 + 2 + 2));
}

#[test]
fn breakdown_table() {
    let o = robvario(&["breakdown", "--scenario", "block", "--estimators", "mcd.diff.mod", "--nx", "50", "--hmax", "4", "--m", "1"]);
    let rows = csv_rows(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(rows[1], ["block", "mcd.diff.mod", "50", "4", "1", "9", "50", "1.7999999999999999e-1"]);
}

#[test]
fn exit_codes() {
    assert_eq!(robvario(&["--version"]).status.code(), Some(0));
    assert_eq!(robvario(&["estimate"]).status.code(), Some(2));
    assert_eq!(robvario(&["simulate", "--model", "spherical:-1:2"]).status.code(), Some(2));
    assert_eq!(robvario(&["estimate", "/nonexistent.asc"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.asc");
    std::fs::write(&bad, "ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 x\n").unwrap();
    let o = robvario(&["estimate", path(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("line 6, column 3"));

    // too few cells for any modified-estimator partition: numerical failure
    let g = dir.path().join("g.asc");
    robvario(&["simulate", "--nx", "6", "--ny", "6", "--out", path(&g)]);
    let o = robvario(&["estimate", path(&g), "--estimators", "mcd.diff.mod", "--hmax", "2", "--m-x", "3"]);
    assert_eq!(o.status.code(), Some(3), "{o:?}");
    let _ = AscRaster::parse(&std::fs::read_to_string(&g).unwrap()).unwrap();
}
