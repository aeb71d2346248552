use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cavlab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cavlab"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const FLAT: &str = "# uniform flow, no obstacle
geometry.bump_height = 0
geometry.h_mesh = 0.2
solver.epsilons = 0.2, 0.1, 0.05
output.dir = flat
";

const COARSE: &str = "geometry.h_mesh = 0.16
solver.epsilons = 0.2, 0.1
output.dir = coarse
";

#[test]
fn check_passes_on_uniform_flow() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("flat.txt"), FLAT).unwrap();
    let o = cavlab(&["check", "--config", "flat.txt"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let run = dir.path().join("flat");
    let rep: Value = serde_json::from_str(&fs::read_to_string(run.join("report.json")).unwrap()).unwrap();
    assert_eq!(rep["pass"], true);
    for r in rep["records"].as_array().unwrap() {
        for key in ["dissipation", "mass_residual", "curl_residual", "obstacle_trace_min"] {
            assert!(r[key].as_f64().unwrap().abs() < 1e-14, "{key}: {}", r[key]);
        }
        for d in r["entropy"][0]["defects"].as_array().unwrap() {
            assert!(d.as_f64().unwrap().abs() < 1e-14);
        }
    }
    for f in ["config.txt", "mesh.vtk", "fields_eps_0.05.csv", "plotdata/sweep.csv", "plotdata/cauchy.csv"] {
        assert!(run.join(f).is_file(), "{f}");
    }
    let again = cavlab(&["check", "--run-dir", "flat"], dir.path());
    assert_eq!(code(&again), 0);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.txt"), "geometry.h_mesh = 0.2\nsolver.epsilon = 0.1\n").unwrap();
    let o = cavlab(&["sweep", "--config", "bad.txt"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("unknown key 'solver.epsilon'"), "{}", stderr(&o));
    fs::write(dir.path().join("dup.txt"), "flow.q_inf = 0.9\nflow.q_inf = 0.95\n").unwrap();
    assert_eq!(code(&cavlab(&["check", "--config", "dup.txt"], dir.path())), 2);
    fs::write(dir.path().join("range.txt"), "flow.q_inf = 0.5\n").unwrap();
    assert_eq!(code(&cavlab(&["solve", "--config", "range.txt"], dir.path())), 2);
    assert_eq!(code(&cavlab(&["sweep", "--config", "missing.txt"], dir.path())), 2);
    assert_eq!(code(&cavlab(&["frobnicate"], dir.path())), 2);
    assert_eq!(code(&cavlab(&["kernel", "build", "--kind", "odd", "--out", "x.bin"], dir.path())), 2);
    assert_eq!(code(&cavlab(&["report", "nowhere"], dir.path())), 2);
    assert_eq!(code(&cavlab(&["--help"], dir.path())), 0);
}

#[test]
fn kernel_build_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let b = cavlab(&["kernel", "build", "--kind", "regular", "--out", "reg.bin"], dir.path());
    assert_eq!(code(&b), 0, "{}", stderr(&b));
    let bytes = fs::read(dir.path().join("reg.bin")).unwrap();
    assert_eq!(&bytes[..5], b"CAVK1");
    let v = cavlab(&["kernel", "verify", "reg.bin"], dir.path());
    let rep: Value = serde_json::from_slice(&v.stdout).unwrap();
    assert_eq!(rep["kind"], "regular");
    assert_eq!(rep["cancellation"]["pass"], true);
    assert!(rep["cancellation"]["drift"].as_f64().unwrap() < 0.1);
    assert_eq!(rep["envelope"]["pass"], true);
    assert_eq!(rep["closure_pass"], true);
    // only the xi = 5 vacuum limit misses its tolerance
    let failing: Vec<f64> = rep["limits"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|l| l["pass"] == false)
        .map(|l| l["xi"].as_f64().unwrap())
        .collect();
    assert_eq!(failing, vec![5.0]);
    assert_eq!(code(&v), if rep["pass"] == true { 0 } else { 1 });
    fs::write(dir.path().join("junk.bin"), b"CAVK2....").unwrap();
    assert_eq!(code(&cavlab(&["kernel", "verify", "junk.bin"], dir.path())), 1);
}

#[test]
fn rerun_from_stored_config_is_bitwise_identical() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("coarse.txt"), COARSE).unwrap();
    let a = cavlab(&["sweep", "--config", "coarse.txt"], dir.path());
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    let b = cavlab(&["sweep", "--config", "coarse/config.txt", "--out", "again"], dir.path());
    assert_eq!(code(&b), 0, "{}", stderr(&b));
    let (ra, rb) = (dir.path().join("coarse/report.json"), dir.path().join("again/report.json"));
    assert_eq!(fs::read(ra).unwrap(), fs::read(rb).unwrap());
    for f in ["fields_eps_0.1.csv", "mesh.vtk", "plotdata/sweep.csv"] {
        assert_eq!(fs::read(dir.path().join("coarse").join(f)).unwrap(), fs::read(dir.path().join("again").join(f)).unwrap());
    }
    let stored = fs::read_to_string(dir.path().join("coarse/config.txt")).unwrap();
    assert!(stored.contains("geometry.h_mesh = 0.16") && stored.contains("solver.epsilons = 0.2, 0.1"));
    let rep = cavlab(&["report", "coarse"], dir.path());
    assert_eq!(code(&rep), 0);
    assert!(String::from_utf8_lossy(&rep.stdout).contains("invariant_regions"));
}

#[test]
fn fields_csv_has_spec_columns() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("coarse.txt"), COARSE).unwrap();
    let o = cavlab(&["solve", "--config", "coarse.txt", "--eps", "0.3", "--out", "one"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut r = csv::Reader::from_path(dir.path().join("one/fields_eps_0.3.csv")).unwrap();
    let head: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(head, ["x", "y", "sigma", "theta", "rho", "q", "Wminus", "Wplus"]);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert!(rows.len() > 100);
    for row in &rows {
        let v: Vec<f64> = row.iter().map(|s| s.parse().unwrap()).collect();
        assert!((0.5 * (v[6] + v[7]) - v[3]).abs() < 1e-12);
        assert!(v[4] > 0.0 && v[5] >= 0.9 - 1e-3);
    }
    let stored = fs::read_to_string(dir.path().join("one/config.txt")).unwrap();
    assert!(stored.contains("solver.epsilons = 0.3\n"));
}

#[test]
fn chart_table_and_entropy_margins() {
    let dir = tempfile::tempdir().unwrap();
    let o = cavlab(&["tables", "--points", "50", "--out", "chart.csv"], dir.path());
    assert_eq!(code(&o), 0);
    let mut r = csv::Reader::from_path(dir.path().join("chart.csv")).unwrap();
    assert_eq!(r.headers().unwrap().len(), 8);
    let rows: Vec<Vec<f64>> = r.records().map(|x| x.unwrap().iter().map(|s| s.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 50);
    for w in rows.windows(2) {
        assert!(w[1][0] > w[0][0] && w[1][1] > w[0][1] && w[1][2] < w[0][2]);
    }
    let e = cavlab(&["entropy", "check", "--out", "margins.csv"], dir.path());
    assert_eq!(code(&e), 0, "{}", stderr(&e));
    let mut r = csv::Reader::from_path(dir.path().join("margins.csv")).unwrap();
    for row in r.records() {
        let row = row.unwrap();
        assert_eq!(row[2].parse::<f64>().unwrap(), 1.0);
        assert!(row[3].parse::<f64>().unwrap() > 0.0);
    }
    let b = cavlab(&["basis-check"], dir.path());
    assert_eq!(code(&b), 0);
    let rep: Value = serde_json::from_slice(&b.stdout).unwrap();
    assert_eq!(rep["pass"], true);
}
