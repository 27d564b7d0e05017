use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn honeycomb(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_honeycomb")).current_dir(dir).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn dynamics_writes_csv_with_header_echo() {
    let dir = tempfile::tempdir().unwrap();
    let out = honeycomb(dir.path(), &["dynamics", "--N", "16", "--tmax", "4", "--g", "0.2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("dynamics.csv")).unwrap();
    assert!(csv.contains("# command = dynamics"));
    assert!(csv.contains("# g = 0.2"));
    assert!(csv.contains("# integrator = "));
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "t,re_Ce,im_Ce,pop_e");
    assert_eq!(rows.len(), 1 + 5);
    let first: Vec<f64> = rows[1].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(first, vec![0.0, 1.0, 0.0, 1.0]);
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["two-emitter", "--N", "16", "--tmax", "20", "--dt-record", "0.5", "--workers", "3"];
    assert_eq!(code(&honeycomb(dir.path(), &args)), 0);
    let a = fs::read(dir.path().join("two-emitter.csv")).unwrap();
    let mut args1 = args.to_vec();
    args1[8] = "1";
    assert_eq!(code(&honeycomb(dir.path(), &args1)), 0);
    let b = fs::read(dir.path().join("two-emitter.csv")).unwrap();
    assert_eq!(a, b, "worker count must not change the output");
    assert_eq!(code(&honeycomb(dir.path(), &args1)), 0);
    assert_eq!(b, fs::read(dir.path().join("two-emitter.csv")).unwrap());
}

#[test]
fn json_output_parses() {
    let dir = tempfile::tempdir().unwrap();
    let out = honeycomb(dir.path(), &["self-energy", "--scan", "-3:3:1", "--format", "json", "--out", "sub/se.json"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("sub/se.json")).unwrap()).unwrap();
    let e = v["columns"]["E"].as_array().unwrap();
    assert_eq!(e.len(), 7);
    // only +-2 are analytic points of this scan
    let gamma = v["columns"]["gamma"].as_array().unwrap();
    for (i, x) in gamma.iter().enumerate() {
        assert_eq!(x.is_null(), i != 1 && i != 5, "{i}");
    }
    assert_eq!(v["metadata"]["command"], "self-energy");
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.cfg"), "# test\nN = 8\ng = 0.4\ntmax = 2\n").unwrap();
    let out = honeycomb(dir.path(), &["dynamics", "--config", "run.cfg", "--g", "0.1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("dynamics.csv")).unwrap();
    assert!(csv.contains("# N = 8\n"));
    assert!(csv.contains("# g = 0.1\n"));
}

#[test]
fn validation_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["dynamics", "--N", "1"],
        vec!["dynamics", "--g", "-0.1"],
        vec!["dynamics", "--dt-record", "0"],
        vec!["dynamics", "--unknown-flag"],
        vec!["--preset", "fig3", "dynamics"],
        vec![],
        vec!["sweep"],
    ] {
        let out = honeycomb(dir.path(), &args);
        assert_eq!(code(&out), 2, "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    fs::write(dir.path().join("bad.cfg"), "colour = blue\n").unwrap();
    assert_eq!(code(&honeycomb(dir.path(), &["dynamics", "--config", "bad.cfg"])), 2);
    assert_eq!(code(&honeycomb(dir.path(), &["dynamics", "--config", "missing.cfg"])), 2);
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn io_errors_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("blocker"), "").unwrap();
    let out = honeycomb(dir.path(), &["poles", "--out", "blocker/poles.csv"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn failed_run_keeps_previous_file() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&honeycomb(dir.path(), &["dynamics", "--N", "8", "--tmax", "1"])), 0);
    let before = fs::read(dir.path().join("dynamics.csv")).unwrap();
    assert_eq!(code(&honeycomb(dir.path(), &["dynamics", "--N", "8", "--tmax", "-1"])), 2);
    assert_eq!(fs::read(dir.path().join("dynamics.csv")).unwrap(), before);
    let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, vec![std::ffi::OsString::from("dynamics.csv")]);
}

#[test]
fn sweep_writes_one_file_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = honeycomb(dir.path(), &["sweep", "--N", "8", "--tmax", "2", "--sweep-param", "delta", "--values", "-1,0.5"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(manifest.contains("sweep_run0.csv"));
    let run1 = fs::read_to_string(dir.path().join("sweep_run1.csv")).unwrap();
    assert!(run1.contains("# delta = 0.5\n"));
}

#[test]
fn energies_and_times_follow_the_hopping_unit() {
    let dir = tempfile::tempdir().unwrap();
    // J = 2 with every energy doubled and every time halved is the same run
    assert_eq!(code(&honeycomb(dir.path(), &["dynamics", "--N", "8", "--g", "0.3", "--delta", "0.5", "--tmax", "4", "--out", "a.csv"])), 0);
    let args = ["dynamics", "--N", "8", "--J", "2", "--g", "0.6", "--delta", "1", "--tmax", "2", "--dt-record", "0.5", "--out", "b.csv"];
    assert_eq!(code(&honeycomb(dir.path(), &args)), 0);
    let pops = |name: &str| -> Vec<f64> {
        fs::read_to_string(dir.path().join(name))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
            .collect()
    };
    let (a, b) = (pops("a.csv"), pops("b.csv"));
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-12, "{x} vs {y}");
    }
}

#[test]
fn poles_and_presets_emit_residual_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = honeycomb(dir.path(), &["poles", "--delta", "2.5", "--g", "0.1"]);
    assert_eq!(code(&out), 0);
    let csv = fs::read_to_string(dir.path().join("poles.csv")).unwrap();
    assert!(csv.contains("kind,sheet,re_z,im_z,re_residue,im_residue"));
    assert!(csv.contains("# markov_status = "));

    let out = honeycomb(dir.path(), &["--preset", "figA2b"]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("figA2b.csv") && stdout.contains("figA2b_residuals.csv"));
    let res = fs::read_to_string(dir.path().join("figA2b_residuals.csv")).unwrap();
    assert!(res.lines().filter(|l| !l.starts_with('#')).skip(1).all(|l| l.ends_with(",yes") || l.ends_with(",n/a")));
    assert!(res.contains(",n/a"));
}
