use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ambidiff::snapshot::read_snapshot;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ambidiff"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn summary(out: &Output) -> Vec<(String, String)> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .filter_map(|l| l.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
        .collect()
}

fn value(s: &[(String, String)], key: &str) -> String {
    s.iter()
        .find(|(k, _)| k == key)
        .unwrap_or_else(|| panic!("no {key} in summary"))
        .1
        .clone()
}

fn assert_diagnostic(out: &Output, code: i32, kind: &str) {
    assert_eq!(out.status.code(), Some(code), "{}", String::from_utf8_lossy(&out.stderr));
    let err = String::from_utf8_lossy(&out.stderr);
    let lines: Vec<_> = err.lines().collect();
    assert_eq!(lines.len(), 1, "{err}");
    assert!(lines[0].starts_with(&format!("ambidiff: error[{kind}]: ")), "{err}");
}

/// Oracle-style physical problem on a small grid.
const PHYSICAL: &str = "\
[physical]
d_e = 2
d_i = 1
mu_e = 2
mu_i = 1
alpha_i = 1
alpha_r = 1
n_neutral = 1
e_charge = 2000
temperature = 1.4485941e19
lambda = 2.6666666666666665
grid = 12
boundary = ramp
ramp_axis = both
ramp_start = 0.1
ramp_end = 0.9
";

fn physical_config(dir: &Path, extra: &str) -> PathBuf {
    let p = dir.join("phys.ini");
    fs::write(&p, format!("{PHYSICAL}[solver]\ntau_end = 0.1\n{extra}")).unwrap();
    p
}

#[test]
fn fig2_scenario_reports_positive_shift() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["fig2", "--set", "dimensionless.grid=24", "--set", "dimensionless.v1=3", "--set", "dimensionless.v2=3"])
        .arg("--output")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let s = summary(&out);
    assert_eq!(value(&s, "scenario"), "fig2");
    assert!(value(&s, "centroid_shift_x").parse::<f64>().unwrap() > 0.0);
    assert!(value(&s, "centroid_shift_y").parse::<f64>().unwrap() > 0.0);
    let on_disk = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert_eq!(on_disk.as_bytes(), out.stdout.as_slice());
    let u = read_snapshot(dir.path().join("u_final.csv")).unwrap();
    assert_eq!((u.nx, u.ny), (24, 24));
}

#[test]
fn fig1_preset_file_is_monotone_at_rest() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("fig1")
        .arg("--config")
        .arg(configs().join("fig1.ini"))
        .args(["--set", "dimensionless.v1=0", "--set", "dimensionless.v2=0", "--set", "dimensionless.grid=32"])
        .arg("--output")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let u = read_snapshot(dir.path().join("u_final.csv")).unwrap();
    // The steady ramp falls monotonically along ξ1 on every row.
    for row in u.values.chunks(u.nx) {
        assert!(row.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn full_and_compare_modes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = physical_config(dir.path(), "snapshot_every = 1000\n");
    let out = bin()
        .arg("compare")
        .arg("-c")
        .arg(&cfg)
        .arg("-o")
        .arg(dir.path().join("cmp"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&out);
    assert!(value(&s, "max_deviation").parse::<f64>().unwrap() <= 0.05);
    assert_eq!(value(&s, "neutrality_valid"), "true");
    assert!(value(&s, "max_gauss_residual").parse::<f64>().unwrap() <= 1e-10);
    for f in ["n_e_initial.csv", "n_i_initial.csv", "n_e_final.csv", "n_i_final.csv", "u_final.csv", "n_e_step000001000.csv"] {
        assert!(dir.path().join("cmp").join(f).exists(), "{f}");
    }
    let out = bin().arg("full").arg("-c").arg(&cfg).arg("-o").arg(dir.path().join("full")).output().unwrap();
    assert!(out.status.success());
    assert!(summary(&out).iter().all(|(k, _)| k != "max_deviation"));
}

#[test]
fn recover_field_mode() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = physical_config(dir.path(), "");
    let out = bin().arg("recover-field").arg("-c").arg(&cfg).arg("-o").arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&out);
    assert!(value(&s, "field_residual").parse::<f64>().unwrap() <= 1e-10);
    assert!(value(&s, "max_field").parse::<f64>().unwrap() > 0.0);
    for f in ["psi.csv", "e_x.csv", "e_y.csv", "n_e.csv"] {
        assert!(dir.path().join(f).exists());
    }
}

#[test]
fn check_neutrality_passes_and_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = physical_config(dir.path(), "snapshot_every = 500\n");
    let out = bin().arg("check-neutrality").arg("-c").arg(&cfg).arg("-o").arg(dir.path().join("ok")).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(summary(&out).iter().all(|(k, _)| k != "first_violation_tau"));
    let out = bin()
        .arg("check-neutrality")
        .arg("-c")
        .arg(&cfg)
        .args(["--set", "physical.e_charge=0.001", "--set", "physical.temperature=7.242970516039921e12"])
        .arg("-o")
        .arg(dir.path().join("weak"))
        .output()
        .unwrap();
    assert_diagnostic(&out, 9, "neutrality");
    let written = fs::read_to_string(dir.path().join("weak/summary.txt")).unwrap();
    let s = summary(&Output { stdout: written.into_bytes(), ..out });
    assert!(value(&s, "first_violation_tau").parse::<f64>().unwrap() > 0.0);
}

#[test]
fn error_paths_have_distinct_codes_and_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    };
    let o = dir.path().join("o");
    let run = |args: &[&str], cfg: Option<&Path>| {
        let mut c = bin();
        c.args(args).arg("-o").arg(&o);
        if let Some(p) = cfg {
            c.arg("-c").arg(p);
        }
        c.output().unwrap()
    };
    assert_diagnostic(&run(&["ambipolar", "--bogus"], None), 1, "usage");
    assert_diagnostic(&run(&["nonsense"], None), 2, "config");
    let bad_key = write("k.ini", "[dimensionless]\nphi = 1\nbogus = 2\n");
    assert_diagnostic(&run(&["ambipolar"], Some(&bad_key)), 2, "config");
    assert_diagnostic(&run(&["ambipolar"], None), 2, "config");
    let small = write("s.ini", "[dimensionless]\nphi = 1\ndelta = 1\ngrid = 2\nboundary = 1\n");
    assert_diagnostic(&run(&["ambipolar"], Some(&small)), 3, "validation");
    let ragged = write("ragged.csv", "# ambidiff grid nx=3 ny=3 tau=0\n1,1,1\n1,1\n1,1,1\n");
    let from_file = write(
        "f.ini",
        &format!("[dimensionless]\nphi = 1\ndelta = 1\ngrid = 3\nboundary = 1\ninitial = file:{}\n", ragged.display()),
    );
    assert_diagnostic(&run(&["ambipolar"], Some(&from_file)), 2, "config");
    let unstable = write(
        "u.ini",
        "[dimensionless]\nphi = 50\ndelta = 2\ngrid = 16\nboundary = ramp\n[solver]\ndt = 0.01\nmax_steps = 10000\n",
    );
    assert_diagnostic(&run(&["ambipolar"], Some(&unstable)), 5, "instability");
    assert_diagnostic(&run(&["fig1"], Some(&dir.path().join("missing.ini"))), 8, "io");
}

#[test]
fn sweep_runs_in_separate_directories_and_matches_serial_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for jobs in ["1", "3"] {
        let base = dir.path().join(format!("jobs{jobs}"));
        let out = bin()
            .args(["fig2", "--set", "dimensionless.grid=16", "--sweep", "dimensionless.v1=0,1,3", "--jobs", jobs])
            .arg("-o")
            .arg(&base)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let mut files = Vec::new();
        for v in ["0", "1", "3"] {
            let d = base.join(format!("v1={v}"));
            files.push(fs::read(d.join("u_final.csv")).unwrap());
            files.push(fs::read(d.join("summary.txt")).unwrap());
        }
        outputs.push(files);
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn help_lists_exit_codes() {
    let out = bin().arg("--help").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("Exit codes"));
    assert!(text.contains("AMBIDIFF_LOG"));
}
