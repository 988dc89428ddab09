use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn polaron(args: &[&str], config: &str, out: &Path) -> Output {
    let cfg = out.join("run.conf");
    fs::create_dir_all(out).unwrap();
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_polaron"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--output")
        .arg(out)
        .output()
        .unwrap()
}

fn json_body(path: &Path) -> Value {
    let text = fs::read_to_string(path).unwrap();
    let (_, body) = text.split_once('\n').unwrap();
    serde_json::from_str(body).unwrap()
}

const SMALL: &str = "p = 0.3 0 0.4\nmass = 1.5\ncoupling = 0\nn_azimuthal = 4\nn_max = 2\n";

#[test]
fn free_solve_gives_negative_dirac_energy() {
    let dir = tempfile::tempdir().unwrap();
    let o = polaron(&["solve"], SMALL, dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let body = json_body(&dir.path().join("solve.json"));
    let e0 = body["report"]["eigenvalues"][0].as_f64().unwrap();
    let exact = -(0.25f64 + 1.5 * 1.5).sqrt();
    assert!((e0 - exact).abs() < 1e-9, "{e0} vs {exact}");
    assert!(body["config"].as_array().unwrap().iter().any(|l| l == "mass = 1.5"));
    let csv = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "index,eigenvalue,residual,cluster"));
}

#[test]
fn empty_check_list_is_a_no_op() {
    let dir = tempfile::tempdir().unwrap();
    let o = polaron(&["check", ""], SMALL, dir.path());
    assert!(o.status.success());
    assert!(!dir.path().join("checks.json").exists());
}

#[test]
fn config_errors_exit_nonzero_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = polaron(&["solve"], "mass = 1\nwidth = 3\n", dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    let o = polaron(&["check", "nonsense"], SMALL, dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn selected_checks_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = polaron(&["check", "concavity,gauge"], "coupling = 0.2\nn_max = 2\nsegments = 6\n", dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let body = json_body(&dir.path().join("checks.json"));
    let reports = body["report"].as_array().unwrap();
    assert_eq!(reports.len(), 2);
    assert!(reports.iter().all(|r| r["status"] == "pass"));
}

#[test]
fn scan_dispersion_ir_sectors_and_assemble_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "coupling = 0.1\nn_max = 2\nscan_points = 5\n";
    for cmd in ["scan", "dispersion", "ir", "sectors", "assemble"] {
        let o = polaron(&[cmd], cfg, dir.path());
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
    for f in [
        "surface.csv",
        "scan.svg",
        "dispersion.csv",
        "dispersion.svg",
        "ir.csv",
        "ir.json",
        "sectors.csv",
        "hamiltonian.json",
        "assemble.json",
    ] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let surface = fs::read_to_string(dir.path().join("surface.csv")).unwrap();
    assert_eq!(surface.lines().filter(|l| !l.starts_with('#')).count(), 6);
    let sectors = json_body(&dir.path().join("sectors.json"));
    let dims: usize = sectors["report"]["dims"].as_array().unwrap().iter().map(|d| d.as_u64().unwrap() as usize).sum();
    assert_eq!(dims as u64, json_body(&dir.path().join("assemble.json"))["report"]["dim"].as_u64().unwrap());
}
