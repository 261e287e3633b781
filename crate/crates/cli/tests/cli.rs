use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use specgap_cli::{parse_report, serialize_report, Format, Report};

fn specgap(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specgap"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("spawn specgap")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn hyperbolic_determinant() {
    let dir = tempfile::tempdir().unwrap();
    let o = specgap(
        dir.path(),
        &["hyperbolic", "--d", "5", "--vol", "1", "--degree", "1", "--determinant"],
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("degree 1: log_det = 8.7062"), "{}", stdout(&o));
    let zeta = fs::read_to_string(dir.path().join("zeta.csv")).unwrap();
    let mut lines = zeta.lines();
    assert_eq!(lines.next(), Some("degree,zeta0,zeta_prime0,log_det"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "1");
    assert!((row[3].parse::<f64>().unwrap() - 8.7062).abs() < 1e-3);
    let spectrum = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert!(spectrum.starts_with("degree,lambda0,kernel_dim,kappa0\n"));
    assert_eq!(spectrum.lines().count(), 7);
}

#[test]
fn torus_theta_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = specgap(
        dir.path(),
        &["torus", "--g", "1", "--n", "64", "--theta", "--t-window", "0.5:5"],
    );
    assert_eq!(o.status.code(), Some(0));
    let theta = fs::read_to_string(dir.path().join("theta.csv")).unwrap();
    let lines: Vec<&str> = theta.lines().collect();
    assert_eq!(lines[0], "t,theta_comb,theta_ref,abs_error");
    assert_eq!(lines.len(), 51);
    for line in &lines[1..] {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let reference = (4.0 * std::f64::consts::PI * v[0]).powf(-0.5);
        assert!((v[2] - reference).abs() < 1e-15);
        assert!((v[3] - (v[1] - v[2]).abs()).abs() < 1e-15);
        assert!(v[3] / v[2] < 0.02);
    }
    assert!(lines[1].starts_with("5.0000000000000000e-1,"));
    assert!(lines[50].starts_with("5.0000000000000000e0,"));
    assert!(!dir.path().join("spectrum.csv").exists());
}

#[test]
fn torus_spectrum_and_presets() {
    let dir = tempfile::tempdir().unwrap();
    let o = specgap(
        dir.path(),
        &["torus", "--preset", "torus2", "--spectrum", "--resolution", "8"],
    );
    assert_eq!(o.status.code(), Some(0));
    let spectrum = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert!(spectrum.starts_with("degree,lambda0,kernel_dim,kappa0\n"));
    assert_eq!(spectrum.lines().count(), 4);
}

#[test]
fn convergence_and_beta_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = specgap(
        dir.path(),
        &["convergence", "--preset", "circle-theta", "--levels", "4"],
    );
    assert_eq!(o.status.code(), Some(0));
    let table = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "level,mesh,metric_name,value,error,order");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].ends_with(','));

    let o = specgap(dir.path(), &["--format", "structured", "beta", "--d", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("beta.report")).unwrap();
    assert!(text.starts_with("schema = \"specgap.report.v1\"\nkind = \"run\"\n"));
    for f in ["beta", "beta_bar", "window_min", "window_max", "residual"] {
        assert!(text.contains(&format!("beta[0].estimate.{f} = ")), "{f}");
    }
}

#[test]
fn structured_output_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["--format", "structured", "torsion", "--d", "3"],
        vec!["--format", "structured", "convergence", "--preset", "circle-gap"],
        vec!["--format", "structured", "torus", "--preset", "circle"],
        vec!["--format", "structured", "zeta", "--atoms", "1:2,3:0.5"],
    ] {
        let o = specgap(dir.path(), &args);
        assert_eq!(o.status.code(), Some(0), "{args:?}");
        let name = format!("{}.report", args[2]);
        let bytes = fs::read(dir.path().join(&name)).unwrap();
        let report = parse_report(std::str::from_utf8(&bytes).unwrap()).unwrap();
        assert!(matches!(report, Report::Run(_)));
        assert_eq!(serialize_report(&report, Format::Structured).unwrap(), bytes, "{name}");
    }
}

#[test]
fn outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["torus", "--preset", "torus2-skew", "--resolution", "6", "--degree", "1"];
    let oa = specgap(a.path(), &[&["--threads", "1"][..], &args].concat());
    let ob = specgap(b.path(), &[&["--threads", "4", "--seed", "7"][..], &args].concat());
    assert_eq!(oa.status.code(), Some(0));
    assert_eq!(oa.stdout, ob.stdout);
    for name in ["theta.csv", "spectrum.csv"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# H3 torsion\ngeometry.d = 3\nnumeric.degree = 0\noutput.format = structured\n",
    )
    .unwrap();
    let o = specgap(
        dir.path(),
        &[
            "--config",
            cfg.to_str().unwrap(),
            "zeta",
            "--degree",
            "2",
            "--format",
            "csv",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let zeta = fs::read_to_string(dir.path().join("zeta.csv")).unwrap();
    assert_eq!(zeta.lines().nth(1).unwrap().split(',').next(), Some("2"));
    assert!(!dir.path().join("zeta.report").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| specgap(dir.path(), args).status.code();
    assert_eq!(code(&["hyperbolic", "--d", "4"]), Some(2));
    assert_eq!(code(&["--format", "xml", "hyperbolic", "--d", "3"]), Some(2));
    assert_eq!(code(&["convergence", "--preset", "nope"]), Some(2));
    assert_eq!(code(&["torus"]), Some(2));
    assert_eq!(code(&["torus", "--g", "1", "--n", "4", "--d", "3"]), Some(2));
    assert_eq!(code(&["torus", "--g", "1", "--n", "4", "--kernel-tol", "0"]), Some(2));
    assert_eq!(code(&["hyperbolic", "--bogus"]), Some(2));
    assert_eq!(
        code(&["--config", "/nonexistent/specgap.cfg", "hyperbolic", "--d", "3"]),
        Some(2)
    );
    let o = specgap(
        dir.path(),
        &["torus", "--g", "1", "--n", "4", "--spectrum", "--kernel-tol", "1e9"],
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("degenerate"));
}
