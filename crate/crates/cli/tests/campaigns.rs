use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use transmission_cli::output::read_mesh;
use transmission_cli::parse_config;
use transmission_core::mesh::generate_fitted_mesh;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_transmission"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("case.ini");
    fs::write(&p, text).unwrap();
    p
}

fn report_value(report: &str, key: &str) -> f64 {
    let line = report.lines().find(|l| l.starts_with(&format!("{key}: "))).unwrap_or_else(|| panic!("no {key}"));
    line.split_once(": ").unwrap().1.parse().unwrap()
}

fn csv_column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

fn ms1() -> String {
    configs().join("ms1.ini").display().to_string()
}

#[test]
fn ms1_convergence_has_first_order_h1_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["convergence", &ms1(), "--levels", "4"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert!(csv.starts_with("level,h,dofs,l2_err,h1_err,flux_resid,holder_in,holder_cross,energy_ratio\n"));
    let (h, e) = (csv_column(&csv, "h"), csv_column(&csv, "h1_err"));
    assert_eq!(h.len(), 4);
    for k in 1..4 {
        let order = (e[k - 1] / e[k]).ln() / (h[k - 1] / h[k]).ln();
        assert!((0.9..=1.3).contains(&order), "levels {}-{k}: order {order}", k - 1);
    }
    let summary = fs::read_to_string(dir.path().join("convergence_summary.txt")).unwrap();
    let fitted = report_value(&summary, "fitted_order.h1");
    assert!((0.9..=1.3).contains(&fitted), "{fitted}");
    assert!(report_value(&summary, "fitted_order.l2") > 1.8);
}

#[test]
fn campaigns_are_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [a.path(), b.path()] {
        let out = run(&["convergence", &ms1(), "--levels", "2", "--seed", "7"], dir);
        assert!(out.status.success());
        let out = run(&["probe", &ms1(), "--center", "0.75,0", "--mu", "0.5", "--levels", "4", "--h", "0.05"], dir);
        assert!(out.status.success());
        let out = run(&["solve", &configs().join("rough.ini").display().to_string(), "--set", "run.export_matrix=true"], dir);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["convergence.csv", "probe.csv", "modulus.csv", "solution.csv", "mesh.txt", "stiffness.txt"] {
        let (x, y) = (fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
        assert!(!x.is_empty(), "{f} is empty");
        assert_eq!(x, y, "{f} differs between runs");
    }
}

#[test]
fn compare_on_the_finest_ms1_level_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["compare", &ms1(), "--h", "0.0125"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(dir.path().join("compare.txt")).unwrap();
    let rel = report_value(&report, "difference.h1_relative");
    assert!(rel <= 0.05, "{rel}");
    assert!(report_value(&report, "direct.error.h1") < 0.02);
    assert!(report.contains("reduction.aux.1.c_exact: "));
    let csv = fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    assert!(csv.starts_with("quantity,direct,reduction\n"));
}

#[test]
fn zero_data_solve_reports_zero_norms() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve", &configs().join("zero.ini").display().to_string()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    let norms: Vec<&str> = report.lines().filter(|l| l.contains("norm.")).collect();
    assert!(norms.len() >= 5);
    for l in norms {
        let v: f64 = l.split_once(": ").unwrap().1.parse().unwrap();
        assert_eq!(v, 0.0, "{l}");
    }
    assert_eq!(report_value(&report, "energy_ratio"), 0.0);
    assert_eq!(report_value(&report, "sigma"), -1.0);
    assert_eq!(report.lines().find(|l| l.starts_with("problem_hash: ")).unwrap().len(), "problem_hash: ".len() + 64);
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let base = "[geometry]\nouter = circle 0 0 1\ninclusion.1 = circle 0 0 0.5\n";
    let cases = [
        (format!("{base}[interfaces]\ng.1 = sin(x\n"), 2, "category=parse"),
        (format!("{base}[interfaces]\ng.3 = 1\n"), 3, "interfaces.g.3"),
        (format!("{base}[coefficients]\na.3 = 1\n"), 3, "coefficients.a.3"),
        (format!("{base}[coefficients]\nsource.1 = 1/(x-x)\n"), 4, "category=eval"),
        (format!("{base}[interfaces]\ng.1 = x\n[solver]\nmax_iter = 1\n"), 4, "category=numerical"),
        ("[geometry]\nouter = circle 0 0 1\ninclusion.1 = circle 0.8 0 0.5\n".to_string(), 3, "category=validation"),
    ];
    for (text, code, needle) in cases {
        let cfg = write_config(dir.path(), &text);
        let out = run(&["solve", &cfg.display().to_string()], &dir.path().join("out"));
        let err = String::from_utf8_lossy(&out.stderr);
        assert_eq!(out.status.code(), Some(code), "{text}: {err}");
        assert!(err.contains(needle), "{err}");
        assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    }
    let out = run(&["solve", "/nonexistent/case.ini"], dir.path());
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn convergence_without_exact_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["convergence", &configs().join("zero.ini").display().to_string()], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn mesh_export_round_trips_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let rough = configs().join("rough.ini");
    let out = run(&["mesh-info", &rough.display().to_string()], dir.path());
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("mesh.txt")).unwrap();
    let file = read_mesh(&text).unwrap();
    let cfg = parse_config(&fs::read_to_string(&rough).unwrap()).unwrap();
    let mesh = generate_fitted_mesh(&cfg.partition, cfg.solver.h).unwrap();
    assert_eq!(file.nodes, mesh.nodes);
    assert_eq!(file.triangles, mesh.triangles);
    assert_eq!(file.interface_edges, mesh.interface_edges);
    let header: Vec<usize> = text.lines().next().unwrap().split(' ').map(|w| w.parse().unwrap()).collect();
    assert_eq!(header, vec![mesh.nodes.len(), mesh.triangles.len(), mesh.interface_edges.len()]);
}

#[test]
fn three_subdomains_and_vector_problems_solve() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve", &configs().join("three_phase.ini").display().to_string(), "--h", "0.04"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("aux.2.c_exact: "));

    // Two decoupled copies of MS-1 must reproduce its error in both components.
    let text = "[geometry]\nouter = circle 0 0 1\ninclusion.1 = circle 0 0 0.5\n\
        [coefficients]\ncomponents = 2\n[interfaces]\ng.1 = -(8/3)*x/r, -(8/3)*x/r\n\
        [exact]\nu.1 = x, x\nu.2 = -(1/3)*(r - 1/r)*cos(theta), -(1/3)*(r - 1/r)*cos(theta)\n[solver]\nh = 0.07\n";
    let cfg = write_config(dir.path(), text);
    let out = run(&["solve", &cfg.display().to_string()], &dir.path().join("vec"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let vec_report = fs::read_to_string(dir.path().join("vec/report.txt")).unwrap();
    let out = run(&["solve", &ms1()], &dir.path().join("scalar"));
    assert!(out.status.success());
    let scalar = fs::read_to_string(dir.path().join("scalar/report.txt")).unwrap();
    let (ev, es) = (report_value(&vec_report, "error.h1"), report_value(&scalar, "error.h1"));
    assert!((ev - es * 2f64.sqrt()).abs() < 1e-6 * es, "{ev} vs {es}");
}

#[test]
fn shipped_configs_validate() {
    let mut names: Vec<PathBuf> = fs::read_dir(configs()).unwrap().map(|e| e.unwrap().path()).collect();
    names.sort();
    assert!(names.len() >= 4);
    for p in names {
        let cfg = parse_config(&fs::read_to_string(&p).unwrap()).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert_eq!(cfg.subdomains.len(), cfg.partition.inclusions.len() + 1);
    }
}
