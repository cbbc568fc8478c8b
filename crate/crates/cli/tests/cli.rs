use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use toml::{Table, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_algebroid"))
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn report(out: &Output) -> Table {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(text.starts_with("# units:"), "missing unit banner: {text}");
    toml::from_str(&text).unwrap()
}

fn float(v: &Value) -> f64 {
    v.as_float().or_else(|| v.as_integer().map(|i| i as f64)).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(float).collect()
}

fn scenario_arg(p: &Path) -> String {
    p.display().to_string()
}

const MINKOWSKI: &str = r#"
metric.name = "minkowski"
region.lo = [-1, -1, -1, -1]
region.hi = [1, 1, 1, 1]
grid.counts = [2, 2, 2, 2]
"#;

#[test]
fn verify_minkowski_is_exact_to_round_off() {
    let dir = TempDir::new().unwrap();
    let s = write(&dir, "m.toml", MINKOWSKI);
    let out = run(&["verify", "--scenario", &scenario_arg(&s)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["all_pass"].as_bool(), Some(true));
    for (_, id) in r["identities"].as_table().unwrap() {
        assert!(float(&id["worst"]) < 1e-10);
    }
}

#[test]
fn verify_schwarzschild_and_polynomial_pass() {
    let dir = TempDir::new().unwrap();
    let schw = write(
        &dir,
        "s.toml",
        r#"
metric.name = "schwarzschild"
metric.M = 1.0
region.lo = [-1, 3, 0.3, 0]
region.hi = [1, 10, 2.8, 6.2]
grid.counts = [1, 4, 2, 2]
"#,
    );
    let poly = write(
        &dir,
        "p.toml",
        r#"
seed = 42
metric.name = "polynomial"
metric.amplitude = 0.1
potential.name = "polynomial"
potential.scale = 0.5
region.lo = [-1, -1, -1, -1]
region.hi = [1, 1, 1, 1]
grid.random = 6
"#,
    );
    for s in [schw, poly] {
        let out = run(&["verify", "--scenario", &scenario_arg(&s)]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn curvature_values() {
    let dir = TempDir::new().unwrap();
    let flat = write(&dir, "m.toml", MINKOWSKI);
    let r = report(&run(&["curvature", "--scenario", &scenario_arg(&flat), "--at", "0,0.1,-0.2,0.3"]));
    assert_eq!(float(&r["R"]), 0.0);
    assert_eq!(float(&r["R_hat"]), 0.0);

    let uniform = write(&dir, "u.toml", &format!("{MINKOWSKI}potential.name = \"uniform\"\npotential.B = 1.0\n"));
    let r = report(&run(&["curvature", "--scenario", &scenario_arg(&uniform), "--at", "0,0.1,-0.2,0.3"]));
    assert!((float(&r["trFF"]) + 0.5).abs() < 1e-10);
    assert!((float(&r["R_hat"]) + 0.5).abs() < 1e-10);
    let xixi = float(&r["einstein"]["xixi"]);
    // −½(R + 3 trFF) with R = 0
    assert!((xixi - 0.75).abs() < 1e-10);

    let schw = write(&dir, "s.toml", "metric.name = \"schwarzschild\"\nmetric.M = 1.0\n");
    let r = report(&run(&["curvature", "--scenario", &scenario_arg(&schw), "--at", "0,4,1.5707963267948966,0"]));
    assert!(float(&r["R_hat"]).abs() < 1e-6);
}

#[test]
fn curvature_without_point_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let s = write(&dir, "m.toml", MINKOWSKI);
    let out = run(&["curvature", "--scenario", &scenario_arg(&s)]);
    assert_eq!(out.status.code(), Some(2));
}

fn trajectory(path: &Path) -> Vec<Vec<f64>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tau,x0,x1,x2,x3,u0,u1,u2,u3,norm_drift"));
    lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect()
}

#[test]
fn free_particle_moves_in_a_straight_line() {
    let dir = TempDir::new().unwrap();
    let s = write(&dir, "m.toml", "metric.name = \"minkowski\"\n");
    let csv = dir.path().join("t.csv");
    let out = run(&[
        "geodesic", "--scenario", &scenario_arg(&s), "--at", "0,0,0,0", "--velocity", "2,1,1,1",
        "--step", "0.1", "--steps", "50", "--out", &scenario_arg(&csv),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = trajectory(&csv);
    assert_eq!(rows.len(), 51);
    let last = &rows[50];
    assert!((last[0] - 5.0).abs() < 1e-12);
    for (k, v) in [(1, 10.0), (2, 5.0), (3, 5.0), (4, 5.0)] {
        assert!((last[k] - v).abs() < 1e-9, "x{} = {}", k - 1, last[k]);
    }
}

#[test]
fn non_normalized_velocity_needs_the_flag() {
    let dir = TempDir::new().unwrap();
    let s = write(&dir, "m.toml", "metric.name = \"minkowski\"\n");
    let base = ["geodesic", "--scenario", &scenario_arg(&s), "--at", "0,0,0,0", "--velocity", "2,0,0,0", "--steps", "3"];
    assert_eq!(run(&base).status.code(), Some(2));
    let mut with = base.to_vec();
    with.push("--normalize");
    let out = run(&with);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().contains(",1,0,0,0,"));
}

#[test]
fn larmor_orbit_closes() {
    let dir = TempDir::new().unwrap();
    let s = write(&dir, "u.toml", "metric.name = \"minkowski\"\npotential.name = \"uniform\"\npotential.B = 1.0\n");
    let (v, lambda, b) = (0.1f64, 1.0, 1.0);
    let gamma = 1.0 / (1.0 - v * v).sqrt();
    let omega = lambda * b;
    let step = 2.0 * PI / omega / 1000.0;
    let csv = dir.path().join("t.csv");
    let out = run(&[
        "geodesic", "--scenario", &scenario_arg(&s), "--at", "0,0,0,0",
        "--velocity", &format!("{gamma},{},0,0", gamma * v), "--lambda", "1", "--step", &step.to_string(),
        "--steps", "1000", "--out", &scenario_arg(&csv),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let rows = trajectory(&csv);
    let last = rows.last().unwrap();
    assert!(last[2].abs() < 1e-5 && last[3].abs() < 1e-5);
    assert!((last[1] - gamma * 2.0 * PI / omega).abs() < 1e-8);
    // quarter turn: x² = γv/ω
    assert!((rows[250][3] - gamma * v / omega).abs() < 1e-8);
}

#[test]
fn schwarzschild_circular_orbit_keeps_its_radius() {
    let dir = TempDir::new().unwrap();
    let s = write(&dir, "s.toml", "metric.name = \"schwarzschild\"\nmetric.M = 1.0\n");
    let (m, r) = (1.0f64, 10.0f64);
    let ut = 1.0 / (1.0 - 3.0 * m / r).sqrt();
    let uphi = (m / r.powi(3)).sqrt() * ut;
    let csv = dir.path().join("t.csv");
    let out = run(&[
        "geodesic", "--scenario", &scenario_arg(&s), "--at", &format!("0,{r},{},0", PI / 2.0),
        "--velocity", &format!("{ut},0,0,{uphi}"), "--step", "0.1", "--steps", "500", "--out", &scenario_arg(&csv),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let summary: Table = toml::from_str(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert!(float(&summary["max_energy_drift"]) < 1e-9);
    for row in trajectory(&csv) {
        assert!((row[2] - r).abs() < 1e-6);
        assert!((row[4] - row[0] * uphi).abs() < 1e-6);
    }
}

#[test]
fn residuals_of_vacuum_and_sources() {
    let dir = TempDir::new().unwrap();
    let schw = write(
        &dir,
        "s.toml",
        r#"
metric.name = "schwarzschild"
metric.M = 1.0
region.lo = [-1, 3, 0.3, 0]
region.hi = [1, 10, 2.8, 6.2]
grid.counts = [1, 3, 2, 1]
tolerances.einstein = 1e-5
"#,
    );
    assert_eq!(run(&["residuals", "--scenario", &scenario_arg(&schw)]).status.code(), Some(0));

    let dust = write(
        &dir,
        "d.toml",
        &format!("{MINKOWSKI}sources.t_mass = [[0.01, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]\n"),
    );
    let out = run(&["residuals", "--scenario", &scenario_arg(&dust)]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    let e = float(&r["summary"]["einstein"]["max_abs"]);
    assert!((e - 8.0 * PI * 0.01).abs() < 1e-12);
}

#[test]
fn reissner_nordstrom_leaves_a_scalar_residual() {
    let dir = TempDir::new().unwrap();
    let s = write(
        &dir,
        "rn.toml",
        r#"
metric.name = "reissner_nordstrom"
metric.M = 1.0
metric.Q = 0.5
potential.name = "radial_coulomb"
potential.q = 1.0
potential.fit_scale = true
region.lo = [-1, 4, 0.5, 0]
region.hi = [1, 12, 2.6, 6.2]
grid.counts = [1, 3, 2, 1]
"#,
    );
    let out = run(&["residuals", "--scenario", &scenario_arg(&s)]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert!((float(&r["potential_scale"]) - 1.0).abs() < 1e-6);
    assert_eq!(r["summary"]["einstein"]["pass"].as_bool(), Some(true));
    assert_eq!(r["summary"]["maxwell"]["pass"].as_bool(), Some(true));
    for p in r["point"].as_array().unwrap() {
        let scalar = float(&p["scalar_value"]);
        let trff = float(&p["trFF"]);
        assert!(scalar.abs() > 1e-5);
        assert!((scalar + 1.5 * trff).abs() < 1e-6);
    }
}

#[test]
fn affine_decomposition() {
    let dir = TempDir::new().unwrap();
    let id = write(&dir, "id.toml", "quadratic = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]\n");
    let r = report(&run(&["affine", "decompose", &scenario_arg(&id)]));
    assert_eq!(floats(&r["center"]), vec![0.0; 3]);
    assert_eq!(float(&r["lambda"]), 0.0);

    // S(u, v) = (u − z)ᵀB(v − z) + λ
    let q = write(
        &dir,
        "q.toml",
        "quadratic = [[2, 1], [1, -3]]\nleft = [-4, 5]\nright = [-4, 5]\nconstant = 9.5\n",
    );
    let r = report(&run(&["affine", "decompose", &scenario_arg(&q)]));
    // z solves Bz = (4, −5): z = (1, 2); λ = 9.5 − zᵀBz = 9.5 − (2 + 4 − 12) = 15.5
    let z = floats(&r["center"]);
    assert!((z[0] - 1.0).abs() < 1e-9 && (z[1] - 2.0).abs() < 1e-9);
    assert!((float(&r["lambda"]) - 15.5).abs() < 1e-9);

    let hat = report(&run(&["affine", "hat-metric", &scenario_arg(&q)]));
    let rows: Vec<Vec<f64>> = hat["hat_metric"].as_array().unwrap().iter().map(floats).collect();
    assert_eq!(rows.len(), 3);
    assert!((rows[2][2] - 15.5).abs() < 1e-9);
}

#[test]
fn affine_rejects_zero_lambda_and_bad_input() {
    let dir = TempDir::new().unwrap();
    let zero = write(&dir, "z.toml", "bilinear = [[1, 0], [0, 1]]\ncenter = [0, 0]\nlambda = 0\n");
    assert_eq!(run(&["affine", "hat-metric", &scenario_arg(&zero)]).status.code(), Some(2));
    let asym = write(&dir, "a.toml", "bilinear = [[1, 2], [0, 1]]\nlambda = 1\n");
    assert_eq!(run(&["affine", "decompose", &scenario_arg(&asym)]).status.code(), Some(2));
    let both = write(&dir, "b.toml", "bilinear = [[1]]\nquadratic = [[1]]\nlambda = 1\n");
    assert_eq!(run(&["affine", "decompose", &scenario_arg(&both)]).status.code(), Some(2));
}

#[test]
fn output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let s = write(
        &dir,
        "p.toml",
        r#"
seed = 9
metric.name = "polynomial"
metric.amplitude = 0.1
potential.name = "polynomial"
region.lo = [-1, -1, -1, -1]
region.hi = [1, 1, 1, 1]
grid.random = 4
"#,
    );
    let a = run(&["verify", "--scenario", &scenario_arg(&s)]);
    let b = run(&["verify", "--scenario", &scenario_arg(&s)]);
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["verify", "--scenario", &scenario_arg(&s), "--seed", "10"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn malformed_scenarios_exit_with_two() {
    let dir = TempDir::new().unwrap();
    for (name, text) in [
        ("syntax.toml", "metric.name = \n"),
        ("unknown.toml", "metric.name = \"minkowski\"\nbogus = 1\n"),
        ("family.toml", "metric.name = \"kerr\"\ngrid.random = 1\n"),
        ("tol.toml", "metric.name = \"minkowski\"\ntolerances.nonsense = 1e-3\n"),
    ] {
        let s = write(&dir, name, text);
        let out = run(&["verify", "--scenario", &scenario_arg(&s)]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"), "{name}");
    }
    let out = run(&["verify", "--scenario", "/nonexistent/scenario.toml"]);
    assert_eq!(out.status.code(), Some(2));
}
