use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lorentz-mobius")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("JSON output")
}

#[test]
fn sphere_check_examples() {
    let o = run(&["sphere-check", "--center", "2,0,0", "--radius", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["is_ovaloid"], false);
    assert_eq!(v["is_closed"], true);
    assert!(!v["witnesses"].as_array().unwrap().is_empty());
    assert!((v["dist_to_lc"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-11);

    let o = run(&["sphere-check", "--center", "4,0,0", "--radius", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["is_ovaloid"], true);
    assert!(v["witnesses"].as_array().unwrap().is_empty());
    assert!(v["f_roots"].as_array().unwrap().is_empty());
}

#[test]
fn sphere_check_accepts_negative_centers() {
    let o = run(&["sphere-check", "--center", "-4,0,-0.5", "--radius", "1", "--census", "64"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(json(&o)["is_ovaloid"], true);
}

#[test]
fn inverted_sphere_has_a_parabolic_curve() {
    let o = run(&["loci", "--surface", "sphere:2,0,0,1", "--invert", "--field", "parabolic"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("curve_id,u,v,x0,x1,x2"));
    let rows: Vec<&str> = lines.collect();
    assert!(rows.len() > 10);
    assert!(rows.iter().all(|r| r.split(',').count() == 6));

    let o = run(&["loci", "--surface", "sphere:2,0,0,1", "--field", "parabolic"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let once = |name: &str| {
        let path = dir.path().join(name);
        let o = run(&[
            "loci",
            "--surface",
            "graph:cubic",
            "--translate",
            "3,0,0",
            "--invert",
            "--field",
            "lpl",
            "--grid",
            "96x96",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
        std::fs::read(&path).unwrap()
    };
    let a = once("a.csv");
    assert!(a.len() > 100);
    assert_eq!(a, once("b.csv"));

    let mesh = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_lorentz-mobius"))
            .args(["mesh", "--surface", "sphere:2,0,0,1", "--invert", "--grid", "40x40"])
            .env("LORENTZ_MOBIUS_THREADS", threads)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(mesh("1"), mesh("3"));
}

#[test]
fn verify_pushforward_reports_and_fails_on_tight_tolerance() {
    let o = run(&["verify-pushforward", "--surface", "sphere:2,0,0,1", "--grid", "6x6"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("point,rho,max_rel_err,lambda_err\n"));
    assert!(text.lines().count() > 20);

    let o = run(&["verify-pushforward", "--surface", "sphere:2,0,0,1", "--grid", "6x6", "--tol", "1e-300"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("verification failed"));
}

fn write_seeds(dir: &Path) -> String {
    let path = dir.join("seeds.csv");
    std::fs::write(&path, "u,v\n-0.5,0.3\n0.2,-0.4\n0.6,0.6\n").unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn lines_are_preserved_by_the_inversion() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = write_seeds(dir.path());
    let args = ["lines", "--surface", "graph:cubic", "--translate", "3,0,0", "--invert", "--seeds", &seeds, "--max-steps", "300"];
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("line_id,t_index,u,v,x0,x1,x2,residual\n"));
    let residuals: Vec<f64> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert!(residuals.len() > 300);
    assert!(residuals.iter().all(|&r| r <= 1e-6));

    let mut tight = args.to_vec();
    tight.extend(["--tol", "1e-300"]);
    assert_eq!(code(&run(&tight)), 2);
}

#[test]
fn bad_seeds_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("seeds.csv");
    std::fs::write(&path, "u,v\n0.1,zero\n").unwrap();
    let o = run(&["lines", "--surface", "graph:saddle", "--seeds", path.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("seed row 1"));
}

#[test]
fn ovaloid_search_on_the_sphere() {
    let o = run(&["ovaloid-search", "--surface", "sphere:2,0,0,1", "--census", "64"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["verified"], true);
    assert!(v["R"].as_f64().unwrap() > 1.0);
    assert!(v["translation"][0].as_f64().unwrap() > 0.0);
}

#[test]
fn ovaloid_search_rejects_a_saddle() {
    let o = run(&["ovaloid-search", "--surface", "graph:saddle", "--census", "32"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn mesh_of_a_fully_masked_surface_warns() {
    let o = run(&["mesh", "--surface", "sphere:0,0,0,1", "--invert", "--grid", "8x8", "--lc-tol", "100"]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("warning"));
    assert!(stdout(&o).contains("# 0 vertices, 0 triangles"));
}

#[test]
fn mesh_writes_obj() {
    let o = run(&["mesh", "--surface", "graph:plane", "--grid", "2x2"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 4);
    assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 2);
}

#[test]
fn invert_samples_the_image() {
    let o = run(&["invert", "--surface", "sphere:2,0,0,1", "--grid", "5x5"]);
    assert_eq!(code(&o), 0);
    for row in stdout(&o).lines().skip(1) {
        let x: Vec<f64> = row.split(',').map(|t| t.parse().unwrap()).collect();
        let q = x[2] * x[2] + x[3] * x[3] - x[4] * x[4];
        for k in 0..3 {
            assert!((x[5 + k] - x[2 + k] / q).abs() < 1e-10);
        }
    }
}

#[test]
fn usage_errors_exit_with_one() {
    let o = run(&["loci", "--surface", "torus:1", "--field", "ld"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--surface"));

    let o = run(&["sphere-check", "--center", "1,2", "--radius", "1"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--center"));

    assert_eq!(code(&run(&["loci", "--surface", "sphere:2,0,0,1", "--field", "ld", "--grid", "1x4"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);

    let o = Command::new(env!("CARGO_BIN_EXE_lorentz-mobius"))
        .args(["mesh", "--surface", "graph:plane", "--grid", "2x2"])
        .env("LORENTZ_MOBIUS_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("LORENTZ_MOBIUS_THREADS"));
}
