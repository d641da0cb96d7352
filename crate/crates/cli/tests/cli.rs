use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn gibbspl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gibbspl")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

/// 100 distinct points on a jittered lattice in [0, 10]^2.
fn hundred_points() -> String {
    let mut csv = String::from("x,y\n");
    for i in 0..10 {
        for j in 0..10 {
            let jitter = ((i * 7 + j * 3) % 10) as f64 / 20.0;
            csv.push_str(&format!("{},{}\n", i as f64 + 0.25 + jitter, j as f64 + 0.5 - jitter / 2.0));
        }
    }
    csv
}

const WINDOW10: &str = "[window]\nxmin = 0.0\nxmax = 10.0\nymin = 0.0\nymax = 10.0\n";

#[test]
fn poisson_fit_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "m.toml", &format!("[model]\nfamily = \"poisson\"\n{WINDOW10}"));
    let data = write(dir.path(), "d.csv", &hundred_points());
    let out = dir.path().join("fit.json");
    let o = gibbspl(&["fit", "--model", s(&cfg), "--data", s(&data), "--out", s(&out), "--grid", "8x8", "--threads", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out);
    assert!(v["theta_hat"][0].as_f64().unwrap().abs() < 1e-8);
    assert!(v["vcov"][0][0].as_f64().unwrap() > 0.0);
    assert!(v["ci"][0]["lower"].as_f64().unwrap() < 0.0);
    assert_eq!(v["config"]["command"], "fit");
    assert_eq!(v["config"]["config"]["model"]["family"], "poisson");
    assert_eq!(v["geometry"]["cells"], 100);
}

#[test]
fn fit_then_gnz_and_vcov_at_estimate() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "m.toml",
        &format!("[model]\nfamily = \"strauss\"\nradius = 1.2\n{WINDOW10}[fit]\ngrid = [64, 64]\n"),
    );
    let data = write(dir.path(), "d.csv", &hundred_points());
    let fit = dir.path().join("fit.json");
    let o = gibbspl(&["fit", "--model", s(&cfg), "--data", s(&data), "--out", s(&fit)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let f = json(&fit);
    // Fit window: [1.2, 8.8]^2 shrunk to multiples of the 1.2 cell.
    assert_eq!(f["geometry"]["cells"], 36);

    let gnz = dir.path().join("gnz.json");
    let o = gibbspl(&["gnz", "--model", s(&cfg), "--data", s(&data), "--fit", s(&fit), "--out", s(&gnz)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let g = json(&gnz);
    for r in g["statistics"].as_array().unwrap() {
        assert!(r["per_area"].as_f64().unwrap().abs() < 1e-7, "{r}");
    }

    let vc = dir.path().join("vcov.json");
    let o = gibbspl(&["vcov", "--model", s(&cfg), "--data", s(&data), "--fit", s(&fit), "--out", s(&vc)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&vc)["vcov"], f["vcov"]);
}

#[test]
fn empty_pattern_reports_non_convergence() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "m.toml", &format!("[model]\nfamily = \"poisson\"\n{WINDOW10}"));
    let data = write(dir.path(), "d.csv", "x,y\n");
    let out = dir.path().join("fit.json");
    let o = gibbspl(&["fit", "--model", s(&cfg), "--data", s(&data), "--out", s(&out), "--grid", "4x4"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json(&out)["solver"]["converged"], false);
}

#[test]
fn input_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "m.toml", &format!("[model]\nfamily = \"poisson\"\n{WINDOW10}"));
    let missing = dir.path().join("nope.csv");
    let o = gibbspl(&["fit", "--model", s(&cfg), "--data", s(&missing)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.csv"));

    let hc = write(
        dir.path(),
        "hc.toml",
        &format!("[model]\nfamily = \"multi_strauss\"\nmarks = 1\nbands = [{{ types = [1, 1], radii = [0.5, 1.0] }}]\n{WINDOW10}"),
    );
    let close = write(dir.path(), "close.csv", "x,y\n5.0,5.0\n5.2,5.0\n");
    let o = gibbspl(&["fit", "--model", s(&hc), "--data", s(&close), "--grid", "8x8"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible"));

    assert_eq!(gibbspl(&["fit", "--model", s(&cfg)]).status.code(), Some(1));
    assert_eq!(gibbspl(&["fit", "--model", s(&cfg), "--data", s(&close), "--grid", "8"]).status.code(), Some(1));
    let bad = write(dir.path(), "bad.toml", "[model]\nfamily = \"unknown\"\n");
    assert_eq!(gibbspl(&["stats", "--model", s(&bad), "--data", s(&close)]).status.code(), Some(1));
}

fn sim_config(dir: &Path, theta: f64, side: f64, steps: u64) -> PathBuf {
    write(
        dir,
        "sim.toml",
        &format!(
            "theta = [{theta}]\n[model]\nfamily = \"poisson\"\n[window]\nxmin = 0.0\nxmax = {side}\nymin = 0.0\nymax = 5.0\n[simulate]\nsteps = {steps}\nburn_in = {}\n",
            steps / 2
        ),
    )
}

#[test]
fn simulate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = sim_config(dir.path(), 0.0, 4.0, 2000);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = gibbspl(&["simulate", "--model", s(&cfg), "--out", s(out), "--seed", "9"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let m = json(&dir.path().join("a.manifest.json"));
    assert_eq!(m["config"]["config"]["simulate"]["seed"], 9);
    assert!(m["acceptance"]["birth"].as_f64().unwrap() > 0.0);
    assert_eq!(m["points"].as_u64().unwrap() as usize, fs::read_to_string(&a).unwrap().lines().count() - 1);
}

#[test]
fn zero_steps_gives_header_only() {
    let dir = TempDir::new().unwrap();
    let cfg = sim_config(dir.path(), 0.0, 4.0, 0);
    let out = dir.path().join("e.csv");
    let o = gibbspl(&["simulate", "--model", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(&out).unwrap(), "x,y\n");
}

#[test]
fn simulated_poisson_counts() {
    let dir = TempDir::new().unwrap();
    // Intensity 2 on a 10 x 5 window.
    let cfg = sim_config(dir.path(), -(2.0f64).ln(), 10.0, 4000);
    let out = dir.path().join("p.csv");
    let mut total = 0usize;
    for seed in 0..100 {
        let o = gibbspl(&["simulate", "--model", s(&cfg), "--out", s(&out), "--seed", &seed.to_string()]);
        assert_eq!(o.status.code(), Some(0));
        total += fs::read_to_string(&out).unwrap().lines().count() - 1;
    }
    let mean = total as f64 / 100.0;
    // Poisson(100) counts: the mean of 100 has standard deviation 1.
    assert!((mean - 100.0).abs() < 3.0, "mean count {mean}");
}

#[test]
fn stats_fixtures() {
    let dir = TempDir::new().unwrap();
    let win = "[window]\nxmin = -2.0\nxmax = 2.0\nymin = -2.0\nymax = 2.0\n";
    let geyer = write(dir.path(), "g.toml", &format!("[model]\nfamily = \"geyer_triplet\"\nradius = 0.5\n{win}"));
    let tri = write(dir.path(), "t.csv", "x,y\n0.0,0.0\n0.3,0.0\n0.0,0.3\n");
    let out = dir.path().join("s.json");
    let o = gibbspl(&["stats", "--model", s(&geyer), "--data", s(&tri), "--out", s(&out), "--local"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out);
    assert_eq!(v["global"], serde_json::json!([3.0, 3.0, 1.0]));
    assert_eq!(v["local"].as_array().unwrap().len(), 3);
    assert_eq!(v["local"][0]["values"], serde_json::json!([1.0, 2.0, 1.0]));

    let overlap = write(dir.path(), "o.toml", &format!("[model]\nfamily = \"overlap_area\"\nradius = 1.0\n{win}"));
    let two = write(dir.path(), "two.csv", "x,y\n0.0,0.0\n0.5,0.0\n");
    gibbspl(&["stats", "--model", s(&overlap), "--data", s(&two), "--out", s(&out)]);
    let g = json(&out)["global"].clone();
    assert_eq!(g[0], 2.0);
    assert!((g[1].as_f64().unwrap() - 0.307092425).abs() < 1e-9);

    let empty = write(dir.path(), "e.csv", "x,y\n");
    gibbspl(&["stats", "--model", s(&overlap), "--data", s(&empty), "--out", s(&out)]);
    assert_eq!(json(&out)["global"], serde_json::json!([0.0, 0.0]));
}
