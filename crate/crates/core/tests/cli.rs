use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dyadkde::estimator::rot_bandwidth;
use dyadkde::stats::normal_critical;
use dyadkde::{DyadicSample, JackknifeEl, KernelSpec, Method};
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dyadkde"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_csv(dir: &TempDir, name: &str, rows: &[(String, String, f64)]) -> PathBuf {
    let mut text = String::from("i,j,value\n");
    for (i, j, v) in rows {
        text.push_str(&format!("{i},{j},{v}\n"));
    }
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn sample_rows(s: &DyadicSample) -> Vec<(String, String, f64)> {
    s.to_edge_list()
        .into_iter()
        .map(|e| (e.i.to_string(), e.j.to_string(), e.value))
        .collect()
}

/// Deterministic complete sample without shared RNG state.
fn fixture(n: usize) -> DyadicSample {
    let mut values = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let t = (i * 31 + j * 17) as f64;
            values.push((t * 0.618).sin() * 1.5 + ((i + j) % 3) as f64 * 0.4);
        }
    }
    DyadicSample::complete(n, values).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).unwrap_or_else(|e| panic!("bad json {e}: {}", stdout(o)))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn estimate_all_at_design_point_prints_three_quarters() {
    let dir = TempDir::new().unwrap();
    let rows: Vec<_> = [(1, 2), (1, 3), (2, 3)]
        .iter()
        .map(|(i, j)| (i.to_string(), j.to_string(), 0.5))
        .collect();
    let f = write_csv(&dir, "tri.csv", &rows);
    let o = run(&["estimate", p(&f), "--x", "0.5", "--h", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("theta_hat: 0.75\n"), "{}", stdout(&o));
}

#[test]
fn duplicate_edge_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let rows = vec![
        ("1".into(), "2".into(), 0.1),
        ("2".into(), "1".into(), 0.3),
        ("1".into(), "3".into(), 0.2),
    ];
    let f = write_csv(&dir, "dup.csv", &rows);
    let o = run(&["estimate", p(&f), "--x", "0", "--h", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("DuplicateEdge"), "{}", stderr(&o));
}

#[test]
fn alpha_outside_unit_interval_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let f = write_csv(&dir, "s.csv", &sample_rows(&fixture(8)));
    let o = run(&["ci", p(&f), "--x", "0.2", "--alpha", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn constant_file_is_domain_error() {
    let dir = TempDir::new().unwrap();
    let s = DyadicSample::complete(5, vec![2.0; 10]).unwrap();
    let f = write_csv(&dir, "const.csv", &sample_rows(&s));
    let o = run(&["bandwidth", p(&f)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("ZeroSpreadSample"), "{}", stderr(&o));
}

#[test]
fn missing_file_is_usage_error() {
    let o = run(&["estimate", "/nonexistent/edges.csv", "--x", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bandwidth_rule_follows_mask() {
    let dir = TempDir::new().unwrap();
    let s = fixture(10);
    let f = write_csv(&dir, "full.csv", &sample_rows(&s));
    let o = run(&["bandwidth", p(&f)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("rot-complete"), "{}", stdout(&o));

    let est = run(&["estimate", p(&f), "--x", "0"]);
    assert!(stdout(&est).contains("bandwidth rule: rot-complete"));

    let half: Vec<_> = sample_rows(&s).into_iter().step_by(2).collect();
    let g = write_csv(&dir, "half.csv", &half);
    let o = run(&["bandwidth", p(&g), "--vertices", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("rot-incomplete"), "{out}");
    assert!(out.contains("p_hat: "), "{out}");
    let est = run(&["estimate", p(&g), "--x", "0", "--vertices", "10"]);
    assert!(stdout(&est).contains("bandwidth rule: rot-incomplete"));
}

#[test]
fn estimate_json_matches_library() {
    let dir = TempDir::new().unwrap();
    let s = fixture(12);
    let f = write_csv(&dir, "s.csv", &sample_rows(&s));
    let o = run(&["estimate", p(&f), "--x", "0.3", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    let h = rot_bandwidth(&s).unwrap();
    let je = JackknifeEl::from_sample(&s, KernelSpec::EPANECHNIKOV, 0.3, h).unwrap();
    assert_eq!(v["bandwidth"].as_f64().unwrap(), h);
    assert_eq!(v["theta_hat"].as_f64().unwrap(), je.theta_hat());
    assert_eq!(v["n"].as_u64().unwrap(), 12);
}

#[test]
fn mjk_half_width_matches_manual_recomputation() {
    let dir = TempDir::new().unwrap();
    let s = fixture(15);
    let f = write_csv(&dir, "s.csv", &sample_rows(&s));
    let o = run(&["ci", p(&f), "--x", "0.4", "--method", "mjk", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    let h = v["bandwidth"].as_f64().unwrap();
    let je = JackknifeEl::from_sample(&s, KernelSpec::EPANECHNIKOV, 0.4, h).unwrap();

    // Γ_m² rebuilt from the pseudo-values and Q entries
    let n = s.n() as f64;
    let vv: f64 = je.v_at_theta_hat().iter().map(|x| x * x).sum::<f64>() / n;
    let qq: f64 = je.q().iter().map(|x| x * x).sum::<f64>() / n;
    // z_{0.025} to full precision; the 6-decimal rounding alone moves the
    // half-width by ~1e-9
    let half = n.powf(-0.5) * 1.959963984540054 * (vv - qq).sqrt();

    let got = (v["upper"].as_f64().unwrap() - v["lower"].as_f64().unwrap()) / 2.0;
    assert!((got - half).abs() <= 1e-9, "{got} vs {half}");
    assert_eq!(v["critical_value_kind"], "z_alpha/2");
}

#[test]
fn el_intervals_contain_theta_hat() {
    let dir = TempDir::new().unwrap();
    let s = fixture(15);
    let f = write_csv(&dir, "s.csv", &sample_rows(&s));
    for m in ["jel", "mjel"] {
        let o = run(&["ci", p(&f), "--x", "0.4", "--method", m, "--format", "json", "--scan"]);
        assert_eq!(o.status.code(), Some(0), "{m}: {}", stderr(&o));
        let v = json(&o);
        let (lo, hi, th) = (
            v["lower"].as_f64().unwrap(),
            v["upper"].as_f64().unwrap(),
            v["theta_hat"].as_f64().unwrap(),
        );
        assert!(lo <= th && th <= hi, "{m}: [{lo}, {hi}] vs {th}");
        assert_eq!(v["statistic_at_theta_hat"].as_f64().unwrap(), 0.0);
        assert!((v["critical_value"].as_f64().unwrap() - 3.841459).abs() < 1e-6);
    }
}

#[test]
fn ci_text_reports_interval_and_critical_value() {
    let dir = TempDir::new().unwrap();
    let f = write_csv(&dir, "s.csv", &sample_rows(&fixture(12)));
    let o = run(&["ci", p(&f), "--x", "0.4", "--method", "mjel"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("interval: ["), "{out}");
    assert!(out.contains("c_alpha: "), "{out}");
}

#[test]
fn profile_grid_rows_per_method() {
    let dir = TempDir::new().unwrap();
    let f = write_csv(&dir, "s.csv", &sample_rows(&fixture(12)));
    let o = run(&["profile", p(&f), "--grid", "0:10:1", "--methods", "jel,mjel,mjk"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("x,theta_hat,lower,upper,method,h,failed"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 33);
    for m in ["JEL", "mJEL", "mJK"] {
        assert_eq!(rows.iter().filter(|r| r[4] == m).count(), 11);
    }
    let xs: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(xs.windows(2).all(|w| w[0] <= w[1]));
    for r in &rows {
        if r[6].is_empty() {
            let th: f64 = r[1].parse().unwrap();
            let lo: f64 = r[2].parse().unwrap();
            assert!(th >= 0.0 && lo >= 0.0);
        }
    }
}

#[test]
fn profile_full_mask_matches_complete_listing() {
    // same observed edges, once listed with integer ids and once through
    // string labels that sort into the same order
    let dir = TempDir::new().unwrap();
    let s = fixture(9);
    let a = write_csv(&dir, "a.csv", &sample_rows(&s));
    let labelled: Vec<_> = sample_rows(&s)
        .into_iter()
        .map(|(i, j, v)| (format!("v{i}"), format!("v{j}"), v))
        .collect();
    let b = write_csv(&dir, "b.csv", &labelled);
    let oa = run(&["profile", p(&a), "--grid", "-1:1:0.5"]);
    let ob = run(&["profile", p(&b), "--grid", "-1:1:0.5"]);
    assert_eq!(oa.status.code(), Some(0));
    assert_eq!(stdout(&oa), stdout(&ob));
}

#[test]
fn simulate_twice_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let mut outs = Vec::new();
    for k in 0..2 {
        let d = dir.path().join(k.to_string());
        std::fs::create_dir_all(&d).unwrap();
        let o = run(&[
            "simulate", "--beta", "1", "--n", "20", "--p", "1", "--reps", "60", "--alpha", "0.05",
            "--x", "1.675", "--seed", "7", "--methods", "jel,mjel,mjk", "--out", p(&d),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).contains("n=20"), "{}", stdout(&o));
        outs.push(std::fs::read(d.join("coverage.json")).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
    let v: Value = serde_json::from_slice(&outs[0]).unwrap();
    assert!(v.is_array() || v.is_object());
}

#[test]
fn simulate_rejects_bad_config() {
    let dir = TempDir::new().unwrap();
    let o = run(&["simulate", "--n", "3", "--reps", "5", "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = run(&["simulate", "--p", "1.5", "--reps", "5", "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn simulate_config_file_with_flag_override() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("sim.cfg");
    std::fs::write(&cfg, "beta=0\nn=15\nreps=40\nseed=3\n").unwrap();
    let o = run(&["simulate", "--config", p(&cfg), "--n", "18", "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("n=18"), "{}", stdout(&o));
}

#[test]
fn help_exits_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
}

#[test]
fn mjk_method_name_round_trips() {
    assert_eq!("mjk-wald".parse::<Method>().unwrap(), Method::Mjk);
    assert!(normal_critical(0.05) > 1.95);
}
