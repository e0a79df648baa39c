use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lpseries(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpseries"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = lpseries(args);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn basis_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("disc");
    ok(&["basis", "--dim", "2", "--nmax", "3", "--out", path(&out)]);
    let csv = fs::read_to_string(out.join("basis.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "n,z_n,beta_n,sup_norm,lp_norm@2");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(first[1].starts_with("2.404825"));
    assert_eq!(csv.lines().count(), 4);

    let ball = tmp.path().join("ball");
    ok(&["basis", "--dim", "3", "--nmax", "12", "--p", "2,6", "--out", path(&ball)]);
    let csv = fs::read_to_string(ball.join("basis.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let l2: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!((l2 - 1.0).abs() <= 1e-6);
    }
    let manifest = json(&ball.join("manifest.json"));
    assert_eq!(manifest["command"], "basis");
    assert_eq!(manifest["config"]["dim"], "3");
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn reruns_are_byte_identical_and_write_once() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let args = ["norms", "--dim", "2", "--nmax", "200", "--p", "4,6"];
    ok(&[&args[..], &["--out", path(&a)]].concat());
    ok(&[&args[..], &["--out", path(&b)]].concat());
    for f in ["norms.csv", "manifest.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let again = lpseries(&[&args[..], &["--out", path(&a)]].concat());
    assert!(!again.status.success());
    assert!(String::from_utf8_lossy(&again.stderr).contains("never overwritten"));
}

#[test]
fn config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "# alpha star run\ndim = 3\nseq = powerlaw:1:1\n").unwrap();
    let a = tmp.path().join("a");
    ok(&["alpha-star", "--config", path(&cfg), "--out", path(&a)]);
    let r = json(&a.join("alpha_star.json"));
    assert!((r["alpha_star"].as_f64().unwrap() - 1.0).abs() <= 0.05);
    let b = tmp.path().join("b");
    ok(&["alpha-star", "--config", path(&cfg), "--dim", "4", "--out", path(&b)]);
    let r = json(&b.join("alpha_star.json"));
    assert!((r["alpha_star"].as_f64().unwrap() - 2.0).abs() <= 0.05);
    assert_eq!(json(&b.join("manifest.json"))["config"]["dim"], "4");
}

#[test]
fn sequences_from_files() {
    let tmp = tempfile::tempdir().unwrap();
    let sparse = tmp.path().join("sparse.txt");
    fs::write(&sparse, "1,1.0\n4,0.5\n").unwrap();
    let out = tmp.path().join("s");
    let seq = format!("sparse:{}", path(&sparse));
    ok(&["alpha-star", "--dim", "3", "--seq", &seq, "--out", path(&out)]);
    assert_eq!(json(&out.join("alpha_star.json"))["alpha_star"], 0.0);
    assert_eq!(json(&out.join("alpha_star.json"))["divergence_exponent_bound"], "+inf");

    let explicit = tmp.path().join("c.txt");
    fs::write(&explicit, "1.0, 0.5\n0.25\n").unwrap();
    let out = tmp.path().join("e");
    let seq = format!("explicit:{}", path(&explicit));
    ok(&["expected-norm", "--dim", "2", "--nmax", "3", "--p", "2", "--seq", &seq, "--out", path(&out)]);
    let m = json(&out.join("expected_norm.json"))["M_N"].as_f64().unwrap();
    assert!((m - 2.0 * (1.0 + 0.25 + 0.0625)).abs() <= 1e-8);

    let bad = lpseries(&["alpha-star", "--seq", "powerlaw:1:0.3", "--out", path(&tmp.path().join("x"))]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn verdicts_and_brackets() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path().join("torus");
    ok(&["classify", "--basis", "constant", "--p", "12", "--out", path(&t)]);
    assert_eq!(json(&t.join("verdict.json"))["verdict"], "Convergent");
    let csv = fs::read_to_string(t.join("ladder.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "p,N,M_N");
    assert_eq!(csv.lines().count(), 6);

    let disc = tmp.path().join("disc");
    ok(&["pcr", "--dim", "2", "--out", path(&disc)]);
    let b = json(&disc.join("pcr.json"));
    assert_eq!(b["p_upper"], "+inf");
    assert_eq!(b["p_lower"], 20.0);
}

#[test]
fn adversarial_outcomes() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    ok(&["adversarial", "--dim", "2", "--p", "6", "--stages", "2", "--out", path(&a)]);
    let r = json(&a.join("adversarial.json"));
    assert_eq!(r["status"], "constructed");
    assert_eq!(r["indices"].as_array().unwrap().len(), 2);
    let b = tmp.path().join("b");
    ok(&["adversarial", "--dim", "2", "--p", "3", "--cap", "2000", "--out", path(&b)]);
    assert_eq!(json(&b.join("adversarial.json"))["status"], "no_such_sequence");
}

#[test]
fn seeded_commands_repeat() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["gibbs", "--nmax", "16", "--seeds", "300", "--master-seed", "9"];
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    ok(&[&args[..], &["--out", path(&a)]].concat());
    ok(&[&args[..], &["--out", path(&b), "--workers", "1"]].concat());
    for f in ["weights.csv", "histogram.csv", "gibbs.json", "manifest.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let csv = fs::read_to_string(a.join("weights.csv")).unwrap();
    for line in csv.lines().skip(1) {
        for w in line.split(',').skip(1) {
            let w: f64 = w.parse().unwrap();
            assert!(w > 0.0 && w <= 1.0);
        }
    }
    let hist = fs::read_to_string(a.join("histogram.csv")).unwrap();
    let total: usize = hist.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 300);

    let s = tmp.path().join("sample");
    ok(&["sample", "--dim", "2", "--nmax", "8", "--seeds", "2", "--master-seed", "3", "--out", path(&s)]);
    assert_eq!(json(&s.join("manifest.json"))["master_seed"], 3);

    let f = tmp.path().join("fern");
    ok(&["fernique", "--nmax", "20", "--seeds", "200", "--eps", "0,0.001,0.01", "--out", path(&f)]);
    let rows = json(&f.join("fernique.json"));
    assert_eq!(rows[0]["mean"], 1.0);
    assert!(rows[1]["relative_change"].as_f64().unwrap() <= 0.05);
}

#[test]
fn verify_fault_injection() {
    let tmp = tempfile::tempdir().unwrap();
    let good = tmp.path().join("good");
    let out = ok(&["verify", "--checks", "zeros,orthonormality", "--out", path(&good)]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS [ 2] orthonormality"));
    let bad = tmp.path().join("bad");
    let out = lpseries(&[
        "verify",
        "--checks",
        "zeros,orthonormality",
        "--fault",
        "corrupted_beta",
        "--out",
        path(&bad),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&bad.join("report.json"));
    let failed: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["id"].as_str().unwrap())
        .collect();
    assert_eq!(failed, vec!["orthonormality"]);
    let timings = json(&bad.join("timings.json"));
    assert_eq!(timings.as_array().unwrap().len(), 2);
}
