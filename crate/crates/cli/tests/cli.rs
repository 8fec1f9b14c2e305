use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_levy-bridge"))
}

fn model(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models").join(name)
}

fn run(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("binary runs");
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

/// Data rows (header comment and column line stripped), split on commas.
fn rows(out: &Output) -> Vec<Vec<String>> {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# levy-bridge "));
    lines.next().unwrap();
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn zeta_paths_are_pinned_at_both_ends() {
    let out = run(&["simulate", "--process", "zeta", "--steps", "50", "--paths", "4", "--seed", "9"]);
    let rows = rows(&out);
    assert_eq!(rows.len(), 51);
    for row in [&rows[0], &rows[50]] {
        for v in &row[1..] {
            assert_eq!(v.parse::<f64>().unwrap(), 0.0);
        }
    }
}

#[test]
fn prices_lie_between_zero_and_discount_factor() {
    for name in ["binary_gamma.json", "binary_poisson.json", "default_gamma_atoms.json"] {
        let m = model(name);
        let out = run(&[
            "price", "--model", m.to_str().unwrap(), "--t", "0.6", "--x-from", "-1", "--x-to", "2", "--x-steps", "12",
        ]);
        let rows = rows(&out);
        assert_eq!(rows.len(), 13);
        let col = if name.starts_with("default") { 3 } else { 2 };
        for r in rows {
            let p: f64 = r[col].parse().unwrap();
            assert!((0.0..=1.0).contains(&p), "{name}: {p}");
        }
    }
}

#[test]
fn path_pricing_output_is_thread_count_independent() {
    let m = model("default_poisson_atoms.json");
    let args = ["price", "--model", m.to_str().unwrap(), "--paths", "3", "--steps", "16", "--seed", "4"];
    let a = run(&args);
    let b = run(&args);
    let c = bin().args(args).env("BRIDGE_THREADS", "1").output().unwrap();
    assert!(c.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    assert_eq!(rows(&a).len(), 3 * 17);
}

#[test]
fn output_flag_writes_the_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("k.csv");
    let args = ["kernels", "--kernel", "tilde", "--steps", "5"];
    let stdout = run(&args).stdout;
    run(&[&args[..], &["-o", file.to_str().unwrap()]].concat());
    assert_eq!(std::fs::read(file).unwrap(), stdout);
}

#[test]
fn option_with_zero_strike_is_the_bond_price() {
    let m = model("binary_gamma.json");
    let m = m.to_str().unwrap();
    let opt = rows(&run(&["option", "--model", m, "--t", "0.5", "--K", "0"]));
    let v: f64 = opt[0][2].parse().unwrap();
    assert!((v - 0.5).abs() < 1e-12, "{v}");
}

#[test]
fn bad_model_file_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    std::fs::write(&file, r#"{"T": 1.0, "sigma": 1.0, "payoff": {"support": [0, 1], "probs": [0.7, 0.7]}}"#).unwrap();
    let out = bin().args(["price", "--model", file.to_str().unwrap(), "--t", "0.5", "--x", "0"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid model file"));

    std::fs::write(&file, "not json").unwrap();
    let out = bin().args(["price", "--model", file.to_str().unwrap(), "--t", "0.5", "--x", "0"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn bad_thread_count_is_rejected() {
    let out = bin().args(["kernels", "--kernel", "a"]).env("BRIDGE_THREADS", "zero").output().unwrap();
    assert!(!out.status.success());
}
