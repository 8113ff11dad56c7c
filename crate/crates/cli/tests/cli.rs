use std::path::Path;
use std::process::{Command, Output};

fn kingman(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kingman"))
        .args(args)
        .current_dir(dir)
        .env_remove("KINGMAN_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn kernel_at_half_is_sinc() {
    let dir = tempfile::tempdir().unwrap();
    let o = kingman(&["kernel", "--s", "0.5", "--x", "1.0"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("0.8414709848"), "{}", stdout(&o));
    let j = kingman(&["kernel", "--s", "0", "--x", "0,1", "--format", "json"], dir.path());
    let v: serde_json::Value = serde_json::from_slice(&j.stdout).unwrap();
    assert_eq!(v[0]["lambda"], 1.0);
}

#[test]
fn sample_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.csv", "b.csv"] {
        let o = kingman(&["sample", "--law", "rayleigh", "--s", "0", "--n", "5", "--seed", "7", "--out", name], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |f: &str| std::fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_eq!(read("a.json"), read("b.json"));
    assert_eq!(String::from_utf8(read("a.csv")).unwrap().lines().count(), 6);
    let other = kingman(&["sample", "--law", "rayleigh", "--s", "0", "--n", "5", "--seed", "8"], dir.path());
    assert_ne!(stdout(&other).into_bytes(), read("a.csv"));
}

#[test]
fn verify_quick_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = kingman(&["verify", "--quick"], dir.path());
    let b = kingman(&["verify", "--quick"], dir.path());
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    for id in 1..=11 {
        assert!(text.contains(&format!("] {id:>2} ")), "criterion {id} missing");
    }
    assert!(text.contains("11/11 checks passed"));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(kingman(&["nonsense"], dir.path()).status.code(), Some(2));
    let missing = kingman(&["kernel", "--x", "1"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("`s`"));
    assert_eq!(kingman(&["kernel", "--s", "-0.7", "--x", "1"], dir.path()).status.code(), Some(2));
    assert_eq!(kingman(&[], dir.path()).status.code(), Some(2));
    assert_eq!(
        kingman(&["simulate", "--process", "brownian", "--emit-plot-data", "p.csv"], dir.path()).status.code(),
        Some(2)
    );
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.json"), r#"{"command": "kernel", "s": 0.5, "x": [1.0]}"#).unwrap();
    let o = kingman(&["--config", "run.json"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("0.8414709848"));
    let o = kingman(&["--config", "run.json", "kernel", "--s", "-0.5"], dir.path());
    // Order -1/2 gives the cosine kernel.
    let text = stdout(&o);
    let value: f64 = text.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((value - 1f64.cos()).abs() < 1e-15, "{text}");
    std::fs::write(dir.path().join("bad.json"), "{\n \"command\": \"kernel\",\n \"z\": 1\n}").unwrap();
    let o = kingman(&["--config", "bad.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("artifacts");
    let o = Command::new(env!("CARGO_BIN_EXE_kingman"))
        .args(["simulate", "--process", "bessel", "--s", "0.5", "--dt", "0.1", "--out", "bessel.csv"])
        .current_dir(dir.path())
        .env("KINGMAN_OUT_DIR", &out_dir)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let path = kingman_core::io::load_path(&out_dir.join("bessel.csv")).unwrap();
    assert_eq!(path.len(), 11);
    assert!(path.states().iter().all(|&x| x >= 0.0));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("bessel.json")).unwrap()).unwrap();
    assert_eq!(meta["source"]["process"], "bessel");
}

#[test]
fn artifacts_chain_through_commands() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        let o = kingman(args, dir.path());
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        o
    };
    run(&["sample", "--law", "rayleighian", "--s", "1", "--lambda", "0.5,1", "--n", "400", "--seed", "1", "--out", "a.csv"]);
    run(&["sample", "--law", "rayleighian", "--s", "1", "--lambda", "0.5,1", "--n", "400", "--seed", "2", "--out", "b.csv"]);
    run(&["convolve", "--input", "a.csv", "--other", "b.csv", "--out", "c.csv"]);
    let c = kingman_core::io::load_batch(&dir.path().join("c.csv")).unwrap();
    assert_eq!((c.n(), c.dim()), (400, 2));
    let o = run(&["radchf", "--input", "c.csv", "--t", "1,0.5", "--emit-plot-data", "overlay.csv"]);
    let text = stdout(&o);
    assert!(text.starts_with("t1,t2,empirical,std_err\n"), "{text}");
    let plot = std::fs::read_to_string(dir.path().join("overlay.csv")).unwrap();
    assert!(plot.starts_with("t,empirical,std_err,analytic\n"));
    assert_eq!(plot.lines().count(), 82);

    std::fs::write(dir.path().join("pair.json"), r#"{"s":0.5,"k":1,"lambda":[0.0],"atoms":[{"x":[1.0],"m":1.0}]}"#).unwrap();
    run(&["sample", "--law", "levy", "--pair", "pair.json", "--time", "0.5", "--n", "100", "--out", "mu.csv"]);
    run(&["simulate", "--process", "kl", "--pair", "pair.json", "--horizon", "1", "--dt", "0.1", "--out", "kl.csv"]);
    run(&["simulate", "--process", "levy1d", "--sigma", "1", "--jump", "1:2", "--out", "l.csv"]);
    let o = run(&["whf", "--sigma", "1", "--n-paths", "2000", "--dt", "0.01", "--out", "wh.csv", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["residual"].as_f64().unwrap() < 0.1);
    let pairs = kingman_core::io::load_wh_pairs(&dir.path().join("wh.csv")).unwrap();
    assert_eq!(pairs.len(), 2000);
    let o = run(&["kernel", "--s", "1", "--x", "2", "--emit-plot-data", "kernel.csv"]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(dir.path().join("kernel.csv")).unwrap().lines().count(), 502);

    std::fs::write(dir.path().join("bad_pair.json"), r#"{"s":0.5,"k":1,"lambda":[0.0],"atoms":[{"x":[0.0],"m":1.0}]}"#).unwrap();
    let o = kingman(&["simulate", "--process", "kl", "--pair", "bad_pair.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("origin"));
}
