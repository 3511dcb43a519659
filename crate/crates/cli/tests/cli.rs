use std::path::Path;
use std::process::{Command, Output};

fn oedg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oedg"))
        .args(args)
        .env_remove("OEDG_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(dir: &Path, file: &str) -> String {
    std::fs::read_to_string(dir.join(file)).unwrap_or_else(|e| panic!("{file}: {e}"))
}

#[test]
fn gen_line_writes_expected_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("line.json");
    let o = oedg(&["gen", "--topology", "line", "--sizes", "12x5", "--overlap", "2", "--seed", "3", "--out", path.to_str().unwrap(), "--verify"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&read(dir.path(), "line.json")).unwrap();
    assert_eq!(v["dimension"], 52);
    assert_eq!(v["subcomponents"].as_array().unwrap().len(), 5);
}

#[test]
fn gen_ring_needs_three_subcomponents() {
    let o = oedg(&["gen", "--topology", "ring", "--subs", "2", "--size", "10"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("error"));
}

#[test]
fn gen_complex_to_stdout() {
    let o = oedg(&["gen", "--topology", "complex", "--nsub", "20", "--s", "50", "--m", "5", "--p", "0.2", "--seed", "9"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["subcomponents"].as_array().unwrap().len(), 20);
    assert!(v["dimension"].as_u64().unwrap() <= 50 + 19 * 45);
}

#[test]
fn gen_rejects_bad_values_by_name() {
    let o = oedg(&["gen", "--topology", "line", "--sizes", "5x3", "--overlap", "5"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains('m') || stderr(&o).contains("overlap"), "{}", stderr(&o));
    let o = oedg(&["gen", "--topology", "moebius", "--sizes", "5x3"]);
    assert!(!o.status.success());
}

#[test]
fn optimize_with_zero_budget_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = oedg(&["optimize", "--suite", "LTO", "--algs", "oedg", "--runs", "1", "--budget", "0", "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("budget must exceed one subsolver phase"), "{}", stderr(&o));
}

#[test]
fn unknown_algorithm_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let o = oedg(&["group", "--suite", "LTO", "--algs", "oedg,magic", "--runs", "5", "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    let e = stderr(&o);
    assert!(e.contains("algorithms") && e.contains("magic"), "{e}");
}

#[test]
fn config_file_keys_are_checked() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "suite = \"LTO\"\nalgorithms = [\"oedg\"]\nruns = 1\nbogus = 3\n").unwrap();
    let o = oedg(&["group", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("bogus"), "{}", stderr(&o));
}

#[test]
fn grouping_report_shape_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str| {
        let o = oedg(&[
            "group", "--suite", "LTO", "--scale", "desk", "--algs", "oedg,dg2", "--runs", "3", "--seed", "1",
            "--threads", threads, "--out", dir.path().to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    };
    let files = ["grouping.csv", "runs.jsonl", "manifest.json", "config.toml"];
    run("1");
    let first: Vec<String> = files.iter().map(|f| read(dir.path(), f)).collect();
    run("3");
    for (f, before) in files.iter().zip(&first) {
        assert_eq!(&read(dir.path(), f), before, "{f} differs across thread counts");
    }

    let csv = &first[0];
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 13);
    assert_eq!(lines[0], "problem,oedg_da,oedg_fes,dg2_da,dg2_fes");
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 5));

    // report rebuilds the same table from runs.jsonl
    std::fs::remove_file(dir.path().join("grouping.csv")).unwrap();
    let o = oedg(&["report", "--dir", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(&read(dir.path(), "grouping.csv"), csv);
}

#[test]
fn optimization_writes_all_reports() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("inst.json");
    let o = oedg(&["gen", "--topology", "line", "--sizes", "6x3", "--overlap", "1", "--seed", "2", "--out", spec.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = oedg(&[
        "optimize", "--instance", spec.to_str().unwrap(), "--algs", "oedg,single", "--runs", "5", "--budget", "3000",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["optimization.csv", "wtl.csv", "trajectories.csv", "grouping.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let wtl = read(dir.path(), "wtl.csv");
    assert!(wtl.lines().last().unwrap().starts_with("W/T/L"), "{wtl}");
}
