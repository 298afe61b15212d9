use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lumiere"));
    c.env_remove("LUMIERE_OUT_DIR");
    c
}

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn run_writes_trace_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = bin()
        .args(["run", "--seed", "3", "--scenario"])
        .arg(repo("scenarios/minimal.json"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("metrics.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# generated_at_unix="));
    assert!(lines.next().unwrap().starts_with("scenario,synchronizer,strategy,seed,"));
    let row = lines.next().unwrap();
    assert!(row.starts_with("minimal,lumiere,none,3,4,1,0,"), "{row}");
    assert!(row.contains(",pass,"));
    let trace = fs::read_to_string(out.join("trace.jsonl")).unwrap();
    assert!(trace.lines().count() > 10);
}

#[test]
fn csv_is_byte_identical_without_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("o{k}"));
        let o = bin()
            .args(["--no-timestamp", "run", "--seed", "5", "--scenario"])
            .arg(repo("scenarios/fast_colluders.json"))
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push((fs::read(out.join("metrics.csv")).unwrap(), fs::read(out.join("trace.jsonl")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert!(outputs[0].0.starts_with(b"scenario,"));
}

#[test]
fn out_dir_defaults_to_env() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .env("LUMIERE_OUT_DIR", dir.path())
        .args(["run", "--seed", "1", "--scenario"])
        .arg(repo("scenarios/minimal.json"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("metrics.csv").exists());
}

#[test]
fn malformed_configs_exit_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("n.json", "{\n  \"n\": 5,\n  \"f\": 1,\n  \"Delta\": 40,\n  \"delta\": 4,\n  \"gst\": 10\n}\n", ":2: /n:"),
        (
            "unknown.json",
            "{\n  \"n\": 4,\n  \"f\": 1,\n  \"Delta\": 40,\n  \"delta\": 4,\n  \"gst\": 10,\n  \"bogus\": 1\n}\n",
            ":7: /bogus:",
        ),
        (
            "corrupt.json",
            "{\n  \"n\": 4,\n  \"f\": 1,\n  \"Delta\": 40,\n  \"delta\": 4,\n  \"gst\": 10,\n  \"corrupted\": [0, 1]\n}\n",
            ":7: /corrupted:",
        ),
        ("syntax.json", "{\n  \"n\": 4,\n  \"f\": \n}\n", ":4: /f:"),
    ];
    for (name, body, want) in cases {
        let p = write(dir.path(), name, body);
        let o = bin()
            .args(["check", "--seeds", "0..2", "--scenario"])
            .arg(&p)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(2), "{name}: {}", stderr(&o));
        assert!(stderr(&o).contains(want), "{name}: {}", stderr(&o));
    }
}

#[test]
fn bad_seed_range_is_a_usage_error() {
    let o = bin()
        .args(["check", "--seeds", "9..3", "--scenario"])
        .arg(repo("scenarios/minimal.json"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_passes_on_colluders() {
    let o = bin()
        .args(["check", "--seeds", "0..20", "--scenario"])
        .arg(repo("scenarios/fast_colluders.json"))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("20 seeds checked (0..20), 0 failing"));
}

#[test]
fn check_reports_counterexample_and_exits_1() {
    // Lowered EC threshold with the colluder plus one honest processor
    // running alone for three epochs before the rest join.
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "ec.json",
        r#"{
  "n": 4, "f": 1, "Delta": 40, "delta": 4, "gst": 38400,
  "epochs_after_gst": 3,
  "corrupted": [0],
  "adversary": { "strategy": "fast_colluders" },
  "start_offsets": [0, 0, 38400, 38400],
  "mutations": { "ec_threshold_f_plus_1": true }
}"#,
    );
    let o = bin()
        .args(["check", "--seeds", "0..3", "--scenario"])
        .arg(&p)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("entry_causality"), "{}", stderr(&o));
}

#[test]
fn sweep_writes_sorted_csv() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "exp.json",
        r#"{
  "name": "tiny",
  "scenarios": [{ "name": "base", "config": { "n": 4, "f": 1, "Delta": 40, "delta": 4, "gst": 500, "epochs_after_gst": 2 } }],
  "seeds": "0..3",
  "axes": { "n": [7, 4], "strategy": ["none", "silent_leaders"] }
}"#,
    );
    let o = bin()
        .args(["--no-timestamp", "sweep", "--experiment"])
        .arg(&spec)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("tiny.csv")).unwrap();
    let keys: Vec<(String, u64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[3].parse().unwrap())
        })
        .collect();
    assert_eq!(keys.len(), 12);
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn compare_emits_all_synchronizers() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "exp.json",
        r#"{
  "name": "cmp",
  "scenarios": [{ "name": "s", "config": { "n": 4, "f": 1, "Delta": 40, "delta": 4, "gst": 0, "epochs_after_gst": 3, "corrupted": [1], "adversary": { "strategy": "silent_leaders" } } }],
  "seeds": "0..2"
}"#,
    );
    let o = bin()
        .args(["--no-timestamp", "compare", "--experiment"])
        .arg(&spec)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let syncs: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(syncs, ["basic", "lp22", "lumiere", "basic", "lp22", "lumiere"]);
}

#[test]
fn horizon_multiplier_shortens_runs() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["--no-timestamp", "--horizon-multiplier", "1", "run", "--seed", "0", "--scenario"])
        .arg(repo("scenarios/minimal.json"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    // gst + 1·n·Γ with n = 4, Γ = 2(x+2)Δ = 320.
    assert!(row[10].parse::<u64>().unwrap() <= 1000 + 4 * 320, "{row:?}");
}
