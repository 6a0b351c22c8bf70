use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn iqae(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iqae")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str, output: &str) -> (PathBuf, PathBuf) {
    let out = dir.join(output);
    let text = format!("{body}\n[output]\npath = {:?}\n", out.to_str().unwrap());
    let cfg = dir.join(name);
    std::fs::write(&cfg, text).unwrap();
    (cfg, out)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const H2: &str = r#"
[model]
name = "h2"
[state]
kind = "h2_ansatz"
theta = [0.9, 2.3]
[solver]
k_max = 1
[mode]
kind = "solve"
"#;

/// Required keys, allowed keys and row value types from the published schema.
fn check_schema(doc: &Value) {
    let schema: Value = serde_json::from_str(
        &std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/result-schema.json")).unwrap(),
    )
    .unwrap();
    let obj = doc.as_object().unwrap();
    for key in schema["required"].as_array().unwrap() {
        assert!(obj.contains_key(key.as_str().unwrap()), "missing {key}");
    }
    let allowed = schema["properties"].as_object().unwrap();
    assert!(obj.keys().all(|k| allowed.contains_key(k)));
    assert!(doc["results"]
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r.as_object().unwrap().values().all(|v| v.is_number() || v.is_boolean())));
    assert_eq!(doc["versions"]["schema"], 1);
}

#[test]
fn h2_solve_reports_ground_energy() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, out) = write_config(dir.path(), "h2.toml", H2, "h2.json");
    let o = iqae(&["run", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    check_schema(&doc);
    let e = doc["summary"]["energy"].as_f64().unwrap();
    assert!((e + 0.8246).abs() < 1e-3, "{e}");
    assert_eq!(doc["summary"]["basis_size"], 4);
    assert!(doc.get("wall_time_ms").is_none());
    assert!(String::from_utf8_lossy(&o.stdout).contains("solve: energy"));
}

#[test]
fn negative_shots_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{H2}\n[backend]\nkind = \"sampled\"\nshots = -100\n");
    let (cfg, out) = write_config(dir.path(), "bad.toml", &body, "bad.json");
    let o = iqae(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("backend.shots"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn unknown_key_and_bad_override_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, _) = write_config(dir.path(), "u.toml", &H2.replace("k_max = 1", "k_max = 1\nwidth = 3"), "u.json");
    let o = iqae(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("width"));
    let (cfg, _) = write_config(dir.path(), "ok.toml", H2, "ok.json");
    let cfg = cfg.to_str().unwrap();
    assert_eq!(iqae(&["validate", cfg, "--override", "nonsense"]).status.code(), Some(1));
    assert_eq!(iqae(&["validate", cfg, "--override", "solver.k_max=2"]).status.code(), Some(0));
    assert_eq!(iqae(&["validate", "/nonexistent/config.toml"]).status.code(), Some(1));
    assert_eq!(iqae(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn validate_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, out) = write_config(dir.path(), "h2.toml", H2, "h2.json");
    assert!(iqae(&["validate", cfg.to_str().unwrap()]).status.success());
    assert!(!out.exists());
}

#[test]
fn discarded_overlaps_are_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, out) = write_config(dir.path(), "h2.toml", H2, "h2.json");
    let o = iqae(&["run", cfg.to_str().unwrap(), "--override", "solver.reg_threshold=100.0"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("regularization"));
    assert!(!out.exists());
}

#[test]
fn ising_sweep_csv_matches_exact() {
    let dir = tempfile::tempdir().unwrap();
    let values: Vec<String> = (1..=20).map(|i| format!("{:.1}", i as f64 / 10.0)).collect();
    let body = format!(
        "[model]\nname = \"ising\"\nn = 8\nh = 0.5\n[solver]\nk_max = 4\n\
         [mode]\nkind = \"sweep\"\nparameter = \"h\"\nvalues = [{}]\n",
        values.join(", ")
    );
    let (cfg, out) = write_config(dir.path(), "sweep.toml", &body, "sweep.csv");
    let o = iqae(&["run", cfg.to_str().unwrap(), "--override", "output.format=csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut reader = csv::Reader::from_path(&out).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["h", "energy", "exact_energy", "fidelity", "retained_rank"]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 20);
    for (row, v) in rows.iter().zip(&values) {
        assert_eq!(row[0].parse::<f64>().unwrap(), v.parse::<f64>().unwrap());
        let e: f64 = row[1].parse().unwrap();
        let exact: f64 = row[2].parse().unwrap();
        let f: f64 = row[3].parse().unwrap();
        assert!((e - exact).abs() < 1e-8);
        assert!(f > 1.0 - 1e-8);
    }
}

#[test]
fn bench_reaches_exhaustive_energy() {
    let dir = tempfile::tempdir().unwrap();
    let body = "[mode]\nkind = \"bench\"\nn = [10, 100]\nr = 8\nseed = 42\n";
    let (cfg, out) = write_config(dir.path(), "bench.toml", body, "bench.csv");
    let o = iqae(&["bench", cfg.to_str().unwrap(), "--override", "output.format=\"csv\""]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut reader = csv::Reader::from_path(&out).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["n", "m", "energy", "delta_e", "exact_energy"]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    for n in ["10", "100"] {
        let last = rows.iter().filter(|r| &r[0] == n).last().unwrap();
        assert_eq!(&last[1], "256");
        assert!(last[3].parse::<f64>().unwrap().abs() < 1e-10);
        if n == "10" {
            let e: f64 = last[2].parse().unwrap();
            let exact: f64 = last[4].parse().unwrap();
            assert!((e - exact).abs() < 1e-8);
        } else {
            assert_eq!(&last[4], "");
        }
    }
}

#[test]
fn bench_rejects_empty_list_and_other_modes() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, _) = write_config(dir.path(), "b.toml", "[mode]\nkind = \"bench\"\nn = []\nr = 8\n", "b.csv");
    let o = iqae(&["bench", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("mode.n"));
    let (cfg, _) = write_config(dir.path(), "h2.toml", H2, "h2.json");
    assert_eq!(iqae(&["bench", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
[model]
name = "ising"
n = 4
h = 0.7
[state]
kind = "hardware_efficient"
layers = 5
seed = 3
[backend]
kind = "sampled"
shots = 1024
seed = 9
[solver]
k_max = 2
[mode]
kind = "moments"
k = [0, 1, 2]
"#;
    for (ext, extra) in [("json", ""), ("csv", "format = \"csv\"\n")] {
        let out = dir.path().join(format!("m.{ext}"));
        let cfg = dir.path().join(format!("m_{ext}.toml"));
        std::fs::write(&cfg, format!("{body}[output]\npath = {:?}\n{extra}", out.to_str().unwrap())).unwrap();
        assert!(iqae(&["run", cfg.to_str().unwrap()]).status.success());
        let first = std::fs::read(&out).unwrap();
        assert!(iqae(&["run", cfg.to_str().unwrap()]).status.success());
        assert_eq!(first, std::fs::read(&out).unwrap());
        if ext == "json" {
            let doc: Value = serde_json::from_slice(&first).unwrap();
            check_schema(&doc);
            assert_eq!(doc["results"].as_array().unwrap().len(), 3);
            assert!(doc["results"][0].get("settings").is_some());
        }
    }
}

#[test]
fn compare_ite_stays_in_sector() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
[model]
name = "xxz"
n = 6
delta = 0.5
[state]
kind = "basis"
excited = [0]
[solver]
k_max = 10
stop_threshold = 1e-12
[mode]
kind = "compare_ite"
taus = [0.0, 1.0, 5.0, 20.0]
"#;
    let (cfg, out) = write_config(dir.path(), "x.toml", body, "x.json");
    let o = iqae(&["run", cfg.to_str().unwrap(), "--override", "output.timings=true"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    check_schema(&doc);
    assert!(doc["wall_time_ms"].is_number());
    let gaps: Vec<f64> = doc["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["ite_gap"].as_f64().unwrap())
        .collect();
    assert!(gaps.iter().all(|g| *g > 1.0), "{gaps:?}");
    assert!(doc["summary"]["iqae_gap"].as_f64().unwrap().abs() < 1e-6);
}
