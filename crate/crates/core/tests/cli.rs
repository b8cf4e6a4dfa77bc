use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ringtoa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ringtoa"))
        .args(args)
        .env_remove("RINGTOA_THREADS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const CLOCK: &str = r#"{
  "experiment": "clock",
  "ring": { "mu": 0, "r": 1, "m_max": 120 },
  "params": { "state": { "kind": "coherent", "xi": 80, "alpha": 4 }, "phi": 0 },
  "grid": { "t_min": 0, "t_max": 20, "n_t": 801 }
}"#;

#[test]
fn run_writes_csv_with_metadata_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "steps.json", CLOCK);
    let out = dir.path().join("out");
    let o = ringtoa(&["run", s(&cfg), "--out", s(&out), "--threads", "2", "--gnuplot-stub"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let csv = fs::read_to_string(out.join("steps.csv")).unwrap();
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "t,t_over_2pir,density,w");
    assert!(csv.lines().any(|l| l == "# manifest: steps.manifest.json"));
    assert!(csv.lines().any(|l| l == "# normalization: unit-period"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 802);

    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("steps.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["experiment"], "clock");
    assert_eq!(m["threads"], 2);
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!(m["truncation_errors"]["density"].is_number());
    for f in m["files"].as_array().unwrap() {
        assert!(out.join(f.as_str().unwrap()).exists(), "{f}");
    }
    let gp = fs::read_to_string(out.join("steps.gp")).unwrap();
    assert!(gp.contains("'steps.csv' using 2:4"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "steps.json", CLOCK);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(ringtoa(&["run", s(&cfg), "--out", s(&a)]).status.success());
    assert!(ringtoa(&["run", s(&cfg), "--out", s(&b), "--threads", "3"]).status.success());
    // the manifest records wall time and thread count, everything else must match exactly
    for f in ["steps.csv", "steps-ticks.csv", "steps.summary.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn json_format_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{
      "experiment": "noise",
      "params": { "a": [1.0], "omega_d_r": [0, 0.5] },
      "output": { "format": "json", "path": "eta" }
    }"#;
    let cfg = write_config(dir.path(), "n.json", body);
    let out = dir.path().join("o");
    assert!(ringtoa(&["run", s(&cfg), "--out", s(&out)]).status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("eta-a1.json")).unwrap()).unwrap();
    let eta = v["data"]["eta"].as_array().unwrap();
    assert!((eta[0].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((eta[1].as_f64().unwrap() - 2.03358).abs() < 1e-5);
    assert_eq!(v["metadata"]["manifest"], "eta.manifest.json");
}

#[test]
fn validate_reports_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(
        dir.path(),
        "bad.json",
        r#"{"experiment":"sagnac","ring":{"mu":0,"r":1,"m_max":100},
            "params":{"state":{"kind":"coherent","xi":50,"alpha":5},"omega_d":1.2},
            "grid":{"t_min":0,"t_max":10,"n_t":100}}"#,
    );
    let o = ringtoa(&["validate", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("frame not timelike"));

    let warn = write_config(
        dir.path(),
        "warn.json",
        r#"{"experiment":"qsymbol","ring":{"mu":1},
            "params":{"xi":40,"alpha":1,"phi":0},"grid":{"t_min":0,"t_max":1,"n_t":10}}"#,
    );
    let o = ringtoa(&["validate", s(&warn)]);
    assert!(o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("below recommended alpha >= 3"), "{err}");
    assert!(err.contains("m_max missing; defaulted to"), "{err}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let schema = write_config(dir.path(), "schema.json", r#"{"experiment":"clock","unknown":1}"#);
    assert_eq!(ringtoa(&["run", s(&schema)]).status.code(), Some(2));

    let short = write_config(
        dir.path(),
        "short.json",
        r#"{"experiment":"kolmogorov","ring":{"mu":0,"r":1,"m_max":120},
            "params":{"pairing":"product","states":[{"kind":"coherent","xi":80,"alpha":4},
                      {"kind":"coherent","xi":70,"alpha":4}],"window":1.0},
            "grid":{"t_min":0,"t_max":1,"n_t":4}}"#,
    );
    let out = dir.path().join("o");
    assert_eq!(ringtoa(&["run", s(&short), "--out", s(&out)]).status.code(), Some(3));

    assert_eq!(ringtoa(&["run", s(&dir.path().join("missing.json"))]).status.code(), Some(4));
    let cfg = write_config(dir.path(), "steps.json", CLOCK);
    let blocker = write_config(dir.path(), "file", "");
    assert_eq!(ringtoa(&["run", s(&cfg), "--out", s(&blocker)]).status.code(), Some(4));
}

#[test]
fn threads_fall_back_to_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "steps.json", CLOCK);
    let out = dir.path().join("o");
    let o = Command::new(env!("CARGO_BIN_EXE_ringtoa"))
        .args(["run", s(&cfg), "--out", s(&out)])
        .env("RINGTOA_THREADS", "3")
        .output()
        .unwrap();
    assert!(o.status.success());
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("steps.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["threads"], 3);
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["fig-probcoh.json", "fig-noise.json", "fig-steps.json"] {
        let o = ringtoa(&["validate", s(&dir.join(name))]);
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn probcoh_writes_eight_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/fig-probcoh.json");
    let out = dir.path().join("o");
    assert!(ringtoa(&["run", s(&cfg), "--out", s(&out)]).status.success());
    let csvs: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
        .collect();
    assert_eq!(csvs.len(), 8);
    for l in "abcdefgh".chars() {
        let body = fs::read_to_string(out.join(format!("fig-probcoh-{l}.csv"))).unwrap();
        assert!(body.contains("\ntheta,q\n"));
    }
}
