use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_settomo");

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// All outputs except the wall-clock file.
fn outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "timing.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SMALL: &str = r#"{
  "schema_version": 1,
  "rng_seed": 5,
  "grid": {"center": 0, "span": 8, "n": 8},
  "kernel": {"type": "gaussian", "sigma_plus": 0.8, "sigma_minus": 2.0, "chirp": 0.5},
  "coupling": {"gain": 0.05},
  "noise": {"mc_samples": 40, "sweep": [0, 0.1], "delta_eta": 0.05},
  "oracle": {"trials": 5, "max_n": 4}
}"#;

#[test]
fn every_scenario_is_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.json", SMALL);
    let cfg = cfg.to_str().unwrap();
    for s in ["jsa", "schmidt", "direct", "interf", "reconstruct", "noise-sweep", "gain-sweep", "oracle-check"] {
        let a = tmp.path().join(format!("{s}-a"));
        let b = tmp.path().join(format!("{s}-b"));
        for d in [&a, &b] {
            let o = run(&[s, "--config", cfg, "--out", d.to_str().unwrap()]);
            assert_eq!(o.status.code(), Some(0), "{s}: {}", stderr(&o));
        }
        let (fa, fb) = (outputs(&a), outputs(&b));
        assert!(fa.contains_key("summary.json"), "{s}");
        assert!(fa.len() >= 2, "{s}: {:?}", fa.keys());
        assert_eq!(fa, fb, "{s} outputs differ between runs");
        assert!(b.join("timing.json").exists());
    }
}

#[test]
fn outputs_carry_version_and_config_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.json", SMALL);
    let out = tmp.path().join("o");
    let o = run(&["interf", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    let hash = summary["toolkit"]["config_sha256"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 64);
    assert_eq!(summary["toolkit"]["version"], env!("CARGO_PKG_VERSION"));
    for (name, bytes) in outputs(&out) {
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.contains(&hash), "{name} lacks the config hash");
    }
    let csv = std::fs::read_to_string(out.join("interf.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("q_sigma,q_eta,re_S,im_S"));
}

#[test]
fn seed_override_changes_monte_carlo_and_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.json", SMALL);
    let cfg = cfg.to_str().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(run(&["noise-sweep", "--config", cfg, "--out", a.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(run(&["noise-sweep", "--config", cfg, "--out", b.to_str().unwrap(), "--seed", "99"]).status.code(), Some(0));
    let ta = std::fs::read_to_string(a.join("noise_sweep.csv")).unwrap();
    let tb = std::fs::read_to_string(b.join("noise_sweep.csv")).unwrap();
    assert_ne!(ta.lines().next(), tb.lines().next());
    assert_ne!(ta.lines().last(), tb.lines().last());
}

#[test]
fn missing_input_file_is_a_config_error_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.json",
        r#"{"schema_version": 1, "kernel": {"type": "file", "path": "no_such_kernel.json"}}"#,
    );
    let out = tmp.path().join("out");
    let o = run(&["schmidt", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("kernel.path"), "{}", stderr(&o));
    assert!(!out.exists());

    let o = run(&["jsa", "--config", tmp.path().join("absent.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn validate_minimal_config_lists_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "min.json", r#"{"schema_version": 1}"#);
    let o = run(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("ok"));
    for key in ["\"reg_eps\": 0.001", "\"gain\": 0.01", "\"mc_samples\": 1000", "\"truncation_tol\": 1e-12"] {
        assert!(text.contains(key), "missing {key} in\n{text}");
    }
}

#[test]
fn validate_reports_unknown_keys_with_lines() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "typo.json", "{\n  \"schema_version\": 1,\n  \"noise\": {\"mc_sampels\": 10}\n}\n");
    let o = run(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 3") && err.contains("noise.mc_sampels"), "{err}");
}

#[test]
fn validate_rejects_negative_gain() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "neg.json", r#"{"schema_version": 1, "coupling": {"gain": -0.1}}"#);
    let o = run(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("coupling.gain") && err.contains("CouplingParams"), "{err}");
}

#[test]
fn numeric_failure_exits_three_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    // A threshold above the seed peak masks every cell.
    let cfg = write_config(tmp.path(), "mask.json", r#"{"schema_version": 1, "grid": {"center": 0, "span": 8, "n": 8}, "reg_eps": 2}"#);
    let out = tmp.path().join("out");
    let o = run(&["reconstruct", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("reconstruction-failed"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn record_file_round_trips_through_reconstruct() {
    let tmp = tempfile::tempdir().unwrap();
    let gen = write_config(
        tmp.path(),
        "gen.json",
        r#"{"schema_version": 1, "grid": {"center": 0, "span": 12, "n": 16}, "coupling": {"gain": 0.02}, "record": {"model": "lowgain"}}"#,
    );
    let rec_dir = tmp.path().join("rec");
    let o = run(&["interf", "--config", gen.to_str().unwrap(), "--out", rec_dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let inv = write_config(
        tmp.path(),
        "inv.json",
        r#"{"schema_version": 1, "grid": {"center": 0, "span": 12, "n": 16}, "kernel": {"type": "gaussian", "sigma_plus": 0.8, "sigma_minus": 2.0, "chirp": 0.5}, "record": {"file": "rec/record.json"}}"#,
    );
    let out = tmp.path().join("inv");
    let o = run(&["reconstruct", "--config", inv.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["fidelity"].as_f64().unwrap() > 1.0 - 1e-10, "{summary}");
    assert_eq!(summary["record_provenance"], "lowgain");

    // The reconstructed kernel file loads back as a kernel input.
    let again = write_config(
        tmp.path(),
        "again.json",
        r#"{"schema_version": 1, "kernel": {"type": "file", "path": "inv/reconstructed_kernel.json"}}"#,
    );
    let o = run(&["schmidt", "--config", again.to_str().unwrap(), "--out", tmp.path().join("s").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn undersampled_record_warns() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "coarse.json",
        r#"{"schema_version": 1, "record": {"sigma": {"center": 0, "span": 32, "n": 16}, "eta": {"center": 0, "span": 32, "n": 16}}}"#,
    );
    let o = run(&["reconstruct", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("undersample"), "{}", stderr(&o));
}

#[test]
fn scenario_field_must_match_command() {
    let cfg = configs_dir().join("jsa.json");
    let o = run(&["direct", "--config", cfg.to_str().unwrap(), "--out", "/nonexistent/never"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("scenario"));
}

#[test]
fn shipped_configs_validate() {
    for e in std::fs::read_dir(configs_dir()).unwrap() {
        let p = e.unwrap().path();
        let o = run(&["validate", "--config", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}: {}", p.display(), stderr(&o));
    }
}

#[test]
fn default_oracle_check_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = run(&["oracle-check", "--config", configs_dir().join("oracle_check.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["max_relative_deviation"].as_f64().unwrap() <= 1e-8);
    assert_eq!(summary["trials"], 100);
}
