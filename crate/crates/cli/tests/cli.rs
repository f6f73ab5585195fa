use std::path::PathBuf;
use std::process::{Command, Output};

fn qlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlab")).args(args).env_remove("QLAB_SEED").output().unwrap()
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name).display().to_string()
}

fn stdout_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn help_lists_subcommands() {
    let o = qlab(&["--help"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for sub in ["run", "validate", "dh", "tv", "compress", "distill", "separations"] {
        assert!(text.contains(sub), "{sub}");
    }
}

#[test]
fn validate_reports_ebit_spectrum() {
    let o = qlab(&["validate", &fixture("ebit.json")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["valid"], true);
    let ev: Vec<f64> = v["summary"]["eigenvalues"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((ev.iter().cloned().fold(f64::MIN, f64::max) - 1.0).abs() < 1e-9);
    assert!((ev.iter().sum::<f64>() - 1.0).abs() < 1e-9);
}

#[test]
fn missing_file_exits_two() {
    let o = qlab(&["validate", "no/such/state.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no/such/state.json"));
}

#[test]
fn bits_flag_rescales_dh() {
    let (a, b) = (fixture("qubit_a.json"), fixture("qubit_b.json"));
    let nats = stdout_json(&qlab(&["dh", "--rho", &a, "--sigma", &b, "--eps", "0.1"]));
    let bits = stdout_json(&qlab(&["--bits", "dh", "--rho", &a, "--sigma", &b, "--eps", "0.1"]));
    let (n, t) = (nats["value"].as_f64().unwrap(), bits["value"].as_f64().unwrap());
    assert!((t - n / 2f64.ln()).abs() < 1e-12, "{n} {t}");
    assert!(nats["accept_rho"].as_f64().unwrap() >= 0.9 - 1e-9);
}

#[test]
fn run_writes_manifest_and_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    let body = format!(
        r#"{{"id": "t", "seed": 1, "output_dir": "out", "experiments": [
            {{"id": "states", "kind": "validate_states", "states": ["{}"]}},
            {{"id": "hs", "kind": "hs", "n_qubits": 1, "m_list": [0, 1], "k": 2, "trials": 200}}]}}"#,
        fixture("ebit.json")
    );
    std::fs::write(&cfg, body).unwrap();
    let o = qlab(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("out/manifest.json").exists());

    std::fs::write(&cfg, r#"{"id": "t", "experiments": [{"id": "x", "kind": "nonsense"}]}"#).unwrap();
    assert_eq!(qlab(&["run", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn gl_table_is_seeded() {
    let args = ["separations", "gl", "--n-bits", "6", "--trials", "200", "--random-tests", "3", "--gates", "4", "--seed", "7"];
    let (a, b) = (qlab(&args), qlab(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8_lossy(&a.stdout);
    assert!(text.starts_with("# toy-scale, no hardness claim"));
    assert!(text.lines().any(|l| l.starts_with("inverter")));
    let unseeded = qlab(&args[..args.len() - 2]);
    assert_eq!(unseeded.status.code(), Some(2));
}
