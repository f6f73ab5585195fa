use std::fs;
use std::path::Path;

use approx::assert_abs_diff_eq;

use qlab_core::error::Error;
use qlab_core::harness::{run, validate_state_file, ExperimentConfig, RunOptions};
use qlab_core::separations::{
    advantage_harness, gl_f_size, gl_predicate, gl_states, hs_ensemble_experiment, unbounded_distinguisher, TestFamily,
    ToyOwf,
};

/// `‖E[ρ_A^{⊗2}] - ω^{⊗2}‖₁` for reduced Haar states, from the swap-operator form of the second moment.
fn hs_second_moment_distance(n: usize, m: usize) -> f64 {
    let (da, db) = (2f64.powi(n as i32), 2f64.powi(m as i32));
    let big = da * db;
    let norm = big * (big + 1.0);
    let w = 1.0 / (da * da);
    let sym = ((db * db + db) / norm - w).abs() * da * (da + 1.0) / 2.0;
    let anti = ((db * db - db) / norm - w).abs() * da * (da - 1.0) / 2.0;
    sym + anti
}

#[test]
fn supports_partition_and_are_disjoint_for_injective_functions() {
    for n in [2usize, 4, 6, 8] {
        let f = ToyOwf::permutation(n, 3).unwrap();
        assert!(f.is_one_to_one());
        let pair = gl_states(f).unwrap();
        assert_eq!(pair.f_size, gl_f_size(n));
        let brute = (0..1u64 << n).filter(|&x| gl_predicate(x, n)).count() as u64;
        assert_eq!(pair.f_size, brute);
        assert_abs_diff_eq!(pair.rho.total(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pair.sigma.total(), 1.0, epsilon = 1e-12);
        assert!(pair.rho.support().all(|s| pair.sigma.mass(s) == 0.0));
        assert_eq!(pair.rho.entries.len() + pair.sigma.entries.len(), 1 << n);
        assert_abs_diff_eq!(unbounded_distinguisher(&pair).advantage, 1.0);
        assert_abs_diff_eq!(unbounded_distinguisher(&pair.swapped()).advantage, 1.0);
    }
}

#[test]
fn modexp_on_eight_bits_is_injective() {
    let f = ToyOwf::modexp(8).unwrap();
    assert!(f.is_one_to_one());
    let pair = gl_states(f).unwrap();
    assert_abs_diff_eq!(unbounded_distinguisher(&pair).advantage, 1.0);
}

#[test]
fn collisions_cost_advantage() {
    // two inputs in different classes share an image
    let n = 2;
    let x0 = (0..4u64).find(|&x| gl_predicate(x, n)).unwrap();
    let x1 = (0..4u64).find(|&x| !gl_predicate(x, n)).unwrap();
    let mut table: Vec<u32> = (0..4u32).collect();
    table[x1 as usize] = x0 as u32;
    let f = ToyOwf::from_table("collide", n, 2, table).unwrap();
    assert!(!f.is_one_to_one());
    let pair = gl_states(f).unwrap();
    let adv = unbounded_distinguisher(&pair).advantage;
    assert!(adv < 1.0);
    assert_abs_diff_eq!(adv, 1.0 - pair.sigma.mass(x0 as u64), epsilon = 1e-12);
}

#[test]
fn inverter_wins_and_table_is_seed_deterministic() {
    let pair = gl_states(ToyOwf::modexp(8).unwrap().with_inverse_oracle()).unwrap();
    let fams = [TestFamily::Pattern { gates: 2 }, TestFamily::InverterAssisted, TestFamily::RandomCircuits { gates: 4, count: 5 }];
    let a = advantage_harness(&pair, &fams, 2000, 9).unwrap();
    let b = advantage_harness(&pair, &fams, 2000, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
    let inv: Vec<_> = a.family_rows("inverter").collect();
    assert_eq!(inv.len(), 1);
    assert_abs_diff_eq!(inv[0].exact.unwrap(), 1.0, epsilon = 1e-12);
    for row in a.family_rows("pattern") {
        if row.test == "identity" {
            assert_abs_diff_eq!(row.advantage, 0.0);
        }
        if let Some(ex) = row.exact {
            assert!((row.advantage - ex).abs() <= 2.0 * row.ci_half_width + 0.01, "{row:?}");
        }
    }
}

#[test]
fn second_moment_matches_closed_form() {
    let e = hs_ensemble_experiment(1, &[0, 1, 2], 2, 20_000, 4).unwrap();
    for est in &e.estimates {
        let want = hs_second_moment_distance(1, est.m);
        let tol = 5.0 * est.bootstrap_error + 0.01;
        assert!((est.distance - want).abs() <= tol, "m={}: {} vs {want} (tol {tol})", est.m, est.distance);
    }
    assert_abs_diff_eq!(hs_second_moment_distance(1, 0), 0.5, epsilon = 1e-12);
}

#[test]
fn first_moment_is_exactly_mixed_up_to_noise() {
    let e = hs_ensemble_experiment(2, &[1, 2], 1, 5_000, 11).unwrap();
    for est in &e.estimates {
        assert!(est.distance <= 3.0 * est.bootstrap_error + 0.02, "{est:?}");
    }
}

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

const BELL: &str = r#"{"dim": 4, "re": [[0.5,0,0,0.5],[0,0,0,0],[0,0,0,0],[0.5,0,0,0.5]], "im": [[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]]}"#;

#[test]
fn bell_file_has_one_unit_eigenvalue() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "bell.json", BELL);
    let (_, s) = validate_state_file(&p).unwrap();
    assert_eq!(s.dim, 4);
    for (a, b) in s.eigenvalues.iter().zip([1.0, 0.0, 0.0, 0.0]) {
        assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
    }
}

#[test]
fn bad_state_files_name_path_and_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let neg = write(dir.path(), "neg.json", r#"{"dim": 2, "re": [[1.2,0],[0,-0.2]], "im": [[0,0],[0,0]]}"#);
    match validate_state_file(&neg) {
        Err(Error::Input { path, message }) => {
            assert!(path.ends_with("neg.json"));
            assert!(message.contains("psd"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    let junk = write(dir.path(), "junk.json", "{ not json");
    assert!(matches!(validate_state_file(&junk), Err(Error::Input { .. })));
}

#[test]
fn empty_experiment_list_writes_a_passing_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"id": "empty", "output_dir": "out"}"#);
    let cfg = ExperimentConfig::load(&cfg).unwrap();
    let m = run(&cfg, &RunOptions::default()).unwrap();
    assert!(m.pass && m.runs.is_empty());
    assert!(dir.path().join("out/manifest.json").exists());
}

#[test]
fn corrupt_input_aborts_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bell.json", BELL);
    write(dir.path(), "bad.json", r#"{"dim": 2, "re": [[1,0],[0,1]], "im": [[0,0],[0,0]]}"#);
    let body = r#"{"id": "c", "output_dir": "out", "experiments": [
        {"id": "ok", "kind": "validate_states", "states": ["bell.json"]},
        {"id": "broken", "kind": "validate_states", "states": ["bad.json"]}]}"#;
    let cfg = ExperimentConfig::load(&write(dir.path(), "c.json", body)).unwrap();
    match run(&cfg, &RunOptions::default()) {
        Err(Error::Input { path, .. }) => assert!(path.ends_with("bad.json")),
        other => panic!("{other:?}"),
    }
    let out = dir.path().join("out");
    assert!(!out.exists() || fs::read_dir(&out).unwrap().next().is_none());
}

#[test]
fn stochastic_experiment_without_seed_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"id": "c", "output_dir": "out", "experiments": [
        {"id": "hs", "kind": "hs", "n_qubits": 1, "m_list": [0, 1], "k": 1, "trials": 200}]}"#;
    let cfg = ExperimentConfig::load(&write(dir.path(), "c.json", body)).unwrap();
    assert!(run(&cfg, &RunOptions::default()).is_err());
    let m = run(&cfg, &RunOptions { seed_fallback: Some(5), jobs: Some(1) }).unwrap();
    assert_eq!(m.runs[0].seed, Some(5));
}

#[test]
fn reruns_produce_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"id": "c", "seed": 3, "output_dir": "out", "experiments": [
        {"id": "ineq", "kind": "inequality_suite", "pairs": 5, "dim": 2, "eps": 0.1},
        {"id": "hs", "kind": "hs", "n_qubits": 1, "m_list": [0, 1], "k": 2, "trials": 500}]}"#;
    let cfg = ExperimentConfig::load(&write(dir.path(), "c.json", body)).unwrap();
    let read = |id: &str| fs::read_to_string(dir.path().join("out").join(format!("{id}.csv"))).unwrap();
    run(&cfg, &RunOptions { seed_fallback: None, jobs: Some(2) }).unwrap();
    let first = (read("ineq"), read("hs"));
    run(&cfg, &RunOptions { seed_fallback: None, jobs: Some(1) }).unwrap();
    assert_eq!(first, (read("ineq"), read("hs")));
}
