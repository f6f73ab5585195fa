//! Batch runner: a JSON config lists experiments, each writes a CSV table and a JSON report, and
//! a manifest records hashes, timings and check results.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::bounded::{bounded_dh, bounded_tv, inequality_report, likelihood_ratio_test, SearchConfig};
use crate::circuits::GateBudget;
use crate::compression::{compression_sandwich, entropy_rate_experiment};
use crate::entanglement::{one_shot_ppt_distillation, SdpConfig};
use crate::error::{Error, Result};
use crate::random::{random_density, rng, split_seed};
use crate::regularization::{regularized_rate_estimate, RegularizationSchedule};
use crate::separations::{
    advantage_harness, catalysis_demo, gl_states, hs_ensemble_experiment, unbounded_distinguisher, CatalysisConfig,
    TestFamily, ToyOwf, BANNER,
};
use crate::tensor::{DensityMatrix, OperatorJson, SubsystemDims};

pub const SEED_ENV: &str = "QLAB_SEED";
const DEFAULT_KAPPA: f64 = 1e-12;

fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}

fn default_owf() -> String {
    "modexp".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentSpec {
    ValidateStates {
        states: Vec<PathBuf>,
    },
    Dh {
        rho: PathBuf,
        sigma: PathBuf,
        eps: f64,
        #[serde(default)]
        gates: Option<usize>,
    },
    Tv {
        rho: PathBuf,
        sigma: PathBuf,
        #[serde(default)]
        gates: Option<usize>,
    },
    /// Pinsker and Bretagnolle-Huber checks on random pairs.
    InequalitySuite {
        pairs: usize,
        dim: usize,
        eps: f64,
        #[serde(default)]
        gates: Option<usize>,
    },
    Lrt {
        p: Vec<f64>,
        q: Vec<f64>,
        m: usize,
        delta: f64,
        #[serde(default = "default_kappa")]
        kappa: f64,
        /// Minimum exact type-II exponent, nats per copy.
        #[serde(default)]
        min_exponent: Option<f64>,
    },
    RegularizedRate {
        p: Vec<f64>,
        q: Vec<f64>,
        eps: f64,
        #[serde(default)]
        expected: Option<f64>,
        #[serde(default)]
        tol: Option<f64>,
    },
    Compression {
        state: PathBuf,
        eps: f64,
        #[serde(default)]
        gates: Option<usize>,
    },
    EntropyRate {
        p: Vec<f64>,
        eps: f64,
        copies: Vec<usize>,
    },
    Distill {
        state: PathBuf,
        dims: Vec<usize>,
        eps: f64,
    },
    Gl {
        n_bits: usize,
        #[serde(default = "default_owf")]
        owf: String,
        trials: usize,
        random_tests: usize,
        gates: usize,
    },
    Hs {
        n_qubits: usize,
        m_list: Vec<usize>,
        k: usize,
        trials: usize,
    },
    Catalysis {
        #[serde(default)]
        config: Option<CatalysisConfig>,
    },
}

impl ExperimentSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentSpec::ValidateStates { .. } => "validate_states",
            ExperimentSpec::Dh { .. } => "dh",
            ExperimentSpec::Tv { .. } => "tv",
            ExperimentSpec::InequalitySuite { .. } => "inequality_suite",
            ExperimentSpec::Lrt { .. } => "lrt",
            ExperimentSpec::RegularizedRate { .. } => "regularized_rate",
            ExperimentSpec::Compression { .. } => "compression",
            ExperimentSpec::EntropyRate { .. } => "entropy_rate",
            ExperimentSpec::Distill { .. } => "distill",
            ExperimentSpec::Gl { .. } => "gl",
            ExperimentSpec::Hs { .. } => "hs",
            ExperimentSpec::Catalysis { .. } => "catalysis",
        }
    }

    fn stochastic(&self) -> bool {
        matches!(
            self,
            ExperimentSpec::InequalitySuite { .. }
                | ExperimentSpec::Gl { .. }
                | ExperimentSpec::Hs { .. }
                | ExperimentSpec::Catalysis { .. }
        ) || matches!(self, ExperimentSpec::Dh { gates: Some(_), .. } | ExperimentSpec::Tv { gates: Some(_), .. })
            || matches!(self, ExperimentSpec::Compression { gates: Some(_), .. })
    }

    fn state_paths(&self) -> Vec<&PathBuf> {
        match self {
            ExperimentSpec::ValidateStates { states } => states.iter().collect(),
            ExperimentSpec::Dh { rho, sigma, .. } | ExperimentSpec::Tv { rho, sigma, .. } => vec![rho, sigma],
            ExperimentSpec::Compression { state, .. } | ExperimentSpec::Distill { state, .. } => vec![state],
            _ => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub id: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub spec: ExperimentSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    #[serde(default)]
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub experiments: Vec<Experiment>,
}

impl ExperimentConfig {
    /// Reads a config and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let input = |message: String| Error::Input { path: path.display().to_string(), message };
        let text = fs::read_to_string(path).map_err(|e| input(e.to_string()))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| input(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut cfg.output_dir);
        for e in &mut cfg.experiments {
            match &mut e.spec {
                ExperimentSpec::ValidateStates { states } => states.iter_mut().for_each(fix),
                ExperimentSpec::Dh { rho, sigma, .. } | ExperimentSpec::Tv { rho, sigma, .. } => {
                    fix(rho);
                    fix(sigma);
                }
                ExperimentSpec::Compression { state, .. } | ExperimentSpec::Distill { state, .. } => fix(state),
                _ => {}
            }
        }
        Ok(cfg)
    }

    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOptions {
    /// Used when neither the experiment nor the config carries a seed.
    pub seed_fallback: Option<u64>,
    pub jobs: Option<usize>,
}

impl RunOptions {
    pub fn from_env() -> Self {
        Self { seed_fallback: std::env::var(SEED_ENV).ok().and_then(|s| s.trim().parse().ok()), jobs: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check { name: name.into(), pass, detail }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub id: String,
    pub kind: String,
    pub seed: Option<u64>,
    pub wall_ms: f64,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub files: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_id: String,
    pub config_hash: String,
    pub version: String,
    pub started_unix_s: u64,
    pub total_wall_ms: f64,
    pub runs: Vec<RunRecord>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSummary {
    pub dim: usize,
    pub trace: f64,
    pub eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
}

fn read_state(path: &Path) -> Result<(DensityMatrix, StateSummary)> {
    let input = |message: String| Error::Input { path: path.display().to_string(), message };
    let text = fs::read_to_string(path).map_err(|e| input(e.to_string()))?;
    let op: OperatorJson = serde_json::from_str(&text).map_err(|e| input(format!("parse error: {e}")))?;
    let m = op.to_matrix().map_err(|e| input(e.to_string()))?;
    let rho = DensityMatrix::from_matrix(m).map_err(|e| input(e.to_string()))?;
    let eig = rho.op().eig();
    let summary = StateSummary {
        dim: rho.dim(),
        trace: rho.op().trace(),
        min_eigenvalue: eig.values.last().copied().unwrap_or(0.0),
        eigenvalues: eig.values,
    };
    Ok((rho, summary))
}

/// Parses a JSON operator file and checks the density-matrix invariants. Failures name the file
/// and the violated invariant.
pub fn validate_state_file(path: &Path) -> Result<(DensityMatrix, StateSummary)> {
    read_state(path)
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn budget(gates: Option<usize>) -> GateBudget {
    gates.map(GateBudget::gates).unwrap_or_else(GateBudget::unbounded)
}

fn search_cfg(seed: u64) -> SearchConfig {
    SearchConfig { seed, ..SearchConfig::exhaustive() }
}

fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

fn csv_table(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?).expect("utf8 csv"))
}

/// Output of one experiment before anything touches the disk.
#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub csv: String,
    pub json: Value,
    pub checks: Vec<Check>,
}

type States = BTreeMap<PathBuf, (DensityMatrix, StateSummary)>;

fn state<'a>(states: &'a States, p: &PathBuf) -> &'a DensityMatrix {
    &states[p].0
}

pub fn run_experiment(spec: &ExperimentSpec, seed: Option<u64>, states: &States) -> Result<ExperimentOutput> {
    let seed_or = || seed.ok_or_else(|| Error::InvalidArgument(format!("experiment kind {} needs a seed", spec.kind())));
    match spec {
        ExperimentSpec::ValidateStates { states: paths } => {
            let rows: Vec<Vec<String>> = paths
                .iter()
                .map(|p| {
                    let s = &states[p].1;
                    vec![p.display().to_string(), s.dim.to_string(), fmt(s.trace), fmt(s.min_eigenvalue)]
                })
                .collect();
            let summaries: Vec<&StateSummary> = paths.iter().map(|p| &states[p].1).collect();
            Ok(ExperimentOutput {
                csv: csv_table(&["path", "dim", "trace", "min_eigenvalue"], &rows)?,
                json: json!({ "states": summaries }),
                checks: vec![check("valid", true, format!("{} files", paths.len()))],
            })
        }
        ExperimentSpec::Dh { rho, sigma, eps, gates } => {
            let cfg = search_cfg(seed.unwrap_or(0));
            let r = bounded_dh(state(states, rho), state(states, sigma), *eps, budget(*gates), &cfg)?;
            let v = r.value.as_f64();
            Ok(ExperimentOutput {
                csv: csv_table(
                    &["eps", "gates", "dh", "accept_rho", "accept_sigma"],
                    &[vec![fmt(*eps), gates.map(|g| g.to_string()).unwrap_or("inf".into()), fmt(v), fmt(r.outcome.accept_rho), fmt(r.outcome.accept_sigma)]],
                )?,
                json: json!({ "value": r.value, "accept_rho": r.outcome.accept_rho, "accept_sigma": r.outcome.accept_sigma }),
                checks: vec![check("type1", r.outcome.accept_rho >= 1.0 - eps - 1e-9, format!("accept_rho {}", r.outcome.accept_rho))],
            })
        }
        ExperimentSpec::Tv { rho, sigma, gates } => {
            let cfg = search_cfg(seed.unwrap_or(0));
            let r = bounded_tv(state(states, rho), state(states, sigma), budget(*gates), &cfg)?;
            Ok(ExperimentOutput {
                csv: csv_table(&["gates", "tv"], &[vec![gates.map(|g| g.to_string()).unwrap_or("inf".into()), fmt(r.value)]])?,
                json: json!({ "value": r.value }),
                checks: vec![check("range", (0.0..=1.0 + 1e-12).contains(&r.value), format!("{}", r.value))],
            })
        }
        ExperimentSpec::InequalitySuite { pairs, dim, eps, gates } => {
            let seed = seed_or()?;
            let reports: Vec<_> = (0..*pairs)
                .into_par_iter()
                .map(|i| {
                    let mut r = rng(split_seed(seed, i as u64));
                    let a = random_density(*dim, &mut r);
                    let b = random_density(*dim, &mut r);
                    inequality_report(&a, &b, *eps, budget(*gates), &search_cfg(split_seed(seed, i as u64)), None)
                })
                .collect::<Result<_>>()?;
            let mut rows = Vec::new();
            let mut failures = 0;
            for (i, rep) in reports.iter().enumerate() {
                for c in rep.checks.iter().filter(|c| !c.skipped) {
                    failures += usize::from(!c.pass);
                    rows.push(vec![i.to_string(), c.name.clone(), fmt(c.lhs), fmt(c.rhs), fmt(c.slack), c.pass.to_string()]);
                }
            }
            Ok(ExperimentOutput {
                csv: csv_table(&["pair", "check", "lhs", "rhs", "slack", "pass"], &rows)?,
                json: json!({ "pairs": pairs, "failures": failures }),
                checks: vec![check("inequalities", failures == 0, format!("{failures} violations in {} checks", rows.len()))],
            })
        }
        ExperimentSpec::Lrt { p, q, m, delta, kappa, min_exponent } => {
            let (t, g) = likelihood_ratio_test(p, q, *m, *delta, *kappa)?;
            let ex = t.exact_errors()?;
            let exponent = ex.type2_exponent(*m);
            let mut checks = vec![check("type1", ex.type1 <= g.type1_bound + 1e-12, format!("{} <= {}", ex.type1, g.type1_bound))];
            if let Some(min) = min_exponent {
                checks.push(check("type2_exponent", exponent >= *min, format!("{exponent} >= {min}")));
            }
            Ok(ExperimentOutput {
                csv: csv_table(
                    &["m", "delta", "type1", "type1_bound", "type2_exponent", "gate_count"],
                    &[vec![m.to_string(), fmt(*delta), fmt(ex.type1), fmt(g.type1_bound), fmt(exponent), g.gate_count.to_string()]],
                )?,
                json: json!({ "exact": ex, "guarantee": g }),
                checks,
            })
        }
        ExperimentSpec::RegularizedRate { p, q, eps, expected, tol } => {
            let est = regularized_rate_estimate(p, q, &RegularizationSchedule::standard(*eps))?;
            let mut checks = vec![check("residual_poly", est.residual_class.as_ref().is_some_and(|c| c.is_poly_decaying()), format!("{:?}", est.residual_class))];
            if let (Some(x), Some(fit)) = (expected, est.fit.as_ref()) {
                let t = tol.unwrap_or(0.01);
                checks.push(check("limit", (fit.limit - x).abs() <= t, format!("|{} - {x}| <= {t}", fit.limit)));
            }
            Ok(ExperimentOutput { csv: est.to_csv()?, json: serde_json::to_value(&est)?, checks })
        }
        ExperimentSpec::Compression { state: path, eps, gates } => {
            let cfg = search_cfg(seed.unwrap_or(0));
            let r = compression_sandwich(state(states, path), *eps, budget(*gates), &cfg)?;
            Ok(ExperimentOutput {
                csv: csv_table(
                    &["eps", "lower", "achieved", "upper", "error", "pass"],
                    &[vec![fmt(*eps), fmt(r.lower), fmt(r.achieved), fmt(r.upper), fmt(r.error), r.pass.to_string()]],
                )?,
                json: serde_json::to_value(&r)?,
                checks: vec![check("sandwich", r.pass, format!("{} <= {} <= {}", r.lower, r.achieved, r.upper))],
            })
        }
        ExperimentSpec::EntropyRate { p, eps, copies } => {
            let r = entropy_rate_experiment(p, *eps, copies)?;
            let mut rows = Vec::new();
            for (side, est) in [("lower", &r.lower), ("upper", &r.upper)] {
                for pt in &est.points {
                    rows.push(vec![side.into(), pt.m.to_string(), fmt(pt.rate)]);
                }
            }
            let lim = |e: &crate::regularization::RateEstimate| e.fit.as_ref().map(|f| f.limit);
            let ok = [lim(&r.lower), lim(&r.upper)].iter().all(|l| l.is_some_and(|l| (l - r.entropy).abs() <= 0.01));
            Ok(ExperimentOutput {
                csv: csv_table(&["side", "m", "rate"], &rows)?,
                json: serde_json::to_value(&r)?,
                checks: vec![check("limits", ok, format!("entropy {}", r.entropy))],
            })
        }
        ExperimentSpec::Distill { state: path, dims, eps } => {
            let d = SubsystemDims::new(dims.clone())?;
            let (sol, rep) = one_shot_ppt_distillation(state(states, path), &d, *eps, &SdpConfig::default())?;
            Ok(ExperimentOutput {
                csv: csv_table(
                    &["eps", "eta", "ebits", "log_negativity", "rains_value", "max_residual"],
                    &[vec![fmt(*eps), fmt(rep.eta_star), rep.one_shot_ebits.to_string(), fmt(rep.log_negativity), fmt(rep.rains_value), fmt(sol.residuals.max())]],
                )?,
                json: serde_json::to_value(&rep)?,
                checks: vec![check("residuals", sol.residuals.max() <= 1e-6, format!("{}", sol.residuals.max()))],
            })
        }
        ExperimentSpec::Gl { n_bits, owf, trials, random_tests, gates } => {
            let seed = seed_or()?;
            let f = match owf.as_str() {
                "modexp" => ToyOwf::modexp(*n_bits)?,
                "perm" | "permutation" => ToyOwf::permutation(*n_bits, split_seed(seed, 0))?,
                other => return Err(Error::InvalidArgument(format!("unknown toy function {other}"))),
            };
            let pair = gl_states(f.with_inverse_oracle())?;
            let unbounded = unbounded_distinguisher(&pair).advantage;
            let families = [
                TestFamily::Pattern { gates: *gates },
                TestFamily::InverterAssisted,
                TestFamily::RandomCircuits { gates: *gates, count: *random_tests },
            ];
            let table = advantage_harness(&pair, &families, *trials, split_seed(seed, 1))?;
            let inv = table.family_rows("inverter").map(|r| r.advantage).fold(0.0, f64::max);
            let rand_ucb = table.family_rows("random").map(|r| r.upper_confidence()).fold(0.0, f64::max);
            Ok(ExperimentOutput {
                csv: table.to_csv()?,
                json: json!({ "banner": BANNER, "unbounded_advantage": unbounded, "inverter_advantage": inv, "random_max_upper": rand_ucb }),
                checks: vec![
                    check("unbounded", unbounded == 1.0, format!("{unbounded}")),
                    check("inverter", inv >= 0.99, format!("{inv}")),
                    check("random_bounded", rand_ucb <= 0.1, format!("{rand_ucb}")),
                ],
            })
        }
        ExperimentSpec::Hs { n_qubits, m_list, k, trials } => {
            let seed = seed_or()?;
            let e = hs_ensemble_experiment(*n_qubits, m_list, *k, *trials, seed)?;
            let rows: Vec<Vec<String>> = e.estimates.iter().map(|x| vec![x.m.to_string(), fmt(x.distance), fmt(x.bootstrap_error)]).collect();
            let mut checks = Vec::new();
            if m_list.len() > 1 {
                checks.push(check("monotone", e.monotone, String::new()));
            }
            Ok(ExperimentOutput { csv: csv_table(&["m", "distance", "bootstrap_error"], &rows)?, json: serde_json::to_value(&e)?, checks })
        }
        ExperimentSpec::Catalysis { config } => {
            let seed = seed_or()?;
            let r = catalysis_demo(&config.clone().unwrap_or_default(), seed)?;
            let target = std::f64::consts::LN_2 - 0.05;
            Ok(ExperimentOutput {
                csv: csv_table(
                    &["n_qubits", "overlap", "random_max_advantage", "swap_rate", "self_type1", "median_overlap"],
                    &[vec![r.n_qubits.to_string(), fmt(r.overlap), fmt(r.random_test_max_advantage), fmt(r.swap_rate), fmt(r.self_type1), fmt(r.median_overlap)]],
                )?,
                json: serde_json::to_value(&r)?,
                checks: vec![
                    check("self_type1", r.self_type1 == 0.0, format!("{}", r.self_type1)),
                    check("swap_rate", r.swap_rate >= target, format!("{} >= {target}", r.swap_rate)),
                ],
            })
        }
    }
}

/// Validates inputs, runs every experiment (up to `jobs` at a time) and writes the reports and
/// the manifest. Nothing is written when an input file is bad or an experiment errors.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunManifest> {
    let started = Instant::now();
    let started_unix_s = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut seen = std::collections::BTreeSet::new();
    for e in &config.experiments {
        if !seen.insert(e.id.as_str()) {
            return Err(Error::InvalidArgument(format!("duplicate experiment id {}", e.id)));
        }
        if e.id.is_empty() || e.id.contains(['/', '\\']) || e.id.starts_with('.') {
            return Err(Error::InvalidArgument(format!("bad experiment id {:?}", e.id)));
        }
    }
    let seeds: Vec<Option<u64>> = config.experiments.iter().map(|e| e.seed.or(config.seed).or(opts.seed_fallback)).collect();
    for (e, s) in config.experiments.iter().zip(&seeds) {
        if e.spec.stochastic() && s.is_none() {
            return Err(Error::InvalidArgument(format!("experiment {} needs a seed (config, experiment or {SEED_ENV})", e.id)));
        }
    }
    let mut states = States::new();
    for e in &config.experiments {
        for p in e.spec.state_paths() {
            if !states.contains_key(p) {
                states.insert(p.clone(), read_state(p)?);
            }
        }
    }
    let jobs = opts.jobs.or(config.jobs).unwrap_or(1).max(1);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let outputs: Vec<(ExperimentOutput, f64)> = pool.install(|| {
        config
            .experiments
            .par_iter()
            .zip(seeds.par_iter())
            .map(|(e, s)| {
                let t = Instant::now();
                let out = run_experiment(&e.spec, *s, &states)
                    .map_err(|err| Error::InvalidArgument(format!("experiment {}: {err}", e.id)))?;
                Ok((out, t.elapsed().as_secs_f64() * 1e3))
            })
            .collect::<Result<_>>()
    })?;
    fs::create_dir_all(&config.output_dir)?;
    let mut runs = Vec::with_capacity(outputs.len());
    for ((e, s), (out, ms)) in config.experiments.iter().zip(&seeds).zip(outputs) {
        let csv_name = format!("{}.csv", e.id);
        let json_name = format!("{}.json", e.id);
        write_atomic(&config.output_dir.join(&csv_name), out.csv.as_bytes())?;
        write_atomic(&config.output_dir.join(&json_name), serde_json::to_string_pretty(&out.json)?.as_bytes())?;
        runs.push(RunRecord {
            id: e.id.clone(),
            kind: e.spec.kind().into(),
            seed: *s,
            wall_ms: ms,
            pass: out.checks.iter().all(|c| c.pass),
            checks: out.checks,
            files: vec![csv_name, json_name],
        });
    }
    let manifest = RunManifest {
        config_id: config.id.clone(),
        config_hash: config.hash(),
        version: env!("CARGO_PKG_VERSION").into(),
        started_unix_s,
        total_wall_ms: started.elapsed().as_secs_f64() * 1e3,
        pass: runs.iter().all(|r| r.pass),
        runs,
    };
    write_atomic(&config.output_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(manifest)
}
