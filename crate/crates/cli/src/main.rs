use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use qlab_core::bounded::{bounded_dh, bounded_tv, inequality_report, SearchConfig};
use qlab_core::circuits::GateBudget;
use qlab_core::compression::compression_sandwich;
use qlab_core::entanglement::{one_shot_ppt_distillation, SdpConfig};
use qlab_core::error::{Error, Result};
use qlab_core::harness::{run, validate_state_file, ExperimentConfig, RunOptions, SEED_ENV};
use qlab_core::separations::{
    advantage_harness, catalysis_demo, gl_states, hs_ensemble_experiment, unbounded_distinguisher, CatalysisConfig,
    TestFamily, ToyOwf,
};
use qlab_core::tensor::{DensityMatrix, SubsystemDims};

/// Gate-budgeted hypothesis testing, compression and distillation on small quantum systems.
///
/// All divergences are computed in nats; `--bits` converts the printed values.
#[derive(Parser, Debug)]
#[command(name = "qlab", version)]
struct Cli {
    /// Global seed for stochastic steps when none is given elsewhere.
    #[arg(long, global = true, env = SEED_ENV)]
    seed: Option<u64>,
    /// Print divergences in bits instead of nats.
    #[arg(long, global = true)]
    bits: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every experiment in a JSON config; exits non-zero if any check fails.
    Run {
        config: PathBuf,
        /// Experiments run concurrently.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Check a JSON operator file and print its spectrum.
    Validate { state: PathBuf },
    /// Hypothesis-testing divergence D_h^eps(rho||sigma) at a gate budget.
    Dh {
        #[arg(long)]
        rho: PathBuf,
        #[arg(long)]
        sigma: PathBuf,
        #[arg(long)]
        eps: f64,
        /// Gate budget; omit for unbounded.
        #[arg(long)]
        gates: Option<usize>,
        /// Random-restart search instead of exhaustive enumeration: restarts.
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Budgeted total variation distance.
    Tv {
        #[arg(long)]
        rho: PathBuf,
        #[arg(long)]
        sigma: PathBuf,
        #[arg(long)]
        gates: Option<usize>,
    },
    /// Pinsker, Bretagnolle-Huber and smoothing checks for one pair.
    Testbench {
        #[arg(long)]
        rho: PathBuf,
        #[arg(long)]
        sigma: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        gates: Option<usize>,
        /// Perturbed state for the smoothing check.
        #[arg(long)]
        smoothed: Option<PathBuf>,
    },
    /// Compressor sandwich: lower bound, achieved log M, upper bound.
    Compress {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        gates: Option<usize>,
    },
    /// One-shot PPT distillation program and entanglement measures.
    Distill {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        eps: f64,
        /// Subsystem dimensions, e.g. `2,2`. Defaults to the file's `dims` or an even split.
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
    },
    /// Toy separation experiments (no hardness claim).
    Separations {
        #[command(subcommand)]
        which: Separation,
    },
}

#[derive(Subcommand, Debug)]
enum Separation {
    /// Hardcore-bit state pair from a toy one-to-one function; prints the CSV advantage table.
    Gl {
        #[arg(long, default_value_t = 12)]
        n_bits: usize,
        /// `modexp` or `perm`.
        #[arg(long, default_value = "modexp")]
        owf: String,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 200)]
        random_tests: usize,
        #[arg(long, default_value_t = 8)]
        gates: usize,
    },
    /// k-copy distance of reduced Haar states from maximally mixed; prints JSON.
    Hs {
        #[arg(long, default_value_t = 2)]
        n_qubits: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6")]
        m_list: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 20_000)]
        trials: usize,
    },
    /// SWAP test with a catalyst against random bounded tests; prints JSON.
    Catalysis {
        #[arg(long, default_value_t = 8)]
        n_qubits: usize,
        #[arg(long, default_value_t = 100)]
        random_tests: usize,
        #[arg(long, default_value_t = 10)]
        copies: usize,
    },
}

fn load(path: &Path) -> Result<DensityMatrix> {
    validate_state_file(path).map(|(rho, _)| rho)
}

fn budget(g: Option<usize>) -> GateBudget {
    g.map(GateBudget::gates).unwrap_or_else(GateBudget::unbounded)
}

fn need_seed(seed: Option<u64>) -> Result<u64> {
    seed.ok_or_else(|| Error::InvalidArgument(format!("a seed is required: pass --seed or set {SEED_ENV}")))
}

fn print(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json value"));
}

fn file_dims(path: &Path, d: usize) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path)?;
    let v: Value = serde_json::from_str(&text)?;
    if let Some(ds) = v.get("dims").and_then(|x| x.as_array()) {
        return Ok(ds.iter().filter_map(|x| x.as_u64().map(|u| u as usize)).collect());
    }
    let a = (d as f64).sqrt().round() as usize;
    if a * a != d {
        return Err(Error::InvalidDims(format!("dimension {d} is not a square; pass --dims")));
    }
    Ok(vec![a, a])
}

fn execute(cli: Cli) -> Result<bool> {
    let unit = if cli.bits { std::f64::consts::LN_2 } else { 1.0 };
    let unit_name = if cli.bits { "bits" } else { "nats" };
    let cfg = |seed: Option<u64>| SearchConfig { seed: seed.unwrap_or(0), ..SearchConfig::exhaustive() };
    match cli.command {
        Command::Run { config, jobs } => {
            let cfg = ExperimentConfig::load(&config)?;
            let manifest = run(&cfg, &RunOptions { seed_fallback: cli.seed, jobs })?;
            for r in &manifest.runs {
                println!("{} {} ({:.0} ms)", if r.pass { "PASS" } else { "FAIL" }, r.id, r.wall_ms);
                for c in r.checks.iter().filter(|c| !c.pass) {
                    println!("  failed {}: {}", c.name, c.detail);
                }
            }
            println!("manifest: {}", cfg.output_dir.join("manifest.json").display());
            Ok(manifest.pass)
        }
        Command::Validate { state } => {
            let (_, s) = validate_state_file(&state)?;
            print(&json!({ "path": state.display().to_string(), "valid": true, "summary": s }));
            Ok(true)
        }
        Command::Dh { rho, sigma, eps, gates, restarts } => {
            let search = match restarts {
                Some(r) => SearchConfig::random_restart(r, 20, need_seed(cli.seed)?),
                None => cfg(cli.seed),
            };
            let r = bounded_dh(&load(&rho)?, &load(&sigma)?, eps, budget(gates), &search)?;
            print(&json!({
                "eps": eps,
                "gates": gates,
                "unit": unit_name,
                "value": r.value.as_f64() / unit,
                "accept_rho": r.outcome.accept_rho,
                "accept_sigma": r.outcome.accept_sigma,
            }));
            Ok(true)
        }
        Command::Tv { rho, sigma, gates } => {
            let r = bounded_tv(&load(&rho)?, &load(&sigma)?, budget(gates), &cfg(cli.seed))?;
            print(&json!({ "gates": gates, "value": r.value }));
            Ok(true)
        }
        Command::Testbench { rho, sigma, eps, gates, smoothed } => {
            let rt = smoothed.as_deref().map(load).transpose()?;
            let r = inequality_report(&load(&rho)?, &load(&sigma)?, eps, budget(gates), &cfg(cli.seed), rt.as_ref())?;
            print(&serde_json::to_value(&r)?);
            Ok(r.all_pass())
        }
        Command::Compress { state, eps, gates } => {
            let r = compression_sandwich(&load(&state)?, eps, budget(gates), &cfg(cli.seed))?;
            print(&json!({
                "unit": unit_name,
                "eps": eps,
                "lower": r.lower / unit,
                "achieved": r.achieved / unit,
                "upper": r.upper / unit,
                "error": r.error,
                "pass": r.pass,
            }));
            Ok(r.pass)
        }
        Command::Distill { state, eps, dims } => {
            let rho = load(&state)?;
            let dims = match dims {
                Some(d) => d,
                None => file_dims(&state, rho.dim())?,
            };
            let (_, rep) = one_shot_ppt_distillation(&rho, &SubsystemDims::new(dims)?, eps, &SdpConfig::default())?;
            print(&serde_json::to_value(&rep)?);
            Ok(true)
        }
        Command::Separations { which } => match which {
            Separation::Gl { n_bits, owf, trials, random_tests, gates } => {
                let seed = need_seed(cli.seed)?;
                let f = match owf.as_str() {
                    "modexp" => ToyOwf::modexp(n_bits)?,
                    "perm" => ToyOwf::permutation(n_bits, seed)?,
                    other => return Err(Error::InvalidArgument(format!("unknown toy function {other}"))),
                };
                let pair = gl_states(f.with_inverse_oracle())?;
                eprintln!("unbounded advantage: {}", unbounded_distinguisher(&pair).advantage);
                let families = [
                    TestFamily::Pattern { gates },
                    TestFamily::InverterAssisted,
                    TestFamily::RandomCircuits { gates, count: random_tests },
                ];
                print!("{}", advantage_harness(&pair, &families, trials, seed)?.to_csv()?);
                Ok(true)
            }
            Separation::Hs { n_qubits, m_list, k, trials } => {
                let e = hs_ensemble_experiment(n_qubits, &m_list, k, trials, need_seed(cli.seed)?)?;
                print(&serde_json::to_value(&e)?);
                Ok(true)
            }
            Separation::Catalysis { n_qubits, random_tests, copies } => {
                let c = CatalysisConfig { n_qubits, random_tests, copies, ..CatalysisConfig::default() };
                print(&serde_json::to_value(catalysis_demo(&c, need_seed(cli.seed)?)?)?);
                Ok(true)
            }
        },
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
