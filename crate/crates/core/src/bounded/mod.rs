//! Gate-budgeted tests: searches over the circuit model, the explicit classical tests, and the
//! SWAP test.
//!
//! Every search scores an effect only through its acceptance probabilities `a = Tr[Λρ]` and
//! `b = Tr[Λσ]`, so one engine serves hypothesis testing, total variation and the two-outcome
//! measured divergences.

mod swap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use classical_tests::{likelihood_ratio_test, typicality_test, LrtTest, TestGuarantee, TypicalityTest};
pub use swap::{swap_test, swap_test_circuit, TestResult};

use crate::circuits::{
    effect_from_circuit, exhaustive_catalog, param_count, param_unitary, BoundedEffect, GateBudget, GateSet,
    OutcomePattern, QuantumCircuit, TwoLocalGate, DEFAULT_ENUMERATION_CAP,
};
use crate::error::{Error, Result};
use crate::exact::{np_test, total_variation};
use crate::measured::{measured_divergence_with, DivergenceId};
use crate::nats::Nats;
use crate::random::{rng, split_seed};
use crate::tensor::{herm_eig_unchecked, CMatrix, DensityMatrix, PovmEffect};

/// Slack allowed on `Tr[Λρ] ≥ 1 - ε`.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Penalty weight on type-I violations in the local search objective.
pub const PENALTY: f64 = 1e3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    Exhaustive,
    RandomRestart,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub mode: SearchMode,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Coordinate-descent sweeps per restart.
    #[serde(default = "default_iters")]
    pub iters: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_gate_set")]
    pub gate_set: String,
    /// Ancilla wires offered to the search; `None` means `min(G, 1)`.
    #[serde(default)]
    pub ancillas: Option<usize>,
    #[serde(default = "default_cap")]
    pub cap: f64,
}

fn default_restarts() -> usize {
    4
}
fn default_iters() -> usize {
    30
}
fn default_gate_set() -> String {
    "clifford_t".into()
}
fn default_cap() -> f64 {
    DEFAULT_ENUMERATION_CAP
}

impl SearchConfig {
    pub fn exhaustive() -> Self {
        Self {
            mode: SearchMode::Exhaustive,
            restarts: default_restarts(),
            iters: default_iters(),
            seed: 0,
            gate_set: default_gate_set(),
            ancillas: None,
            cap: default_cap(),
        }
    }

    pub fn random_restart(restarts: usize, iters: usize, seed: u64) -> Self {
        Self { mode: SearchMode::RandomRestart, restarts, iters, seed, gate_set: "parameterized".into(), ..Self::exhaustive() }
    }

    fn ancillas_for(&self, g: usize) -> usize {
        self.ancillas.unwrap_or(g.min(1)).min(g)
    }
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self::exhaustive()
    }
}

/// A scored effect. `circuit` is present whenever the effect came from the circuit model.
#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub score: f64,
    pub accept_rho: f64,
    pub accept_sigma: f64,
    pub effect: PovmEffect,
    pub circuit: Option<BoundedEffect>,
}

impl SearchOutcome {
    pub(crate) fn from_effect(effect: PovmEffect, circuit: Option<BoundedEffect>, rho: &DensityMatrix, sigma: &DensityMatrix, score: f64) -> Self {
        Self { score, accept_rho: effect.expectation(rho), accept_sigma: effect.expectation(sigma), effect, circuit }
    }
}

/// Scores an effect from `a = Tr[Λρ]`, `b = Tr[Λσ]`.
pub(crate) trait Objective: Sync {
    /// `None` when the effect is infeasible.
    fn score(&self, a: f64, b: f64) -> Option<f64>;

    /// Surrogate maximized by local search; finite everywhere.
    fn penalized(&self, a: f64, b: f64) -> f64 {
        match self.score(a, b) {
            Some(s) if s.is_finite() => s,
            Some(_) => 1e6,
            None => -1e6,
        }
    }
}

pub(crate) struct DhObjective {
    pub eps: f64,
}

impl Objective for DhObjective {
    fn score(&self, a: f64, b: f64) -> Option<f64> {
        if a < 1.0 - self.eps - FEASIBILITY_TOL {
            return None;
        }
        Some(if b <= 0.0 { f64::INFINITY } else { -b.ln() })
    }

    fn penalized(&self, a: f64, b: f64) -> f64 {
        -b.max(1e-300).ln() - PENALTY * (1.0 - self.eps - a).max(0.0)
    }
}

pub(crate) struct TvObjective;

impl Objective for TvObjective {
    fn score(&self, a: f64, b: f64) -> Option<f64> {
        Some(a - b)
    }
}

pub(crate) fn qubit_count(dim: usize) -> Result<usize> {
    if !dim.is_power_of_two() {
        return Err(Error::InvalidDims(format!("circuit search needs a qubit register, got dimension {dim}")));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Best effect within `g` gates under `obj`. The trivial effect and any `extra` outcome realizable
/// within the budget are always candidates.
pub(crate) fn search_bounded(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    g: usize,
    cfg: &SearchConfig,
    extra: &[SearchOutcome],
    obj: &dyn Objective,
    warm: Option<&[f64]>,
) -> Result<(SearchOutcome, Vec<f64>)> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimMismatch(rho.dim(), sigma.dim()));
    }
    let n = qubit_count(rho.dim())?;
    let trivial = BoundedEffect::trivial(n);
    let mut best: Option<SearchOutcome> = None;
    let consider = |be: &BoundedEffect, best: &mut Option<SearchOutcome>| {
        let (a, b) = (be.expectation(rho), be.expectation(sigma));
        if let Some(s) = obj.score(a, b) {
            if best.as_ref().is_none_or(|o| s > o.score) {
                *best = Some(SearchOutcome { score: s, accept_rho: a, accept_sigma: b, effect: be.effect().clone(), circuit: Some(be.clone()) });
            }
        }
    };
    consider(&trivial, &mut best);
    let mut theta = Vec::new();
    match cfg.mode {
        SearchMode::Exhaustive => {
            let gs = GateSet::from_id(&cfg.gate_set)?;
            let catalog = exhaustive_catalog(n, cfg.ancillas_for(g), g, &gs, cfg.cap)?;
            for be in catalog.iter() {
                consider(be, &mut best);
            }
        }
        SearchMode::RandomRestart => {
            let (found, th) = random_restart(rho, sigma, n, g, cfg, obj, warm)?;
            if let Some(be) = found {
                consider(&be, &mut best);
            }
            theta = th;
        }
    }
    for o in extra {
        if let Some(be) = &o.circuit {
            if be.circuit().system_wires() == n && be.gate_complexity() <= g {
                consider(be, &mut best);
            }
        }
    }
    let best = best.ok_or_else(|| Error::Infeasible("no candidate effect is feasible".into()))?;
    Ok((best, theta))
}

/// Wire pairs for the parameterized layout; the first `g` entries of a longer layout coincide with
/// the layout for `g`, so warm starts carry over between budgets.
fn layout(total: usize, g: usize) -> Vec<Vec<usize>> {
    if total == 1 {
        return vec![vec![0]; g];
    }
    let mut pairs = Vec::new();
    for start in [0usize, 1] {
        let mut i = start;
        while i + 1 < total {
            pairs.push(vec![i, i + 1]);
            i += 2;
        }
    }
    (0..g).map(|j| pairs[j % pairs.len()].clone()).collect()
}

struct ParamModel<'a> {
    rho: &'a DensityMatrix,
    sigma: &'a DensityMatrix,
    n: usize,
    anc: usize,
    layout: Vec<Vec<usize>>,
    pc: usize,
}

/// Best feasible `(score, index mask)` seen at one parameter point, and the best penalized value.
struct Eval {
    penalized: f64,
    feasible: Option<(f64, usize)>,
}

impl ParamModel<'_> {
    fn circuit(&self, theta: &[f64]) -> Result<QuantumCircuit> {
        let gates = self
            .layout
            .iter()
            .enumerate()
            .map(|(j, t)| {
                let u = param_unitary(&theta[j * self.pc..(j + 1) * self.pc], t.len());
                TwoLocalGate::new(t.clone(), u)
            })
            .collect::<Result<Vec<_>>>()?;
        QuantumCircuit::new(self.n, self.anc, gates)
    }

    fn eval(&self, theta: &[f64], obj: &dyn Objective) -> Result<Eval> {
        let v = self.circuit(theta)?.isometry();
        let ar = subset_sums(&output_probs(&v, self.rho.matrix()));
        let bs = subset_sums(&output_probs(&v, self.sigma.matrix()));
        let full = ar.len() - 1;
        let mut out = Eval { penalized: f64::NEG_INFINITY, feasible: None };
        for m in 0..=full {
            let (a, b) = (ar[full & !m], bs[full & !m]);
            let p = obj.penalized(a, b);
            if p > out.penalized {
                out.penalized = p;
            }
            if let Some(s) = obj.score(a, b) {
                if out.feasible.is_none_or(|(bs, _)| s > bs) {
                    out.feasible = Some((s, m));
                }
            }
        }
        Ok(out)
    }

    fn realize(&self, theta: &[f64], index_mask: usize) -> Result<BoundedEffect> {
        let circ = self.circuit(theta)?;
        let total = circ.total_wires();
        let wire_mask = (0..total).filter(|&w| index_mask >> (total - 1 - w) & 1 == 1).fold(0u64, |acc, w| acc | 1 << w);
        effect_from_circuit(&circ, &OutcomePattern::from_mask(total, wire_mask))
    }
}

/// Diagonal of `VρV^dag`.
fn output_probs(v: &CMatrix, rho: &CMatrix) -> Vec<f64> {
    let w = v * rho;
    (0..v.nrows()).map(|z| (0..v.ncols()).map(|y| (w[(z, y)] * v[(z, y)].conj()).re).sum::<f64>().max(0.0)).collect()
}

/// `out[S] = Σ_{z ⊆ S} p[z]`.
fn subset_sums(p: &[f64]) -> Vec<f64> {
    let mut f = p.to_vec();
    let bits = f.len().trailing_zeros();
    for i in 0..bits {
        for s in 0..f.len() {
            if s >> i & 1 == 1 {
                f[s] += f[s ^ (1 << i)];
            }
        }
    }
    f
}

type Found = Option<(f64, Vec<f64>, usize)>;

fn random_restart(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    n: usize,
    g: usize,
    cfg: &SearchConfig,
    obj: &dyn Objective,
    warm: Option<&[f64]>,
) -> Result<(Option<BoundedEffect>, Vec<f64>)> {
    let anc = cfg.ancillas_for(g);
    let total = n + anc;
    let model = ParamModel { rho, sigma, n, anc, layout: layout(total, g), pc: param_count(if total == 1 { 1 } else { 2 }) };
    let dim = g * model.pc;
    let restarts = cfg.restarts.max(1);
    let runs: Vec<Result<(Found, f64, Vec<f64>)>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut gen = rng(split_seed(cfg.seed, r as u64));
            let mut theta: Vec<f64> = if r == 0 {
                let mut t = warm.map(|w| w.to_vec()).unwrap_or_default();
                t.resize(dim, 0.0);
                t
            } else {
                (0..dim).map(|_| gen.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect()
            };
            descend(&model, &mut theta, cfg.iters, obj)
        })
        .collect();
    let mut best: Found = None;
    let mut best_pen = f64::NEG_INFINITY;
    let mut best_theta = vec![0.0; dim];
    for run in runs {
        let (found, pen, theta) = run?;
        if pen > best_pen {
            best_pen = pen;
            best_theta = theta;
        }
        if let Some(f) = found {
            if best.as_ref().is_none_or(|b| f.0 > b.0) {
                best = Some(f);
            }
        }
    }
    let effect = match best {
        Some((_, theta, mask)) => Some(model.realize(&theta, mask)?),
        None => None,
    };
    Ok((effect, best_theta))
}

fn descend(model: &ParamModel, theta: &mut [f64], iters: usize, obj: &dyn Objective) -> Result<(Found, f64, Vec<f64>)> {
    let mut found: Found = None;
    let track = |e: &Eval, theta: &[f64], found: &mut Found| {
        if let Some((s, m)) = e.feasible {
            if found.as_ref().is_none_or(|f| s > f.0) {
                *found = Some((s, theta.to_vec(), m));
            }
        }
    };
    let first = model.eval(theta, obj)?;
    track(&first, theta, &mut found);
    let mut cur = first.penalized;
    let mut step = 0.4;
    for _ in 0..iters {
        if theta.is_empty() {
            break;
        }
        let mut improved = false;
        for j in 0..theta.len() {
            for dir in [1.0, -1.0] {
                theta[j] += dir * step;
                let e = model.eval(theta, obj)?;
                track(&e, theta, &mut found);
                if e.penalized > cur + 1e-12 {
                    cur = e.penalized;
                    improved = true;
                    break;
                }
                theta[j] -= dir * step;
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-3 {
                break;
            }
        }
    }
    Ok((found, cur, theta.to_vec()))
}

/// `D_h^ε(ρ‖σ; G)` found by search. `improved` is false when only the trivial test was found.
#[derive(Clone, Debug)]
pub struct BoundedDh {
    pub value: Nats,
    pub outcome: SearchOutcome,
    pub improved: bool,
}

fn witness_for(effect: &PovmEffect, rho: &DensityMatrix) -> Nats {
    let m = effect.matrix();
    Nats::from_vector(&herm_eig_unchecked(&(m * rho.matrix() * m)).vector(0))
}

fn dh_from_outcome(outcome: SearchOutcome, rho: &DensityMatrix) -> BoundedDh {
    let value = if outcome.score.is_finite() { Nats::Finite(outcome.score) } else { witness_for(&outcome.effect, rho) };
    let improved = outcome.score > 0.0 && !outcome.circuit.as_ref().is_some_and(|c| c.is_trivial());
    BoundedDh { value, outcome, improved }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!("eps = {eps} outside [0,1)")));
    }
    Ok(())
}

pub fn bounded_dh(rho: &DensityMatrix, sigma: &DensityMatrix, eps: f64, budget: GateBudget, cfg: &SearchConfig) -> Result<BoundedDh> {
    bounded_dh_with(rho, sigma, eps, budget, cfg, &[])
}

/// As [`bounded_dh`], also scoring the supplied outcomes when they fit the budget.
pub fn bounded_dh_with(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    eps: f64,
    budget: GateBudget,
    cfg: &SearchConfig,
    extra: &[SearchOutcome],
) -> Result<BoundedDh> {
    check_eps(eps)?;
    check_outcomes(budget)?;
    match budget.gates {
        None => {
            let t = np_test(rho, sigma, eps)?;
            let outcome = SearchOutcome {
                score: t.value.as_f64(),
                accept_rho: t.accept_rho,
                accept_sigma: t.beta,
                effect: t.effect,
                circuit: None,
            };
            let improved = outcome.score > 0.0;
            Ok(BoundedDh { value: t.value, outcome, improved })
        }
        Some(g) => {
            let (o, _) = search_bounded(rho, sigma, g, cfg, extra, &DhObjective { eps }, None)?;
            Ok(dh_from_outcome(o, rho))
        }
    }
}

/// Searches a non-decreasing list of budgets, warm-starting each random-restart level from the
/// previous optimum so the values are non-decreasing.
pub fn bounded_dh_schedule(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    eps: f64,
    gates: &[usize],
    cfg: &SearchConfig,
) -> Result<Vec<BoundedDh>> {
    check_eps(eps)?;
    if gates.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("budget schedule must be non-decreasing".into()));
    }
    let mut out: Vec<BoundedDh> = Vec::with_capacity(gates.len());
    let mut warm: Vec<f64> = Vec::new();
    for &g in gates {
        let extra: Vec<SearchOutcome> = out.last().map(|b| vec![b.outcome.clone()]).unwrap_or_default();
        let (o, theta) = search_bounded(rho, sigma, g, cfg, &extra, &DhObjective { eps }, Some(&warm))?;
        if !theta.is_empty() {
            warm = theta;
        }
        out.push(dh_from_outcome(o, rho));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct BoundedTv {
    pub value: f64,
    pub outcome: SearchOutcome,
}

pub fn bounded_tv(rho: &DensityMatrix, sigma: &DensityMatrix, budget: GateBudget, cfg: &SearchConfig) -> Result<BoundedTv> {
    check_outcomes(budget)?;
    match budget.gates {
        None => {
            let (v, effect) = total_variation(rho, sigma)?;
            Ok(BoundedTv { value: v, outcome: SearchOutcome::from_effect(effect, None, rho, sigma, v) })
        }
        Some(g) => {
            let (o, _) = search_bounded(rho, sigma, g, cfg, &[], &TvObjective, None)?;
            Ok(BoundedTv { value: o.score.max(0.0), outcome: o })
        }
    }
}

pub(crate) fn check_outcomes(budget: GateBudget) -> Result<()> {
    if budget.outcomes != 2 {
        return Err(Error::Unsupported(format!("{}-outcome measurements; only two-outcome tests are implemented", budget.outcomes)));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
    pub skipped: bool,
}

impl InequalityCheck {
    pub(crate) fn new(name: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        let slack = if lhs == f64::INFINITY && rhs == f64::INFINITY { 0.0 } else { rhs - lhs };
        Self { name: name.into(), lhs, rhs, slack, pass: slack >= -tol, skipped: false }
    }

    pub(crate) fn skipped(name: &str) -> Self {
        Self { name: name.into(), lhs: f64::NAN, rhs: f64::NAN, slack: f64::NAN, pass: true, skipped: true }
    }
}

/// Single-shot surrogates of the Pinsker, Bretagnolle–Huber and smoothing inequalities evaluated
/// at one budget. Both divergence sides use the two-outcome measured relative entropy at that
/// budget, searched together with the TV-optimal and `D_h`-optimal effects.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub budget: GateBudget,
    pub eps: f64,
    pub tv: f64,
    pub measured_d: f64,
    pub checks: Vec<InequalityCheck>,
}

impl InequalityReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub fn inequality_report(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    eps: f64,
    budget: GateBudget,
    cfg: &SearchConfig,
    rho_tilde: Option<&DensityMatrix>,
) -> Result<InequalityReport> {
    const TOL: f64 = 1e-12;
    let tv = bounded_tv(rho, sigma, budget, cfg)?;
    let dh = bounded_dh(rho, sigma, eps, budget, cfg)?;
    let extra = [tv.outcome.clone(), dh.outcome.clone()];
    let md = measured_divergence_with(rho, sigma, DivergenceId::RelativeEntropy, budget, cfg, &extra)?;
    let d = md.value.as_f64();
    let mut checks = vec![
        InequalityCheck::new("pinsker", tv.value, (0.5 * d).sqrt(), TOL),
        InequalityCheck::new("bretagnolle_huber", tv.value, (1.0 - (-d).exp()).sqrt(), TOL),
    ];
    match rho_tilde {
        None => checks.push(InequalityCheck::skipped("smoothing")),
        Some(rt) => {
            let d_tv = bounded_tv(rho, rt, budget, cfg)?.value;
            let shift = dh.outcome.accept_rho - dh.outcome.effect.expectation(rt);
            let delta = d_tv.max(shift).max(0.0);
            if eps + delta >= 1.0 {
                checks.push(InequalityCheck::skipped("smoothing"));
            } else {
                let rhs = bounded_dh_with(rt, sigma, eps + delta, budget, cfg, &[dh.outcome.clone()])?;
                checks.push(InequalityCheck::new("smoothing", dh.value.as_f64(), rhs.value.as_f64(), 1e-9));
            }
        }
    }
    Ok(InequalityReport { budget, eps, tv: tv.value, measured_d: d, checks })
}
