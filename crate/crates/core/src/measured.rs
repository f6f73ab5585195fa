//! Two-outcome measured divergences at a gate budget, the single-shot Stein and Rényi converse
//! checks, and the Rényi achievability test.

use serde::{Deserialize, Serialize};

use crate::bounded::{
    bounded_dh, check_outcomes, search_bounded, InequalityCheck, Objective, SearchConfig, SearchOutcome,
};
use crate::circuits::GateBudget;
use crate::error::{Error, Result};
use crate::exact::{check_distribution, classical_re, golden_max, max_relative_entropy, renyi_divergence, SUPPORT_TOL};
use crate::nats::{h2, Nats};
use crate::tensor::{c, herm_eig_unchecked, trace_product, CMatrix, DensityMatrix, PovmEffect};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceId {
    RelativeEntropy,
    Renyi(f64),
    Max,
}

impl DivergenceId {
    fn check(self) -> Result<()> {
        if let DivergenceId::Renyi(a) = self {
            if !(a > 0.0) || a == 1.0 || !a.is_finite() {
                return Err(Error::InvalidArgument(format!("renyi order {a}")));
            }
        }
        Ok(())
    }
}

/// Divergence between the outcome distributions `(a, 1-a)` and `(b, 1-b)`.
pub fn binary_divergence(id: DivergenceId, a: f64, b: f64) -> Result<Nats> {
    id.check()?;
    // expectations of I or of a projector orthogonal to a state carry rounding; without the snap
    // `a = 1 - 1e-16` against `b = 1` reads as a support violation
    let snap = |x: f64| {
        let x = x.clamp(0.0, 1.0);
        if x <= SUPPORT_TOL {
            0.0
        } else if x >= 1.0 - SUPPORT_TOL {
            1.0
        } else {
            x
        }
    };
    let a = snap(a);
    let b = snap(b);
    let p = [a, 1.0 - a];
    let q = [b, 1.0 - b];
    match id {
        DivergenceId::RelativeEntropy => classical_re(&p, &q),
        DivergenceId::Renyi(alpha) => renyi_divergence(&p, &q, alpha),
        DivergenceId::Max => max_relative_entropy(&p, &q),
    }
}

struct DivObjective {
    id: DivergenceId,
}

impl Objective for DivObjective {
    fn score(&self, a: f64, b: f64) -> Option<f64> {
        binary_divergence(self.id, a, b).ok().map(|v| v.as_f64())
    }
}

#[derive(Clone, Debug)]
pub struct MeasuredValue {
    pub id: DivergenceId,
    pub value: Nats,
    /// The accepting effect `Λ`; the measurement is `{Λ, I - Λ}`.
    pub outcome: SearchOutcome,
    pub budget: GateBudget,
}

pub fn measured_divergence(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    id: DivergenceId,
    budget: GateBudget,
    cfg: &SearchConfig,
) -> Result<MeasuredValue> {
    measured_divergence_with(rho, sigma, id, budget, cfg, &[])
}

/// As [`measured_divergence`], also scoring the supplied effects (restricted to those realizable
/// within the budget when it is finite).
pub fn measured_divergence_with(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    id: DivergenceId,
    budget: GateBudget,
    cfg: &SearchConfig,
    extra: &[SearchOutcome],
) -> Result<MeasuredValue> {
    check_outcomes(budget)?;
    id.check()?;
    if rho.dim() != sigma.dim() {
        return Err(Error::DimMismatch(rho.dim(), sigma.dim()));
    }
    let obj = DivObjective { id };
    let outcome = match budget.gates {
        None => {
            let mut best = np_sweep(rho, sigma, |a, b| obj.score(a, b).unwrap_or(f64::NEG_INFINITY))?;
            for o in extra {
                let (a, b) = (o.effect.expectation(rho), o.effect.expectation(sigma));
                let s = obj.score(a, b).unwrap_or(f64::NEG_INFINITY);
                if s > best.score {
                    best = SearchOutcome { score: s, accept_rho: a, accept_sigma: b, effect: o.effect.clone(), circuit: o.circuit.clone() };
                }
            }
            best
        }
        Some(g) => search_bounded(rho, sigma, g, cfg, extra, &obj, None)?.0,
    };
    let value = binary_divergence(id, outcome.accept_rho, outcome.accept_sigma)?;
    Ok(MeasuredValue { id, value, outcome, budget })
}

/// `{ρ - tσ > 0}`; `t = ∞` gives the part of `ker σ` that `ρ` sees.
fn np_projector(rho: &CMatrix, sigma: &CMatrix, t: f64) -> (CMatrix, usize) {
    let e = if t.is_finite() {
        herm_eig_unchecked(&(rho - sigma * c(t, 0.0)))
    } else {
        let ker = herm_eig_unchecked(sigma).projector(|x| x <= SUPPORT_TOL);
        herm_eig_unchecked(&(&ker * rho * &ker))
    };
    let tol = SUPPORT_TOL * (1.0 + if t.is_finite() { t } else { 0.0 });
    let rank = e.values.iter().filter(|&&v| v > tol).count();
    (e.projector(|v| v > tol), rank)
}

fn t_of(s: f64) -> f64 {
    if s >= 1.0 {
        f64::INFINITY
    } else {
        s / (1.0 - s)
    }
}

/// Maximizes `f(Tr[Λρ], Tr[Λσ])` over the Neyman–Pearson projectors `{ρ - tσ > 0}`, `t ∈ [0, ∞]`,
/// plus `Λ = I`: a grid in `s = t/(1+t)`, bisection onto every rank change, and golden-section
/// refinement around the best grid point.
pub fn np_sweep(rho: &DensityMatrix, sigma: &DensityMatrix, f: impl Fn(f64, f64) -> f64) -> Result<SearchOutcome> {
    const N: usize = 256;
    let (r, sg) = (rho.matrix(), sigma.matrix());
    let eval = |s: f64| -> (f64, CMatrix, usize, f64, f64) {
        let (p, rank) = np_projector(r, sg, t_of(s));
        let a = trace_product(&p, r);
        let b = trace_product(&p, sg);
        (f(a, b), p, rank, a, b)
    };
    let id = CMatrix::identity(rho.dim(), rho.dim());
    let mut best = (f(1.0, 1.0), id, 1.0, 1.0);
    let offer = |v: (f64, CMatrix, usize, f64, f64), best: &mut (f64, CMatrix, f64, f64)| {
        if v.0 > best.0 {
            *best = (v.0, v.1, v.3, v.4);
        }
    };
    let grid: Vec<f64> = (0..=N).map(|k| k as f64 / N as f64).collect();
    let mut ranks = Vec::with_capacity(grid.len());
    let mut scores = Vec::with_capacity(grid.len());
    for &s in &grid {
        let v = eval(s);
        ranks.push(v.2);
        scores.push(v.0);
        offer(v, &mut best);
    }
    let mut stack: Vec<(f64, f64, usize, usize)> =
        (0..N).filter(|&k| ranks[k] != ranks[k + 1]).map(|k| (grid[k], grid[k + 1], ranks[k], ranks[k + 1])).collect();
    while let Some((lo, hi, rl, rh)) = stack.pop() {
        if rl == rh {
            continue;
        }
        if hi - lo < 1e-13 {
            offer(eval(lo), &mut best);
            offer(eval(hi), &mut best);
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let v = eval(mid);
        let rm = v.2;
        offer(v, &mut best);
        stack.push((lo, mid, rl, rm));
        stack.push((mid, hi, rm, rh));
    }
    let k = (0..=N).max_by(|&i, &j| scores[i].total_cmp(&scores[j]).then(j.cmp(&i))).unwrap_or(0);
    let (lo, hi) = (grid[k.saturating_sub(1)], grid[(k + 1).min(N)]);
    let (s_star, _) = golden_max(|s| eval(s).0, lo, hi, 80);
    offer(eval(s_star), &mut best);
    let (score, m, a, b) = best;
    Ok(SearchOutcome { score, accept_rho: a, accept_sigma: b, effect: PovmEffect::from_matrix(m)?, circuit: None })
}

/// Checks `D_h^ε(ρ‖σ;G) ≤ (D^C(ρ‖σ;G;2) + h₂(min(ε,½)))/(1-ε)` at one budget.
pub fn stein_converse_check(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    eps: f64,
    budget: GateBudget,
    cfg: &SearchConfig,
) -> Result<InequalityCheck> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("eps = {eps} outside (0,1)")));
    }
    let dh = bounded_dh(rho, sigma, eps, budget, cfg)?;
    let md = measured_divergence_with(rho, sigma, DivergenceId::RelativeEntropy, budget, cfg, &[dh.outcome.clone()])?;
    let rhs = (md.value.as_f64() + h2(eps.min(0.5))) / (1.0 - eps);
    Ok(InequalityCheck::new("stein_converse", dh.value.as_f64(), rhs, 1e-9))
}

/// Checks `D_h^ε(ρ‖σ;G) ≤ D_α^C(ρ‖σ;G;2) + (α/(α-1)) log(1/(1-ε))` for `α > 1`.
pub fn renyi_converse_check(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    eps: f64,
    alpha: f64,
    budget: GateBudget,
    cfg: &SearchConfig,
) -> Result<InequalityCheck> {
    if !(alpha > 1.0) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must exceed 1")));
    }
    let dh = bounded_dh(rho, sigma, eps, budget, cfg)?;
    let md = measured_divergence_with(rho, sigma, DivergenceId::Renyi(alpha), budget, cfg, &[dh.outcome.clone()])?;
    let rhs = md.value.as_f64() + alpha / (alpha - 1.0) * (1.0 / (1.0 - eps)).ln();
    Ok(InequalityCheck::new("renyi_converse", dh.value.as_f64(), rhs, 1e-9))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AchievabilityReport {
    pub gamma: f64,
    /// Indicator of the acceptance region `{γp > (1-γ)q}`.
    pub accept: Vec<bool>,
    pub type1: f64,
    pub achieved_rate: Nats,
    /// `D_α(p‖q) - (α/(1-α)) log(1/ε)`.
    pub rate_bound: f64,
    pub type1_ok: bool,
    pub rate_ok: bool,
}

/// The test `{γp > (1-γ)q}` with `γ = (1 + (ε/Q)^{1/(1-α)})^{-1}`, `Q = Σ p^α q^{1-α}`.
pub fn renyi_achievability_test(p: &[f64], q: &[f64], alpha: f64, eps: f64) -> Result<AchievabilityReport> {
    check_distribution(p)?;
    check_distribution(q)?;
    if p.len() != q.len() {
        return Err(Error::DimMismatch(p.len(), q.len()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} outside (0,1)")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("eps = {eps} outside (0,1)")));
    }
    let qsum: f64 = p.iter().zip(q).filter(|(&a, &b)| a > 0.0 && b > 0.0).map(|(&a, &b)| a.powf(alpha) * b.powf(1.0 - alpha)).sum();
    let (gamma, accept): (f64, Vec<bool>) = if qsum <= 0.0 {
        (1.0, p.iter().map(|&a| a > 0.0).collect())
    } else {
        let g = 1.0 / (1.0 + (eps / qsum).powf(1.0 / (1.0 - alpha)));
        (g, p.iter().zip(q).map(|(&a, &b)| g * a > (1.0 - g) * b).collect())
    };
    let type1: f64 = p.iter().zip(&accept).filter(|(_, &acc)| !acc).map(|(&a, _)| a).sum();
    let beta: f64 = q.iter().zip(&accept).filter(|(_, &acc)| acc).map(|(&b, _)| b).sum();
    let achieved_rate = if beta > 0.0 { Nats::Finite(-beta.ln()) } else { Nats::Infinite(crate::nats::Witness::Index(accept.iter().position(|&x| x).unwrap_or(0))) };
    let d_alpha = renyi_divergence(p, q, alpha)?.as_f64();
    let rate_bound = d_alpha - alpha / (1.0 - alpha) * (1.0 / eps).ln();
    Ok(AchievabilityReport {
        gamma,
        type1_ok: type1 <= eps + 1e-12,
        rate_ok: achieved_rate.as_f64() >= rate_bound - 1e-12,
        accept,
        type1,
        achieved_rate,
        rate_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_pure_vs_mixed() {
        let a = DensityMatrix::basis(2, 0).unwrap();
        let w = DensityMatrix::maximally_mixed(2).unwrap();
        let m = measured_divergence(&a, &w, DivergenceId::RelativeEntropy, GateBudget::unbounded(), &SearchConfig::default()).unwrap();
        assert!((m.value.as_f64() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn achievability_identical() {
        let r = renyi_achievability_test(&[0.3, 0.7], &[0.3, 0.7], 0.5, 0.1).unwrap();
        assert_eq!(r.type1, 0.0);
        assert_eq!(r.achieved_rate, Nats::Finite(0.0));
        assert!(r.type1_ok && r.rate_ok);
    }
}
