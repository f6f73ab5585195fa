//! Unrestricted information quantities: hypothesis-testing relative entropy, Umegaki relative
//! entropy and its variance, classical Rényi and max divergences, total variation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nats::{Nats, Witness};
use crate::tensor::{c, herm_eig_unchecked, trace_product, CMatrix, DensityMatrix, PovmEffect};

/// Eigenvalues of `σ` at or below this are treated as its kernel.
pub const SUPPORT_TOL: f64 = 1e-12;
/// Relative tolerance for grouping tied likelihood ratios in the Neyman–Pearson fill.
pub const RATIO_TIE_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct NpCurvePoint {
    pub t: f64,
    pub alpha: f64,
    pub beta: f64,
    pub effect: PovmEffect,
}

/// Outcome of the optimal test at level `ε`.
#[derive(Clone, Debug)]
pub struct NpTest {
    pub value: Nats,
    pub effect: PovmEffect,
    /// `Tr[Λρ]`.
    pub accept_rho: f64,
    /// `Tr[Λσ]`.
    pub beta: f64,
    /// Lagrange multiplier `μ* = 1/t*` (0 in the kernel case).
    pub mu: f64,
    /// `β - max_μ h(μ)`, a certificate of optimality from the dual.
    pub dual_gap: f64,
}

fn check_pair(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimMismatch(rho.dim(), sigma.dim()));
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!("eps = {eps} outside [0,1)")));
    }
    Ok(())
}

/// Dual objective `h(μ) = μ(1-ε) - Tr[(μρ - σ)_+]`; `β* = max_μ h(μ)`.
pub fn np_dual(rho: &CMatrix, sigma: &CMatrix, eps: f64, mu: f64) -> f64 {
    let pos: f64 = herm_eig_unchecked(&(rho * c(mu, 0.0) - sigma)).values.iter().map(|v| v.max(0.0)).sum();
    mu * (1.0 - eps) - pos
}

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
        if (hi - lo).abs() < 1e-15 * (1.0 + lo.abs()) {
            break;
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Minimizes `Σ w_i s_i` subject to `Σ w_i r_i ≥ target`, `w ∈ [0,1]`, filling in ascending
/// order of `s/r`; the boundary group of tied ratios shares one weight.
pub(crate) fn fractional_fill(r: &[f64], s: &[f64], target: f64) -> Vec<f64> {
    let n = r.len();
    let ratio = |i: usize| if r[i] <= 0.0 { f64::INFINITY } else { s[i].max(0.0) / r[i] };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| ratio(a).total_cmp(&ratio(b)).then(a.cmp(&b)));
    let mut w = vec![0.0; n];
    let mut got = 0.0;
    let mut k = 0;
    while k < n && got < target {
        let head = ratio(order[k]);
        if head == f64::INFINITY {
            break;
        }
        let mut end = k + 1;
        while end < n && (ratio(order[end]) - head).abs() <= RATIO_TIE_TOL * head.max(1e-300).max(1.0) {
            end += 1;
        }
        let mass: f64 = order[k..end].iter().map(|&i| r[i].max(0.0)).sum();
        let lam = if got + mass <= target { 1.0 } else { ((target - got) / mass).clamp(0.0, 1.0) };
        for &i in &order[k..end] {
            w[i] = lam;
        }
        got += lam * mass;
        k = end;
    }
    w
}

/// `D_h^ε(ρ‖σ)` with an optimal effect, via the concave dual over `μ` and a Neyman–Pearson fill in
/// the eigenbasis of `μ*ρ - σ`.
pub fn np_test(rho: &DensityMatrix, sigma: &DensityMatrix, eps: f64) -> Result<NpTest> {
    check_pair(rho, sigma)?;
    check_eps(eps)?;
    let target = 1.0 - eps;
    let se = sigma.eig();
    let ker = se.projector(|x| x <= SUPPORT_TOL);
    let ker_mass = trace_product(&ker, rho.matrix());
    if ker_mass >= target - 1e-12 && ker_mass > 0.0 {
        let lam = (target / ker_mass).min(1.0);
        let effect_m = &ker * c(lam, 0.0);
        let beta = trace_product(&effect_m, sigma.matrix()).max(0.0);
        let restricted = herm_eig_unchecked(&(&ker * rho.matrix() * &ker));
        let witness = restricted.vector(0);
        return Ok(NpTest {
            value: Nats::from_vector(&witness),
            accept_rho: trace_product(&effect_m, rho.matrix()),
            effect: PovmEffect::from_matrix(effect_m)?,
            beta,
            mu: 0.0,
            dual_gap: beta,
        });
    }
    // The dual derivative is (1-ε) - Tr[P_{>0}(μ)ρ], and Tr[P_{>0}(μ)ρ] is non-decreasing in μ, so
    // bisecting on it locates μ* to machine precision even when the optimum is a smooth point.
    let pos_mass = |mu: f64| {
        let e = herm_eig_unchecked(&(rho.matrix() * c(mu, 0.0) - sigma.matrix()));
        trace_product(&e.projector(|x| x > 0.0), rho.matrix())
    };
    let (mut lo, mut hi) = (-35.0f64, if eps > 0.0 { (1.0 / eps).ln() + 1e-9 } else { 35.0 });
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pos_mass(mid.exp()) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mu = (0.5 * (lo + hi)).exp();
    let h_star = np_dual(rho.matrix(), sigma.matrix(), eps, mu);
    let basis = herm_eig_unchecked(&(rho.matrix() * c(mu, 0.0) - sigma.matrix()));
    let (effect_m, beta) = fill_in_basis(&basis.vectors, rho, sigma, target);
    let accept = trace_product(&effect_m, rho.matrix());
    let value = if beta > 0.0 { Nats::Finite(-beta.ln()) } else { Nats::Infinite(Witness::Index(0)) };
    Ok(NpTest {
        value,
        effect: PovmEffect::from_matrix(effect_m)?,
        accept_rho: accept,
        beta,
        mu,
        dual_gap: beta - h_star.max(0.0),
    })
}

fn fill_in_basis(vectors: &CMatrix, rho: &DensityMatrix, sigma: &DensityMatrix, target: f64) -> (CMatrix, f64) {
    let d = vectors.ncols();
    let mut r = vec![0.0; d];
    let mut s = vec![0.0; d];
    for k in 0..d {
        let v = vectors.column(k);
        r[k] = (v.adjoint() * rho.matrix() * v)[(0, 0)].re;
        s[k] = (v.adjoint() * sigma.matrix() * v)[(0, 0)].re;
    }
    let w = fractional_fill(&r, &s, target);
    let mut scaled = vectors.clone();
    for (k, &wk) in w.iter().enumerate() {
        for i in 0..d {
            scaled[(i, k)] *= c(wk, 0.0);
        }
    }
    let m = &scaled * vectors.adjoint();
    let m = (&m + m.adjoint()) * c(0.5, 0.0);
    let beta = trace_product(&m, sigma.matrix()).max(0.0);
    (m, beta)
}

pub fn hypothesis_testing_re(rho: &DensityMatrix, sigma: &DensityMatrix, eps: f64) -> Result<(Nats, PovmEffect)> {
    let t = np_test(rho, sigma, eps)?;
    Ok((t.value, t.effect))
}

/// The Neyman–Pearson projector `{ρ - tσ > 0}` and its errors.
pub fn np_curve_point(rho: &DensityMatrix, sigma: &DensityMatrix, t: f64) -> Result<NpCurvePoint> {
    check_pair(rho, sigma)?;
    let e = herm_eig_unchecked(&(rho.matrix() - sigma.matrix() * c(t, 0.0)));
    let p = e.projector(|x| x > SUPPORT_TOL);
    Ok(NpCurvePoint {
        t,
        alpha: 1.0 - trace_product(&p, rho.matrix()),
        beta: trace_product(&p, sigma.matrix()),
        effect: PovmEffect::from_matrix(p)?,
    })
}

/// `Tr[ρ(log ρ - log σ)]`, infinite with a kernel witness when `supp ρ ⊄ supp σ`.
pub fn umegaki_re(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Nats> {
    check_pair(rho, sigma)?;
    if let Some(w) = support_violation(rho, sigma) {
        return Ok(w);
    }
    let x = log_ratio_operator(rho, sigma);
    Ok(Nats::Finite(trace_product(rho.matrix(), &x)))
}

fn support_violation(rho: &DensityMatrix, sigma: &DensityMatrix) -> Option<Nats> {
    let se = sigma.eig();
    let ker = se.projector(|x| x <= SUPPORT_TOL);
    if trace_product(&ker, rho.matrix()) <= SUPPORT_TOL {
        return None;
    }
    let restricted = herm_eig_unchecked(&(&ker * rho.matrix() * &ker));
    Some(Nats::from_vector(&restricted.vector(0)))
}

/// `log ρ - log σ`, each logarithm taken on its own support.
fn log_ratio_operator(rho: &DensityMatrix, sigma: &DensityMatrix) -> CMatrix {
    let lg = |x: f64| if x > SUPPORT_TOL { x.ln() } else { 0.0 };
    rho.eig().apply(lg) - sigma.eig().apply(lg)
}

/// `Tr[ρ(log ρ - log σ)²] - D²`.
pub fn re_variance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<Nats> {
    check_pair(rho, sigma)?;
    if let Some(w) = support_violation(rho, sigma) {
        return Ok(w);
    }
    let x = log_ratio_operator(rho, sigma);
    let d = trace_product(rho.matrix(), &x);
    let second = trace_product(rho.matrix(), &(&x * &x));
    Ok(Nats::Finite((second - d * d).max(0.0)))
}

pub fn check_distribution(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidArgument("empty distribution".into()));
    }
    if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("negative or non-finite probability in {p:?}")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("distribution sums to {s}")));
    }
    Ok(())
}

fn check_classical_pair(p: &[f64], q: &[f64]) -> Result<()> {
    check_distribution(p)?;
    check_distribution(q)?;
    if p.len() != q.len() {
        return Err(Error::DimMismatch(p.len(), q.len()));
    }
    Ok(())
}

fn first_violation(p: &[f64], q: &[f64]) -> Option<usize> {
    (0..p.len()).find(|&i| p[i] > 0.0 && q[i] <= 0.0)
}

pub fn classical_re(p: &[f64], q: &[f64]) -> Result<Nats> {
    check_classical_pair(p, q)?;
    if let Some(i) = first_violation(p, q) {
        return Ok(Nats::Infinite(Witness::Index(i)));
    }
    Ok(Nats::Finite((0..p.len()).filter(|&i| p[i] > 0.0).map(|i| p[i] * (p[i] / q[i]).ln()).sum()))
}

pub fn classical_variance(p: &[f64], q: &[f64]) -> Result<Nats> {
    check_classical_pair(p, q)?;
    if let Some(i) = first_violation(p, q) {
        return Ok(Nats::Infinite(Witness::Index(i)));
    }
    let idx: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    let d: f64 = idx.iter().map(|&i| p[i] * (p[i] / q[i]).ln()).sum();
    let m2: f64 = idx.iter().map(|&i| p[i] * (p[i] / q[i]).ln().powi(2)).sum();
    Ok(Nats::Finite((m2 - d * d).max(0.0)))
}

/// `(1/(α-1)) log Σ p^α q^{1-α}` for `α > 0`, `α ≠ 1`.
pub fn renyi_divergence(p: &[f64], q: &[f64], alpha: f64) -> Result<Nats> {
    check_classical_pair(p, q)?;
    if !(alpha > 0.0) || alpha == 1.0 || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("alpha = {alpha}; use umegaki_re at alpha = 1")));
    }
    if alpha > 1.0 {
        if let Some(i) = first_violation(p, q) {
            return Ok(Nats::Infinite(Witness::Index(i)));
        }
    }
    let s: f64 = (0..p.len())
        .filter(|&i| p[i] > 0.0 && q[i] > 0.0)
        .map(|i| p[i].powf(alpha) * q[i].powf(1.0 - alpha))
        .sum();
    if s <= 0.0 {
        let i = (0..p.len()).find(|&i| p[i] > 0.0).unwrap_or(0);
        return Ok(Nats::Infinite(Witness::Index(i)));
    }
    Ok(Nats::Finite(s.ln() / (alpha - 1.0)))
}

pub fn max_relative_entropy(p: &[f64], q: &[f64]) -> Result<Nats> {
    check_classical_pair(p, q)?;
    if let Some(i) = first_violation(p, q) {
        return Ok(Nats::Infinite(Witness::Index(i)));
    }
    Ok(Nats::Finite(
        (0..p.len()).filter(|&i| p[i] > 0.0).map(|i| (p[i] / q[i]).ln()).fold(f64::NEG_INFINITY, f64::max),
    ))
}

/// `½‖ρ - σ‖₁` and the projector onto the positive part of `ρ - σ`.
pub fn total_variation(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<(f64, PovmEffect)> {
    check_pair(rho, sigma)?;
    let e = herm_eig_unchecked(&(rho.matrix() - sigma.matrix()));
    let p = e.projector(|x| x > SUPPORT_TOL);
    let tv = 0.5 * e.values.iter().map(|v| v.abs()).sum::<f64>();
    Ok((tv.min(1.0), PovmEffect::from_matrix(p)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub d: Nats,
    pub v: Nats,
    pub dmax: Nats,
    /// Keyed by the decimal rendering of α.
    pub dalpha: BTreeMap<String, Nats>,
}

pub fn divergence_report(p: &[f64], q: &[f64], alphas: &[f64]) -> Result<DivergenceReport> {
    let mut dalpha = BTreeMap::new();
    for &a in alphas {
        dalpha.insert(format!("{a}"), renyi_divergence(p, q, a)?);
    }
    Ok(DivergenceReport { d: classical_re(p, q)?, v: classical_variance(p, q)?, dmax: max_relative_entropy(p, q)?, dalpha })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_states() {
        let rho = DensityMatrix::diagonal(&[0.3, 0.7]).unwrap();
        let (v, e) = hypothesis_testing_re(&rho, &rho, 0.1).unwrap();
        assert!((v.as_f64() - (-(0.9f64).ln())).abs() < 1e-10);
        assert!((e.matrix() - CMatrix::identity(2, 2) * c(0.9, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn orthogonal_states_infinite() {
        let a = DensityMatrix::basis(2, 0).unwrap();
        let b = DensityMatrix::basis(2, 1).unwrap();
        assert!(!hypothesis_testing_re(&a, &b, 0.0).unwrap().0.is_finite());
    }

    #[test]
    fn pure_vs_mixed() {
        let a = DensityMatrix::basis(2, 0).unwrap();
        let w = DensityMatrix::maximally_mixed(2).unwrap();
        let t = np_test(&a, &w, 0.0).unwrap();
        assert!((t.value.as_f64() - 2f64.ln()).abs() < 1e-10);
        let t = np_test(&a, &w, 0.1).unwrap();
        assert!((t.value.as_f64() - (2f64.ln() - 0.9f64.ln())).abs() < 1e-10);
    }

    #[test]
    fn renyi_half_example() {
        let v = renyi_divergence(&[1.0, 0.0], &[0.5, 0.5], 0.5).unwrap();
        assert!((v.as_f64() - 2f64.ln()).abs() < 1e-12);
    }
}
