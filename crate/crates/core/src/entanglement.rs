//! One-shot PPT distillation bound, negativity and Rains-type bounds, pseudo-bounds from a
//! surrogate state, Clifford twirling and entanglement dilution by compression.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounded::{bounded_tv, SearchConfig};
use crate::circuits::{random_clifford, GateBudget};
use crate::compression::build_compressor;
use crate::error::{Error, Result};
use crate::exact::umegaki_re;
use crate::random::split_seed;
use crate::tensor::{
    c, herm_eig_unchecked, max_entangled, op_norm_herm, projector, partial_trace, partial_transpose, trace_norm_herm, trace_product, CMatrix, CVector, DensityMatrix,
    HermitianOperator, SubsystemDims,
};

/// Largest `dA·dB` accepted by the distillation program.
pub const MAX_SDP_DIM: usize = 64;

fn check_bipartite(rho: &CMatrix, dims: &SubsystemDims) -> Result<()> {
    if dims.len() != 2 {
        return Err(Error::InvalidDims(format!("expected two subsystems, got {:?}", dims.dims)));
    }
    if rho.nrows() != dims.total() {
        return Err(Error::DimMismatch(rho.nrows(), dims.total()));
    }
    Ok(())
}

fn pt(a: &CMatrix, dims: &SubsystemDims) -> CMatrix {
    partial_transpose(a, dims, 1).expect("dims checked")
}

/// `log ‖ρ^{T_B}‖₁`.
pub fn log_negativity(rho: &DensityMatrix, dims: &SubsystemDims) -> Result<f64> {
    check_bipartite(rho.matrix(), dims)?;
    Ok(trace_norm_herm(&pt(rho.matrix(), dims)).ln().max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpConfig {
    /// Final bisection width on `η`.
    pub tol: f64,
    /// Constraint violation accepted as feasible inside the projection loop.
    pub feas_tol: f64,
    /// Projection cycles per feasibility problem.
    pub max_inner: usize,
}

impl Default for SdpConfig {
    fn default() -> Self {
        Self { tol: 1e-6, feas_tol: 1e-10, max_inner: 50_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpResiduals {
    /// Distance of the spectrum of `W` outside `[0, 1]`.
    pub povm_resid: f64,
    /// `max(0, 1 - ε - Tr[Wρ])`.
    pub fidelity_resid: f64,
    /// `max(0, ‖W^{T_B}‖_∞ - η)`.
    pub pt_norm_resid: f64,
}

impl SdpResiduals {
    pub fn max(&self) -> f64 {
        self.povm_resid.max(self.fidelity_resid).max(self.pt_norm_resid)
    }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub w: HermitianOperator,
    pub eta: f64,
    /// Largest `η` the stall rule called infeasible; not a certified lower bound.
    pub eta_low: f64,
    pub residuals: SdpResiduals,
    pub iterations: usize,
}

/// Recomputes every constraint of the distillation program for `w` from scratch.
pub fn verify_sdp_solution(w: &CMatrix, rho: &DensityMatrix, dims: &SubsystemDims, eps: f64, eta: f64) -> Result<SdpResiduals> {
    check_bipartite(rho.matrix(), dims)?;
    check_bipartite(w, dims)?;
    let e = herm_eig_unchecked(w);
    let povm_resid = (e.values[0] - 1.0).max(-e.values[e.values.len() - 1]).max(0.0);
    let fidelity_resid = (1.0 - eps - trace_product(w, rho.matrix())).max(0.0);
    let pt_norm_resid = (op_norm_herm(&pt(w, dims)) - eta).max(0.0);
    Ok(SdpResiduals { povm_resid, fidelity_resid, pt_norm_resid })
}

fn hermitize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * c(0.5, 0.0)
}

fn clip_spectrum(a: &CMatrix, lo: f64, hi: f64) -> CMatrix {
    herm_eig_unchecked(&hermitize(a)).apply(|v| v.clamp(lo, hi))
}

struct Program<'a> {
    rho: &'a CMatrix,
    rho_norm2: f64,
    dims: &'a SubsystemDims,
    target: f64,
}

impl Program<'_> {
    fn half_space(&self, x: &CMatrix) -> CMatrix {
        let t = trace_product(x, self.rho);
        if t >= self.target {
            x.clone()
        } else {
            x + self.rho * c((self.target - t) / self.rho_norm2, 0.0)
        }
    }

    fn pt_ball(&self, x: &CMatrix, eta: f64) -> CMatrix {
        pt(&clip_spectrum(&pt(x, self.dims), -eta, eta), self.dims)
    }

    /// Spectral and fidelity violation of a point already inside the PT ball.
    fn violation(&self, x: &CMatrix) -> f64 {
        let e = herm_eig_unchecked(&hermitize(x));
        let spec = (e.values[0] - 1.0).max(-e.values[e.values.len() - 1]).max(0.0);
        spec.max((self.target - trace_product(x, self.rho)).max(0.0))
    }

    /// Clips `x` into `[0, I]` and, if `Tr[Wρ] < 1-ε`, mixes in either the feasible `anchor` or `I`,
    /// whichever leaves the smaller `‖W^{T_B}‖_∞`; returns the feasible point and that norm.
    fn repair(&self, x: &CMatrix, anchor: &CMatrix) -> (CMatrix, f64) {
        let w1 = clip_spectrum(x, 0.0, 1.0);
        let t1 = trace_product(&w1, self.rho);
        if t1 >= self.target {
            let eta = op_norm_herm(&pt(&w1, self.dims));
            return (w1, eta);
        }
        let d = x.nrows();
        let id = CMatrix::identity(d, d);
        [anchor, &id]
            .into_iter()
            .map(|a| {
                let ta = trace_product(a, self.rho);
                let s = if ta > t1 { ((self.target - t1) / (ta - t1)).clamp(0.0, 1.0) } else { 1.0 };
                let w = &w1 * c(1.0 - s, 0.0) + a * c(s, 0.0);
                let eta = op_norm_herm(&pt(&w, self.dims));
                (w, eta)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("two candidates")
    }

    /// Dykstra's cyclic projections onto `[0,I] ∩ {Tr[Wρ] ≥ 1-ε} ∩ {‖W^{T_B}‖_∞ ≤ η}`, started at
    /// `start`, which is left at the last iterate. A stalled violation is taken as infeasibility.
    fn feasible(&self, anchor: &CMatrix, start: &mut CMatrix, eta: f64, slack: f64, cfg: &SdpConfig, used: &mut usize) -> Feasibility {
        let d = anchor.nrows();
        let x = start;
        let mut p = [CMatrix::zeros(d, d), CMatrix::zeros(d, d), CMatrix::zeros(d, d)];
        let mut last_check = f64::INFINITY;
        let mut best: Option<(CMatrix, f64)> = None;
        for k in 1..=cfg.max_inner {
            *used += 1;
            for (i, pi) in p.iter_mut().enumerate() {
                let y = &*x + &*pi;
                let z = match i {
                    0 => clip_spectrum(&y, 0.0, 1.0),
                    1 => self.half_space(&y),
                    _ => self.pt_ball(&y, eta),
                };
                *pi = &y - &z;
                *x = z;
            }
            if k % 10 != 0 {
                continue;
            }
            let v = self.violation(x);
            if v <= slack {
                let (w, we) = self.repair(x, anchor);
                if we <= eta + slack {
                    return Feasibility::Feasible(w, we);
                }
            }
            if v <= cfg.feas_tol {
                let (w, we) = self.repair(x, anchor);
                return Feasibility::Feasible(w, we);
            }
            if k % 200 == 0 {
                let (w, we) = self.repair(x, anchor);
                if best.as_ref().is_none_or(|b| we < b.1) {
                    best = Some((w, we));
                }
                if v > 0.995 * last_check {
                    return Feasibility::Infeasible;
                }
                last_check = v;
            }
        }
        Feasibility::Undecided(best)
    }
}

enum Feasibility {
    Feasible(CMatrix, f64),
    Infeasible,
    /// Out of iterations; carries the best repaired point seen.
    Undecided(Option<(CMatrix, f64)>),
}

fn support_projector(rho: &DensityMatrix) -> CMatrix {
    rho.eig().projector(|v| v > 1e-12)
}

/// `min ‖W^{T_B}‖_∞` over `0 ≤ W ≤ I`, `Tr[Wρ] ≥ 1-ε`, by bisection on `η` with a projection
/// feasibility oracle. The returned `W` is re-verified independently of the solver.
pub fn solve_ppt_program(rho: &DensityMatrix, dims: &SubsystemDims, eps: f64, cfg: &SdpConfig) -> Result<SdpSolution> {
    check_bipartite(rho.matrix(), dims)?;
    if dims.total() > MAX_SDP_DIM {
        return Err(Error::DimensionLimit { dim: dims.total(), limit: MAX_SDP_DIM });
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!("eps = {eps} outside [0,1)")));
    }
    let d = rho.dim();
    let prog = Program { rho: rho.matrix(), rho_norm2: trace_product(rho.matrix(), rho.matrix()), dims, target: 1.0 - eps };

    // W = (1-ε)I is always feasible at η = 1-ε; the support projector often does better.
    let mut best = CMatrix::identity(d, d) * c(1.0 - eps, 0.0);
    let mut hi = 1.0 - eps;
    let sp = support_projector(rho);
    let sp_eta = op_norm_herm(&pt(&sp, dims));
    if sp_eta < hi {
        best = sp;
        hi = sp_eta;
    }
    let mut lo = 0.0;
    let mut used = 0;
    // consecutive midpoints are close, so each projection run starts where the last one stopped
    let mut warm = best.clone();
    while hi - lo > cfg.tol {
        let mid = 0.5 * (lo + hi);
        match prog.feasible(&best, &mut warm, mid, 0.25 * cfg.tol, cfg, &mut used) {
            Feasibility::Feasible(w, we) if we < hi => {
                best = w;
                hi = we;
            }
            Feasibility::Feasible(..) | Feasibility::Infeasible => lo = mid,
            // keep a repaired point that still tightens the bound, otherwise give up at this width
            Feasibility::Undecided(Some((w, we))) if we < hi - 0.25 * cfg.tol => {
                best = w;
                hi = we;
            }
            Feasibility::Undecided(_) => {
                return Err(Error::IterationsExceeded { iterations: cfg.max_inner, best_eta: hi });
            }
        }
    }
    let residuals = verify_sdp_solution(&best, rho, dims, eps, hi)?;
    let w = HermitianOperator::new(hermitize(&best), f64::INFINITY)?;
    Ok(SdpSolution { w, eta: hi, eta_low: lo, residuals, iterations: used })
}

/// Allowance for bisection round-off before taking the floor.
const EBIT_FLOOR_SLACK: f64 = 1e-6;

fn ebits_from_eta(eta: f64) -> u32 {
    (-eta.log2() + EBIT_FLOOR_SLACK).floor().max(0.0) as u32
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoBounds {
    pub surrogate_id: String,
    /// Bounded total variation between the state and the surrogate at `tv_budget`.
    pub tv: f64,
    pub tv_budget: GateBudget,
    pub log_negativity: f64,
    /// `S(ψ̃^A)` for the top eigenvector of the surrogate; only for pure inputs.
    pub entanglement_entropy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntanglementReport {
    pub one_shot_ebits: u32,
    pub eta_star: f64,
    /// `-log η*` before the floor.
    pub one_shot_nats: f64,
    pub log_negativity: f64,
    /// Relative entropy to the best PPT candidate found; an upper bound on the Rains quantity.
    pub rains_value: f64,
    pub pseudo: Option<PseudoBounds>,
}

pub fn one_shot_ppt_distillation(
    rho: &DensityMatrix,
    dims: &SubsystemDims,
    eps: f64,
    cfg: &SdpConfig,
) -> Result<(SdpSolution, EntanglementReport)> {
    let sol = solve_ppt_program(rho, dims, eps, cfg)?;
    let report = EntanglementReport {
        one_shot_ebits: ebits_from_eta(sol.eta),
        eta_star: sol.eta,
        one_shot_nats: -sol.eta.ln(),
        log_negativity: log_negativity(rho, dims)?,
        rains_value: rains_upper(rho, dims)?,
        pseudo: None,
    };
    Ok((sol, report))
}

/// Schmidt coefficients (squared) and the Schmidt-dephased state `Σ λ_i |i_A i_B><i_A i_B|`.
pub fn schmidt_dephased(psi: &CVector, dims: &SubsystemDims) -> Result<(Vec<f64>, DensityMatrix)> {
    if dims.len() != 2 || psi.len() != dims.total() {
        return Err(Error::InvalidDims(format!("{:?}", dims.dims)));
    }
    let (da, db) = (dims.dims[0], dims.dims[1]);
    let coeff = CMatrix::from_fn(da, db, |a, b| psi[a * db + b]);
    let svd = coeff.svd(true, true);
    let u = svd.u.expect("requested");
    let vt = svd.v_t.expect("requested");
    let mut sigma = CMatrix::zeros(da * db, da * db);
    let mut lambdas = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        let l = s * s;
        lambdas.push(l);
        if l <= 0.0 {
            continue;
        }
        // |i_A> = u[:, i], |i_B> = conj(v_t[i, :])^* i.e. the i-th row of v_t.
        let ket = CVector::from_fn(da * db, |k, _| u[(k / db, i)] * vt[(i, k % db)]);
        sigma += &ket * ket.adjoint() * c(l, 0.0);
    }
    Ok((lambdas, DensityMatrix::from_matrix_lenient(sigma)?))
}

fn top_eigenvector(rho: &DensityMatrix) -> CVector {
    rho.eig().vector(0)
}

fn is_pure(rho: &DensityMatrix) -> bool {
    (trace_product(rho.matrix(), rho.matrix()) - 1.0).abs() < 1e-9
}

/// Minimum relative entropy to a few PPT candidates: the Schmidt-dephased state for pure inputs
/// and the least white-noise admixture that has a positive partial transpose.
fn rains_upper(rho: &DensityMatrix, dims: &SubsystemDims) -> Result<f64> {
    let d = rho.dim();
    let mut best = f64::INFINITY;
    if is_pure(rho) {
        let (_, sigma) = schmidt_dephased(&top_eigenvector(rho), dims)?;
        best = best.min(umegaki_re(rho, &sigma)?.as_f64());
    }
    let ppt_at = |t: f64| -> CMatrix { rho.matrix() * c(1.0 - t, 0.0) + CMatrix::identity(d, d) * c(t / d as f64, 0.0) };
    let min_pt = |t: f64| *herm_eig_unchecked(&pt(&ppt_at(t), dims)).values.last().unwrap();
    let (mut lo, mut hi) = (0.0, 1.0);
    if min_pt(0.0) >= -1e-12 {
        hi = 0.0;
    } else {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if min_pt(mid) >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    let sigma = DensityMatrix::from_matrix_lenient(ppt_at(hi))?;
    best = best.min(umegaki_re(rho, &sigma)?.as_f64());
    Ok(best.max(0.0))
}

/// Distillation SDP, negativity and Rains-type values, plus pseudo-bounds evaluated at an explicit
/// surrogate `(id, state, budget)`.
pub fn rains_report(
    rho: &DensityMatrix,
    dims: &SubsystemDims,
    eps: f64,
    surrogate: Option<(&str, &DensityMatrix, GateBudget)>,
    sdp: &SdpConfig,
    search: &SearchConfig,
) -> Result<EntanglementReport> {
    let (_, mut report) = one_shot_ppt_distillation(rho, dims, eps, sdp)?;
    if let Some((id, rt, budget)) = surrogate {
        if rt.dim() != rho.dim() {
            return Err(Error::DimMismatch(rt.dim(), rho.dim()));
        }
        let tv = if rho.dim().is_power_of_two() {
            bounded_tv(rho, rt, budget, search)?.value
        } else {
            crate::exact::total_variation(rho, rt)?.0
        };
        let entanglement_entropy = if is_pure(rho) {
            let (_, sigma) = schmidt_dephased(&top_eigenvector(rt), dims)?;
            let psi_t = DensityMatrix::pure(&top_eigenvector(rt))?;
            Some(umegaki_re(&psi_t, &sigma)?.as_f64())
        } else {
            None
        };
        report.pseudo = Some(PseudoBounds {
            surrogate_id: id.to_string(),
            tv,
            tv_budget: budget,
            log_negativity: log_negativity(rt, dims)?,
            entanglement_entropy,
        });
    }
    Ok(report)
}

/// `|Ω><Ω|/d` on `C^d ⊗ C^d`.
pub fn max_entangled_state(d: usize) -> CMatrix {
    projector(&max_entangled(d))
}

/// `Tr[φρ]·φ + (1 - Tr[φρ])·(I - φ)/(d² - 1)`, the exact `U ⊗ U*` twirl over a 2-design.
pub fn isotropic_projection(rho: &CMatrix, d: usize) -> CMatrix {
    let phi = max_entangled_state(d);
    let f = trace_product(&phi, rho);
    let dd = d * d;
    &phi * c(f, 0.0) + (CMatrix::identity(dd, dd) - &phi) * c((1.0 - f) / (dd as f64 - 1.0), 0.0)
}

/// Monte-Carlo average of `(U ⊗ U*) ρ (U ⊗ U*)^dag` over uniformly random `n`-qubit Cliffords.
/// Sample `i` uses the seed `split_seed(seed, i)`; the sum is taken in sample order.
pub fn clifford_twirl(rho: &DensityMatrix, samples: usize, seed: u64) -> Result<DensityMatrix> {
    let dd = rho.dim();
    let d = (dd as f64).sqrt().round() as usize;
    if d * d != dd || !d.is_power_of_two() {
        return Err(Error::InvalidDims(format!("twirl needs 2^n x 2^n, got dimension {dd}")));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let n = d.trailing_zeros() as usize;
    let terms = (0..samples)
        .into_par_iter()
        .map(|i| {
            let u = if n == 0 { CMatrix::identity(1, 1) } else { random_clifford(n, split_seed(seed, i as u64))?.unitary() };
            let uu = u.kronecker(&u.conjugate());
            Ok(&uu * rho.matrix() * uu.adjoint())
        })
        .collect::<Result<Vec<CMatrix>>>()?;
    let mut acc = CMatrix::zeros(dd, dd);
    for t in &terms {
        acc += t;
    }
    DensityMatrix::from_matrix_lenient(hermitize(&(acc * c(1.0 / samples as f64, 0.0))))
}

/// Choi matrix `W ⊗ φ^{⊗m} + Q ⊗ (I - φ^{⊗m})` with `Q = (I - W)/(d'^2 - 1)`, `d' = 2^m`.
/// The output pair `A'B'` is ordered `A'_1..A'_m B'_1..B'_m`, i.e. `φ_{d'}`.
pub fn twirled_channel_choi(w: &CMatrix, m: u32) -> Result<CMatrix> {
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one output ebit".into()));
    }
    let dp = 1usize << m;
    let dd = dp * dp;
    let phi = max_entangled_state(dp);
    let q = (CMatrix::identity(w.nrows(), w.ncols()) - w) * c(1.0 / (dd as f64 - 1.0), 0.0);
    let j = crate::tensor::tensor_product(w, &phi)? + crate::tensor::tensor_product(&q, &(CMatrix::identity(dd, dd) - &phi))?;
    Ok(j)
}

/// `max |Tr_{A'B'} J - I|`, zero for a trace-preserving channel.
pub fn choi_marginal_defect(j: &CMatrix, input_dim: usize) -> Result<f64> {
    let out = j.nrows() / input_dim;
    let marg = partial_trace(j, &SubsystemDims::bipartite(input_dim, out)?, &[0])?;
    Ok((marg - CMatrix::identity(input_dim, input_dim)).iter().fold(0.0f64, |m, z| m.max(z.norm())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DilutionReport {
    pub ebits_used: u32,
    /// `<ψ|(E∘D ⊗ id)(ψ)|ψ>`.
    pub fidelity: f64,
    pub fidelity_ok: bool,
    /// One-shot PPT distillable ebits at the same `ε`.
    pub distillable_ebits: u32,
    /// `log(1/(1-4ε))`, infinite for `ε ≥ 1/4`.
    pub slack: f64,
    /// `ebits_used·log 2 + slack ≥ distillable_ebits·log 2`.
    pub cost_ge_distillable: bool,
}

/// Compress `A` at `ε/2`, send the kept qubits through teleportation (one ebit each) and expand.
pub fn dilution_via_compression(
    psi: &CVector,
    dims: &SubsystemDims,
    eps: f64,
    budget: GateBudget,
    cfg: &SearchConfig,
) -> Result<DilutionReport> {
    if dims.len() != 2 || psi.len() != dims.total() {
        return Err(Error::InvalidDims(format!("{:?}", dims.dims)));
    }
    let (da, db) = (dims.dims[0], dims.dims[1]);
    let state = DensityMatrix::pure(psi)?;
    let rho_a = DensityMatrix::from_matrix_lenient(partial_trace(state.matrix(), dims, &[0])?)?;
    let pair = build_compressor(&rho_a, eps / 2.0, budget, cfg)?;
    // Apply E∘D blockwise on A: ψψ^dag = Σ X_{bb'} ⊗ |b><b'|.
    let full = state.matrix();
    let mut out = CMatrix::zeros(da * db, da * db);
    for b in 0..db {
        for b2 in 0..db {
            let blk = CMatrix::from_fn(da, da, |i, j| full[(i * db + b, j * db + b2)]);
            let r = pair.roundtrip_op(&blk)?;
            for i in 0..da {
                for j in 0..da {
                    out[(i * db + b, j * db + b2)] = r[(i, j)];
                }
            }
        }
    }
    let fidelity = (psi.adjoint() * &out * psi)[(0, 0)].re;
    let ebits_used = pair.kept_wires.len() as u32;
    let (_, dist) = one_shot_ppt_distillation(&state, dims, eps, &SdpConfig::default())?;
    let slack = if eps < 0.25 { -(1.0 - 4.0 * eps).ln() } else { f64::INFINITY };
    let ln2 = 2f64.ln();
    Ok(DilutionReport {
        ebits_used,
        fidelity,
        fidelity_ok: fidelity >= 1.0 - eps - 1e-9,
        distillable_ebits: dist.one_shot_ebits,
        slack,
        cost_ge_distillable: ebits_used as f64 * ln2 + slack + 1e-9 >= dist.one_shot_ebits as f64 * ln2,
    })
}
