//! Compression by a gate-budgeted unitary followed by discarding wires, and the entropy-rate
//! experiments built on it.
//!
//! The compressor applies `U` to `ρ ⊗ |0><0|_anc` and keeps the wires on which the hypothesis
//! test acts trivially; the remaining wires are measured and discarded whatever the outcome, so
//! compressor and expander are channels. The expander re-appends `|0>` on the discarded wires,
//! applies `U^dag` and traces out the ancillas.

use serde::{Deserialize, Serialize};

use crate::bounded::{bounded_dh, bounded_dh_with, qubit_count, SearchConfig, SearchOutcome};
use crate::circuits::{effect_from_circuit, GateBudget, Mark, QuantumCircuit};
use crate::error::{Error, Result};
use crate::nats::Nats;
use crate::regularization::{classical_multicopy_dh, estimate_from_rates, RateEstimate};
use crate::tensor::{c, partial_trace, tensor_product, trace_norm_herm, CMatrix, DensityMatrix, SubsystemDims};

/// Wires allowed in a compressor (system plus ancillas).
pub const MAX_COMPRESSOR_WIRES: usize = 12;

/// `U` as a gate-model circuit, or as a dense unitary on the system when the budget is unbounded.
#[derive(Clone, Debug, PartialEq)]
pub enum Rotation {
    Circuit(QuantumCircuit),
    Dense(CMatrix),
}

#[derive(Clone, Debug)]
pub struct CompressorPair {
    pub rotation: Rotation,
    pub system_wires: usize,
    pub ancilla_wires: usize,
    /// Wires (out of system + ancilla) that carry the compressed state, ascending.
    pub kept_wires: Vec<usize>,
    /// `2^(kept wires)`.
    pub m: usize,
    pub eps_target: f64,
    /// `½‖ρ - (E∘D)[ρ]‖₁`, measured on the built pair.
    pub error: f64,
    /// Probability that the discarded wires read all zeros.
    pub accept: f64,
}

impl CompressorPair {
    pub fn log_m(&self) -> f64 {
        (self.m as f64).ln()
    }

    fn total_wires(&self) -> usize {
        self.system_wires + self.ancilla_wires
    }

    /// The expander's circuit, `U^dag` in the same wire layout.
    pub fn expander_circuit(&self) -> Option<QuantumCircuit> {
        match &self.rotation {
            Rotation::Circuit(c) => Some(c.inverse()),
            Rotation::Dense(_) => None,
        }
    }

    /// `U (X ⊗ |0><0|_anc) U^dag` on all wires.
    fn rotate(&self, x: &CMatrix) -> Result<CMatrix> {
        match &self.rotation {
            Rotation::Circuit(circ) => {
                let a = 1usize << self.ancilla_wires;
                let mut anc = CMatrix::zeros(a, a);
                anc[(0, 0)] = c(1.0, 0.0);
                Ok(conjugate(tensor_product(x, &anc)?, circ))
            }
            Rotation::Dense(u) => Ok(u * x * u.adjoint()),
        }
    }

    fn unrotate(&self, x: CMatrix) -> CMatrix {
        match &self.rotation {
            Rotation::Circuit(circ) => conjugate(x, &circ.inverse()),
            Rotation::Dense(u) => u.adjoint() * x * u,
        }
    }

    /// Compressed state on the kept wires (an `M x M` density matrix).
    pub fn compress(&self, rho: &DensityMatrix) -> Result<CMatrix> {
        self.compress_op(rho.matrix())
    }

    /// The compressor as a linear map on `2^s x 2^s` operators.
    pub fn compress_op(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.nrows() != 1 << self.system_wires {
            return Err(Error::DimMismatch(x.nrows(), 1 << self.system_wires));
        }
        let full = self.rotate(x)?;
        if self.kept_wires.len() == self.total_wires() {
            return Ok(full);
        }
        if self.kept_wires.is_empty() {
            let mut one = CMatrix::zeros(1, 1);
            one[(0, 0)] = full.trace();
            return Ok(one);
        }
        partial_trace(&full, &SubsystemDims::qubits(self.total_wires())?, &self.kept_wires)
    }

    /// Re-embeds an `M x M` operator with `|0>` on the discarded wires, undoes `U` and traces the ancillas.
    pub fn expand(&self, y: &CMatrix) -> Result<CMatrix> {
        if y.nrows() != self.m || y.ncols() != self.m {
            return Err(Error::DimMismatch(y.nrows(), self.m));
        }
        let n = self.total_wires();
        let index: Vec<usize> = (0..self.m)
            .map(|k| {
                let l = self.kept_wires.len();
                self.kept_wires
                    .iter()
                    .enumerate()
                    .fold(0usize, |acc, (p, &w)| acc | ((k >> (l - 1 - p)) & 1) << (n - 1 - w))
            })
            .collect();
        let mut full = CMatrix::zeros(1 << n, 1 << n);
        for (a, &ia) in index.iter().enumerate() {
            for (b, &ib) in index.iter().enumerate() {
                full[(ia, ib)] = y[(a, b)];
            }
        }
        let back = self.unrotate(full);
        if self.ancilla_wires == 0 {
            return Ok(back);
        }
        let keep: Vec<usize> = (0..self.system_wires).collect();
        partial_trace(&back, &SubsystemDims::qubits(n)?, &keep)
    }

    /// `(E∘D)[ρ]`.
    pub fn roundtrip(&self, rho: &DensityMatrix) -> Result<CMatrix> {
        self.roundtrip_op(rho.matrix())
    }

    pub fn roundtrip_op(&self, x: &CMatrix) -> Result<CMatrix> {
        self.expand(&self.compress_op(x)?)
    }

    /// `½‖ρ - (E∘D)[ρ]‖₁`.
    pub fn roundtrip_error(&self, rho: &DensityMatrix) -> Result<f64> {
        let out = self.roundtrip(rho)?;
        Ok(0.5 * trace_norm_herm(&(rho.matrix() - out)))
    }
}

/// `U X U^dag` for `X` on all wires of `circ`.
fn conjugate(mut m: CMatrix, circ: &QuantumCircuit) -> CMatrix {
    let d = m.nrows();
    let mut col = vec![c(0.0, 0.0); d];
    for pass in 0..2 {
        for j in 0..d {
            for i in 0..d {
                col[i] = m[(i, j)];
            }
            circ.run_statevector(&mut col);
            for i in 0..d {
                m[(i, j)] = col[i];
            }
        }
        if pass == 0 {
            m = m.adjoint();
        }
    }
    m
}

/// `D_h^ε(ρ‖I; G) = D_h^ε(ρ‖ω; G) - log d` for the unnormalized identity.
pub fn dh_against_identity(rho: &DensityMatrix, eps: f64, budget: GateBudget, cfg: &SearchConfig) -> Result<Nats> {
    let omega = DensityMatrix::maximally_mixed(rho.dim())?;
    let v = bounded_dh(rho, &omega, eps, budget, cfg)?.value;
    Ok(shift_to_identity(v, rho.dim()))
}

fn shift_to_identity(v: Nats, d: usize) -> Nats {
    match v {
        Nats::Finite(x) => Nats::Finite(x - (d as f64).ln()),
        inf => inf,
    }
}

fn eigen_compressor(rho: &DensityMatrix, eps0: f64, eps: f64) -> Result<CompressorPair> {
    let n = qubit_count(rho.dim())?;
    let e = rho.eig();
    let mut k = 0;
    while k < n {
        let mass: f64 = e.values.iter().take(1 << k).map(|v| v.max(0.0)).sum();
        if mass >= 1.0 - eps0 {
            break;
        }
        k += 1;
    }
    let u = e.vectors.adjoint();
    finish(Rotation::Dense(u), n, 0, (n - k..n).collect(), eps, rho)
}

fn finish(rotation: Rotation, system_wires: usize, ancilla_wires: usize, kept_wires: Vec<usize>, eps: f64, rho: &DensityMatrix) -> Result<CompressorPair> {
    let mut pair = CompressorPair {
        rotation,
        system_wires,
        ancilla_wires,
        m: 1 << kept_wires.len(),
        kept_wires,
        eps_target: eps,
        error: f64::NAN,
        accept: f64::NAN,
    };
    let full = pair.rotate(rho.matrix())?;
    let n = pair.total_wires();
    let mask: usize = (0..n).filter(|w| !pair.kept_wires.contains(w)).fold(0, |acc, w| acc | 1 << (n - 1 - w));
    pair.accept = (0..full.nrows()).filter(|z| z & mask == 0).map(|z| full[(z, z)].re).sum();
    pair.error = pair.roundtrip_error(rho)?;
    Ok(pair)
}

fn circuit_compressor(outcome: &SearchOutcome, eps: f64, rho: &DensityMatrix) -> Result<Option<CompressorPair>> {
    let Some(be) = &outcome.circuit else { return Ok(None) };
    let circ = be.circuit().clone();
    let kept: Vec<usize> = be
        .pattern()
        .marks
        .iter()
        .enumerate()
        .filter(|(_, &m)| m == Mark::Identity)
        .map(|(w, _)| w)
        .collect();
    let (s, a) = (circ.system_wires(), circ.ancilla_wires());
    finish(Rotation::Circuit(circ), s, a, kept, eps, rho).map(Some)
}

/// Compressor from the `ε²/9` hypothesis test against the identity, together with `-D_h^{ε²/9}(ρ‖I; G)`.
fn build_with_upper(rho: &DensityMatrix, eps: f64, budget: GateBudget, cfg: &SearchConfig) -> Result<(CompressorPair, f64)> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!("eps = {eps} outside [0,1)")));
    }
    let n = qubit_count(rho.dim())?;
    let eps0 = eps * eps / 9.0;
    let omega = DensityMatrix::maximally_mixed(rho.dim())?;
    let dh = bounded_dh(rho, &omega, eps0, budget, cfg)?;
    let upper = -shift_to_identity(dh.value.clone(), rho.dim()).as_f64();

    let mut candidates = Vec::new();
    match budget.gates {
        None => candidates.push(eigen_compressor(rho, eps0, eps)?),
        Some(_) => {
            if let Some(p) = circuit_compressor(&dh.outcome, eps, rho)? {
                candidates.push(p);
            }
        }
    }
    candidates.push(finish(Rotation::Circuit(QuantumCircuit::empty(n)), n, 0, (0..n).collect(), eps, rho)?);
    if candidates.iter().any(|p| p.total_wires() > MAX_COMPRESSOR_WIRES) {
        return Err(Error::DimensionLimit { dim: n, limit: MAX_COMPRESSOR_WIRES });
    }
    candidates
        .into_iter()
        .filter(|p| p.error <= eps + 1e-12)
        .min_by_key(|p| p.m)
        .map(|p| (p, upper))
        .ok_or_else(|| Error::Infeasible(format!("no compressor reaches error {eps}")))
}

pub fn build_compressor(rho: &DensityMatrix, eps: f64, budget: GateBudget, cfg: &SearchConfig) -> Result<CompressorPair> {
    build_with_upper(rho, eps, budget, cfg).map(|(p, _)| p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub eps: f64,
    pub budget: GateBudget,
    /// `-D_h^{2ε}(ρ‖I; G)`.
    pub lower: f64,
    /// `log M`.
    pub achieved: f64,
    /// `-D_h^{ε²/9}(ρ‖I; G)`.
    pub upper: f64,
    pub slack: f64,
    pub error: f64,
    pub pass: bool,
}

/// The single-shot compression bracket with the `log 2` slack for whole-qubit `M`.
pub fn compression_sandwich(rho: &DensityMatrix, eps: f64, budget: GateBudget, cfg: &SearchConfig) -> Result<SandwichReport> {
    if !(0.0..0.5).contains(&eps) {
        return Err(Error::InvalidArgument(format!("eps = {eps} outside [0, 1/2)")));
    }
    let (pair, upper) = build_with_upper(rho, eps, budget, cfg)?;
    let omega = DensityMatrix::maximally_mixed(rho.dim())?;
    // The compressor's own test is a feasible candidate at level 2ε.
    let mut extra = Vec::new();
    if let Rotation::Circuit(circ) = &pair.rotation {
        let pattern = crate::circuits::OutcomePattern::new(
            (0..pair.total_wires()).map(|w| if pair.kept_wires.contains(&w) { Mark::Identity } else { Mark::Proj0 }).collect(),
        );
        let be = effect_from_circuit(circ, &pattern)?;
        extra.push(SearchOutcome::from_effect(be.effect().clone(), Some(be), rho, &omega, f64::NAN));
    }
    let low = bounded_dh_with(rho, &omega, 2.0 * eps, budget, cfg, &extra)?;
    let lower = -shift_to_identity(low.value, rho.dim()).as_f64();
    let achieved = pair.log_m();
    let slack = 2f64.ln();
    let pass = lower <= achieved + 1e-9 && achieved <= upper + slack + 1e-9;
    Ok(SandwichReport { eps, budget, lower, achieved, upper, slack, error: pair.error, pass })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyRateReport {
    pub entropy: f64,
    /// `-(1/m) D_h^{2ε}(p^{⊗m}‖I^{⊗m})`.
    pub lower: RateEstimate,
    /// `-(1/m) D_h^{ε²/9}(p^{⊗m}‖I^{⊗m})`.
    pub upper: RateEstimate,
}

/// Per-copy compression-rate brackets for `p^{⊗m}` along `copy_counts`.
pub fn entropy_rate_experiment(p: &[f64], eps: f64, copy_counts: &[usize]) -> Result<EntropyRateReport> {
    use rayon::prelude::*;
    if !(0.0..0.5).contains(&eps) {
        return Err(Error::InvalidArgument(format!("eps = {eps} outside [0, 1/2)")));
    }
    if copy_counts.is_empty() || copy_counts[0] == 0 || copy_counts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("copy counts must be positive and strictly increasing".into()));
    }
    let d = p.len();
    let u = vec![1.0 / d as f64; d];
    let log_d = (d as f64).ln();
    let rates = |e: f64| -> Result<Vec<f64>> {
        copy_counts
            .par_iter()
            .map(|&m| {
                let r = classical_multicopy_dh(p, &u, e, m)?;
                match r.value {
                    Nats::Finite(_) => Ok(log_d - r.per_copy_rate),
                    Nats::Infinite(_) => Err(Error::InvalidArgument("uniform reference has full support".into())),
                }
            })
            .collect()
    };
    let lo = rates(2.0 * eps)?;
    let hi = rates(eps * eps / 9.0)?;
    let entropy = p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum();
    Ok(EntropyRateReport {
        entropy,
        lower: estimate_from_rates(copy_counts, &lo, |_| 2.0 * eps),
        upper: estimate_from_rates(copy_counts, &hi, |_| eps * eps / 9.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_state_needs_no_qubits() {
        let rho = DensityMatrix::basis(4, 0).unwrap();
        let p = build_compressor(&rho, 0.1, GateBudget::unbounded(), &SearchConfig::default()).unwrap();
        assert_eq!(p.m, 1);
        assert!(p.error < 1e-12);
        let q = build_compressor(&rho, 0.1, GateBudget::gates(0), &SearchConfig::default()).unwrap();
        assert_eq!(q.m, 1);
        assert!(q.error < 1e-12);
    }

    #[test]
    fn mixed_qubit_bracket() {
        let rho = DensityMatrix::maximally_mixed(2).unwrap();
        let r = compression_sandwich(&rho, 0.1, GateBudget::unbounded(), &SearchConfig::default()).unwrap();
        assert!((r.lower - 1.6f64.ln()).abs() < 1e-9);
        assert!((r.upper - 1.997_777_777_777_8f64.ln()).abs() < 1e-9);
        assert!((r.achieved - 2f64.ln()).abs() < 1e-12);
        assert!(r.pass);
    }
}
