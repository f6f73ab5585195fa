//! SWAP-test distinguisher between a catalyst copy and an unknown state.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuits::{
    effect_from_circuit, BoundedEffect, ClassicalProgram, NamedGate, OutcomePattern, QuantumCircuit, TwoLocalGate,
};
use crate::error::{Error, Result};
use crate::random::rng;
use crate::tensor::{trace_product, DensityMatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub empirical_type1: f64,
    pub empirical_type2: f64,
    pub trials: usize,
    /// Nats per copy.
    pub rate: f64,
    #[serde(default)]
    pub exact_type1: Option<f64>,
    #[serde(default)]
    pub exact_type2: Option<f64>,
}

/// `m` independent SWAP tests of a catalyst copy of `state_a` against the unknown state; the
/// null hypothesis is `state_a`, the alternative `state_b`. Accept iff every test accepts.
pub fn swap_test(state_a: &DensityMatrix, state_b: &DensityMatrix, m: usize, trials: usize, seed: u64) -> Result<TestResult> {
    if state_a.dim() != state_b.dim() {
        return Err(Error::DimMismatch(state_a.dim(), state_b.dim()));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("m = 0 copies".into()));
    }
    let single_null = (0.5 + 0.5 * trace_product(state_a.matrix(), state_a.matrix())).clamp(0.0, 1.0);
    let single_alt = (0.5 + 0.5 * trace_product(state_a.matrix(), state_b.matrix())).clamp(0.0, 1.0);
    let mf = m as i32;
    let exact_type1 = 1.0 - single_null.powi(mf);
    let exact_type2 = single_alt.powi(mf);
    let mut r = rng(seed);
    let mut all = |p: f64| (0..m).all(|_| r.random_bool(p));
    let mut rejects = 0usize;
    let mut accepts = 0usize;
    for _ in 0..trials {
        if !all(single_null) {
            rejects += 1;
        }
        if all(single_alt) {
            accepts += 1;
        }
    }
    let t = trials.max(1) as f64;
    Ok(TestResult {
        empirical_type1: rejects as f64 / t,
        empirical_type2: accepts as f64 / t,
        trials,
        rate: -exact_type2.ln() / m as f64,
        exact_type1: Some(exact_type1),
        exact_type2: Some(exact_type2),
    })
}

/// The SWAP test on two `n`-qubit registers (wires `0..n` and `n..2n`) with the control as the
/// single ancilla; accept is the ancilla reading 0. Each controlled swap is CNOT·Toffoli·CNOT.
pub fn swap_test_circuit(n: usize) -> Result<BoundedEffect> {
    if n == 0 {
        return Err(Error::InvalidArgument("empty registers".into()));
    }
    let total = 2 * n + 1;
    let anc = 2 * n;
    let mut prog = ClassicalProgram::new(total);
    for j in 0..n {
        prog.cnot(n + j, j);
        prog.toffoli(anc, j, n + j);
        prog.cnot(n + j, j);
    }
    let h = TwoLocalGate::embed_single(&NamedGate::H.unitary(), anc, total)?;
    let mut gates = vec![h.clone()];
    gates.extend(prog.lower());
    gates.push(h);
    let circuit = QuantumCircuit::new(2 * n, 1, gates)?;
    effect_from_circuit(&circuit, &OutcomePattern::from_mask(total, 1 << anc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::CMatrix;

    #[test]
    fn circuit_effect_is_symmetric_projector() {
        let e = swap_test_circuit(1).unwrap();
        let swap = NamedGate::Swap.unitary();
        let want = (CMatrix::identity(4, 4) + swap) * crate::tensor::c(0.5, 0.0);
        assert!((e.matrix() - want).norm() < 1e-10);
    }

    #[test]
    fn orthogonal_pure_states_half() {
        let a = DensityMatrix::basis(2, 0).unwrap();
        let b = DensityMatrix::basis(2, 1).unwrap();
        let r = swap_test(&a, &b, 1, 10, 1).unwrap();
        assert_eq!(r.exact_type2, Some(0.5));
        assert_eq!(r.exact_type1, Some(0.0));
    }
}
