//! The gate-complexity circuit model.
//!
//! Wires `0..system_wires` carry the input; ancillas follow and start in `|0>`.
//! Wire 0 is the most significant bit of a basis index. An effect is
//! `<0|_anc U^dag (⊗ A_i) U |0>_anc` where `U` is the circuit applied in gate order,
//! i.e. the probability of the marked outcome after running the circuit.

pub mod classical;
pub mod clifford;
pub mod enumerate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{c, herm_eig_unchecked, tensor_product, CMatrix, DensityMatrix, HermitianOperator, PovmEffect, C64};

pub use classical::{compile_lookup_function, ClassicalOp, ClassicalProgram, LookupTable};
pub use clifford::random_clifford;
pub use enumerate::{enumerate_bounded_effects, exhaustive_catalog, EffectStream, GateSet, NamedGate};

pub const UNITARY_TOL: f64 = 1e-10;
pub const EFFECT_TOL: f64 = 1e-9;
pub const DEFAULT_ENUMERATION_CAP: f64 = 1e7;

/// A gate on two distinct wires (4x4, `targets[0]` most significant), or on the only wire of a
/// one-wire circuit (2x2).
#[derive(Clone, Debug, PartialEq)]
pub struct TwoLocalGate {
    targets: Vec<usize>,
    unitary: CMatrix,
}

impl TwoLocalGate {
    pub fn new(targets: Vec<usize>, unitary: CMatrix) -> Result<Self> {
        let dim = match targets.len() {
            1 => 2,
            2 if targets[0] != targets[1] => 4,
            _ => return Err(Error::InvalidArgument(format!("bad gate targets {targets:?}"))),
        };
        if unitary.nrows() != dim || unitary.ncols() != dim {
            return Err(Error::DimMismatch(unitary.nrows(), dim));
        }
        let dev = (unitary.adjoint() * &unitary - CMatrix::identity(dim, dim))
            .iter()
            .fold(0.0f64, |m, z| m.max(z.norm()));
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self { targets, unitary })
    }

    pub fn pair(a: usize, b: usize, unitary: CMatrix) -> Result<Self> {
        Self::new(vec![a, b], unitary)
    }

    /// A single-qubit unitary as a 2-local gate whose partner is the lowest other wire.
    /// In a one-wire circuit the gate stays 2x2.
    pub fn embed_single(u: &CMatrix, wire: usize, total_wires: usize) -> Result<Self> {
        if total_wires <= 1 {
            return Self::new(vec![wire], u.clone());
        }
        let partner = if wire == 0 { 1 } else { 0 };
        Self::new(vec![wire, partner], u.kronecker(&CMatrix::identity(2, 2)))
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    pub fn dagger(&self) -> Self {
        Self { targets: self.targets.clone(), unitary: self.unitary.adjoint() }
    }

    fn remap(&self, f: impl Fn(usize) -> usize) -> Self {
        Self { targets: self.targets.iter().map(|&w| f(w)).collect(), unitary: self.unitary.clone() }
    }

    /// In-place application to a statevector over `wires` qubits.
    pub fn apply(&self, state: &mut [C64], wires: usize) {
        let u = &self.unitary;
        match self.targets.as_slice() {
            &[a] => {
                let ba = 1usize << (wires - 1 - a);
                for i in 0..state.len() {
                    if i & ba == 0 {
                        let (x0, x1) = (state[i], state[i | ba]);
                        state[i] = u[(0, 0)] * x0 + u[(0, 1)] * x1;
                        state[i | ba] = u[(1, 0)] * x0 + u[(1, 1)] * x1;
                    }
                }
            }
            &[a, b] => {
                let ba = 1usize << (wires - 1 - a);
                let bb = 1usize << (wires - 1 - b);
                for i in 0..state.len() {
                    if i & ba == 0 && i & bb == 0 {
                        let idx = [i, i | bb, i | ba, i | ba | bb];
                        let x = [state[idx[0]], state[idx[1]], state[idx[2]], state[idx[3]]];
                        for r in 0..4 {
                            state[idx[r]] = u[(r, 0)] * x[0] + u[(r, 1)] * x[1] + u[(r, 2)] * x[2] + u[(r, 3)] * x[3];
                        }
                    }
                }
            }
            _ => unreachable!("validated at construction"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumCircuit {
    system_wires: usize,
    ancilla_wires: usize,
    gates: Vec<TwoLocalGate>,
}

impl QuantumCircuit {
    pub fn new(system_wires: usize, ancilla_wires: usize, gates: Vec<TwoLocalGate>) -> Result<Self> {
        if ancilla_wires > gates.len() {
            return Err(Error::TooManyAncillas { ancillas: ancilla_wires, gates: gates.len() });
        }
        let total = system_wires + ancilla_wires;
        if total == 0 {
            return Err(Error::InvalidArgument("circuit needs at least one wire".into()));
        }
        for g in &gates {
            if let Some(&w) = g.targets.iter().find(|&&w| w >= total) {
                return Err(Error::WireOutOfRange { wire: w, wires: total });
            }
            if g.targets.len() == 1 && total != 1 {
                return Err(Error::InvalidArgument("single-wire gates are only allowed in one-wire circuits".into()));
            }
        }
        Ok(Self { system_wires, ancilla_wires, gates })
    }

    pub fn empty(system_wires: usize) -> Self {
        Self { system_wires, ancilla_wires: 0, gates: Vec::new() }
    }

    pub fn system_wires(&self) -> usize {
        self.system_wires
    }

    pub fn ancilla_wires(&self) -> usize {
        self.ancilla_wires
    }

    pub fn total_wires(&self) -> usize {
        self.system_wires + self.ancilla_wires
    }

    pub fn gates(&self) -> &[TwoLocalGate] {
        &self.gates
    }

    pub fn gate_complexity(&self) -> usize {
        self.gates.len()
    }

    /// Runs the circuit on a basis-aligned statevector over all wires.
    pub fn run_statevector(&self, state: &mut [C64]) {
        let n = self.total_wires();
        for g in &self.gates {
            g.apply(state, n);
        }
    }

    /// Full unitary over all wires (column `j` is the image of basis state `j`).
    pub fn unitary(&self) -> CMatrix {
        let d = 1usize << self.total_wires();
        let mut u = CMatrix::zeros(d, d);
        let mut v = vec![c(0.0, 0.0); d];
        for j in 0..d {
            v.iter_mut().for_each(|z| *z = c(0.0, 0.0));
            v[j] = c(1.0, 0.0);
            self.run_statevector(&mut v);
            for i in 0..d {
                u[(i, j)] = v[i];
            }
        }
        u
    }

    /// The isometry `U (I ⊗ |0…0>_anc)`, a `2^total x 2^system` matrix.
    pub fn isometry(&self) -> CMatrix {
        let n = self.total_wires();
        let ds = 1usize << self.system_wires;
        let shift = self.ancilla_wires;
        let mut v_mat = CMatrix::zeros(1 << n, ds);
        let mut v = vec![c(0.0, 0.0); 1 << n];
        for x in 0..ds {
            v.iter_mut().for_each(|z| *z = c(0.0, 0.0));
            v[x << shift] = c(1.0, 0.0);
            self.run_statevector(&mut v);
            for (i, z) in v.iter().enumerate() {
                v_mat[(i, x)] = *z;
            }
        }
        v_mat
    }

    /// Gates reversed and daggered; same wire layout.
    pub fn inverse(&self) -> Self {
        Self {
            system_wires: self.system_wires,
            ancilla_wires: self.ancilla_wires,
            gates: self.gates.iter().rev().map(|g| g.dagger()).collect(),
        }
    }

    pub fn to_json(&self) -> CircuitJson {
        CircuitJson {
            system_wires: self.system_wires,
            ancilla_wires: self.ancilla_wires,
            gates: self
                .gates
                .iter()
                .map(|g| {
                    let op = crate::tensor::OperatorJson::from_matrix(&g.unitary);
                    GateJson { targets: g.targets.clone(), re: op.re, im: op.im }
                })
                .collect(),
        }
    }

    pub fn from_json(j: &CircuitJson) -> Result<Self> {
        let gates = j
            .gates
            .iter()
            .map(|g| {
                let op = crate::tensor::OperatorJson { dim: g.re.len(), re: g.re.clone(), im: g.im.clone() };
                TwoLocalGate::new(g.targets.clone(), op.to_matrix()?)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(j.system_wires, j.ancilla_wires, gates)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateJson {
    pub targets: Vec<usize>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// `{"system_wires":n,"ancilla_wires":a,"gates":[{"targets":[i,j],"re":...,"im":...}]}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitJson {
    pub system_wires: usize,
    pub ancilla_wires: usize,
    pub gates: Vec<GateJson>,
}

/// `ρ ⊗ |0…0><0…0|_anc` evolved by the circuit; all wires are kept.
pub fn apply_circuit(state: &DensityMatrix, circuit: &QuantumCircuit) -> Result<CMatrix> {
    let ds = 1usize << circuit.system_wires();
    if state.dim() != ds {
        return Err(Error::DimMismatch(state.dim(), ds));
    }
    let mut anc = CMatrix::zeros(1 << circuit.ancilla_wires(), 1 << circuit.ancilla_wires());
    anc[(0, 0)] = c(1.0, 0.0);
    let rho = tensor_product(state.matrix(), &anc)?;
    let d = rho.nrows();
    // U ρ column by column, then U (Uρ)^dag = U ρ U^dag.
    let mut m = rho;
    for pass in 0..2 {
        let mut col = vec![c(0.0, 0.0); d];
        for j in 0..d {
            for i in 0..d {
                col[i] = m[(i, j)];
            }
            circuit.run_statevector(&mut col);
            for i in 0..d {
                m[(i, j)] = col[i];
            }
        }
        if pass == 0 {
            m = m.adjoint();
        }
    }
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mark {
    Proj0,
    Identity,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OutcomePattern {
    pub marks: Vec<Mark>,
}

impl OutcomePattern {
    pub fn new(marks: Vec<Mark>) -> Self {
        Self { marks }
    }

    /// Bit `w` of `mask` (wire 0 = lowest bit) set means Proj0 on wire `w`.
    pub fn from_mask(wires: usize, mask: u64) -> Self {
        Self { marks: (0..wires).map(|w| if mask >> w & 1 == 1 { Mark::Proj0 } else { Mark::Identity }).collect() }
    }

    pub fn all_identity(wires: usize) -> Self {
        Self { marks: vec![Mark::Identity; wires] }
    }

    /// The all-Identity pattern realizes the trivial test `Λ = I`.
    pub fn is_trivial(&self) -> bool {
        self.marks.iter().all(|&m| m == Mark::Identity)
    }

    fn proj_mask(&self, total: usize) -> usize {
        self.marks
            .iter()
            .enumerate()
            .filter(|(_, &m)| m == Mark::Proj0)
            .fold(0usize, |acc, (w, _)| acc | 1 << (total - 1 - w))
    }
}

/// `Λ = V^dag P V` for the isometry `V` and the pattern projector `P`.
pub fn effect_matrix_from_isometry(v: &CMatrix, pattern: &OutcomePattern) -> CMatrix {
    let total = pattern.marks.len();
    let mask = pattern.proj_mask(total);
    let ds = v.ncols();
    let mut out = CMatrix::zeros(ds, ds);
    for z in 0..v.nrows() {
        if z & mask != 0 {
            continue;
        }
        for x in 0..ds {
            let a = v[(z, x)].conj();
            if a == c(0.0, 0.0) {
                continue;
            }
            for y in 0..ds {
                out[(x, y)] += a * v[(z, y)];
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundedEffect {
    circuit: QuantumCircuit,
    pattern: OutcomePattern,
    effect: PovmEffect,
}

impl BoundedEffect {
    pub fn circuit(&self) -> &QuantumCircuit {
        &self.circuit
    }

    pub fn pattern(&self) -> &OutcomePattern {
        &self.pattern
    }

    pub fn effect(&self) -> &PovmEffect {
        &self.effect
    }

    pub fn matrix(&self) -> &CMatrix {
        self.effect.matrix()
    }

    pub fn gate_complexity(&self) -> usize {
        self.circuit.gate_complexity()
    }

    pub fn is_trivial(&self) -> bool {
        self.pattern.is_trivial()
    }

    pub fn expectation(&self, rho: &DensityMatrix) -> f64 {
        self.effect.expectation(rho)
    }

    /// The trivial test `Λ = I` on `system_wires` qubits.
    pub fn trivial(system_wires: usize) -> Self {
        let circuit = QuantumCircuit::empty(system_wires);
        let pattern = OutcomePattern::all_identity(system_wires);
        Self { circuit, pattern, effect: PovmEffect::identity(1 << system_wires) }
    }

    pub(crate) fn from_parts_unchecked(circuit: QuantumCircuit, pattern: OutcomePattern, matrix: CMatrix) -> Self {
        let op = HermitianOperator::new((&matrix + matrix.adjoint()) * c(0.5, 0.0), f64::INFINITY)
            .expect("square matrix");
        let effect = PovmEffect::new(op, f64::INFINITY).expect("bounds unchecked");
        Self { circuit, pattern, effect }
    }
}

pub fn effect_from_circuit(circuit: &QuantumCircuit, pattern: &OutcomePattern) -> Result<BoundedEffect> {
    if pattern.marks.len() != circuit.total_wires() {
        return Err(Error::DimMismatch(pattern.marks.len(), circuit.total_wires()));
    }
    let m = effect_matrix_from_isometry(&circuit.isometry(), pattern);
    check_effect_bounds(&m)?;
    Ok(BoundedEffect::from_parts_unchecked(circuit.clone(), pattern.clone(), m))
}

pub(crate) fn check_effect_bounds(m: &CMatrix) -> Result<()> {
    let e = herm_eig_unchecked(m);
    let max = e.values[0];
    let min = *e.values.last().unwrap();
    if min < -EFFECT_TOL || max > 1.0 + EFFECT_TOL {
        return Err(Error::EffectBound { min, max });
    }
    Ok(())
}

/// Gate budget `G` (None = unbounded) and the number of measurement outcomes `K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateBudget {
    pub gates: Option<usize>,
    pub outcomes: usize,
}

impl GateBudget {
    pub fn gates(g: usize) -> Self {
        Self { gates: Some(g), outcomes: 2 }
    }

    pub fn unbounded() -> Self {
        Self { gates: None, outcomes: 2 }
    }

    pub fn is_unbounded(&self) -> bool {
        self.gates.is_none()
    }
}

/// Precomposes a channel given by `pre` (its first `effect` system wires are the output,
/// the rest are traced) with a bounded effect: returns a witness for `Φ^dag[Λ]` built from
/// `C(Φ) + G` gates.
pub fn absorb_channel_into_effect(effect: &BoundedEffect, pre: &QuantumCircuit) -> Result<BoundedEffect> {
    let ne = effect.circuit.system_wires();
    let pre_total = pre.total_wires();
    if ne > pre_total {
        return Err(Error::DimMismatch(ne, pre_total));
    }
    let ea = effect.circuit.ancilla_wires();
    let total = pre_total + ea;
    let remap = |w: usize| if w < ne { w } else { pre_total + (w - ne) };
    let mut gates: Vec<TwoLocalGate> = Vec::with_capacity(pre.gates.len() + effect.circuit.gates.len());
    let lift = |g: &TwoLocalGate, f: &dyn Fn(usize) -> usize| -> Result<TwoLocalGate> {
        let moved = g.remap(f);
        if moved.targets.len() == 1 && total > 1 {
            TwoLocalGate::embed_single(&moved.unitary, moved.targets[0], total)
        } else {
            Ok(moved)
        }
    };
    for g in pre.gates() {
        gates.push(lift(g, &|w| w)?);
    }
    for g in effect.circuit.gates() {
        gates.push(lift(g, &remap)?);
    }
    let circuit = QuantumCircuit::new(pre.system_wires(), pre.ancilla_wires() + ea, gates)?;
    let mut marks = vec![Mark::Identity; total];
    for (w, &m) in effect.pattern.marks.iter().enumerate() {
        marks[remap(w)] = m;
    }
    effect_from_circuit(&circuit, &OutcomePattern::new(marks))
}

pub fn pauli(k: usize) -> CMatrix {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    match k {
        0 => CMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        1 => CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        2 => CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        3 => CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => panic!("pauli index {k}"),
    }
}

/// `exp(i Σ_k θ_k P_k)` over the non-identity Paulis on `qubits` (1 or 2) qubits
/// (3 or 15 real parameters).
pub fn param_unitary(theta: &[f64], qubits: usize) -> CMatrix {
    let d = 1usize << qubits;
    let mut h = CMatrix::zeros(d, d);
    for (k, &t) in theta.iter().enumerate() {
        let idx = k + 1;
        let p = if qubits == 1 { pauli(idx) } else { pauli(idx / 4).kronecker(&pauli(idx % 4)) };
        h += p * c(t, 0.0);
    }
    let e = herm_eig_unchecked(&h);
    let mut diag = e.vectors.clone();
    for (k, &v) in e.values.iter().enumerate() {
        let ph = c(v.cos(), v.sin());
        for r in 0..d {
            diag[(r, k)] *= ph;
        }
    }
    diag * e.vectors.adjoint()
}

pub fn param_count(qubits: usize) -> usize {
    (1usize << (2 * qubits)) - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::ket;

    fn x_gate() -> CMatrix {
        pauli(1)
    }

    #[test]
    fn empty_circuit_appends_ancillas() {
        let rho = DensityMatrix::basis(2, 1).unwrap();
        let h = NamedGate::H.unitary();
        let circ = QuantumCircuit::new(
            1,
            1,
            vec![TwoLocalGate::embed_single(&h, 1, 2).unwrap()],
        )
        .unwrap();
        let out = apply_circuit(&rho, &QuantumCircuit::empty(1)).unwrap();
        assert_eq!(out, rho.matrix().clone());
        let out = apply_circuit(&rho, &circ).unwrap();
        assert!((out[(2, 2)].re - 0.5).abs() < 1e-12 && (out[(3, 3)].re - 0.5).abs() < 1e-12);
    }

    #[test]
    fn x_then_proj0_is_one_projector() {
        let circ = QuantumCircuit::new(1, 0, vec![TwoLocalGate::new(vec![0], x_gate()).unwrap()]).unwrap();
        let e = effect_from_circuit(&circ, &OutcomePattern::new(vec![Mark::Proj0])).unwrap();
        assert!((e.matrix() - crate::tensor::projector(&ket(2, 1))).norm() < 1e-12);
        assert_eq!(e.gate_complexity(), 1);
    }

    #[test]
    fn ancillas_bounded_by_gates() {
        assert!(matches!(QuantumCircuit::new(1, 1, vec![]), Err(Error::TooManyAncillas { .. })));
    }

    #[test]
    fn rejects_non_unitary() {
        let m = CMatrix::identity(4, 4) * c(2.0, 0.0);
        assert!(matches!(TwoLocalGate::pair(0, 1, m), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn param_unitary_is_unitary() {
        let th: Vec<f64> = (0..15).map(|k| 0.1 * k as f64 - 0.4).collect();
        let u = param_unitary(&th, 2);
        assert!((u.adjoint() * &u - CMatrix::identity(4, 4)).norm() < 1e-12);
    }

    #[test]
    fn circuit_json_round_trip() {
        let circ = QuantumCircuit::new(
            2,
            0,
            vec![TwoLocalGate::pair(1, 0, NamedGate::Cnot.unitary()).unwrap()],
        )
        .unwrap();
        let s = serde_json::to_string(&circ.to_json()).unwrap();
        let back = QuantumCircuit::from_json(&serde_json::from_str(&s).unwrap()).unwrap();
        assert_eq!(back, circ);
    }
}
