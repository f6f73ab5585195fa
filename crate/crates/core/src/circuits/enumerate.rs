//! Exhaustive enumeration of bounded effects over a finite gate set.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use super::{effect_matrix_from_isometry, BoundedEffect, OutcomePattern, QuantumCircuit, TwoLocalGate};
use crate::error::{Error, Result};
use crate::tensor::{c, CMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NamedGate {
    H,
    S,
    Sdg,
    T,
    Tdg,
    X,
    Z,
    Cnot,
    Swap,
}

impl NamedGate {
    pub fn arity(self) -> usize {
        match self {
            NamedGate::Cnot | NamedGate::Swap => 2,
            _ => 1,
        }
    }

    pub fn unitary(self) -> CMatrix {
        let z = c(0.0, 0.0);
        let o = c(1.0, 0.0);
        let r = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let t = c(std::f64::consts::FRAC_PI_4.cos(), std::f64::consts::FRAC_PI_4.sin());
        match self {
            NamedGate::H => CMatrix::from_row_slice(2, 2, &[r, r, r, -r]),
            NamedGate::S => CMatrix::from_row_slice(2, 2, &[o, z, z, c(0.0, 1.0)]),
            NamedGate::Sdg => CMatrix::from_row_slice(2, 2, &[o, z, z, c(0.0, -1.0)]),
            NamedGate::T => CMatrix::from_row_slice(2, 2, &[o, z, z, t]),
            NamedGate::Tdg => CMatrix::from_row_slice(2, 2, &[o, z, z, t.conj()]),
            NamedGate::X => CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
            NamedGate::Z => CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
            NamedGate::Cnot => CMatrix::from_row_slice(
                4,
                4,
                &[o, z, z, z, z, o, z, z, z, z, z, o, z, z, o, z],
            ),
            NamedGate::Swap => CMatrix::from_row_slice(
                4,
                4,
                &[o, z, z, z, z, z, o, z, z, o, z, z, z, z, z, o],
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GateSet {
    pub id: String,
    pub gates: Vec<NamedGate>,
}

impl GateSet {
    /// `{H, S, T, CNOT}`.
    pub fn clifford_t() -> Self {
        Self { id: "clifford_t".into(), gates: vec![NamedGate::H, NamedGate::S, NamedGate::T, NamedGate::Cnot] }
    }

    pub fn custom(gates: Vec<NamedGate>) -> Self {
        let id = gates.iter().map(|g| format!("{g:?}")).collect::<Vec<_>>().join("+");
        Self { id, gates }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "clifford_t" => Ok(Self::clifford_t()),
            "parameterized" => Err(Error::Unsupported("the parameterized gate set cannot be enumerated".into())),
            other => Err(Error::InvalidArgument(format!("unknown gate set id {other}"))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Placement {
    gate: NamedGate,
    wires: [usize; 2],
}

fn placements(gs: &GateSet, wires: usize) -> Vec<Placement> {
    let mut out = Vec::new();
    for &g in &gs.gates {
        if g.arity() == 1 {
            for w in 0..wires {
                out.push(Placement { gate: g, wires: [w, w] });
            }
        } else {
            for a in 0..wires {
                for b in 0..wires {
                    if a != b {
                        out.push(Placement { gate: g, wires: [a, b] });
                    }
                }
            }
        }
    }
    out
}

/// Upper bound on the number of effects the stream can produce.
pub fn enumeration_size(system_wires: usize, ancilla_wires: usize, g: usize, gs: &GateSet) -> f64 {
    let n = system_wires + ancilla_wires;
    let p = placements(gs, n).len() as f64;
    let circuits: f64 = (0..=g).map(|l| p.powi(l as i32)).sum();
    circuits * 2f64.powi(n as i32)
}

/// Every circuit of at most `g` gates from `gs`, over all placements on the system wires plus up to
/// `ancilla_wires` ancillas, each paired with every outcome pattern. Ancillas that a sequence never
/// touches are dropped and the touched ones relabelled in order; sequences touching more ancillas than
/// they have gates are skipped. Circuits come in odometer order (length first, then placement index,
/// last gate fastest); patterns in mask order.
pub fn enumerate_bounded_effects(
    system_wires: usize,
    ancilla_wires: usize,
    g: usize,
    gs: &GateSet,
    cap: f64,
) -> Result<EffectStream> {
    let size = enumeration_size(system_wires, ancilla_wires, g, gs);
    if size > cap {
        return Err(Error::EnumerationTooLarge { count: size, cap });
    }
    Ok(EffectStream {
        system_wires,
        placements: placements(gs, system_wires + ancilla_wires),
        max_len: g,
        seq: Vec::new(),
        started: false,
        buffer: Vec::new(),
    })
}

pub struct EffectStream {
    system_wires: usize,
    placements: Vec<Placement>,
    max_len: usize,
    seq: Vec<usize>,
    started: bool,
    buffer: Vec<BoundedEffect>,
}

impl EffectStream {
    fn advance(&mut self) -> bool {
        if !self.started {
            self.started = true;
            return true;
        }
        let p = self.placements.len();
        if p == 0 {
            return false;
        }
        for k in (0..self.seq.len()).rev() {
            self.seq[k] += 1;
            if self.seq[k] < p {
                return true;
            }
            self.seq[k] = 0;
        }
        if self.seq.len() < self.max_len {
            self.seq = vec![0; self.seq.len() + 1];
            return true;
        }
        false
    }

    fn build_current(&self) -> Option<QuantumCircuit> {
        let n = self.system_wires;
        let mut touched: Vec<usize> = Vec::new();
        for &i in &self.seq {
            let pl = self.placements[i];
            for &w in &pl.wires[..pl.gate.arity()] {
                if w >= n && !touched.contains(&w) {
                    touched.push(w);
                }
            }
        }
        if touched.len() > self.seq.len() {
            return None;
        }
        touched.sort_unstable();
        let total = n + touched.len();
        let relabel = |w: usize| if w < n { w } else { n + touched.iter().position(|&t| t == w).unwrap() };
        let gates = self
            .seq
            .iter()
            .map(|&i| {
                let pl = self.placements[i];
                let u = pl.gate.unitary();
                if pl.gate.arity() == 1 {
                    TwoLocalGate::embed_single(&u, relabel(pl.wires[0]), total)
                } else {
                    TwoLocalGate::pair(relabel(pl.wires[0]), relabel(pl.wires[1]), u)
                }
            })
            .collect::<Result<Vec<_>>>()
            .ok()?;
        QuantumCircuit::new(n, touched.len(), gates).ok()
    }
}

impl Iterator for EffectStream {
    type Item = BoundedEffect;

    fn next(&mut self) -> Option<BoundedEffect> {
        loop {
            if let Some(e) = self.buffer.pop() {
                return Some(e);
            }
            if !self.advance() {
                return None;
            }
            let Some(circ) = self.build_current() else { continue };
            let iso = circ.isometry();
            let total = circ.total_wires();
            let mut effects: Vec<BoundedEffect> = (0..1u64 << total)
                .map(|mask| {
                    let pat = OutcomePattern::from_mask(total, mask);
                    let m = effect_matrix_from_isometry(&iso, &pat);
                    BoundedEffect::from_parts_unchecked(circ.clone(), pat, m)
                })
                .collect();
            effects.reverse();
            self.buffer = effects;
        }
    }
}

type CatalogKey = (usize, usize, usize, GateSet);

/// Enumerated effects, memoized per `(system, ancilla, G, gate set)`.
pub fn exhaustive_catalog(system_wires: usize, ancilla_wires: usize, g: usize, gs: &GateSet, cap: f64) -> Result<Arc<Vec<BoundedEffect>>> {
    static CACHE: OnceLock<Mutex<HashMap<CatalogKey, Arc<Vec<BoundedEffect>>>>> = OnceLock::new();
    let key = (system_wires, ancilla_wires, g, gs.clone());
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let effects: Vec<BoundedEffect> = enumerate_bounded_effects(system_wires, ancilla_wires, g, gs, cap)?.collect();
    let arc = Arc::new(effects);
    cache.lock().unwrap().insert(key, arc.clone());
    Ok(arc)
}
