//! Uniform Clifford sampling by symplectic sweeping.
//!
//! For qubit k = 0..n-1 an anticommuting Pauli pair (P, Q) on qubits k..n-1 is drawn uniformly;
//! a Clifford C_k with C_k X_k C_k^dag = P and C_k Z_k C_k^dag = Q is synthesized. The product
//! C_0 C_1 ... C_{n-1} followed by a uniform Pauli is a uniform Clifford.

use rand::Rng;

use super::enumerate::NamedGate;
use super::{QuantumCircuit, TwoLocalGate};
use crate::error::{Error, Result};
use crate::random::rng;

#[derive(Clone, Debug, PartialEq, Eq)]
struct PauliBits {
    x: Vec<bool>,
    z: Vec<bool>,
}

impl PauliBits {
    fn anticommutes(&self, other: &PauliBits) -> bool {
        let s = (0..self.x.len()).filter(|&i| (self.x[i] && other.z[i]) ^ (self.z[i] && other.x[i])).count();
        s % 2 == 1
    }

    fn is_identity(&self) -> bool {
        self.x.iter().chain(&self.z).all(|b| !b)
    }

    fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self { x: (0..n).map(|_| rng.random()).collect(), z: (0..n).map(|_| rng.random()).collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum CliffOp {
    H(usize),
    S(usize),
    Sdg(usize),
    Cnot(usize, usize),
    Swap(usize, usize),
}

impl CliffOp {
    fn conjugate(&self, p: &mut PauliBits) {
        match *self {
            CliffOp::H(q) => std::mem::swap(&mut p.x[q], &mut p.z[q]),
            CliffOp::S(q) | CliffOp::Sdg(q) => p.z[q] ^= p.x[q],
            CliffOp::Cnot(c, t) => {
                p.x[t] ^= p.x[c];
                p.z[c] ^= p.z[t];
            }
            CliffOp::Swap(a, b) => {
                p.x.swap(a, b);
                p.z.swap(a, b);
            }
        }
    }

    fn dagger(self) -> Self {
        match self {
            CliffOp::S(q) => CliffOp::Sdg(q),
            CliffOp::Sdg(q) => CliffOp::S(q),
            other => other,
        }
    }
}

/// Gates `V` (time order) with `V P V^dag = X_k`, `V Q V^dag = Z_k` up to sign.
fn reduce_pair(mut p: PauliBits, mut q: PauliBits, k: usize) -> Vec<CliffOp> {
    let n = p.x.len();
    let mut ops = Vec::new();
    let push = |op: CliffOp, p: &mut PauliBits, q: &mut PauliBits, ops: &mut Vec<CliffOp>| {
        op.conjugate(p);
        op.conjugate(q);
        ops.push(op);
    };
    for j in k..n {
        if p.z[j] {
            let op = if p.x[j] { CliffOp::S(j) } else { CliffOp::H(j) };
            push(op, &mut p, &mut q, &mut ops);
        }
    }
    let pivot = (k..n).find(|&j| p.x[j]).expect("non-identity Pauli");
    for j in k..n {
        if j != pivot && p.x[j] {
            push(CliffOp::Cnot(pivot, j), &mut p, &mut q, &mut ops);
        }
    }
    if pivot != k {
        push(CliffOp::Swap(pivot, k), &mut p, &mut q, &mut ops);
    }
    push(CliffOp::H(k), &mut p, &mut q, &mut ops);
    for j in k + 1..n {
        if q.z[j] {
            let op = if q.x[j] { CliffOp::S(j) } else { CliffOp::H(j) };
            push(op, &mut p, &mut q, &mut ops);
        }
    }
    for j in k + 1..n {
        if q.x[j] {
            push(CliffOp::Cnot(k, j), &mut p, &mut q, &mut ops);
        }
    }
    if q.z[k] {
        push(CliffOp::S(k), &mut p, &mut q, &mut ops);
    }
    push(CliffOp::H(k), &mut p, &mut q, &mut ops);
    debug_assert!(p.x[k] && !p.z[k] && q.z[k] && !q.x[k]);
    ops
}

/// A uniformly random `wires`-qubit Clifford as a 2-local gate sequence, deterministic in `seed`.
pub fn random_clifford(wires: usize, seed: u64) -> Result<QuantumCircuit> {
    if wires == 0 || wires > 10 {
        return Err(Error::InvalidArgument(format!("random_clifford supports 1..=10 wires, got {wires}")));
    }
    let mut r = rng(seed);
    let n = wires;
    let mut blocks: Vec<Vec<CliffOp>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut p;
        loop {
            p = PauliBits::random(n, &mut r);
            (0..k).for_each(|i| {
                p.x[i] = false;
                p.z[i] = false;
            });
            if !p.is_identity() {
                break;
            }
        }
        let mut q;
        loop {
            q = PauliBits::random(n, &mut r);
            (0..k).for_each(|i| {
                q.x[i] = false;
                q.z[i] = false;
            });
            if q.anticommutes(&p) {
                break;
            }
        }
        let v = reduce_pair(p, q, k);
        blocks.push(v.into_iter().rev().map(CliffOp::dagger).collect());
    }
    let mut ops: Vec<CliffOp> = Vec::new();
    for block in blocks.into_iter().rev() {
        ops.extend(block);
    }
    let mut gates: Vec<TwoLocalGate> = Vec::new();
    let single = |g: NamedGate, q: usize| TwoLocalGate::embed_single(&g.unitary(), q, n);
    for op in ops {
        gates.push(match op {
            CliffOp::H(q) => single(NamedGate::H, q)?,
            CliffOp::S(q) => single(NamedGate::S, q)?,
            CliffOp::Sdg(q) => single(NamedGate::Sdg, q)?,
            CliffOp::Cnot(a, b) => TwoLocalGate::pair(a, b, NamedGate::Cnot.unitary())?,
            CliffOp::Swap(a, b) => TwoLocalGate::pair(a, b, NamedGate::Swap.unitary())?,
        });
    }
    for q in 0..n {
        match r.random_range(0..4u8) {
            1 => gates.push(single(NamedGate::X, q)?),
            2 => {
                gates.push(single(NamedGate::X, q)?);
                gates.push(single(NamedGate::Z, q)?);
            }
            3 => gates.push(single(NamedGate::Z, q)?),
            _ => {}
        }
    }
    QuantumCircuit::new(n, 0, gates)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_hits_target() {
        let p = PauliBits { x: vec![true, true, false], z: vec![false, true, true] };
        let q = PauliBits { x: vec![false, false, false], z: vec![true, false, true] };
        assert!(p.anticommutes(&q));
        let ops = reduce_pair(p.clone(), q.clone(), 0);
        let (mut pp, mut qq) = (p, q);
        for op in &ops {
            op.conjugate(&mut pp);
            op.conjugate(&mut qq);
        }
        assert_eq!(pp, PauliBits { x: vec![true, false, false], z: vec![false; 3] });
        assert_eq!(qq, PauliBits { x: vec![false; 3], z: vec![true, false, false] });
    }

    #[test]
    fn deterministic_in_seed() {
        assert_eq!(random_clifford(3, 7).unwrap(), random_clifford(3, 7).unwrap());
    }
}
