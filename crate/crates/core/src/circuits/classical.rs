//! Reversible classical programs over {X, CNOT, Toffoli}, lowered to 2-local gates.

use std::collections::BTreeMap;

use super::enumerate::NamedGate;
use super::{QuantumCircuit, TwoLocalGate};
use crate::error::{Error, Result};
use crate::tensor::CMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassicalOp {
    X(usize),
    Cnot(usize, usize),
    Toffoli(usize, usize, usize),
}

impl ClassicalOp {
    fn wires(&self) -> Vec<usize> {
        match *self {
            ClassicalOp::X(a) => vec![a],
            ClassicalOp::Cnot(a, b) => vec![a, b],
            ClassicalOp::Toffoli(a, b, t) => vec![a, b, t],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClassicalProgram {
    pub wires: usize,
    pub ops: Vec<ClassicalOp>,
}

impl ClassicalProgram {
    pub fn new(wires: usize) -> Self {
        Self { wires, ops: Vec::new() }
    }

    pub fn run(&self, bits: &mut [bool]) {
        for op in &self.ops {
            match *op {
                ClassicalOp::X(a) => bits[a] = !bits[a],
                ClassicalOp::Cnot(a, b) => bits[b] ^= bits[a],
                ClassicalOp::Toffoli(a, b, t) => bits[t] ^= bits[a] && bits[b],
            }
        }
    }

    pub fn x(&mut self, a: usize) {
        self.ops.push(ClassicalOp::X(a));
    }

    pub fn cnot(&mut self, a: usize, b: usize) {
        self.ops.push(ClassicalOp::Cnot(a, b));
    }

    pub fn toffoli(&mut self, a: usize, b: usize, t: usize) {
        self.ops.push(ClassicalOp::Toffoli(a, b, t));
    }

    /// Multi-controlled X with a Toffoli ladder through `work` (needs `controls - 2` clean wires,
    /// returned clean).
    pub fn mcx(&mut self, controls: &[usize], target: usize, work: &[usize]) {
        match controls.len() {
            0 => self.x(target),
            1 => self.cnot(controls[0], target),
            2 => self.toffoli(controls[0], controls[1], target),
            k => {
                assert!(work.len() >= k - 2, "mcx needs {} work wires", k - 2);
                self.toffoli(controls[0], controls[1], work[0]);
                for i in 2..k - 1 {
                    self.toffoli(controls[i], work[i - 2], work[i - 1]);
                }
                self.toffoli(controls[k - 1], work[k - 3], target);
                for i in (2..k - 1).rev() {
                    self.toffoli(controls[i], work[i - 2], work[i - 1]);
                }
                self.toffoli(controls[0], controls[1], work[0]);
            }
        }
    }

    /// Removes pairs of X gates that are adjacent on their wire.
    pub fn cancel_adjacent_x(&mut self) {
        let mut kept: Vec<Option<ClassicalOp>> = Vec::with_capacity(self.ops.len());
        let mut last: Vec<Vec<usize>> = vec![Vec::new(); self.wires];
        for &op in &self.ops {
            if let ClassicalOp::X(a) = op {
                if let Some(&j) = last[a].last() {
                    if kept[j] == Some(ClassicalOp::X(a)) {
                        kept[j] = None;
                        last[a].pop();
                        continue;
                    }
                }
            }
            let idx = kept.len();
            kept.push(Some(op));
            for w in op.wires() {
                last[w].push(idx);
            }
        }
        self.ops = kept.into_iter().flatten().collect();
    }

    /// Lowers to 2-local gates: each Toffoli becomes 6 CNOTs and 9 single-qubit gates, then a
    /// gate is merged into the last gate on its support whenever the union spans at most two wires.
    pub fn lower(&self) -> Vec<TwoLocalGate> {
        let mut raw: Vec<(Vec<usize>, CMatrix)> = Vec::new();
        let one = |g: NamedGate, a: usize| (vec![a], g.unitary());
        let cx = |a: usize, b: usize| (vec![a, b], NamedGate::Cnot.unitary());
        for op in &self.ops {
            match *op {
                ClassicalOp::X(a) => raw.push(one(NamedGate::X, a)),
                ClassicalOp::Cnot(a, b) => raw.push(cx(a, b)),
                ClassicalOp::Toffoli(a, b, t) => {
                    use NamedGate::*;
                    raw.extend([
                        one(H, t),
                        cx(b, t),
                        one(Tdg, t),
                        cx(a, t),
                        one(T, t),
                        cx(b, t),
                        one(Tdg, t),
                        cx(a, t),
                        one(T, b),
                        one(T, t),
                        one(H, t),
                        cx(a, b),
                        one(T, a),
                        one(Tdg, b),
                        cx(a, b),
                    ]);
                }
            }
        }
        merge_local(raw, self.wires)
    }

    pub fn to_circuit(&self, system_wires: usize) -> Result<QuantumCircuit> {
        if system_wires > self.wires {
            return Err(Error::InvalidArgument("more system wires than program wires".into()));
        }
        QuantumCircuit::new(system_wires, self.wires - system_wires, self.lower())
    }
}

fn embed_on(wires: &[usize], u: &CMatrix, union: &[usize]) -> CMatrix {
    let id2 = CMatrix::identity(2, 2);
    match (wires.len(), union.len()) {
        (1, 1) => u.clone(),
        (1, 2) => {
            if wires[0] == union[0] {
                u.kronecker(&id2)
            } else {
                id2.kronecker(u)
            }
        }
        (2, 2) => {
            if wires[0] == union[0] {
                u.clone()
            } else {
                let s = NamedGate::Swap.unitary();
                &s * u * &s
            }
        }
        _ => unreachable!(),
    }
}

fn merge_local(raw: Vec<(Vec<usize>, CMatrix)>, wires: usize) -> Vec<TwoLocalGate> {
    let mut out: Vec<Option<(Vec<usize>, CMatrix)>> = Vec::new();
    let mut last: Vec<Option<usize>> = vec![None; wires];
    for (sup, u) in raw {
        let prev: Vec<Option<usize>> = sup.iter().map(|&w| last[w]).collect();
        let target = prev[0].filter(|&h| prev.iter().all(|&p| p == Some(h)));
        if let Some(h) = target {
            let (hs, hu) = out[h].as_ref().unwrap();
            let mut union = hs.clone();
            for &w in &sup {
                if !union.contains(&w) {
                    union.push(w);
                }
            }
            if union.len() <= 2 {
                let merged = embed_on(&sup, &u, &union) * embed_on(hs, hu, &union);
                out[h] = Some((union, merged));
                continue;
            }
        }
        let idx = out.len();
        out.push(Some((sup.clone(), u)));
        for &w in &sup {
            last[w] = Some(idx);
        }
    }
    out.into_iter()
        .flatten()
        .map(|(sup, u)| {
            if sup.len() == 1 {
                TwoLocalGate::embed_single(&u, sup[0], wires).expect("unitary")
            } else {
                TwoLocalGate::pair(sup[0], sup[1], u).expect("unitary")
            }
        })
        .collect()
}

/// A total function from `k`-bit inputs to `v`-bit outputs, stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct LookupTable {
    pub k: usize,
    pub v: usize,
    pub values: Vec<u64>,
}

impl LookupTable {
    pub fn new(k: usize, v: usize, values: Vec<u64>) -> Result<Self> {
        if k > 20 {
            return Err(Error::InvalidArgument(format!("k = {k} exceeds 20 input bits")));
        }
        if v == 0 || v > 63 {
            return Err(Error::InvalidArgument(format!("output width {v} outside 1..=63")));
        }
        if values.len() != 1 << k {
            return Err(Error::TableNotTotal(format!("{} entries for {} inputs", values.len(), 1u64 << k)));
        }
        if let Some((x, &y)) = values.iter().enumerate().find(|(_, &y)| y >> v != 0) {
            return Err(Error::TableNotTotal(format!("f({x}) = {y} does not fit in {v} bits")));
        }
        Ok(Self { k, v, values })
    }

    pub fn from_map(k: usize, v: usize, map: &BTreeMap<u64, u64>) -> Result<Self> {
        let mut values = Vec::with_capacity(1 << k);
        for x in 0..(1u64 << k) {
            values.push(*map.get(&x).ok_or_else(|| Error::TableNotTotal(format!("missing input {x}")))?);
        }
        Self::new(k, v, values)
    }

    /// Work wires needed by [`ClassicalProgram::lookup`].
    pub fn work_wires(&self) -> usize {
        let needs_flag = self.values.iter().any(|y| y.count_ones() > 1);
        let ladder = self.k.saturating_sub(2);
        ladder + usize::from(needs_flag)
    }
}

impl ClassicalProgram {
    /// XORs `f(x)` into `outputs` (bit j of the value onto `outputs[j]`); `inputs[0]` is the most
    /// significant input bit. `work` supplies the flag (first) and ladder wires, all clean.
    pub fn lookup(&mut self, table: &LookupTable, inputs: &[usize], outputs: &[usize], work: &[usize]) {
        let k = table.k;
        let needs_flag = table.values.iter().any(|y| y.count_ones() > 1);
        let (flag, ladder) = if needs_flag { (Some(work[0]), &work[1..]) } else { (None, work) };
        for (x, &y) in table.values.iter().enumerate() {
            if y == 0 {
                continue;
            }
            let zeros: Vec<usize> = (0..k).filter(|&i| (x >> (k - 1 - i)) & 1 == 0).map(|i| inputs[i]).collect();
            for &w in &zeros {
                self.x(w);
            }
            let ones: Vec<usize> = (0..table.v).filter(|&j| (y >> j) & 1 == 1).map(|j| outputs[j]).collect();
            if ones.len() == 1 {
                self.mcx(inputs, ones[0], ladder);
            } else {
                let f = flag.expect("flag wire");
                self.mcx(inputs, f, ladder);
                for &o in &ones {
                    self.cnot(f, o);
                }
                self.mcx(inputs, f, ladder);
            }
            for &w in &zeros {
                self.x(w);
            }
        }
    }

    /// Ripple-carry addition `b <- a + b mod 2^n` (MAJ/UMA chain); registers LSB first,
    /// `carry` clean and returned clean.
    pub fn add_into(&mut self, a: &[usize], b: &[usize], carry: usize) {
        let n = a.len();
        assert_eq!(n, b.len());
        if n == 0 {
            return;
        }
        let maj = |p: &mut Self, c: usize, b: usize, a: usize| {
            p.cnot(a, b);
            p.cnot(a, c);
            p.toffoli(c, b, a);
        };
        let uma = |p: &mut Self, c: usize, b: usize, a: usize| {
            p.toffoli(c, b, a);
            p.cnot(a, c);
            p.cnot(c, b);
        };
        maj(self, carry, b[0], a[0]);
        for i in 1..n {
            maj(self, a[i - 1], b[i], a[i]);
        }
        for i in (1..n).rev() {
            uma(self, a[i - 1], b[i], a[i]);
        }
        uma(self, carry, b[0], a[0]);
    }

    /// Toggles the bits of `value` (two's complement, LSB first) onto a clean or loaded register.
    pub fn load_constant(&mut self, reg: &[usize], value: i128) {
        let n = reg.len();
        let mask: i128 = if n >= 127 { -1 } else { (1i128 << n) - 1 };
        let bits = value & mask;
        for (j, &w) in reg.iter().enumerate() {
            if (bits >> j) & 1 == 1 {
                self.x(w);
            }
        }
    }

    /// Sets `out ^= [lo <= v <= hi]` for the two's-complement value `v` in `acc` (LSB first),
    /// leaving `acc` and `konst` as found; `f1`, `f2` keep the two comparison bits. Assumes
    /// `v - lo` and `v - hi - 1` stay in range of `acc`.
    #[allow(clippy::too_many_arguments)]
    pub fn range_check(
        &mut self,
        acc: &[usize],
        konst: &[usize],
        carry: usize,
        lo: i128,
        hi: i128,
        f1: usize,
        f2: usize,
        out: usize,
    ) {
        let sign = *acc.last().unwrap();
        // v - lo < 0  <=>  sign set; f1 = [v >= lo]
        self.load_constant(konst, -lo);
        self.add_into(konst, acc, carry);
        self.cnot(sign, f1);
        self.x(f1);
        self.load_constant(konst, -lo);
        self.load_constant(konst, lo);
        self.add_into(konst, acc, carry);
        self.load_constant(konst, lo);
        // v - hi - 1 < 0  <=>  v <= hi
        self.load_constant(konst, -(hi + 1));
        self.add_into(konst, acc, carry);
        self.cnot(sign, f2);
        self.load_constant(konst, -(hi + 1));
        self.load_constant(konst, hi + 1);
        self.add_into(konst, acc, carry);
        self.load_constant(konst, hi + 1);
        self.toffoli(f1, f2, out);
    }
}

/// Compiles `|x>|0> -> |x>|f(x)>`. System wires are the `k` inputs (wire 0 = most significant
/// input bit) followed by the `v` outputs (most significant first); work wires are ancillas.
pub fn compile_lookup_function(table: &LookupTable) -> Result<QuantumCircuit> {
    let (prog, system) = lookup_program(table);
    prog.to_circuit(system)
}

/// The classical program behind [`compile_lookup_function`] and its number of system wires.
pub fn lookup_program(table: &LookupTable) -> (ClassicalProgram, usize) {
    let (k, v) = (table.k, table.v);
    let work = table.work_wires();
    let mut prog = ClassicalProgram::new(k + v + work);
    let inputs: Vec<usize> = (0..k).collect();
    let outputs: Vec<usize> = (0..v).map(|j| k + v - 1 - j).collect();
    let work_w: Vec<usize> = (k + v..k + v + work).collect();
    prog.lookup(table, &inputs, &outputs, &work_w);
    prog.cancel_adjacent_x();
    (prog, k + v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits_of(x: u64, n: usize) -> Vec<bool> {
        (0..n).map(|i| (x >> (n - 1 - i)) & 1 == 1).collect()
    }

    #[test]
    fn identity_table_is_one_cnot() {
        let t = LookupTable::new(1, 1, vec![0, 1]).unwrap();
        let c = compile_lookup_function(&t).unwrap();
        assert_eq!(c.gate_complexity(), 1);
        assert_eq!(c.ancilla_wires(), 0);
    }

    #[test]
    fn adder_adds() {
        let n = 4;
        for a in 0..16i64 {
            for b in 0..16i64 {
                let mut p = ClassicalProgram::new(2 * n + 1);
                let ar: Vec<usize> = (0..n).collect();
                let br: Vec<usize> = (n..2 * n).collect();
                p.add_into(&ar, &br, 2 * n);
                let mut bits = vec![false; 2 * n + 1];
                for j in 0..n {
                    bits[j] = (a >> j) & 1 == 1;
                    bits[n + j] = (b >> j) & 1 == 1;
                }
                p.run(&mut bits);
                let s: i64 = (0..n).map(|j| (bits[n + j] as i64) << j).sum();
                assert_eq!(s, (a + b) % 16);
                assert!(!bits[2 * n]);
                let a2: i64 = (0..n).map(|j| (bits[j] as i64) << j).sum();
                assert_eq!(a2, a);
            }
        }
    }

    #[test]
    fn range_check_matches_comparison() {
        let n = 6;
        for v in -20i128..20 {
            let mut p = ClassicalProgram::new(2 * n + 4);
            let acc: Vec<usize> = (0..n).collect();
            let k: Vec<usize> = (n..2 * n).collect();
            p.range_check(&acc, &k, 2 * n, -3, 7, 2 * n + 1, 2 * n + 2, 2 * n + 3);
            let mut bits = vec![false; 2 * n + 4];
            for j in 0..n {
                bits[j] = (v >> j) & 1 == 1;
            }
            p.run(&mut bits);
            assert_eq!(bits[2 * n + 3], (-3..=7).contains(&v), "v = {v}");
            let back: i128 = (0..n).map(|j| (bits[j] as i128) << j).sum();
            assert_eq!(back, v & 63);
            assert!(bits[n..2 * n + 1].iter().all(|b| !b));
        }
    }

    #[test]
    fn classical_lookup_matches_table() {
        let t = LookupTable::new(3, 2, vec![3, 0, 1, 2, 3, 3, 0, 1]).unwrap();
        let (p, sys) = lookup_program(&t);
        for x in 0..8u64 {
            let mut bits = vec![false; p.wires];
            bits[..3].copy_from_slice(&bits_of(x, 3));
            p.run(&mut bits);
            let y = (bits[3] as u64) << 1 | bits[4] as u64;
            assert_eq!(y, t.values[x as usize]);
            assert!(bits[sys..].iter().all(|b| !b));
        }
    }
}
