//! Toy constructions separating bounded from unbounded distinguishers: hardcore-bit state pairs
//! built from small one-to-one functions, their advantage tables, the Haar-ensemble k-copy
//! experiment, and the SWAP-test catalysis demonstration.
//!
//! Nothing here is hard at the sizes we can run. The functions are structural stand-ins and
//! every table says so.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounded::swap_test;
use crate::circuits::{ClassicalProgram, NamedGate, QuantumCircuit, TwoLocalGate};
use crate::error::{Error, Result};
use crate::random::{haar_vector, rng, split_seed};
use crate::tensor::{c, trace_norm_herm, CMatrix, DensityMatrix, C64};

pub const BANNER: &str = "toy-scale, no hardness claim";
pub const MAX_GL_BITS: usize = 24;
const MODEXP_PRIME_LIMIT: u64 = 1 << 24;
const EXACT_SUPPORT_LIMIT: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OwfKind {
    ModExp { g: u64, p: u64 },
    Permutation { seed: u64 },
    Table,
}

/// A small function on `n_bits`-bit strings given by its full forward table.
#[derive(Clone, Debug)]
pub struct ToyOwf {
    pub name: String,
    pub kind: OwfKind,
    pub n_bits: usize,
    pub out_bits: usize,
    forward: Vec<u32>,
    inverse: Option<HashMap<u32, u32>>,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1u64;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

fn primitive_root(p: u64) -> u64 {
    let fs = prime_factors(p - 1);
    (2..p).find(|&g| fs.iter().all(|&q| pow_mod(g, (p - 1) / q, p) != 1)).expect("prime modulus has a generator")
}

fn bit_width(v: u64) -> usize {
    (64 - v.leading_zeros() as usize).max(1)
}

impl ToyOwf {
    fn check_bits(n_bits: usize) -> Result<()> {
        if n_bits == 0 || n_bits > MAX_GL_BITS {
            return Err(Error::DimensionLimit { dim: n_bits, limit: MAX_GL_BITS });
        }
        Ok(())
    }

    /// `x -> g^x mod p` with `p` the smallest prime above `2^n` and `g` its least generator, so
    /// the exponent range `[0, 2^n)` sits inside one period.
    pub fn modexp(n_bits: usize) -> Result<Self> {
        Self::check_bits(n_bits)?;
        let mut p = (1u64 << n_bits) + 1;
        while !is_prime(p) {
            p += 1;
        }
        if p > MODEXP_PRIME_LIMIT {
            return Err(Error::InvalidArgument(format!("modulus {p} above 2^24 for n = {n_bits}")));
        }
        let g = primitive_root(p);
        Self::modexp_with(n_bits, g, p)
    }

    pub fn modexp_with(n_bits: usize, g: u64, p: u64) -> Result<Self> {
        Self::check_bits(n_bits)?;
        if !is_prime(p) || p > MODEXP_PRIME_LIMIT || g % p == 0 {
            return Err(Error::InvalidArgument(format!("bad modexp parameters g = {g}, p = {p}")));
        }
        let mut forward = Vec::with_capacity(1 << n_bits);
        let mut y = 1u64;
        for _ in 0..(1u64 << n_bits) {
            forward.push(y as u32);
            y = y * g % p;
        }
        Ok(Self {
            name: format!("modexp(g={g},p={p})"),
            kind: OwfKind::ModExp { g, p },
            n_bits,
            out_bits: bit_width(p - 1),
            forward,
            inverse: None,
        })
    }

    /// A seeded uniformly random permutation of `{0,1}^n`.
    pub fn permutation(n_bits: usize, seed: u64) -> Result<Self> {
        Self::check_bits(n_bits)?;
        let mut forward: Vec<u32> = (0..(1u32 << n_bits)).collect();
        forward.shuffle(&mut rng(seed));
        Ok(Self {
            name: format!("perm(seed={seed})"),
            kind: OwfKind::Permutation { seed },
            n_bits,
            out_bits: n_bits,
            forward,
            inverse: None,
        })
    }

    /// Arbitrary table; need not be one-to-one.
    pub fn from_table(name: &str, n_bits: usize, out_bits: usize, table: Vec<u32>) -> Result<Self> {
        Self::check_bits(n_bits)?;
        if table.len() != 1 << n_bits {
            return Err(Error::DimMismatch(table.len(), 1 << n_bits));
        }
        if out_bits == 0 || out_bits > 32 || table.iter().any(|&y| out_bits < 32 && (y >> out_bits) != 0) {
            return Err(Error::InvalidArgument(format!("table values exceed {out_bits} output bits")));
        }
        Ok(Self { name: name.into(), kind: OwfKind::Table, n_bits, out_bits, forward: table, inverse: None })
    }

    /// Attaches the lookup inverse used by the inverter-assisted test.
    pub fn with_inverse_oracle(mut self) -> Self {
        let mut inv = HashMap::with_capacity(self.forward.len());
        for (x, &y) in self.forward.iter().enumerate() {
            inv.entry(y).or_insert(x as u32);
        }
        self.inverse = Some(inv);
        self
    }

    pub fn has_inverse_oracle(&self) -> bool {
        self.inverse.is_some()
    }

    pub fn eval(&self, x: u64) -> u64 {
        self.forward[x as usize] as u64
    }

    pub fn invert(&self, y: u64) -> Option<u64> {
        self.inverse.as_ref()?.get(&(y as u32)).map(|&x| x as u64)
    }

    /// Exhaustive injectivity check.
    pub fn is_one_to_one(&self) -> bool {
        let mut ys = self.forward.clone();
        ys.sort_unstable();
        ys.windows(2).all(|w| w[0] != w[1])
    }
}

/// Inner product of the two halves of `x` mod 2 (high half is `x0`).
pub fn gl_predicate(x: u64, n_bits: usize) -> bool {
    let h = n_bits / 2;
    let mask = (1u64 << h) - 1;
    ((x >> h) & x & mask).count_ones() % 2 == 1
}

/// `|F_n| = 2^{n-1} - 2^{n/2-1}`.
pub fn gl_f_size(n_bits: usize) -> u64 {
    (1u64 << (n_bits - 1)) - (1u64 << (n_bits / 2 - 1))
}

/// A diagonal state stored as sorted `(string, mass)` pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseDiagonal {
    pub bits: usize,
    pub entries: Vec<(u64, f64)>,
}

impl SparseDiagonal {
    fn from_strings(bits: usize, mut strings: Vec<u64>) -> Self {
        let w = 1.0 / strings.len() as f64;
        strings.sort_unstable();
        let mut entries: Vec<(u64, f64)> = Vec::with_capacity(strings.len());
        for s in strings {
            match entries.last_mut() {
                Some((t, m)) if *t == s => *m += w,
                _ => entries.push((s, w)),
            }
        }
        Self { bits, entries }
    }

    pub fn support(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn mass(&self, s: u64) -> f64 {
        self.entries.binary_search_by_key(&s, |e| e.0).map(|i| self.entries[i].1).unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn expectation(&self, accept: impl Fn(u64) -> bool) -> f64 {
        self.entries.iter().filter(|e| accept(e.0)).map(|e| e.1).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, r: &mut R) -> u64 {
        let mut u: f64 = r.random();
        for &(s, m) in &self.entries {
            if u < m {
                return s;
            }
            u -= m;
        }
        self.entries.last().expect("non-empty support").0
    }

    /// Dense form; only for small registers.
    pub fn to_density(&self) -> Result<DensityMatrix> {
        if self.bits > 12 {
            return Err(Error::DimensionLimit { dim: 1 << self.bits, limit: 1 << 12 });
        }
        let mut p = vec![0.0; 1 << self.bits];
        for &(s, m) in &self.entries {
            p[s as usize] += m;
        }
        DensityMatrix::diagonal(&p)
    }
}

#[derive(Clone, Debug)]
pub struct GlStatePair {
    pub owf: ToyOwf,
    pub rho: SparseDiagonal,
    pub sigma: SparseDiagonal,
    pub f_size: u64,
    swapped: bool,
}

impl GlStatePair {
    /// The same pair with the roles of the two states exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            owf: self.owf.clone(),
            rho: self.sigma.clone(),
            sigma: self.rho.clone(),
            f_size: (1u64 << self.owf.n_bits) - self.f_size,
            swapped: !self.swapped,
        }
    }

    /// Whether `x` is a preimage class of `rho` (accounting for a swap).
    fn in_rho_class(&self, x: u64) -> bool {
        gl_predicate(x, self.owf.n_bits) != self.swapped
    }

    fn uniform_sample<R: Rng + ?Sized>(&self, r: &mut R, from_rho: bool) -> u64 {
        let n = self.owf.n_bits;
        loop {
            let x = r.random_range(0..(1u64 << n));
            if self.in_rho_class(x) == from_rho {
                return self.owf.eval(x);
            }
        }
    }
}

/// `rho` is uniform over `f(F_n)` and `sigma` over `f` of the complement.
pub fn gl_states(owf: ToyOwf) -> Result<GlStatePair> {
    let n = owf.n_bits;
    if n % 2 == 1 || n < 2 {
        return Err(Error::InvalidArgument(format!("need an even number of input bits, got {n}")));
    }
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for x in 0..(1u64 << n) {
        if gl_predicate(x, n) {
            a.push(owf.eval(x));
        } else {
            b.push(owf.eval(x));
        }
    }
    let f_size = a.len() as u64;
    let bits = owf.out_bits;
    Ok(GlStatePair {
        rho: SparseDiagonal::from_strings(bits, a),
        sigma: SparseDiagonal::from_strings(bits, b),
        owf,
        f_size,
        swapped: false,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupportDistinguisher {
    /// Strings on which the effect is 1.
    pub accept: Vec<u64>,
    pub advantage: f64,
}

/// Projector onto `supp(rho)`. The advantage is `1 - sigma(supp rho)`, which is exactly 1 when the
/// supports are disjoint.
pub fn unbounded_distinguisher(pair: &GlStatePair) -> SupportDistinguisher {
    let accept: Vec<u64> = pair.rho.support().collect();
    let overlap: f64 = accept.iter().map(|&s| pair.sigma.mass(s)).sum();
    SupportDistinguisher { accept, advantage: 1.0 - overlap }
}

/// A two-outcome test on diagonal states.
#[derive(Clone, Debug, PartialEq)]
pub enum DiagonalTest {
    Trivial,
    /// Flip the `flips` wires, then accept iff every wire in `marks` reads 0.
    Pattern { flips: u64, marks: u64 },
    /// Run a reversible program, then accept iff `mark` reads 0.
    Circuit { program: ClassicalProgram, mark: usize },
    /// Invert with the lookup oracle, then accept iff the predicate holds.
    InverterAssisted,
}

fn to_bits(s: u64, w: usize) -> Vec<bool> {
    (0..w).map(|i| (s >> (w - 1 - i)) & 1 == 1).collect()
}

impl DiagonalTest {
    pub fn describe(&self) -> String {
        match self {
            DiagonalTest::Trivial => "identity".into(),
            DiagonalTest::Pattern { flips, marks } => format!("pattern(flips={flips:#x},marks={marks:#x})"),
            DiagonalTest::Circuit { program, mark } => format!("circuit(ops={},mark={mark})", program.ops.len()),
            DiagonalTest::InverterAssisted => "inverter-assisted".into(),
        }
    }

    /// 2-local gate count; the oracle call is not a circuit and reports 0.
    pub fn gates(&self) -> usize {
        match self {
            DiagonalTest::Pattern { flips, .. } => flips.count_ones() as usize,
            DiagonalTest::Circuit { program, .. } => program.lower().len(),
            _ => 0,
        }
    }

    fn accepts(&self, pair: &GlStatePair, s: u64) -> bool {
        let w = pair.owf.out_bits;
        match self {
            DiagonalTest::Trivial => true,
            DiagonalTest::Pattern { flips, marks } => {
                let bits = s ^ flips;
                // wire i is bit w-1-i
                (0..w).all(|i| (marks >> i) & 1 == 0 || (bits >> (w - 1 - i)) & 1 == 0)
            }
            DiagonalTest::Circuit { program, mark } => {
                let mut b = to_bits(s, w);
                program.run(&mut b);
                !b[*mark]
            }
            DiagonalTest::InverterAssisted => pair.owf.invert(s).is_some_and(|x| pair.in_rho_class(x)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TestFamily {
    /// All patterns on at most two wires whose flip count fits in `gates`, plus the identity.
    Pattern { gates: usize },
    InverterAssisted,
    RandomCircuits { gates: usize, count: usize },
}

impl TestFamily {
    fn label(&self) -> String {
        match self {
            TestFamily::Pattern { gates } => format!("pattern(G={gates})"),
            TestFamily::InverterAssisted => "inverter".into(),
            TestFamily::RandomCircuits { gates, count } => format!("random(G={gates},count={count})"),
        }
    }

    fn members(&self, wires: usize, seed: u64) -> Result<Vec<DiagonalTest>> {
        match *self {
            TestFamily::Pattern { gates } => {
                let mut out = vec![DiagonalTest::Trivial];
                for a in 0..wires {
                    for b in a..wires {
                        let marks = (1u64 << a) | (1u64 << b);
                        let pos = [a, b];
                        let k = if a == b { 1 } else { 2 };
                        for f in 0..(1u64 << k) {
                            let flips = (0..k).filter(|&j| (f >> j) & 1 == 1).fold(0u64, |m, j| m | (1 << (wires - 1 - pos[j])));
                            if flips.count_ones() as usize <= gates {
                                out.push(DiagonalTest::Pattern { flips, marks });
                            }
                        }
                    }
                }
                Ok(out)
            }
            TestFamily::InverterAssisted => Ok(vec![DiagonalTest::InverterAssisted]),
            TestFamily::RandomCircuits { gates, count } => {
                if wires < 3 {
                    return Err(Error::InvalidArgument("random circuits need at least 3 wires".into()));
                }
                Ok((0..count).map(|i| random_classical_test(wires, gates, split_seed(seed, i as u64))).collect())
            }
        }
    }
}

/// Random {X, CNOT, Toffoli} program whose lowering fits in `gates` 2-local gates, read out on
/// a random wire.
fn random_classical_test(wires: usize, gates: usize, seed: u64) -> DiagonalTest {
    let mut r = rng(seed);
    let mut program = ClassicalProgram::new(wires);
    for _ in 0..4 * gates.max(1) {
        let mut ws: Vec<usize> = (0..wires).collect();
        ws.shuffle(&mut r);
        let op = match r.random_range(0..3) {
            0 => crate::circuits::ClassicalOp::X(ws[0]),
            1 => crate::circuits::ClassicalOp::Cnot(ws[0], ws[1]),
            _ => crate::circuits::ClassicalOp::Toffoli(ws[0], ws[1], ws[2]),
        };
        program.ops.push(op);
        if program.lower().len() > gates {
            program.ops.pop();
        }
    }
    let mark = r.random_range(0..wires);
    DiagonalTest::Circuit { program, mark }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdvantageRow {
    pub family: String,
    pub member: usize,
    pub test: String,
    pub gates: usize,
    pub accept_rho: f64,
    pub accept_sigma: f64,
    /// Empirical `|Tr[L(rho - sigma)]|`.
    pub advantage: f64,
    /// 95% normal-approximation half width.
    pub ci_half_width: f64,
    pub exact: Option<f64>,
}

impl AdvantageRow {
    pub fn upper_confidence(&self) -> f64 {
        self.advantage + self.ci_half_width
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdvantageTable {
    pub banner: String,
    pub owf: String,
    pub n_bits: usize,
    pub trials: usize,
    pub seed: u64,
    pub rows: Vec<AdvantageRow>,
}

impl AdvantageTable {
    pub fn family_rows<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a AdvantageRow> + 'a {
        self.rows.iter().filter(move |r| r.family.starts_with(prefix))
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["family", "member", "test", "gates", "accept_rho", "accept_sigma", "advantage", "ci_half_width", "exact"])?;
        for r in &self.rows {
            w.write_record([
                r.family.clone(),
                r.member.to_string(),
                r.test.clone(),
                r.gates.to_string(),
                format!("{:.6}", r.accept_rho),
                format!("{:.6}", r.accept_sigma),
                format!("{:.6}", r.advantage),
                format!("{:.6}", r.ci_half_width),
                r.exact.map(|e| format!("{e:.6}")).unwrap_or_default(),
            ])?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?).expect("utf8 csv");
        Ok(format!("# {} ({}, n={})\n{}", self.banner, self.owf, self.n_bits, body))
    }
}

/// Estimates each family member's advantage from `trials` samples of each state. Exact values
/// are added when the supports are small enough to enumerate.
pub fn advantage_harness(pair: &GlStatePair, families: &[TestFamily], trials: usize, seed: u64) -> Result<AdvantageTable> {
    if trials == 0 {
        return Err(Error::InvalidArgument("zero trials".into()));
    }
    if families.contains(&TestFamily::InverterAssisted) && !pair.owf.has_inverse_oracle() {
        return Err(Error::InvalidArgument("inverter-assisted test needs an inverse oracle".into()));
    }
    let exact_ok = pair.rho.entries.len() + pair.sigma.entries.len() <= EXACT_SUPPORT_LIMIT;
    let mut rows = Vec::new();
    for (fi, fam) in families.iter().enumerate() {
        let fseed = split_seed(seed, fi as u64);
        let members = fam.members(pair.owf.out_bits, fseed)?;
        let label = fam.label();
        let mut fam_rows: Vec<AdvantageRow> = members
            .par_iter()
            .enumerate()
            .map(|(i, t)| {
                let mut r = rng(split_seed(fseed ^ 0x5A5A, i as u64));
                let t_f = trials as f64;
                let hits = |r: &mut _, from_rho: bool| {
                    (0..trials).filter(|_| t.accepts(pair, pair.uniform_sample(r, from_rho))).count() as f64 / t_f
                };
                let pr = hits(&mut r, true);
                let ps = hits(&mut r, false);
                let se = (pr * (1.0 - pr) / t_f + ps * (1.0 - ps) / t_f).sqrt();
                let exact = exact_ok.then(|| {
                    (pair.rho.expectation(|s| t.accepts(pair, s)) - pair.sigma.expectation(|s| t.accepts(pair, s))).abs()
                });
                AdvantageRow {
                    family: label.clone(),
                    member: i,
                    test: t.describe(),
                    gates: t.gates(),
                    accept_rho: pr,
                    accept_sigma: ps,
                    advantage: (pr - ps).abs(),
                    ci_half_width: 1.96 * se,
                    exact,
                }
            })
            .collect();
        rows.append(&mut fam_rows);
    }
    Ok(AdvantageTable { banner: BANNER.into(), owf: pair.owf.name.clone(), n_bits: pair.owf.n_bits, trials, seed, rows })
}

pub const HS_MAX_QUBITS: usize = 12;
pub const HS_MAX_POWER_DIM: usize = 256;
const HS_BATCHES: usize = 64;
const HS_BOOTSTRAP: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HsEstimate {
    pub m: usize,
    pub distance: f64,
    /// Bootstrap RMS of the trace-norm deviation of the resampled mean from the sample mean.
    pub bootstrap_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HsExperiment {
    pub n_qubits: usize,
    pub k: usize,
    pub trials: usize,
    pub seed: u64,
    pub estimates: Vec<HsEstimate>,
    /// Least-squares `c` in `distance ~ c k^2 / 2^m`.
    pub fit_c: Option<f64>,
    /// Estimates strictly decrease along increasing `m`.
    pub monotone: bool,
}

fn kron_power(a: &CMatrix, k: usize) -> CMatrix {
    let mut out = a.clone();
    for _ in 1..k {
        out = out.kronecker(a);
    }
    out
}

/// Reduced state of a Haar vector on `n + m` qubits with the last `m` traced out.
fn reduced_haar<R: Rng + ?Sized>(n: usize, m: usize, r: &mut R) -> CMatrix {
    let (da, db) = (1usize << n, 1usize << m);
    let v = haar_vector(da * db, r);
    let a = CMatrix::from_fn(da, db, |i, j| v[i * db + j]);
    &a * a.adjoint()
}

/// Trace distance of the `k`-th moment of the ensemble of reduced Haar states from `omega^{(k)}`,
/// for each `m` in `m_list`. Trials are grouped into batches whose means are bootstrapped.
pub fn hs_ensemble_experiment(n_qubits: usize, m_list: &[usize], k: usize, trials: usize, seed: u64) -> Result<HsExperiment> {
    if n_qubits == 0 || k == 0 || k > 3 || trials == 0 || m_list.is_empty() {
        return Err(Error::InvalidArgument(format!("bad ensemble parameters n={n_qubits} k={k} trials={trials}")));
    }
    let max_m = *m_list.iter().max().expect("non-empty");
    if n_qubits + max_m > HS_MAX_QUBITS {
        return Err(Error::DimensionLimit { dim: 1 << (n_qubits + max_m), limit: 1 << HS_MAX_QUBITS });
    }
    let pd = 1usize << (n_qubits * k);
    if pd > HS_MAX_POWER_DIM {
        return Err(Error::DimensionLimit { dim: pd, limit: HS_MAX_POWER_DIM });
    }
    let target = CMatrix::identity(pd, pd) * c(1.0 / pd as f64, 0.0);
    let batches = HS_BATCHES.min(trials);
    let mut estimates = Vec::with_capacity(m_list.len());
    for &m in m_list {
        let mseed = split_seed(seed, m as u64);
        let means: Vec<CMatrix> = (0..batches)
            .into_par_iter()
            .map(|b| {
                let count = trials / batches + usize::from(b < trials % batches);
                let mut r = rng(split_seed(mseed, b as u64));
                let mut acc = CMatrix::zeros(pd, pd);
                for _ in 0..count {
                    acc += kron_power(&reduced_haar(n_qubits, m, &mut r), k);
                }
                acc * c(1.0 / count as f64, 0.0)
            })
            .collect();
        let weights: Vec<f64> = (0..batches).map(|b| (trials / batches + usize::from(b < trials % batches)) as f64).collect();
        let total: f64 = weights.iter().sum();
        let mean = means.iter().zip(&weights).fold(CMatrix::zeros(pd, pd), |a, (x, &w)| a + x * c(w / total, 0.0));
        let distance = trace_norm_herm(&(&mean - &target));
        let mut r = rng(split_seed(mseed, u64::MAX));
        let mut sq = 0.0;
        for _ in 0..HS_BOOTSTRAP {
            let mut boot = CMatrix::zeros(pd, pd);
            for _ in 0..batches {
                boot += &means[r.random_range(0..batches)];
            }
            boot *= c(1.0 / batches as f64, 0.0);
            sq += trace_norm_herm(&(boot - &mean)).powi(2);
        }
        estimates.push(HsEstimate { m, distance, bootstrap_error: (sq / HS_BOOTSTRAP as f64).sqrt() });
    }
    let kk = (k * k) as f64;
    let (sxy, sxx) = estimates.iter().fold((0.0, 0.0), |(sxy, sxx), e| {
        let x = kk / 2f64.powi(e.m as i32);
        (sxy + x * e.distance, sxx + x * x)
    });
    let fit_c = (sxx > 0.0).then(|| sxy / sxx);
    let mut sorted = estimates.clone();
    sorted.sort_by_key(|e| e.m);
    let monotone = sorted.windows(2).all(|w| w[1].distance < w[0].distance);
    Ok(HsExperiment { n_qubits, k, trials, seed, estimates, fit_c, monotone })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalysisConfig {
    pub n_qubits: usize,
    pub random_tests: usize,
    pub gates: usize,
    pub copies: usize,
    pub overlap_draws: usize,
}

impl Default for CatalysisConfig {
    fn default() -> Self {
        Self { n_qubits: 8, random_tests: 100, gates: 8, copies: 10, overlap_draws: 100 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalysisReport {
    pub banner: String,
    pub n_qubits: usize,
    pub overlap: f64,
    pub random_test_max_advantage: f64,
    pub random_test_mean_advantage: f64,
    /// SWAP test with `psi` as both catalyst and input.
    pub self_accept: f64,
    pub self_type1: f64,
    /// Per-copy type-II exponent of the SWAP test against `phi`, nats.
    pub swap_rate: f64,
    pub swap_type2: f64,
    pub median_overlap: f64,
    pub overlap_draws: usize,
}

fn random_two_local<R: Rng + ?Sized>(n: usize, gates: usize, r: &mut R) -> Result<QuantumCircuit> {
    let set = [NamedGate::H, NamedGate::S, NamedGate::T, NamedGate::X, NamedGate::Cnot];
    let mut out = Vec::with_capacity(gates);
    for _ in 0..gates {
        let g = set[r.random_range(0..set.len())];
        let a = r.random_range(0..n);
        let b = (a + r.random_range(1..n)) % n;
        let u = if g.arity() == 2 { g.unitary() } else { g.unitary().kronecker(&CMatrix::identity(2, 2)) };
        out.push(TwoLocalGate::pair(a, b, u)?);
    }
    QuantumCircuit::new(n, 0, out)
}

fn prob_zero(state: &[C64], wire: usize, n: usize) -> f64 {
    let bit = 1usize << (n - 1 - wire);
    state.iter().enumerate().filter(|(i, _)| i & bit == 0).map(|(_, z)| z.norm_sqr()).sum()
}

/// Two Haar states: a handful of random bounded tests barely separate them, while a SWAP test
/// that gets one of them as a catalyst does at about `log 2` per copy.
pub fn catalysis_demo(cfg: &CatalysisConfig, seed: u64) -> Result<CatalysisReport> {
    let n = cfg.n_qubits;
    if !(2..=8).contains(&n) || cfg.copies == 0 || cfg.overlap_draws == 0 {
        return Err(Error::InvalidArgument(format!("bad catalysis parameters {cfg:?}")));
    }
    let d = 1usize << n;
    let mut r = rng(split_seed(seed, 0));
    let psi = haar_vector(d, &mut r);
    let phi = haar_vector(d, &mut r);
    let overlap = psi.dotc(&phi).norm_sqr();
    let advs: Vec<f64> = (0..cfg.random_tests)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut r = rng(split_seed(seed, 1 + i as u64));
            let circ = random_two_local(n, cfg.gates, &mut r)?;
            let wire = r.random_range(0..n);
            let run = |v: &crate::tensor::CVector| {
                let mut s: Vec<C64> = v.iter().copied().collect();
                circ.run_statevector(&mut s);
                prob_zero(&s, wire, n)
            };
            Ok((run(&psi) - run(&phi)).abs())
        })
        .collect::<Result<_>>()?;
    let rho_psi = DensityMatrix::pure(&psi)?;
    let rho_phi = DensityMatrix::pure(&phi)?;
    let own = swap_test(&rho_psi, &rho_psi, cfg.copies, 0, split_seed(seed, 1 << 32))?;
    let alt = swap_test(&rho_psi, &rho_phi, cfg.copies, 0, split_seed(seed, 1 << 33))?;
    let type1 = own.exact_type1.unwrap_or(own.empirical_type1);
    let mut overlaps: Vec<f64> = (0..cfg.overlap_draws)
        .map(|i| {
            let mut r = rng(split_seed(seed, (1 << 34) + i as u64));
            let a = haar_vector(d, &mut r);
            let b = haar_vector(d, &mut r);
            a.dotc(&b).norm_sqr()
        })
        .collect();
    overlaps.sort_by(f64::total_cmp);
    let mid = overlaps.len() / 2;
    let median_overlap = if overlaps.len() % 2 == 1 { overlaps[mid] } else { 0.5 * (overlaps[mid - 1] + overlaps[mid]) };
    Ok(CatalysisReport {
        banner: BANNER.into(),
        n_qubits: n,
        overlap,
        random_test_max_advantage: advs.iter().cloned().fold(0.0, f64::max),
        random_test_mean_advantage: if advs.is_empty() { 0.0 } else { advs.iter().sum::<f64>() / advs.len() as f64 },
        self_accept: 1.0 - type1,
        self_type1: type1,
        swap_rate: alt.rate,
        swap_type2: alt.exact_type2.unwrap_or(alt.empirical_type2),
        median_overlap,
        overlap_draws: cfg.overlap_draws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_bit_pair() {
        let owf = ToyOwf::permutation(2, 3).unwrap();
        let y = owf.eval(0b11);
        let pair = gl_states(owf).unwrap();
        assert_eq!(pair.rho.entries, vec![(y, 1.0)]);
        assert_eq!(pair.sigma.entries.len(), 3);
    }

    #[test]
    fn f_size_formula() {
        for n in (2..=16).step_by(2) {
            let count = (0..(1u64 << n)).filter(|&x| gl_predicate(x, n)).count() as u64;
            assert_eq!(count, gl_f_size(n), "n = {n}");
        }
    }

    #[test]
    fn modexp_is_injective() {
        for n in [2, 4, 8, 12] {
            assert!(ToyOwf::modexp(n).unwrap().is_one_to_one());
        }
    }
}
