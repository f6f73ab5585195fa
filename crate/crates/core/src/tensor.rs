//! Dense complex-operator algebra on small multipartite Hilbert spaces.
//!
//! Index convention: the left tensor factor is the most significant digit
//! of a basis index, so `|a>|b>` sits at `a * dim_b + b`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const DEFAULT_MAX_DIM: usize = 4096;
pub const DEFAULT_TOL: f64 = 1e-9;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest entrywise deviation from Hermiticity.
pub fn herm_deviation(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

fn hermitize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * c(0.5, 0.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    mat: CMatrix,
    herm_tol: f64,
}

impl HermitianOperator {
    pub fn new(mat: CMatrix, herm_tol: f64) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimMismatch(mat.nrows(), mat.ncols()));
        }
        if mat.nrows() == 0 {
            return Err(Error::InvalidArgument("operator dimension must be >= 1".into()));
        }
        if mat.nrows() > DEFAULT_MAX_DIM {
            return Err(Error::DimensionLimit { dim: mat.nrows(), limit: DEFAULT_MAX_DIM });
        }
        let dev = herm_deviation(&mat);
        if dev > herm_tol {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self { mat, herm_tol })
    }

    pub fn from_matrix(mat: CMatrix) -> Result<Self> {
        Self::new(mat, DEFAULT_TOL)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn herm_tol(&self) -> f64 {
        self.herm_tol
    }

    pub fn eig(&self) -> Eigen {
        herm_eig_unchecked(&self.mat)
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: HermitianOperator,
    psd_tol: f64,
    trace_tol: f64,
}

impl DensityMatrix {
    pub fn new(op: HermitianOperator, psd_tol: f64, trace_tol: f64) -> Result<Self> {
        let tr = op.trace();
        // a few ulps at 1 so that a trace of exactly `1 - trace_tol` as written is accepted
        if (tr - 1.0).abs() > trace_tol + 4.0 * f64::EPSILON {
            return Err(Error::Trace(tr));
        }
        let min = op.eig().values.last().copied().unwrap_or(0.0);
        if min < -psd_tol {
            return Err(Error::NotPsd(min));
        }
        Ok(Self { op, psd_tol, trace_tol })
    }

    pub fn from_matrix(mat: CMatrix) -> Result<Self> {
        Self::new(HermitianOperator::from_matrix(mat)?, DEFAULT_TOL, DEFAULT_TOL)
    }

    /// Hermitizes and renormalizes before validating; for numerically produced states.
    pub fn from_matrix_lenient(mat: CMatrix) -> Result<Self> {
        let h = hermitize(&mat);
        let tr = h.trace().re;
        if tr <= 0.0 {
            return Err(Error::Trace(tr));
        }
        Self::from_matrix(h / c(tr, 0.0))
    }

    pub fn pure(psi: &CVector) -> Result<Self> {
        let n = psi.norm();
        if n == 0.0 {
            return Err(Error::InvalidArgument("zero vector".into()));
        }
        let v = psi / c(n, 0.0);
        Self::from_matrix(&v * v.adjoint())
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        let d = probs.len();
        let mut m = CMatrix::zeros(d, d);
        for (i, &p) in probs.iter().enumerate() {
            m[(i, i)] = c(p, 0.0);
        }
        Self::from_matrix(m)
    }

    pub fn basis(d: usize, i: usize) -> Result<Self> {
        if i >= d {
            return Err(Error::IndexOutOfRange(i));
        }
        let mut p = vec![0.0; d];
        p[i] = 1.0;
        Self::diagonal(&p)
    }

    pub fn maximally_mixed(d: usize) -> Result<Self> {
        Self::diagonal(&vec![1.0 / d as f64; d])
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn psd_tol(&self) -> f64 {
        self.psd_tol
    }

    pub fn trace_tol(&self) -> f64 {
        self.trace_tol
    }

    pub fn eig(&self) -> Eigen {
        self.op.eig()
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::from_matrix_lenient(tensor_product(self.matrix(), other.matrix())?)
    }

    /// Diagonal of the matrix, as a classical distribution.
    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix()[(i, i)].re).collect()
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let m = self.matrix();
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)].norm() <= tol))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PovmEffect {
    op: HermitianOperator,
}

impl PovmEffect {
    pub fn new(op: HermitianOperator, tol: f64) -> Result<Self> {
        let e = op.eig();
        let max = e.values.first().copied().unwrap_or(0.0);
        let min = e.values.last().copied().unwrap_or(0.0);
        if min < -tol || max > 1.0 + tol {
            return Err(Error::EffectBound { min, max });
        }
        Ok(Self { op })
    }

    pub fn from_matrix(mat: CMatrix) -> Result<Self> {
        Self::new(HermitianOperator::from_matrix(mat)?, DEFAULT_TOL)
    }

    pub fn identity(d: usize) -> Self {
        Self { op: HermitianOperator { mat: CMatrix::identity(d, d), herm_tol: DEFAULT_TOL } }
    }

    pub fn zero(d: usize) -> Self {
        Self { op: HermitianOperator { mat: CMatrix::zeros(d, d), herm_tol: DEFAULT_TOL } }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    /// `Tr[Λ ρ]`.
    pub fn expectation(&self, rho: &DensityMatrix) -> f64 {
        trace_product(self.matrix(), rho.matrix())
    }

    pub fn complement(&self) -> PovmEffect {
        let d = self.dim();
        PovmEffect {
            op: HermitianOperator { mat: CMatrix::identity(d, d) - self.matrix(), herm_tol: DEFAULT_TOL },
        }
    }
}

/// `Re Tr[A B]` for Hermitian A, B without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsystemDims {
    pub dims: Vec<usize>,
}

impl SubsystemDims {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidDims(format!("{dims:?}")));
        }
        let mut total: usize = 1;
        for &d in &dims {
            total = total
                .checked_mul(d)
                .filter(|&t| t <= DEFAULT_MAX_DIM)
                .ok_or(Error::DimensionLimit { dim: usize::MAX, limit: DEFAULT_MAX_DIM })?;
        }
        Ok(Self { dims })
    }

    pub fn bipartite(da: usize, db: usize) -> Result<Self> {
        Self::new(vec![da, db])
    }

    pub fn qubits(n: usize) -> Result<Self> {
        Self::new(vec![2; n])
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    fn check(&self, a: &CMatrix) -> Result<()> {
        if a.nrows() != self.total() || a.ncols() != self.total() {
            return Err(Error::DimMismatch(a.nrows(), self.total()));
        }
        Ok(())
    }

    fn digits(&self, mut idx: usize, out: &mut [usize]) {
        for k in (0..self.dims.len()).rev() {
            out[k] = idx % self.dims[k];
            idx /= self.dims[k];
        }
    }

    fn index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.dims).fold(0, |acc, (&x, &d)| acc * d + x)
    }
}

pub fn tensor_product(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let (ra, ca, rb, cb) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    let r = ra.checked_mul(rb).unwrap_or(usize::MAX);
    let col = ca.checked_mul(cb).unwrap_or(usize::MAX);
    if r > DEFAULT_MAX_DIM || col > DEFAULT_MAX_DIM {
        return Err(Error::DimensionLimit { dim: r.max(col), limit: DEFAULT_MAX_DIM });
    }
    Ok(a.kronecker(b))
}

pub fn tensor_all(ops: &[&CMatrix]) -> Result<CMatrix> {
    let mut acc = CMatrix::identity(1, 1);
    for op in ops {
        acc = tensor_product(&acc, op)?;
    }
    Ok(acc)
}

/// Traces out every subsystem not listed in `keep`; the kept factors stay in their original order.
pub fn partial_trace(a: &CMatrix, dims: &SubsystemDims, keep: &[usize]) -> Result<CMatrix> {
    dims.check(a)?;
    let n = dims.len();
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&bad) = kept.iter().find(|&&k| k >= n) {
        return Err(Error::IndexOutOfRange(bad));
    }
    let traced: Vec<usize> = (0..n).filter(|k| !kept.contains(k)).collect();
    let kd = SubsystemDims { dims: kept.iter().map(|&k| dims.dims[k]).collect() };
    let td = SubsystemDims { dims: traced.iter().map(|&k| dims.dims[k]).collect() };
    let (dk, dt) = (kd.total(), td.total());
    let mut out = CMatrix::zeros(dk, dk);
    let mut full_r = vec![0usize; n];
    let mut full_c = vec![0usize; n];
    let mut kr = vec![0usize; kept.len()];
    let mut kc = vec![0usize; kept.len()];
    let mut tt = vec![0usize; traced.len()];
    for i in 0..dk {
        kd.digits(i, &mut kr);
        for j in 0..dk {
            kd.digits(j, &mut kc);
            let mut s = C64::new(0.0, 0.0);
            for t in 0..dt {
                td.digits(t, &mut tt);
                for (p, &k) in kept.iter().enumerate() {
                    full_r[k] = kr[p];
                    full_c[k] = kc[p];
                }
                for (p, &k) in traced.iter().enumerate() {
                    full_r[k] = tt[p];
                    full_c[k] = tt[p];
                }
                s += a[(dims.index(&full_r), dims.index(&full_c))];
            }
            out[(i, j)] = s;
        }
    }
    Ok(out)
}

/// Transposes the given tensor factor.
pub fn partial_transpose(a: &CMatrix, dims: &SubsystemDims, subsystem: usize) -> Result<CMatrix> {
    dims.check(a)?;
    if dims.len() < 2 {
        return Err(Error::InvalidDims("partial transpose needs at least two factors".into()));
    }
    if subsystem >= dims.len() {
        return Err(Error::IndexOutOfRange(subsystem));
    }
    let d = dims.total();
    let mut out = CMatrix::zeros(d, d);
    let mut r = vec![0usize; dims.len()];
    let mut cc = vec![0usize; dims.len()];
    for i in 0..d {
        dims.digits(i, &mut r);
        for j in 0..d {
            dims.digits(j, &mut cc);
            std::mem::swap(&mut r[subsystem], &mut cc[subsystem]);
            out[(dims.index(&r), dims.index(&cc))] = a[(i, j)];
            std::mem::swap(&mut r[subsystem], &mut cc[subsystem]);
        }
    }
    Ok(out)
}

/// Spectral decomposition with eigenvalues in descending order.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Columns are eigenvectors.
    pub vectors: CMatrix,
}

impl Eigen {
    pub fn reconstruct(&self) -> CMatrix {
        self.apply(|x| x)
    }

    /// `U f(D) U^dag`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let d = self.values.len();
        let mut scaled = self.vectors.clone();
        for (k, &v) in self.values.iter().enumerate() {
            let fv = c(f(v), 0.0);
            for i in 0..d {
                scaled[(i, k)] *= fv;
            }
        }
        &scaled * self.vectors.adjoint()
    }

    /// Projector onto eigenvectors whose eigenvalue satisfies `pred`.
    pub fn projector(&self, pred: impl Fn(f64) -> bool) -> CMatrix {
        self.apply(|x| if pred(x) { 1.0 } else { 0.0 })
    }

    pub fn vector(&self, k: usize) -> CVector {
        self.vectors.column(k).into_owned()
    }
}

/// Hermitian eigendecomposition after a Hermiticity check at `DEFAULT_TOL`.
pub fn herm_eig(a: &CMatrix) -> Result<Eigen> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimMismatch(a.nrows(), a.ncols()));
    }
    let dev = herm_deviation(a);
    if dev > DEFAULT_TOL {
        return Err(Error::NotHermitian(dev));
    }
    Ok(herm_eig_unchecked(a))
}

/// Eigenvalues descending. Within a (numerically) degenerate group the basis is
/// canonicalized: standard basis vectors are projected onto the eigenspace in index
/// order and Gram-Schmidt'd, so the result does not depend on the solver's rotation.
/// Every eigenvector is phase-fixed so its first significant entry is real positive.
pub fn herm_eig_unchecked(a: &CMatrix) -> Eigen {
    let n = a.nrows();
    let h = hermitize(a);
    let se = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[j].total_cmp(&se.eigenvalues[i]));
    let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &se.eigenvectors.column(i));
    }
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let gap = 1e-10 * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end - 1] - values[end] <= gap {
            end += 1;
        }
        if end - start > 1 {
            canonicalize_block(&mut vectors, start, end);
        }
        start = end;
    }
    for k in 0..n {
        let col = vectors.column(k);
        let big = col.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if let Some(z) = col.iter().find(|z| z.norm() > 1e-8 * big.max(1e-300)).copied() {
            let ph = z.conj() / z.norm();
            for i in 0..n {
                vectors[(i, k)] *= ph;
            }
        }
    }
    Eigen { values, vectors }
}

fn canonicalize_block(vectors: &mut CMatrix, start: usize, end: usize) {
    let n = vectors.nrows();
    let block = vectors.columns(start, end - start).into_owned();
    let proj = &block * block.adjoint();
    let mut chosen: Vec<CVector> = Vec::with_capacity(end - start);
    for j in 0..n {
        if chosen.len() == end - start {
            break;
        }
        let mut v: CVector = proj.column(j).into_owned();
        for u in &chosen {
            let ov = u.dotc(&v);
            v -= u * ov;
        }
        let nv = v.norm();
        if nv > 1e-6 {
            chosen.push(v / c(nv, 0.0));
        }
    }
    if chosen.len() == end - start {
        for (k, v) in chosen.iter().enumerate() {
            vectors.set_column(start + k, v);
        }
    }
}

pub fn trace_norm_herm(a: &CMatrix) -> f64 {
    herm_eig_unchecked(a).values.iter().map(|v| v.abs()).sum()
}

pub fn op_norm_herm(a: &CMatrix) -> f64 {
    herm_eig_unchecked(a).values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub fn sqrt_psd(a: &CMatrix) -> CMatrix {
    herm_eig_unchecked(a).apply(|x| x.max(0.0).sqrt())
}

/// `‖√ρ √σ‖₁`, computed from the spectrum of `√ρ σ √ρ`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimMismatch(rho.dim(), sigma.dim()));
    }
    let sr = sqrt_psd(rho.matrix());
    let inner = &sr * sigma.matrix() * &sr;
    let f: f64 = herm_eig_unchecked(&inner).values.iter().map(|v| v.max(0.0).sqrt()).sum();
    Ok(f.clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateDistances {
    pub fidelity: f64,
    pub trace_distance: f64,
    pub trace_norm_diff: f64,
}

pub fn state_distances(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<StateDistances> {
    let fid = fidelity(rho, sigma)?;
    let tn = trace_norm_herm(&(rho.matrix() - sigma.matrix()));
    Ok(StateDistances { fidelity: fid, trace_distance: (0.5 * tn).min(1.0), trace_norm_diff: tn.min(2.0) })
}

/// `{"dim": d, "re": [[...]], "im": [[...]]}`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl OperatorJson {
    pub fn from_matrix(a: &CMatrix) -> Self {
        let d = a.nrows();
        let re = (0..d).map(|i| (0..d).map(|j| a[(i, j)].re).collect()).collect();
        let im = (0..d).map(|i| (0..d).map(|j| a[(i, j)].im).collect()).collect();
        Self { dim: d, re, im }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let d = self.dim;
        let rows_ok = |rows: &Vec<Vec<f64>>| rows.len() == d && rows.iter().all(|r| r.len() == d);
        if !rows_ok(&self.re) || !rows_ok(&self.im) {
            return Err(Error::InvalidArgument(format!("operator rows do not match dim {d}")));
        }
        Ok(CMatrix::from_fn(d, d, |i, j| c(self.re[i][j], self.im[i][j])))
    }
}

pub fn operator_to_json(a: &CMatrix) -> Result<String> {
    Ok(serde_json::to_string(&OperatorJson::from_matrix(a))?)
}

pub fn operator_from_json(s: &str) -> Result<CMatrix> {
    serde_json::from_str::<OperatorJson>(s)?.to_matrix()
}

pub fn projector(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

pub fn ket(d: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(d);
    v[i] = c(1.0, 0.0);
    v
}

/// The two-qubit maximally entangled state `(|00> + |11>)/√2` generalized to `d x d`.
pub fn max_entangled(d: usize) -> CVector {
    let mut v = CVector::zeros(d * d);
    let amp = c(1.0 / (d as f64).sqrt(), 0.0);
    for i in 0..d {
        v[i * d + i] = amp;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_ordering() {
        let p0 = DensityMatrix::basis(2, 0).unwrap();
        let p1 = DensityMatrix::basis(2, 1).unwrap();
        let k = tensor_product(p0.matrix(), p1.matrix()).unwrap();
        assert_eq!(k[(1, 1)].re, 1.0);
        assert_eq!(k.trace().re, 1.0);
    }

    #[test]
    fn dimension_limit() {
        let a = CMatrix::identity(128, 128);
        assert!(matches!(tensor_product(&a, &a), Err(Error::DimensionLimit { .. })));
    }

    #[test]
    fn eig_sorted_and_permutation() {
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![c(3.0, 0.), c(1.0, 0.), c(2.0, 0.)]));
        let e = herm_eig(&a).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
        assert!((e.vectors[(0, 0)].re - 1.0).abs() < 1e-14);
        assert!((e.vectors[(2, 1)].re - 1.0).abs() < 1e-14);
        assert!((e.vectors[(1, 2)].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate_basis_is_canonical() {
        let e = herm_eig(&CMatrix::identity(3, 3)).unwrap();
        assert!((e.vectors - CMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut a = CMatrix::zeros(2, 2);
        a[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(herm_eig(&a), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let a = CMatrix::from_fn(3, 3, |i, j| c(0.1 * (i as f64) + 1.0 / 3.0, (j as f64).sqrt() * 1e-17));
        let back = operator_from_json(&operator_to_json(&a).unwrap()).unwrap();
        for (x, y) in a.iter().zip(back.iter()) {
            assert_eq!(x.re.to_bits(), y.re.to_bits());
            assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
    }
}
