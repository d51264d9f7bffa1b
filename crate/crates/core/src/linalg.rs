//! Dense complex and Hermitian matrix algebra at small dimension.
//!
//! Storage is backed by `nalgebra`; this module adds the bipartite structure
//! the rest of the crate relies on. A bipartite basis index `(i, k)` maps to
//! `i * d + k`, first factor major. Partial transposition, the block families
//! and the file format all share that convention.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Relative asymmetry accepted (and symmetrized away) when constructing a
/// Hermitian operator from external data.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Relative rank cut-off on Gram eigenvalues.
pub const RANK_TOL: f64 = 1e-10;

/// Square complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim(), self.dim())?;
        for i in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|j| {
                    let z = self.0[(i, j)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(dim, dim, f))
    }

    /// Real diagonal matrix.
    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, |i, j| if i == j { C64::new(values[i], 0.0) } else { ZERO })
    }

    /// `|i⟩⟨j|` in dimension `dim`.
    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(dim);
        m.0[(i, j)] = ONE;
        m
    }

    /// `|v⟩⟨w|`.
    pub fn outer(v: &[C64], w: &[C64]) -> Self {
        assert_eq!(v.len(), w.len());
        Self::from_fn(v.len(), |i, j| v[i] * w[j].conj())
    }

    /// Builds a matrix from a row-major entry array of length `dim²`.
    pub fn from_row_major(entries: &[C64]) -> Result<Self> {
        let dim = exact_sqrt(entries.len()).ok_or(Error::NotSquare { len: entries.len() })?;
        Ok(Self::from_fn(dim, |i, j| entries[i * dim + j]))
    }

    pub fn from_nalgebra(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        Ok(Self(m))
    }

    pub fn row_major(&self) -> Vec<C64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        self.0[(i, j)] = value;
    }

    pub fn as_nalgebra(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        self.0.column(j).iter().copied().collect()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let x = DVector::from_column_slice(v);
        (&self.0 * x).iter().copied().collect()
    }

    /// `‖U*U − I‖` measured entrywise (max modulus).
    pub fn unitarity_deviation(&self) -> f64 {
        let prod = &self.0.adjoint() * &self.0;
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((prod[(i, j)] - target).norm());
            }
        }
        worst
    }

    /// Embeds the top-left `block` into an identity of dimension `dim`.
    pub fn block_diag_identity(block: &ComplexMatrix, dim: usize) -> Self {
        let b = block.dim();
        assert!(b <= dim);
        Self::from_fn(dim, |i, j| {
            if i < b && j < b {
                block.get(i, j)
            } else if i == j {
                ONE
            } else {
                ZERO
            }
        })
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

/// Square matrix with exact Hermitian symmetry.
#[derive(Clone, PartialEq)]
pub struct HermitianOperator(ComplexMatrix);

impl fmt::Debug for HermitianOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hermitian{:?}", self.0)
    }
}

impl HermitianOperator {
    /// Validates Hermiticity. Asymmetry up to `HERMITIAN_TOL · ‖X‖_F` is
    /// symmetrized away; anything larger is rejected.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let norm = m.frobenius_norm();
        let asym = (&m - &m.adjoint()).frobenius_norm();
        if asym > HERMITIAN_TOL * norm {
            return Err(Error::NotHermitian { asymmetry: if norm > 0.0 { asym / norm } else { asym } });
        }
        Ok(Self::symmetrized(m))
    }

    /// `(X + X*)/2` without validation. Used for results of computations that
    /// are Hermitian in exact arithmetic.
    pub fn symmetrized(m: ComplexMatrix) -> Self {
        let adj = m.adjoint();
        Self((&m + &adj).scale_real(0.5))
    }

    pub fn from_row_major(entries: &[C64]) -> Result<Self> {
        Self::new(ComplexMatrix::from_row_major(entries)?)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(ComplexMatrix::zeros(dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim))
    }

    pub fn diag(values: &[f64]) -> Self {
        Self(ComplexMatrix::diag(values))
    }

    /// `|v⟩⟨v|`.
    pub fn projector(v: &[C64]) -> Self {
        Self::symmetrized(ComplexMatrix::outer(v, v))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0.get(i, j)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.frobenius_norm()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale_real(s))
    }

    /// `U X U*`.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Self {
        Self::symmetrized(&(u * &self.0) * &u.adjoint())
    }

    /// Entrywise complex conjugate (equivalently the transpose).
    pub fn conj(&self) -> Self {
        Self(self.0.conj())
    }

    /// Removes the identity component: `X − (tr X / n) I`.
    pub fn traceless_part(&self) -> Self {
        let n = self.dim() as f64;
        self - &Self::identity(self.dim()).scale(self.trace() / n)
    }
}

impl Add for &HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator(&self.0 + &rhs.0)
    }
}

impl Sub for &HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator(&self.0 - &rhs.0)
    }
}

/// Local dimension `d` of a `C^d ⊗ C^d` system together with `D = d²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BipartiteDims {
    d: usize,
}

impl BipartiteDims {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::LocalDimension { d, min: 1 });
        }
        Ok(Self { d })
    }

    /// Infers `d` from a total dimension that must be a perfect square.
    pub fn from_total(total: usize) -> Result<Self> {
        match exact_sqrt(total) {
            Some(d) if d > 0 => Ok(Self { d }),
            _ => Err(Error::NotSquare { len: total }),
        }
    }

    pub fn local(&self) -> usize {
        self.d
    }

    pub fn total(&self) -> usize {
        self.d * self.d
    }

    #[inline]
    pub fn index(&self, first: usize, second: usize) -> usize {
        first * self.d + second
    }

    fn check(&self, dim: usize) -> Result<()> {
        if dim != self.total() {
            return Err(Error::DimensionMismatch { expected: self.total(), found: dim });
        }
        Ok(())
    }
}

/// Which tensor factor a block family is indexed by.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Side {
    /// `X = Σ_kl A_kl ⊗ |k⟩⟨l|`; blocks act on the first factor.
    A,
    /// `X = Σ_ij |i⟩⟨j| ⊗ B_ij`; blocks act on the second factor.
    B,
}

/// The `d²` operator coefficients of a bipartite operator expanded against
/// matrix units on one factor.
#[derive(Clone, Debug)]
pub struct BlockFamily {
    side: Side,
    d: usize,
    blocks: Vec<ComplexMatrix>,
}

impl BlockFamily {
    pub fn side(&self) -> Side {
        self.side
    }

    pub fn local(&self) -> usize {
        self.d
    }

    pub fn get(&self, a: usize, b: usize) -> &ComplexMatrix {
        &self.blocks[a * self.d + b]
    }

    /// Blocks with their index pair, in row-major order of the pair.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &ComplexMatrix)> {
        let d = self.d;
        self.blocks.iter().enumerate().map(move |(n, m)| ((n / d, n % d), m))
    }

    /// Reassembles the bipartite operator from the family.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = self.d;
        let mut out = ComplexMatrix::zeros(d * d);
        for ((a, b), blk) in self.iter() {
            let unit = ComplexMatrix::unit(d, a, b);
            let term = match self.side {
                Side::A => kron(blk, &unit),
                Side::B => kron(&unit, blk),
            };
            out = &out + &term;
        }
        out
    }
}

/// Kronecker product `X ⊗ Y`.
pub fn kron(x: &ComplexMatrix, y: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix(x.0.kronecker(&y.0))
}

pub fn kron_hermitian(x: &HermitianOperator, y: &HermitianOperator) -> HermitianOperator {
    HermitianOperator(kron(x.matrix(), y.matrix()))
}

/// Transposition on the second tensor factor.
pub fn partial_transpose(x: &HermitianOperator, dims: BipartiteDims) -> Result<HermitianOperator> {
    dims.check(x.dim())?;
    Ok(HermitianOperator(partial_transpose_matrix(x.matrix(), dims)))
}

pub(crate) fn partial_transpose_matrix(x: &ComplexMatrix, dims: BipartiteDims) -> ComplexMatrix {
    let d = dims.local();
    let mut out = ComplexMatrix::zeros(d * d);
    for i in 0..d {
        for k in 0..d {
            for j in 0..d {
                for l in 0..d {
                    out.set(dims.index(i, k), dims.index(j, l), x.get(dims.index(i, l), dims.index(j, k)));
                }
            }
        }
    }
    out
}

/// Exchanges the two tensor factors: `F X F` with `F` the flip.
pub fn swap_factors(x: &HermitianOperator, dims: BipartiteDims) -> Result<HermitianOperator> {
    dims.check(x.dim())?;
    let d = dims.local();
    let m = ComplexMatrix::from_fn(d * d, |r, c| {
        let (i, k) = (r / d, r % d);
        let (j, l) = (c / d, c % d);
        x.get(dims.index(k, i), dims.index(l, j))
    });
    Ok(HermitianOperator(m))
}

/// Partial trace over one factor; `Side::A` keeps the first factor.
pub fn partial_trace(x: &ComplexMatrix, dims: BipartiteDims, keep: Side) -> Result<ComplexMatrix> {
    dims.check(x.dim())?;
    let d = dims.local();
    Ok(ComplexMatrix::from_fn(d, |a, b| {
        (0..d)
            .map(|m| match keep {
                Side::A => x.get(dims.index(a, m), dims.index(b, m)),
                Side::B => x.get(dims.index(m, a), dims.index(m, b)),
            })
            .sum()
    }))
}

/// Block family `{A_kl}` or `{B_ij}` of a bipartite operator.
pub fn block_family(x: &ComplexMatrix, dims: BipartiteDims, side: Side) -> Result<BlockFamily> {
    dims.check(x.dim())?;
    let d = dims.local();
    let mut blocks = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            let blk = match side {
                Side::A => ComplexMatrix::from_fn(d, |i, j| x.get(dims.index(i, a), dims.index(j, b))),
                Side::B => ComplexMatrix::from_fn(d, |k, l| x.get(dims.index(a, k), dims.index(b, l))),
            };
            blocks.push(blk);
        }
    }
    Ok(BlockFamily { side, d, blocks })
}

/// Spectral decomposition of a Hermitian operator, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Unitary whose columns are the eigenvectors, in the order of `values`.
    pub vectors: ComplexMatrix,
}

impl Eigen {
    pub fn vector(&self, n: usize) -> Vec<C64> {
        self.vectors.column(n)
    }

    /// `V diag(f(λ)) V*`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> HermitianOperator {
        let mapped: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        let mid = ComplexMatrix::diag(&mapped);
        HermitianOperator::symmetrized(&(&self.vectors * &mid) * &self.vectors.adjoint())
    }
}

const EIG_MAX_SWEEPS_PER_DIM: usize = 200;

/// Deterministic Hermitian eigendecomposition (Householder tridiagonalization
/// with implicit shifted QR).
pub fn eig_hermitian(x: &HermitianOperator) -> Result<Eigen> {
    let n = x.dim();
    if n == 0 {
        return Ok(Eigen { values: vec![], vectors: ComplexMatrix::zeros(0) });
    }
    let eig = SymmetricEigen::try_new(x.matrix().0.clone(), f64::EPSILON, EIG_MAX_SWEEPS_PER_DIM * n)
        .ok_or(Error::EigenNoConvergence { dim: n })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Eigen { values, vectors })
}

pub fn eigenvalues(x: &HermitianOperator) -> Result<Vec<f64>> {
    Ok(eig_hermitian(x)?.values)
}

pub fn min_eigenvalue(x: &HermitianOperator) -> Result<f64> {
    Ok(eig_hermitian(x)?.values.first().copied().unwrap_or(f64::INFINITY))
}

pub fn max_eigenvalue(x: &HermitianOperator) -> Result<f64> {
    Ok(eig_hermitian(x)?.values.last().copied().unwrap_or(f64::NEG_INFINITY))
}

/// Operator norm of a Hermitian operator.
pub fn operator_norm(x: &HermitianOperator) -> Result<f64> {
    let v = eigenvalues(x)?;
    Ok(v.iter().fold(0.0f64, |m, e| m.max(e.abs())))
}

/// Hilbert-Schmidt pairing `Re tr(XY)`.
pub fn hs_inner(x: &HermitianOperator, y: &HermitianOperator) -> f64 {
    assert_eq!(x.dim(), y.dim(), "hs_inner dimension mismatch");
    let n = x.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (x.get(i, j) * y.get(j, i)).re;
        }
    }
    acc
}

/// Real coordinates of a Hermitian operator in an orthonormal (under the
/// trace pairing) basis: diagonal entries, then `√2 Re` and `√2 Im` of each
/// upper off-diagonal entry.
pub fn to_real_coords(x: &HermitianOperator) -> Vec<f64> {
    let n = x.dim();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        out.push(x.get(i, i).re);
    }
    let s = std::f64::consts::SQRT_2;
    for i in 0..n {
        for j in (i + 1)..n {
            let z = x.get(i, j);
            out.push(s * z.re);
            out.push(s * z.im);
        }
    }
    out
}

/// Inverse of [`to_real_coords`].
pub fn from_real_coords(n: usize, coords: &[f64]) -> HermitianOperator {
    assert_eq!(coords.len(), n * n);
    let mut m = ComplexMatrix::zeros(n);
    for (i, &c) in coords[..n].iter().enumerate() {
        m.set(i, i, C64::new(c, 0.0));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut pos = n;
    for i in 0..n {
        for j in (i + 1)..n {
            let z = C64::new(coords[pos] * h, coords[pos + 1] * h);
            m.set(i, j, z);
            m.set(j, i, z.conj());
            pos += 2;
        }
    }
    HermitianOperator(m)
}

/// Orthonormal Hermitian basis of all `n×n` Hermitian operators, in the
/// coordinate order of [`to_real_coords`].
pub fn hermitian_basis(n: usize) -> Vec<HermitianOperator> {
    (0..n * n)
        .map(|k| {
            let mut e = vec![0.0; n * n];
            e[k] = 1.0;
            from_real_coords(n, &e)
        })
        .collect()
}

fn common_dim(ops: &[HermitianOperator]) -> Result<Option<usize>> {
    let Some(first) = ops.first() else { return Ok(None) };
    let n = first.dim();
    for op in ops {
        if op.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: op.dim() });
        }
    }
    Ok(Some(n))
}

fn symmetric_spectrum(m: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, EIG_MAX_SWEEPS_PER_DIM * n.max(1))
        .ok_or(Error::EigenNoConvergence { dim: n })?;
    Ok((eig.eigenvalues.iter().copied().collect(), eig.eigenvectors))
}

/// Dimension of the real linear span, from the rank of the Gram matrix.
pub fn real_span_dim(ops: &[HermitianOperator]) -> Result<usize> {
    if common_dim(ops)?.is_none() {
        return Ok(0);
    }
    let k = ops.len();
    let coords: Vec<Vec<f64>> = ops.iter().map(to_real_coords).collect();
    let gram = DMatrix::from_fn(k, k, |a, b| coords[a].iter().zip(&coords[b]).map(|(x, y)| x * y).sum());
    let (values, _) = symmetric_spectrum(gram)?;
    let top = values.iter().copied().fold(0.0f64, f64::max);
    if top <= 0.0 {
        return Ok(0);
    }
    Ok(values.iter().filter(|&&v| v > RANK_TOL * top).count())
}

/// Orthonormal basis of the orthogonal complement of `span(ops)` inside the
/// Hermitian operators of dimension `dim`, or inside the traceless ones when
/// `within_traceless` is set.
pub fn orth_complement(ops: &[HermitianOperator], dim: usize, within_traceless: bool) -> Result<Vec<HermitianOperator>> {
    if let Some(n) = common_dim(ops)? {
        if n != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: n });
        }
    }
    let n2 = dim * dim;
    let mut rows: Vec<Vec<f64>> = ops.iter().map(to_real_coords).collect();
    if within_traceless {
        rows.push(to_real_coords(&HermitianOperator::identity(dim).scale(1.0 / (dim as f64).sqrt())));
    }
    let mut proj = DMatrix::<f64>::zeros(n2, n2);
    for r in &rows {
        for a in 0..n2 {
            if r[a] == 0.0 {
                continue;
            }
            for b in 0..n2 {
                proj[(a, b)] += r[a] * r[b];
            }
        }
    }
    let (values, vectors) = symmetric_spectrum(proj)?;
    let top = values.iter().copied().fold(0.0f64, f64::max);
    let cut = if top > 0.0 { RANK_TOL * top } else { f64::INFINITY };
    let mut kernel: Vec<usize> = (0..n2).filter(|&i| top <= 0.0 || values[i] <= cut).collect();
    kernel.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    Ok(kernel
        .into_iter()
        .map(|c| {
            let v: Vec<f64> = vectors.column(c).iter().copied().collect();
            from_real_coords(dim, &v)
        })
        .collect())
}

/// Frobenius norm of `XY − YX`.
pub fn commutator_norm(x: &ComplexMatrix, y: &ComplexMatrix) -> f64 {
    (&(x * y) - &(y * x)).frobenius_norm()
}

/// `‖XX* − X*X‖_F ≤ tol·‖X‖_F²`.
pub fn is_normal(x: &ComplexMatrix, tol: f64) -> bool {
    let n = x.frobenius_norm();
    normality_defect(x) <= tol * n * n
}

/// `‖XX* − X*X‖_F`.
pub fn normality_defect(x: &ComplexMatrix) -> f64 {
    commutator_norm(x, &x.adjoint())
}

/// The 4×4 block `[[A, a], [a*, α]]` with `A` Hermitian 3×3 and `α` real.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedBlock {
    pub inner: HermitianOperator,
    pub coupling: [C64; 3],
    pub alpha: f64,
}

impl ReducedBlock {
    /// Partitions a 4×4 Hermitian matrix at row/column 4.
    pub fn from_4x4(m: &HermitianOperator) -> Result<Self> {
        if m.dim() != 4 {
            return Err(Error::DimensionMismatch { expected: 4, found: m.dim() });
        }
        let inner = HermitianOperator::symmetrized(ComplexMatrix::from_fn(3, |i, j| m.get(i, j)));
        let coupling = [m.get(0, 3), m.get(1, 3), m.get(2, 3)];
        Ok(Self { inner, coupling, alpha: m.get(3, 3).re })
    }

    pub fn to_4x4(&self) -> HermitianOperator {
        let mut m = ComplexMatrix::zeros(4);
        for i in 0..3 {
            for j in 0..3 {
                m.set(i, j, self.inner.get(i, j));
            }
            m.set(i, 3, self.coupling[i]);
            m.set(3, i, self.coupling[i].conj());
        }
        m.set(3, 3, C64::new(self.alpha, 0.0));
        HermitianOperator(m)
    }

    pub fn coupling_norm(&self) -> f64 {
        self.coupling.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Eigenvalues `μ` of the inner block and the rotated coupling `b = S*a`,
    /// where `S*AS = diag(μ)`.
    pub fn diagonalized(&self) -> Result<([f64; 3], [C64; 3])> {
        let eig = eig_hermitian(&self.inner)?;
        let s_adj = eig.vectors.adjoint();
        let b = s_adj.apply(&self.coupling);
        Ok(([eig.values[0], eig.values[1], eig.values[2]], [b[0], b[1], b[2]]))
    }
}

fn exact_sqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> HermitianOperator {
        let m = ComplexMatrix::from_fn(n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        HermitianOperator::symmetrized(m)
    }

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        (a - b).frobenius_norm() <= tol
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_row_major(&[ZERO, ONE, ONE, ZERO]).unwrap()
    }

    fn flip(d: usize) -> HermitianOperator {
        let mut m = ComplexMatrix::zeros(d * d);
        for i in 0..d {
            for j in 0..d {
                m.set(i * d + j, j * d + i, ONE);
            }
        }
        HermitianOperator::new(m).unwrap()
    }

    #[test]
    fn kron_identity_and_diagonal() {
        assert_eq!(kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2)), ComplexMatrix::identity(4));
        let z = ComplexMatrix::diag(&[1.0, -1.0]);
        assert_eq!(kron(&z, &z), ComplexMatrix::diag(&[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn kron_matches_index_formula() {
        let x = ComplexMatrix::unit(2, 0, 0);
        let y = pauli_x();
        let k = kron(&x, &y);
        for r in 0..4 {
            for s in 0..4 {
                let expected = x.get(r / 2, s / 2) * y.get(r % 2, s % 2);
                assert_eq!(k.get(r, s), expected);
            }
        }
        assert_eq!(k.get(0, 1), ONE);
        assert_eq!(k.get(1, 0), ONE);
        assert_eq!(k.frobenius_norm(), 2f64.sqrt());
    }

    #[test]
    fn partial_transpose_of_products_and_flip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dims = BipartiteDims::new(3).unwrap();
        let rho = random_hermitian(3, &mut rng);
        let sigma = random_hermitian(3, &mut rng);
        let pt = partial_transpose(&kron_hermitian(&rho, &sigma), dims).unwrap();
        let expected = kron(rho.matrix(), &sigma.matrix().transpose());
        assert!(close(pt.matrix(), &expected, 1e-14));

        // Brute force: F = Σ|ij⟩⟨ji|, so F^τ = Σ|ii⟩⟨jj| = d|ψ₀⟩⟨ψ₀|.
        let d2 = BipartiteDims::new(2).unwrap();
        let ft = partial_transpose(&flip(2), d2).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi0 = [c(s, 0.0), ZERO, ZERO, c(s, 0.0)];
        let target = HermitianOperator::projector(&psi0).scale(2.0);
        assert!(close(ft.matrix(), target.matrix(), 1e-15));

        let id = HermitianOperator::identity(9);
        assert_eq!(partial_transpose(&id, dims).unwrap(), id);
        assert!(partial_transpose(&id, d2).is_err());
    }

    #[test]
    fn block_family_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let dims = BipartiteDims::new(3).unwrap();
        let sigma = random_hermitian(3, &mut rng);
        let eta = random_hermitian(3, &mut rng);
        let fam = block_family(kron_hermitian(&sigma, &eta).matrix(), dims, Side::A).unwrap();
        for ((k, l), blk) in fam.iter() {
            assert!(close(blk, &sigma.matrix().scale(eta.get(k, l)), 1e-14));
        }
        let xi = random_hermitian(3, &mut rng);
        let fam = block_family(kron_hermitian(&HermitianOperator::identity(3), &xi).matrix(), dims, Side::A).unwrap();
        for ((k, l), blk) in fam.iter() {
            assert_eq!(blk, &ComplexMatrix::identity(3).scale(xi.get(k, l)));
        }
        let fam = block_family(&ComplexMatrix::identity(9), dims, Side::A).unwrap();
        for ((k, l), blk) in fam.iter() {
            let expected = if k == l { ComplexMatrix::identity(3) } else { ComplexMatrix::zeros(3) };
            assert_eq!(blk, &expected);
        }
    }

    #[test]
    fn eig_small_examples() {
        let e = eig_hermitian(&HermitianOperator::identity(3)).unwrap();
        assert!(e.values.iter().all(|v| (v - 1.0).abs() < 1e-15));
        let x = HermitianOperator::new(pauli_x()).unwrap();
        let v = eigenvalues(&x).unwrap();
        assert!((v[0] + 1.0).abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eig_2x2_matches_characteristic_roots() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let h = random_hermitian(2, &mut rng);
            let (a, dd, b) = (h.get(0, 0).re, h.get(1, 1).re, h.get(0, 1));
            let mean = 0.5 * (a + dd);
            let rad = (0.25 * (a - dd) * (a - dd) + b.norm_sqr()).sqrt();
            let v = eigenvalues(&h).unwrap();
            let tol = 1e-12 * h.frobenius_norm();
            assert!((v[0] - (mean - rad)).abs() <= tol);
            assert!((v[1] - (mean + rad)).abs() <= tol);
        }
    }

    #[test]
    fn min_eigenvalue_examples() {
        let ipf = &HermitianOperator::identity(4) + &flip(2);
        assert!(min_eigenvalue(&ipf).unwrap().abs() < 1e-14);
        let v = eigenvalues(&ipf).unwrap();
        for x in &v[1..] {
            assert!((x - 2.0).abs() < 1e-14);
        }
        let mixed = HermitianOperator::identity(9).scale(1.0 / 9.0);
        assert!((min_eigenvalue(&mixed).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(min_eigenvalue(&HermitianOperator::diag(&[3.0, -5.0])).unwrap(), -5.0);
    }

    #[test]
    fn hs_inner_examples() {
        let id = HermitianOperator::identity(4);
        assert_eq!(hs_inner(&id, &id), 4.0);
        let delta = HermitianOperator::diag(&[1.0, -1.0, 0.5, -0.5]);
        assert_eq!(hs_inner(&delta, &id), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_hermitian(4, &mut rng);
        let f = x.frobenius_norm();
        assert!((hs_inner(&x, &x) - f * f).abs() < 1e-13);
    }

    #[test]
    fn real_coords_are_isometric() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_hermitian(4, &mut rng);
        let y = random_hermitian(4, &mut rng);
        let cx = to_real_coords(&x);
        let cy = to_real_coords(&y);
        let dot: f64 = cx.iter().zip(&cy).map(|(a, b)| a * b).sum();
        assert!((dot - hs_inner(&x, &y)).abs() < 1e-13);
        assert!(close(from_real_coords(4, &cx).matrix(), x.matrix(), 1e-15));
    }

    #[test]
    fn real_span_dim_examples() {
        let id = HermitianOperator::identity(2);
        assert_eq!(real_span_dim(&[id.clone(), id.clone()]).unwrap(), 1);
        assert_eq!(real_span_dim(&hermitian_basis(3)).unwrap(), 9);
        let p0 = HermitianOperator::diag(&[1.0, 0.0]);
        let p1 = HermitianOperator::diag(&[0.0, 1.0]);
        assert_eq!(real_span_dim(&[p0, p1, id]).unwrap(), 2);
        assert_eq!(real_span_dim(&[]).unwrap(), 0);
        assert!(real_span_dim(&[HermitianOperator::identity(2), HermitianOperator::identity(3)]).is_err());
    }

    #[test]
    fn orth_complement_examples() {
        assert!(orth_complement(&hermitian_basis(2), 2, false).unwrap().is_empty());
        let comp = orth_complement(&[HermitianOperator::identity(2)], 2, false).unwrap();
        assert_eq!(comp.len(), 3);
        for (a, x) in comp.iter().enumerate() {
            assert!(x.trace().abs() < 1e-14);
            for (b, y) in comp.iter().enumerate() {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((hs_inner(x, y) - want).abs() < 1e-13);
            }
        }

        // span{I⊗Ξ} ∪ {I} on d=2 spans I⊗(all Hermitian): dimension 4.
        let id2 = HermitianOperator::identity(2);
        let mut ops: Vec<_> = hermitian_basis(2)
            .iter()
            .map(|b| kron_hermitian(&id2, &b.traceless_part()))
            .collect();
        ops.push(HermitianOperator::identity(4));
        assert_eq!(real_span_dim(&ops).unwrap(), 4);
        assert_eq!(orth_complement(&ops, 4, false).unwrap().len(), 12);
    }

    #[test]
    fn commutator_and_normality() {
        let z = ComplexMatrix::diag(&[1.0, -1.0]);
        assert_eq!(commutator_norm(&z, &ComplexMatrix::diag(&[2.0, 5.0])), 0.0);
        assert!((commutator_norm(&pauli_x(), &z) - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(commutator_norm(&pauli_x(), &ComplexMatrix::identity(2)), 0.0);

        assert!(is_normal(&z, 1e-12));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let hadamard = ComplexMatrix::from_row_major(&[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]).unwrap();
        assert!(is_normal(&hadamard, 1e-12));
        let nil = ComplexMatrix::unit(2, 0, 1);
        assert!(!is_normal(&nil, 1e-12));
        assert!(is_normal(&ComplexMatrix::zeros(3), 1e-12));
    }

    #[test]
    fn hermitian_construction_policy() {
        let mut m = ComplexMatrix::diag(&[1.0, 2.0]);
        m.set(0, 1, c(0.5, 1e-15));
        m.set(1, 0, c(0.5, 0.0));
        let h = HermitianOperator::new(m.clone()).unwrap();
        assert_eq!(h.get(0, 1), h.get(1, 0).conj());
        m.set(0, 1, c(0.5, 0.1));
        assert!(matches!(HermitianOperator::new(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn reduced_block_partition() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = random_hermitian(4, &mut rng);
        let blk = ReducedBlock::from_4x4(&m).unwrap();
        assert_eq!(blk.alpha, m.get(3, 3).re);
        for i in 0..3 {
            assert_eq!(blk.coupling[i], m.get(i, 3));
        }
        assert_eq!(blk.inner.matrix(), &blk.inner.matrix().adjoint());
        assert!(close(blk.to_4x4().matrix(), m.matrix(), 1e-15));
    }

    #[test]
    fn swap_and_partial_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let dims = BipartiteDims::new(3).unwrap();
        let a = random_hermitian(3, &mut rng);
        let b = random_hermitian(3, &mut rng);
        let ab = kron_hermitian(&a, &b);
        let ba = swap_factors(&ab, dims).unwrap();
        assert!(close(ba.matrix(), kron_hermitian(&b, &a).matrix(), 1e-15));
        let ta = partial_trace(ab.matrix(), dims, Side::A).unwrap();
        assert!(close(&ta, &a.matrix().scale(C64::new(b.trace(), 0.0)), 1e-13));
        let tb = partial_trace(ab.matrix(), dims, Side::B).unwrap();
        assert!(close(&tb, &b.matrix().scale(C64::new(a.trace(), 0.0)), 1e-13));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn hermitian(n: usize) -> impl Strategy<Value = HermitianOperator> {
            prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |v| {
                let m = ComplexMatrix::from_fn(n, |i, j| C64::new(v[i * n + j].0, v[i * n + j].1));
                HermitianOperator::symmetrized(m)
            })
        }

        fn bipartite() -> impl Strategy<Value = (BipartiteDims, HermitianOperator)> {
            (2usize..=3).prop_flat_map(|d| (Just(BipartiteDims::new(d).unwrap()), hermitian(d * d)))
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(100))]

            #[test]
            fn partial_transpose_involution((dims, x) in bipartite()) {
                let once = partial_transpose(&x, dims).unwrap();
                let twice = partial_transpose(&once, dims).unwrap();
                prop_assert_eq!(&twice, &x);
                prop_assert!((once.trace() - x.trace()).abs() < 1e-13);
                prop_assert!((once.frobenius_norm() - x.frobenius_norm()).abs() < 1e-13);
            }

            #[test]
            fn block_families_reconstruct_and_are_dual((dims, x) in bipartite()) {
                let a = block_family(x.matrix(), dims, Side::A).unwrap();
                let b = block_family(x.matrix(), dims, Side::B).unwrap();
                prop_assert!(close(&a.reconstruct(), x.matrix(), 1e-15));
                prop_assert!(close(&b.reconstruct(), x.matrix(), 1e-15));
                let d = dims.local();
                for i in 0..d { for j in 0..d { for k in 0..d { for l in 0..d {
                    prop_assert_eq!(b.get(i, j).get(k, l), a.get(k, l).get(i, j));
                }}}}
            }

            #[test]
            fn eig_reconstructs(x in (2usize..=6).prop_flat_map(hermitian)) {
                let e = eig_hermitian(&x).unwrap();
                let back = e.map_spectrum(|v| v);
                let tol = 1e-10 * x.frobenius_norm();
                prop_assert!(close(back.matrix(), x.matrix(), tol));
                prop_assert!(e.vectors.unitarity_deviation() < 1e-12);
                prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
                for n in 0..x.dim() {
                    let v = e.vector(n);
                    let xv = x.matrix().apply(&v);
                    let err: f64 = xv.iter().zip(&v).map(|(a, b)| (a - b * e.values[n]).norm_sqr()).sum::<f64>().sqrt();
                    prop_assert!(err <= 1e-12 * x.frobenius_norm().max(1.0));
                }
            }

            #[test]
            fn span_plus_complement_is_full(
                n in 2usize..=4,
                k in 0usize..20,
                seed in any::<u64>(),
                traceless in any::<bool>(),
            ) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut ops: Vec<HermitianOperator> = (0..k).map(|_| random_hermitian(n, &mut rng)).collect();
                // Some deliberately dependent members.
                if k >= 2 {
                    let dep = &ops[0] + &ops[1].scale(2.0);
                    ops.push(dep);
                }
                let comp = orth_complement(&ops, n, traceless).unwrap();
                let mut with_restriction = ops.clone();
                if traceless {
                    with_restriction.push(HermitianOperator::identity(n));
                }
                prop_assert_eq!(real_span_dim(&with_restriction).unwrap() + comp.len(), n * n);
                for g in &comp {
                    for op in &ops {
                        prop_assert!(hs_inner(g, op).abs() < 1e-9 * op.frobenius_norm().max(1.0));
                    }
                }
            }
        }
    }
}
