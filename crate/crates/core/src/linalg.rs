//! Dense complex matrix kernel.
//!
//! Every tensor product uses lexicographic index order with the left factor
//! major: the basis vector `e_i ⊗ e_j` of `ℂ^m ⊗ ℂ^n` has index `i·n + j`.
//! Vectorization of a matrix is column-stacking: entry `(p, q)` of an
//! `r × c` matrix sits at position `q·r + p`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Default relative threshold for rank decisions.
pub const DEFAULT_TOL: f64 = 1e-9;

/// A finite complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix(DMatrix<C64>);

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CMatrix {}x{} ", self.rows(), self.cols())?;
        f.debug_list()
            .entries((0..self.rows()).map(|i| {
                (0..self.cols())
                    .map(|j| {
                        let z = self.0[(i, j)];
                        (z.re, z.im)
                    })
                    .collect::<Vec<_>>()
            }))
            .finish()
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        CMatrix(DMatrix::identity(n, n))
    }

    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected_rows: rows,
                expected_cols: cols,
                rows: entries.len(),
                cols: 1,
            });
        }
        Self::from_matrix(DMatrix::from_row_slice(rows, cols, entries))
    }

    /// Builds a matrix from real row-major entries.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        let z: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_row_major(rows, cols, &z)
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        CMatrix(DMatrix::from_fn(rows, cols, f))
    }

    pub fn diag(values: &[C64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i] } else { ZERO })
    }

    pub fn real_diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { C64::new(values[i], 0.0) } else { ZERO })
    }

    /// The matrix unit `E_{pq}`.
    pub fn unit(rows: usize, cols: usize, p: usize, q: usize) -> Self {
        let mut m = DMatrix::zeros(rows, cols);
        m[(p, q)] = ONE;
        CMatrix(m)
    }

    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(CMatrix(m))
        } else {
            Err(Error::NonFinite)
        }
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<C64>) -> Self {
        CMatrix(m)
    }

    /// Reassembles a matrix from its column-stacked vectorization.
    pub fn from_column_stack(rows: usize, cols: usize, v: &[C64]) -> Result<Self> {
        if v.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                expected_rows: rows * cols,
                expected_cols: 1,
                rows: v.len(),
                cols: 1,
            });
        }
        Self::from_matrix(DMatrix::from_column_slice(rows, cols, v))
    }

    pub fn as_matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    /// Column-stacked vectorization.
    pub fn vectorize(&self) -> Vec<C64> {
        self.0.as_slice().to_vec()
    }

    pub fn adjoint(&self) -> Self {
        CMatrix(self.0.adjoint())
    }

    pub fn scale(&self, c: C64) -> Self {
        CMatrix(&self.0 * c)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Checked matrix product.
    pub fn try_mul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.cols() != rhs.rows() {
            return Err(Error::ShapeMismatch {
                expected_rows: self.cols(),
                expected_cols: rhs.cols(),
                rows: rhs.rows(),
                cols: rhs.cols(),
            });
        }
        Ok(CMatrix(&self.0 * &rhs.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        operator_norm(self)
    }
}

impl<'a> Mul<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;

    /// Panics on inner-dimension mismatch; see [`CMatrix::try_mul`].
    fn mul(self, rhs: &'a CMatrix) -> CMatrix {
        assert_eq!(self.cols(), rhs.rows(), "matrix product shape mismatch");
        CMatrix(&self.0 * &rhs.0)
    }
}

impl<'a> Add<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &'a CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "matrix sum shape mismatch");
        CMatrix(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &'a CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "matrix difference shape mismatch");
        CMatrix(&self.0 - &rhs.0)
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;

    fn neg(self) -> CMatrix {
        CMatrix(-&self.0)
    }
}

/// Trace inner product `Tr(a†·b)`.
pub fn trace_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    assert_eq!(a.shape(), b.shape(), "inner product shape mismatch");
    a.0.iter().zip(b.0.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Kronecker product. Entry `(i·b.rows + k, j·b.cols + l)` equals `a[i,j]·b[k,l]`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    CMatrix(a.0.kronecker(&b.0))
}

/// Image of each basis index under the factor swap `ℂ^m ⊗ ℂ^n → ℂ^n ⊗ ℂ^m`:
/// position `i·n + j` holds `j·m + i`.
pub fn swap_indices(m: usize, n: usize) -> Vec<usize> {
    let mut image = vec![0; m * n];
    for i in 0..m {
        for j in 0..n {
            image[i * n + j] = j * m + i;
        }
    }
    image
}

/// Permutation matrix exchanging two tensor factors of dimensions `m` and `n`.
pub fn swap_perm(m: usize, n: usize) -> Result<CMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::ZeroDimension);
    }
    let image = swap_indices(m, n);
    let mut p = DMatrix::zeros(m * n, m * n);
    for (src, &dst) in image.iter().enumerate() {
        p[(dst, src)] = ONE;
    }
    Ok(CMatrix(p))
}

fn sorted_singular_values(m: &DMatrix<C64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Largest singular value; zero for an empty matrix.
pub fn operator_norm(a: &CMatrix) -> f64 {
    let m = &a.0;
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.iter().all(|z| *z == ZERO) {
        return 0.0;
    }
    sorted_singular_values(m).first().copied().unwrap_or(0.0)
}

/// Singular values in descending order.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    sorted_singular_values(&a.0)
}

/// Rotates `v` by a unit phase so that its first largest-magnitude entry is
/// real and positive.
pub fn sign_normalize(v: &mut [C64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let k = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-9))
        .expect("maximum is attained");
    let phase = v[k].conj() / v[k].norm();
    for z in v.iter_mut() {
        *z *= phase;
    }
    v[k] = C64::new(v[k].re, 0.0);
}

/// Householder-compresses a tall matrix to its `R` factor, which has the same
/// singular values and right singular vectors.
fn compress_rows(m: DMatrix<C64>) -> DMatrix<C64> {
    if m.nrows() <= m.ncols() {
        m
    } else {
        m.qr().r()
    }
}

/// Orthonormal basis of the approximate kernel, as raw vectors. Singular
/// values up to `tol·max(σ_max, floor)` count as zero.
pub(crate) fn nullspace_vectors(m: DMatrix<C64>, tol: f64, floor: f64) -> Vec<Vec<C64>> {
    let n = m.ncols();
    if n == 0 {
        return Vec::new();
    }
    if m.iter().all(|z| *z == ZERO) {
        return (0..n)
            .map(|k| {
                let mut v = vec![ZERO; n];
                v[k] = ONE;
                v
            })
            .collect();
    }
    let mut sq = if m.nrows() > 2 * n { compress_rows(m) } else { m };
    if sq.nrows() < n {
        // Zero rows leave the singular values unchanged and make the SVD
        // return a full set of right singular vectors.
        sq = sq.resize_vertically(n, ZERO);
    }
    let svd = sq.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma = svd.singular_values;
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    let smax = sigma[order[0]];
    let threshold = tol * smax.max(floor);
    order
        .into_iter()
        .filter(|&k| sigma[k] <= threshold)
        .map(|k| {
            let mut v: Vec<C64> = v_t.row(k).iter().map(|z| z.conj()).collect();
            sign_normalize(&mut v);
            v
        })
        .collect()
}

/// Orthonormal basis of `{v : ‖a·v‖ ≤ tol·σ_max(a)·‖v‖}` as column vectors,
/// ordered by the singular-vector order and sign-normalized. The zero matrix
/// yields the standard basis.
pub fn nullspace(a: &CMatrix, tol: f64) -> Vec<CMatrix> {
    nullspace_vectors(a.0.clone(), tol, 0.0)
        .into_iter()
        .map(|v| CMatrix(DMatrix::from_column_slice(v.len(), 1, &v)))
        .collect()
}

/// Orthonormal basis (as raw vectors) of the span of `vectors`, keeping left
/// singular directions with `σ > tol·σ_max`.
pub(crate) fn orthonormal_span(vectors: &[Vec<C64>], len: usize, tol: f64) -> Vec<Vec<C64>> {
    if vectors.is_empty() || len == 0 {
        return Vec::new();
    }
    let m = DMatrix::from_fn(len, vectors.len(), |i, j| vectors[j][i]);
    if m.iter().all(|z| *z == ZERO) {
        return Vec::new();
    }
    let svd = m.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sigma = svd.singular_values;
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    let smax = sigma[order[0]];
    order
        .into_iter()
        .filter(|&k| sigma[k] > tol * smax)
        .map(|k| {
            let mut v: Vec<C64> = u.column(k).iter().copied().collect();
            sign_normalize(&mut v);
            v
        })
        .collect()
}

/// Distance from `v` to the span of an orthonormal family.
pub(crate) fn projection_residual(basis: &[Vec<C64>], v: &[C64]) -> f64 {
    let mut r: Vec<C64> = v.to_vec();
    // Two passes of modified Gram-Schmidt keep the residual accurate when it
    // is tiny relative to ‖v‖.
    for _ in 0..2 {
        for b in basis {
            let c: C64 = b.iter().zip(r.iter()).map(|(x, y)| x.conj() * y).sum();
            for (ri, bi) in r.iter_mut().zip(b.iter()) {
                *ri -= c * bi;
            }
        }
    }
    r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `(1/dh)·Tr_H(a)` where `H` is the minor (rightmost) tensor factor.
pub fn partial_trace_minor(a: &CMatrix, dy: usize, dx: usize, dh: usize) -> Result<CMatrix> {
    if a.rows() != dy * dh || a.cols() != dx * dh {
        return Err(Error::ShapeMismatch {
            expected_rows: dy * dh,
            expected_cols: dx * dh,
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    Ok(CMatrix::from_fn(dy, dx, |y, x| {
        (0..dh).map(|j| a.0[(y * dh + j, x * dh + j)]).sum()
    }))
}

/// Extracts `f̂` with `a = f̂ ⊗ I_dh` when that factorization holds to
/// `tol·max(1, ‖a‖)` in operator norm. The candidate is the normalized
/// partial trace, which is the orthogonal projection onto `{f̂ ⊗ I}`.
pub fn factor_out_identity(
    a: &CMatrix,
    dx: usize,
    dy: usize,
    dh: usize,
    tol: f64,
) -> Result<Option<CMatrix>> {
    if dx == 0 || dy == 0 || dh == 0 {
        return Err(Error::ZeroDimension);
    }
    let traced = partial_trace_minor(a, dy, dx, dh)?;
    let candidate = traced.scale(C64::new(1.0 / dh as f64, 0.0));
    let rebuilt = kron(&candidate, &CMatrix::identity(dh));
    let residual = operator_norm(&(a - &rebuilt));
    if residual <= tol * operator_norm(a).max(1.0) {
        Ok(Some(candidate))
    } else {
        Ok(None)
    }
}

/// Accumulates row blocks of a linear system in `unknowns` variables and
/// keeps only a triangular factor with the same singular values, so that
/// arbitrarily many constraints can be stacked in bounded memory.
pub(crate) struct StackedSystem {
    unknowns: usize,
    factor: DMatrix<C64>,
    pending: Vec<DMatrix<C64>>,
    pending_rows: usize,
}

impl StackedSystem {
    pub(crate) fn new(unknowns: usize) -> Self {
        StackedSystem {
            unknowns,
            factor: DMatrix::zeros(0, unknowns),
            pending: Vec::new(),
            pending_rows: 0,
        }
    }

    pub(crate) fn push(&mut self, block: DMatrix<C64>) {
        debug_assert_eq!(block.ncols(), self.unknowns);
        if block.nrows() == 0 {
            return;
        }
        self.pending_rows += block.nrows();
        self.pending.push(block);
        if self.pending_rows >= (4 * self.unknowns).max(1024) {
            self.compress();
        }
    }

    fn compress(&mut self) {
        if self.pending.is_empty() {
            return;
        }
        let total = self.factor.nrows() + self.pending_rows;
        let mut stacked = DMatrix::zeros(total, self.unknowns);
        let mut row = 0;
        let head = std::mem::replace(&mut self.factor, DMatrix::zeros(0, self.unknowns));
        for block in std::iter::once(head).chain(self.pending.drain(..)) {
            let r = block.nrows();
            stacked.rows_mut(row, r).copy_from(&block);
            row += r;
        }
        self.pending_rows = 0;
        self.factor = compress_rows(stacked);
    }

    /// Orthonormal basis of the solution space. Singular values up to
    /// `tol·max(σ_max, scale)` count as zero, where `scale` is the size of
    /// the data the constraints were built from; a system made only of
    /// rounding noise then imposes nothing.
    pub(crate) fn solve(mut self, tol: f64, scale: f64) -> Vec<Vec<C64>> {
        self.compress();
        nullspace_vectors(self.factor, tol, scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn sample(rows: usize, cols: usize, seed: u64) -> CMatrix {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        CMatrix::from_fn(rows, cols, |_, _| {
            let mut next = || {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            };
            C64::new(next(), next())
        })
    }

    #[test]
    fn kron_with_identity_is_block_diagonal() {
        let a = sample(3, 3, 1);
        let k = kron(&CMatrix::identity(2), &a);
        for i in 0..6 {
            for j in 0..6 {
                let expected = if i / 3 == j / 3 { a.get(i % 3, j % 3) } else { ZERO };
                assert_eq!(k.get(i, j), expected);
            }
        }
        assert_eq!(kron(&a, &CMatrix::identity(1)), a);
    }

    #[test]
    fn kron_of_flip_swaps_blocks() {
        let x = CMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let k = kron(&x, &CMatrix::identity(2));
        let expected = CMatrix::from_fn(4, 4, |i, j| if (i + 2) % 4 == j { ONE } else { ZERO });
        assert_eq!(k, expected);
    }

    #[test]
    fn swap_perm_examples() {
        assert_eq!(swap_perm(1, 4).unwrap(), CMatrix::identity(4));
        let s22 = swap_perm(2, 2).unwrap();
        let expected = CMatrix::from_real(
            4,
            4,
            &[1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0., 0., 0., 0., 0., 1.],
        )
        .unwrap();
        assert_eq!(s22, expected);
        assert_eq!(swap_indices(2, 3), vec![0, 2, 4, 1, 3, 5]);
        // Image order (0,3,1,4,2,5): the k-th output basis vector comes from input index order[k].
        let s23 = swap_perm(2, 3).unwrap();
        let order: Vec<usize> = (0..6)
            .map(|row| (0..6).find(|&col| s23.get(row, col) == ONE).unwrap())
            .collect();
        assert_eq!(order, vec![0, 3, 1, 4, 2, 5]);
        assert_eq!(swap_perm(0, 2), Err(Error::ZeroDimension));
    }

    #[test]
    fn nullspace_examples() {
        assert_eq!(nullspace(&CMatrix::zeros(3, 3), 1e-9).len(), 3);
        assert!(nullspace(&CMatrix::identity(4), 1e-9).is_empty());
        let a = CMatrix::from_real(1, 2, &[1.0, 1.0]).unwrap();
        let ns = nullspace(&a, 1e-9);
        assert_eq!(ns.len(), 1);
        let v = &ns[0];
        let s = 1.0 / 2f64.sqrt();
        assert!((v.get(0, 0) - c(s)).norm() < 1e-12 || (v.get(0, 0) + c(s)).norm() < 1e-12);
        assert!((v.get(0, 0) + v.get(1, 0)).norm() < 1e-12);
    }

    #[test]
    fn operator_norm_examples() {
        assert!((operator_norm(&CMatrix::real_diag(&[3.0, 1.0])) - 3.0).abs() < 1e-12);
        assert!((operator_norm(&swap_perm(2, 3).unwrap()) - 1.0).abs() < 1e-12);
        let r = CMatrix::from_real(2, 2, &[0.0, 2.0, 0.0, 0.0]).unwrap();
        assert!((operator_norm(&r) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn factor_out_identity_examples() {
        let b = sample(3, 2, 7);
        let a = kron(&b, &CMatrix::identity(2));
        let got = factor_out_identity(&a, 2, 3, 2, 1e-9).unwrap().unwrap();
        assert!((&got - &b).max_abs_entry() < 1e-12);

        let swap = swap_perm(2, 2).unwrap();
        assert_eq!(factor_out_identity(&swap, 2, 2, 2, 1e-9).unwrap(), None);

        let z = factor_out_identity(&CMatrix::zeros(6, 4), 2, 3, 2, 1e-9).unwrap().unwrap();
        assert_eq!(z, CMatrix::zeros(3, 2));

        assert!(factor_out_identity(&CMatrix::zeros(5, 4), 2, 3, 2, 1e-9).is_err());
    }

    #[test]
    fn swap_residual_is_one() {
        // ‖SWAP − (I/2)⊗I‖: SWAP has eigenvalues ±1 and (I/2)⊗I = I/2, so the
        // residual is max|±1 − 1/2| = 3/2.
        let swap = swap_perm(2, 2).unwrap();
        let cand = partial_trace_minor(&swap, 2, 2, 2).unwrap().scale(c(0.5));
        assert!((&cand - &CMatrix::real_diag(&[0.5, 0.5])).max_abs_entry() < 1e-15);
        let r = operator_norm(&(&swap - &kron(&cand, &CMatrix::identity(2))));
        assert!((r - 1.5).abs() < 1e-12);
    }

    #[test]
    fn stacked_system_matches_direct_nullspace() {
        let blocks: Vec<CMatrix> = (0..40).map(|k| sample(70, 9, k)).collect();
        // Force a 3-dimensional kernel by killing three directions.
        let kill = sample(9, 9, 99);
        let mut basis = nullspace(&CMatrix::from_fn(6, 9, |i, j| kill.get(i, j)), 1e-12);
        assert_eq!(basis.len(), 3);
        let proj = basis
            .drain(..)
            .fold(CMatrix::zeros(9, 9), |acc, v| &acc + &(&v * &v.adjoint()));
        let keep = &CMatrix::identity(9) - &proj;
        let mut sys = StackedSystem::new(9);
        let mut full = DMatrix::zeros(0, 9);
        for b in &blocks {
            let m = (b * &keep).into_matrix();
            full = DMatrix::from_fn(full.nrows() + m.nrows(), 9, |i, j| {
                if i < full.nrows() { full[(i, j)] } else { m[(i - full.nrows(), j)] }
            });
            sys.push(m);
        }
        let a = sys.solve(1e-9, 0.0);
        let b = nullspace_vectors(full, 1e-9, 0.0);
        assert_eq!(a.len(), 3);
        assert_eq!(b.len(), 3);
        for v in &a {
            assert!(projection_residual(&b, v) < 1e-10);
        }
    }

    #[test]
    fn non_finite_rejected() {
        assert_eq!(
            CMatrix::from_row_major(1, 1, &[C64::new(f64::NAN, 0.0)]),
            Err(Error::NonFinite)
        );
    }
}
