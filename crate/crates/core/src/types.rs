//! Validated containers for nonnegative matrices, tensors and cp inputs.
//!
//! Indices are 0-based throughout the library API. Reports, constraint names
//! and the text dump of a problem switch to 1-based indices.
//!
//! Vectorization is column-major: entry `(i, j)` of an `m × n` matrix sits at
//! position `j * m + i`, so that `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Default support threshold: an entry belongs to the support iff it is `> 1e-12`.
pub const DEFAULT_EPS_ZERO: f64 = 1e-12;

/// Default tolerance for the symmetry/PSD checks of [`CpInputMatrix`].
pub const DEFAULT_CP_TOL: f64 = 1e-9;

fn check_entries<'a>(
    entries: impl Iterator<Item = (Vec<usize>, &'a f64)>,
) -> Result<()> {
    for (index, &v) in entries {
        if !v.is_finite() {
            return Err(Error::NonFinite { index });
        }
        if v < 0.0 {
            return Err(Error::NegativeEntry { index, value: v });
        }
    }
    Ok(())
}

fn check_eps(eps_zero: f64) -> Result<()> {
    if !(eps_zero >= 0.0 && eps_zero.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "eps_zero must be a finite nonnegative number, got {eps_zero}"
        )));
    }
    Ok(())
}

/// A dense `m × n` matrix with nonnegative entries, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct NonnegMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    eps_zero: f64,
}

impl NonnegMatrix {
    /// Builds a matrix from row-major data.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::with_eps_zero(rows, cols, data, DEFAULT_EPS_ZERO)
    }

    pub fn with_eps_zero(rows: usize, cols: usize, data: Vec<f64>, eps_zero: f64) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries given for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        check_eps(eps_zero)?;
        check_entries(
            data.iter()
                .enumerate()
                .map(|(k, v)| (vec![k / cols.max(1), k % cols.max(1)], v)),
        )?;
        Ok(Self { rows, cols, data, eps_zero })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("rows have different lengths".into()));
        }
        Self::new(m, n, rows.concat())
    }

    /// Inverse of [`NonnegMatrix::vectorize`].
    pub fn from_col_major(rows: usize, cols: usize, v: &[f64]) -> Result<Self> {
        if v.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries given for a {rows}x{cols} matrix",
                v.len()
            )));
        }
        let mut data = vec![0.0; rows * cols];
        for j in 0..cols {
            for i in 0..rows {
                data[i * cols + j] = v[j * rows + i];
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Result<Self> {
        let data = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)])
            .collect();
        Self::new(m.nrows(), m.ncols(), data)
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { rows: n, cols: n, data, eps_zero: DEFAULT_EPS_ZERO }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![1.0; rows * cols], eps_zero: DEFAULT_EPS_ZERO }
    }

    pub fn diag(d: &[f64]) -> Result<Self> {
        let n = d.len();
        let mut data = vec![0.0; n * n];
        for (i, &v) in d.iter().enumerate() {
            data[i * n + i] = v;
        }
        Self::new(n, n, data)
    }

    /// Returns the same matrix with a different support threshold.
    pub fn set_eps_zero(mut self, eps_zero: f64) -> Result<Self> {
        check_eps(eps_zero)?;
        self.eps_zero = eps_zero;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn eps_zero(&self) -> f64 {
        self.eps_zero
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Row-major entries.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_supported(&self, i: usize, j: usize) -> bool {
        self.get(i, j) > self.eps_zero
    }

    /// Support entries `(i, j)` sorted lexicographically.
    pub fn support(&self) -> Vec<(usize, usize)> {
        (0..self.rows)
            .flat_map(|i| (0..self.cols).map(move |j| (i, j)))
            .filter(|&(i, j)| self.is_supported(i, j))
            .collect()
    }

    /// Column-major stacking of the entries.
    pub fn vectorize(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.rows * self.cols);
        for j in 0..self.cols {
            for i in 0..self.rows {
                v.push(self.get(i, j));
            }
        }
        v
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        Self { rows: self.cols, cols: self.rows, data, eps_zero: self.eps_zero }
    }

    /// Multiplies every entry by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::NonPositiveScale(factor));
        }
        Ok(Self {
            data: self.data.iter().map(|v| v * factor).collect(),
            ..self.clone()
        })
    }

    /// `D₁ A D₂` with `D₁ = diag(d_left)`, `D₂ = diag(d_right)`.
    pub fn diag_scale(&self, d_left: &[f64], d_right: &[f64]) -> Result<Self> {
        if d_left.len() != self.rows || d_right.len() != self.cols {
            return Err(Error::Shape(format!(
                "scaling vectors of length {}/{} for a {}x{} matrix",
                d_left.len(),
                d_right.len(),
                self.rows,
                self.cols
            )));
        }
        if let Some(&bad) = d_left.iter().chain(d_right).find(|&&d| !(d > 0.0 && d.is_finite())) {
            return Err(Error::NonPositiveScale(bad));
        }
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[i * self.cols + j] *= d_left[i] * d_right[j];
            }
        }
        Ok(out)
    }

    /// Block-diagonal matrix `[[A, 0], [0, B]]`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let rows = self.rows + other.rows;
        let cols = self.cols + other.cols;
        let mut data = vec![0.0; rows * cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[i * cols + j] = self.get(i, j);
            }
        }
        for i in 0..other.rows {
            for j in 0..other.cols {
                data[(self.rows + i) * cols + self.cols + j] = other.get(i, j);
            }
        }
        Self { rows, cols, data, eps_zero: self.eps_zero.max(other.eps_zero) }
    }

    /// `P₁ A P₂`: row `k` of the result is row `row_perm[k]` of `A`, likewise for columns.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> Result<Self> {
        if !is_permutation(row_perm, self.rows) || !is_permutation(col_perm, self.cols) {
            return Err(Error::Shape("invalid permutation".into()));
        }
        let data = row_perm
            .iter()
            .flat_map(|&i| col_perm.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        Ok(Self { data, ..self.clone() })
    }

    /// The submatrix `A[I, J]`.
    pub fn submatrix(&self, row_idx: &[usize], col_idx: &[usize]) -> Result<Self> {
        if row_idx.iter().any(|&i| i >= self.rows) || col_idx.iter().any(|&j| j >= self.cols) {
            return Err(Error::Shape("submatrix index out of range".into()));
        }
        let data = row_idx
            .iter()
            .flat_map(|&i| col_idx.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        Ok(Self { rows: row_idx.len(), cols: col_idx.len(), data, eps_zero: self.eps_zero })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape("cannot add matrices of different shapes".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { data, ..self.clone() })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let prod = self.to_dmatrix() * other.to_dmatrix();
        Ok(Self { eps_zero: self.eps_zero, ..Self::from_dmatrix(&prod)? })
    }
}

fn is_permutation(p: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    p.len() == n
        && p.iter().all(|&k| k < n && !std::mem::replace(&mut seen[k], true))
}

/// Kronecker product with the block layout `[a_ij B]`.
pub fn kronecker(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, n) = a.shape();
    let (p, q) = b.shape();
    DMatrix::from_fn(m * p, n * q, |r, c| a[(r / p, c / q)] * b[(r % p, c % q)])
}

/// A pair of matrix positions, ordered by the strict product order
/// `(i,j) < (k,l) ⇔ i < k ∧ j < l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MatrixIndexPair {
    pub first: (usize, usize),
    pub second: (usize, usize),
}

impl MatrixIndexPair {
    pub fn new(first: (usize, usize), second: (usize, usize)) -> Self {
        Self { first, second }
    }

    pub fn is_strictly_ordered(&self) -> bool {
        self.first.0 < self.second.0 && self.first.1 < self.second.1
    }

    /// The "cross" pair `((i,l), (k,j))` sharing the same 2×2 minor.
    pub fn crossed(&self) -> Self {
        Self {
            first: (self.first.0, self.second.1),
            second: (self.second.0, self.first.1),
        }
    }

    /// Every strictly ordered pair of an `m × n` index grid, lexicographic in `(i, k, j, l)`.
    pub fn strictly_ordered(rows: usize, cols: usize) -> impl Iterator<Item = Self> {
        (0..rows).flat_map(move |i| {
            (i + 1..rows).flat_map(move |k| {
                (0..cols).flat_map(move |j| {
                    (j + 1..cols).map(move |l| Self::new((i, j), (k, l)))
                })
            })
        })
    }
}

/// A dense nonnegative tensor of order ≥ 2; the last index varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct NonnegTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
    eps_zero: f64,
}

impl NonnegTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        Self::with_eps_zero(shape, data, DEFAULT_EPS_ZERO)
    }

    pub fn with_eps_zero(shape: Vec<usize>, data: Vec<f64>, eps_zero: f64) -> Result<Self> {
        if shape.len() < 2 {
            return Err(Error::Shape(format!("tensor order must be >= 2, got {}", shape.len())));
        }
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::Shape(format!("tensor dimensions must be positive: {shape:?}")));
        }
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(Error::Shape(format!(
                "{} entries given for a tensor of shape {shape:?}",
                data.len()
            )));
        }
        check_eps(eps_zero)?;
        let t = Self { shape, data, eps_zero };
        check_entries(t.data.iter().enumerate().map(|(k, v)| (t.multi_index(k), v)))?;
        Ok(t)
    }

    pub fn from_matrix(a: &NonnegMatrix) -> Self {
        Self {
            shape: vec![a.rows(), a.cols()],
            data: a.data().to_vec(),
            eps_zero: a.eps_zero(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn eps_zero(&self) -> f64 {
        self.eps_zero
    }

    pub fn set_eps_zero(mut self, eps_zero: f64) -> Result<Self> {
        check_eps(eps_zero)?;
        self.eps_zero = eps_zero;
        Ok(self)
    }

    /// Entries in storage order (last index fastest).
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &d)| acc * d + i)
    }

    pub fn multi_index(&self, mut k: usize) -> Vec<usize> {
        let mut idx = vec![0; self.shape.len()];
        for (slot, &d) in idx.iter_mut().zip(&self.shape).rev() {
            *slot = k % d;
            k /= d;
        }
        idx
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.linear_index(idx)]
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// Support multi-indices in lexicographic order.
    pub fn support(&self) -> Vec<Vec<usize>> {
        (0..self.data.len())
            .filter(|&k| self.data[k] > self.eps_zero)
            .map(|k| self.multi_index(k))
            .collect()
    }

    /// `A'[i₁..iₙ] = d¹[i₁]⋯dⁿ[iₙ] A[i₁..iₙ]`.
    pub fn diag_scale(&self, scales: &[Vec<f64>]) -> Result<Self> {
        if scales.len() != self.order()
            || scales.iter().zip(&self.shape).any(|(s, &d)| s.len() != d)
        {
            return Err(Error::Shape("scaling vectors do not match tensor shape".into()));
        }
        if let Some(&bad) = scales.iter().flatten().find(|&&d| !(d > 0.0 && d.is_finite())) {
            return Err(Error::NonPositiveScale(bad));
        }
        let mut out = self.clone();
        for k in 0..self.data.len() {
            let idx = self.multi_index(k);
            let f: f64 = idx.iter().zip(scales).map(|(&i, s)| s[i]).product();
            out.data[k] *= f;
        }
        Ok(out)
    }
}

/// A symmetric, entrywise nonnegative, positive semidefinite matrix: the
/// necessary conditions for complete positivity. Membership in the completely
/// positive cone itself is not checked.
#[derive(Debug, Clone, PartialEq)]
pub struct CpInputMatrix {
    inner: NonnegMatrix,
    tol: f64,
}

impl CpInputMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        Self::from_matrix(NonnegMatrix::new(n, n, data)?, DEFAULT_CP_TOL)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_matrix(NonnegMatrix::from_rows(rows)?, DEFAULT_CP_TOL)
    }

    /// Validates symmetry (relative to the largest entry) and positive
    /// semidefiniteness (smallest eigenvalue ≥ −tol·‖A‖₂).
    pub fn from_matrix(a: NonnegMatrix, tol: f64) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(Error::Shape(format!("cp input must be square, got {}x{}", a.rows(), a.cols())));
        }
        if !(tol >= 0.0 && tol.is_finite()) {
            return Err(Error::InvalidParameter(format!("tolerance must be nonnegative, got {tol}")));
        }
        let n = a.rows();
        let scale = a.max_entry().max(1.0);
        for i in 0..n {
            for j in i + 1..n {
                let diff = (a.get(i, j) - a.get(j, i)).abs();
                if diff > tol * scale {
                    return Err(Error::NotSymmetric { i: i + 1, j: j + 1, diff });
                }
            }
        }
        if n > 0 {
            let sym = a.to_dmatrix();
            let sym = (&sym + sym.transpose()) * 0.5;
            let eig = SymmetricEigen::new(sym).eigenvalues;
            let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
            let norm = eig.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if min < -tol * norm.max(f64::MIN_POSITIVE) {
                return Err(Error::NotPsd { min_eig: min });
            }
        }
        Ok(Self { inner: a, tol })
    }

    pub fn n(&self) -> usize {
        self.inner.rows()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner.get(i, j)
    }

    pub fn as_matrix(&self) -> &NonnegMatrix {
        &self.inner
    }
}
