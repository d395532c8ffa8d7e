//! Closed-form values, example generators and analytic baselines.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::types::{CpInputMatrix, NonnegMatrix, NonnegTensor};

/// Relative eigenvalue/singular value cutoff for numerical rank.
pub const RANK_TOL: f64 = 1e-9;

/// `[[x, y], [z, w]]`, all entries nonnegative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoByTwo {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
}

impl TwoByTwo {
    pub fn new(x: f64, y: f64, z: f64, w: f64) -> Result<Self> {
        for (k, v) in [x, y, z, w].into_iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { index: vec![k / 2, k % 2] });
            }
            if v < 0.0 {
                return Err(Error::NegativeEntry { index: vec![k / 2, k % 2], value: v });
            }
        }
        Ok(Self { x, y, z, w })
    }

    pub fn to_matrix(&self) -> NonnegMatrix {
        NonnegMatrix::new(2, 2, vec![self.x, self.y, self.z, self.w]).expect("validated entries")
    }

    /// The cross ratio `min(xw, yz) / max(xw, yz)`; `None` for `xw = yz = 0`.
    fn ratio(&self) -> Result<Option<f64>> {
        if self.x == 0.0 && self.y == 0.0 && self.z == 0.0 && self.w == 0.0 {
            return Err(Error::ZeroInput);
        }
        let (d, o) = (self.x * self.w, self.y * self.z);
        if d == 0.0 && o == 0.0 {
            return Ok(None);
        }
        Ok(Some(d.min(o) / d.max(o)))
    }
}

/// Exact `τ₊` of a 2×2 nonnegative matrix: `2 − min(xw,yz)/max(xw,yz)`.
pub fn tau_plus_2x2(m: &TwoByTwo) -> Result<f64> {
    Ok(m.ratio()?.map_or(1.0, |r| 2.0 - r))
}

/// Exact `τ₊ˢᵒˢ` of a 2×2 nonnegative matrix: `2 / (1 + min(xw,yz)/max(xw,yz))`.
pub fn tau_plus_sos_2x2(m: &TwoByTwo) -> Result<f64> {
    Ok(m.ratio()?.map_or(1.0, |r| 2.0 / (1.0 + r)))
}

fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::Shape(format!("expected a square matrix, got {}x{}", a.nrows(), a.ncols())));
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    if (a - a.transpose()).iter().any(|v| v.abs() > 1e-9 * scale) {
        return Err(Error::InvalidParameter("matrix is not symmetric".into()));
    }
    let sym = (a + a.transpose()) * 0.5;
    Ok(SymmetricEigen::new(sym).eigenvalues.iter().copied().collect())
}

/// `min { t : vec(A)vec(A)ᵀ ⪯ t·A⊗A }` for PSD `A`, which equals `rank(A)`.
///
/// Diagonalizing `A = P D Pᵀ` and conjugating by `P⊗P` and `D^{-1/2}⊗D^{-1/2}`
/// reduces the inequality to `vec(I_r)vec(I_r)ᵀ ⪯ t·I_r⊗I_r`, whose
/// smallest feasible `t` is `r`, the number of positive eigenvalues.
pub fn psd_rank_lemma_value(a: &DMatrix<f64>) -> Result<f64> {
    let eig = symmetric_eigenvalues(a)?;
    let max = eig.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    if eig.is_empty() || max == 0.0 {
        return Ok(0.0);
    }
    if min < -RANK_TOL * max {
        return Err(Error::NotPsd { min_eig: min });
    }
    Ok(eig.iter().filter(|&&v| v > RANK_TOL * max).count() as f64)
}

/// Number of singular values above `rel_tol · σ_max`.
pub fn numerical_rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidParameter(format!("{name} must lie in [0, 1], got {v}")));
    }
    Ok(())
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} must be a finite nonnegative number, got {v}")));
    }
    Ok(())
}

/// The nested-rectangles matrix `M(a, b)`: `rank₊ M(a,b) = 3` iff a triangle
/// fits between `[-a,a]×[-b,b]` and `[-1,1]²`.
pub fn gen_nested_rect_matrix(a: f64, b: f64) -> Result<NonnegMatrix> {
    check_unit("a", a)?;
    check_unit("b", b)?;
    let (ap, am, bp, bm) = (1.0 + a, 1.0 - a, 1.0 + b, 1.0 - b);
    NonnegMatrix::new(
        4,
        4,
        vec![
            am, ap, ap, am, //
            bm, bm, bp, bp, //
            ap, am, am, ap, //
            bp, bp, bm, bm,
        ],
    )
}

/// `(1 + a)(1 + b) ≤ 2`.
pub fn nested_triangle_exists(a: f64, b: f64) -> bool {
    (1.0 + a) * (1.0 + b) <= 2.0
}

/// The 2×2×2 tensor with slices `A(·,·,1) = [[x,1],[1,w]]`, `A(·,·,2) = [[w,1],[1,x]]`.
pub fn gen_tensor_example(x: f64, w: f64) -> Result<NonnegTensor> {
    check_nonneg("x", x)?;
    check_nonneg("w", w)?;
    // Storage is last-index fastest: A[i][j][k].
    let slice1 = [[x, 1.0], [1.0, w]];
    let slice2 = [[w, 1.0], [1.0, x]];
    let mut data = Vec::with_capacity(8);
    for i in 0..2 {
        for j in 0..2 {
            data.push(slice1[i][j]);
            data.push(slice2[i][j]);
        }
    }
    NonnegTensor::new(vec![2, 2, 2], data)
}

/// `rank₊ ≤ 2` for [`gen_tensor_example`]: `xw ≥ 1` or `x = w`.
pub fn tensor_rank_le2(x: f64, w: f64) -> bool {
    x * w >= 1.0 || x == w
}

/// The 5×5 completely positive matrix supported on `K₂,₃` with diagonal
/// `(3+a, 3+a, 2+b, 2+b, 2+b)`; its cp-rank is 6 for all `a, b ≥ 0`.
pub fn gen_cp_example(a: f64, b: f64) -> Result<CpInputMatrix> {
    check_nonneg("a", a)?;
    check_nonneg("b", b)?;
    let (p, q) = (3.0 + a, 2.0 + b);
    CpInputMatrix::from_rows(&[
        vec![p, 0.0, 1.0, 1.0, 1.0],
        vec![0.0, p, 1.0, 1.0, 1.0],
        vec![1.0, 1.0, q, 0.0, 0.0],
        vec![1.0, 1.0, 0.0, q, 0.0],
        vec![1.0, 1.0, 0.0, 0.0, q],
    ])
}

/// `A_ii ≥ Σ_{j≠i} |A_ij|` for every row.
pub fn is_diagonally_dominant(a: &NonnegMatrix) -> bool {
    (0..a.rows()).all(|i| {
        let off: f64 = (0..a.cols()).filter(|&j| j != i).map(|j| a.get(i, j).abs()).sum();
        a.get(i, i) >= off
    })
}

/// `2^{I(X;Y)}` for the joint distribution `A / ΣA`, with `I` in bits.
pub fn mutual_information_bound(a: &NonnegMatrix) -> Result<f64> {
    let total: f64 = a.data().iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroInput);
    }
    let (m, n) = (a.rows(), a.cols());
    let row: Vec<f64> = (0..m).map(|i| (0..n).map(|j| a.get(i, j)).sum::<f64>() / total).collect();
    let col: Vec<f64> = (0..n).map(|j| (0..m).map(|i| a.get(i, j)).sum::<f64>() / total).collect();
    let mut info = 0.0;
    for i in 0..m {
        for j in 0..n {
            let p = a.get(i, j) / total;
            if p > 0.0 {
                info += p * (p / (row[i] * col[j])).log2();
            }
        }
    }
    Ok(info.max(0.0).exp2())
}
