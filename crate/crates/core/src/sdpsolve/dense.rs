//! Dense real kernels used by the solvers: blocked Cholesky, symmetric
//! vectorization, PSD step lengths and projections, and Gauss–Jordan
//! elimination of sparse equality systems.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut, DVector};

use crate::math;

const CHOL_BLOCK: usize = 96;

/// In-place lower Cholesky factorization `A = L Lᵀ`; the strict upper
/// triangle is zeroed. Returns the failing column on breakdown.
pub fn cholesky_in_place(a: &mut DMatrix<f64>) -> Result<(), usize> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut k = 0;
    while k < n {
        let nb = CHOL_BLOCK.min(n - k);
        // factor diagonal block
        for j in k..k + nb {
            let mut d = a[(j, j)];
            for p in k..j {
                d -= a[(j, p)] * a[(j, p)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(j);
            }
            let d = math::sqrt(d);
            a[(j, j)] = d;
            for i in j + 1..k + nb {
                let mut s = a[(i, j)];
                for p in k..j {
                    s -= a[(i, p)] * a[(j, p)];
                }
                a[(i, j)] = s / d;
            }
        }
        let rest = n - k - nb;
        if rest > 0 {
            // panel: L21 = A21 L11^{-T}, row by row
            for i in k + nb..n {
                for j in k..k + nb {
                    let mut s = a[(i, j)];
                    for p in k..j {
                        s -= a[(i, p)] * a[(j, p)];
                    }
                    a[(i, j)] = s / a[(j, j)];
                }
            }
            // trailing update A22 -= L21 L21ᵀ
            let l21 = a.view((k + nb, k), (rest, nb)).clone_owned();
            let mut a22 = a.view_mut((k + nb, k + nb), (rest, rest));
            a22.gemm(-1.0, &l21, &l21.transpose(), 1.0);
        }
        k += nb;
    }
    for j in 1..n {
        for i in 0..j {
            a[(i, j)] = 0.0;
        }
    }
    Ok(())
}

/// Solves `L Lᵀ x = b` given the lower factor.
pub fn cholesky_solve(l: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    let n = l.nrows();
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for p in 0..i {
            s -= l[(i, p)] * y[p];
        }
        y[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for p in i + 1..n {
            s -= l[(p, i)] * y[p];
        }
        y[i] = s / l[(i, i)];
    }
    y
}

/// Factorizes `m + δ·diag` with the smallest `δ` in a geometric ladder that
/// succeeds. Returns the factor and the regularization used.
pub fn cholesky_regularized(m: &DMatrix<f64>) -> Option<(DMatrix<f64>, f64)> {
    let scale = (0..m.nrows())
        .map(|i| m[(i, i)].abs())
        .fold(0.0, f64::max)
        .max(1e-300);
    let mut delta = 0.0;
    for _ in 0..12 {
        let mut a = m.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += delta;
        }
        if cholesky_in_place(&mut a).is_ok() {
            return Some((a, delta));
        }
        delta = if delta == 0.0 {
            1e-14 * scale
        } else {
            delta * 100.0
        };
    }
    None
}

/// Length of the symmetric vectorization of an `s × s` matrix.
pub fn svec_len(s: usize) -> usize {
    s * (s + 1) / 2
}

/// Upper triangle, column by column, off-diagonals scaled by √2 so that
/// `svec(A)·svec(B) = ⟨A, B⟩`.
pub fn svec_into(m: &DMatrixView<'_, f64>, out: &mut [f64]) {
    let s = m.nrows();
    let r2 = core::f64::consts::SQRT_2;
    let mut k = 0;
    for c in 0..s {
        for r in 0..c {
            out[k] = r2 * m[(r, c)];
            k += 1;
        }
        out[k] = m[(c, c)];
        k += 1;
    }
}

pub fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = vec![0.0; svec_len(m.nrows())];
    svec_into(&m.as_view(), &mut out);
    out
}

/// Inverse of [`svec`].
pub fn smat(v: &[f64], s: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(s, s);
    let h = core::f64::consts::FRAC_1_SQRT_2;
    let mut k = 0;
    for c in 0..s {
        for r in 0..c {
            m[(r, c)] = h * v[k];
            m[(c, r)] = h * v[k];
            k += 1;
        }
        m[(c, c)] = v[k];
        k += 1;
    }
    m
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let s = m.nrows();
    for c in 0..s {
        for r in 0..c {
            let v = 0.5 * (m[(r, c)] + m[(c, r)]);
            m[(r, c)] = v;
            m[(c, r)] = v;
        }
    }
}

/// Smallest eigenvalue of a symmetric matrix (`+∞` for an empty one).
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Euclidean projection onto the PSD cone.
pub fn project_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let mut v = eig.eigenvectors.clone();
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        let w = math::sqrt(lam.max(0.0));
        v.column_mut(j).scale_mut(w);
    }
    let mut out = &v * v.transpose();
    symmetrize(&mut out);
    out
}

/// Largest `α ≤ cap` with `diag(d) + α·dm ⪰ 0`, for positive `d`.
pub fn step_to_boundary_diag(d: &[f64], dm: &DMatrix<f64>, cap: f64) -> f64 {
    let s = d.len();
    let inv: Vec<f64> = d.iter().map(|&x| 1.0 / math::sqrt(x)).collect();
    let scaled = DMatrix::from_fn(s, s, |r, c| inv[r] * dm[(r, c)] * inv[c]);
    let lmin = min_eigenvalue(&scaled);
    if lmin >= 0.0 {
        cap
    } else {
        (-1.0 / lmin).min(cap)
    }
}

/// Dense matrix–vector product `m·x` for a column-major matrix, written so the
/// inner loop streams contiguous columns.
pub fn gemv(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let v = DVector::from_column_slice(x);
    (m * v).as_slice().to_vec()
}

pub fn gemv_tr(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let v = DVector::from_column_slice(x);
    m.tr_mul(&v).as_slice().to_vec()
}

/// Congruence `Gᵀ F G` for one `s × s` column slice; `gt` is `Gᵀ`.
///
/// Both products go through `gemm`, which dispatches to the blocked kernel
/// (the transposed variants of nalgebra fall back to dot products).
pub fn congruence(
    g: &DMatrix<f64>,
    gt: &DMatrix<f64>,
    f: DMatrixView<'_, f64>,
    tmp: &mut DMatrix<f64>,
    out: &mut DMatrixViewMut<'_, f64>,
) {
    tmp.gemm(1.0, gt, &f, 0.0);
    out.gemm(1.0, tmp, g, 0.0);
}

/// `m += aᵀ a`, via an explicit transpose so the blocked kernel is used.
pub fn add_gram(m: &mut DMatrix<f64>, a: &DMatrix<f64>) {
    let at = a.transpose();
    m.gemm(1.0, &at, a, 1.0);
}

/// Sparse linear equality `Σ coeffs · w = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl SparseRow {
    pub fn eval(&self, w: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * w[j]).sum()
    }
}

/// Outcome of Gauss–Jordan elimination on an equality system.
#[derive(Debug, Clone)]
pub struct Elimination {
    pub num_cols: usize,
    pub rank: usize,
    /// Rows that reduced to zero on the left-hand side.
    pub dependent_rows: usize,
    /// Largest `|rhs|` among dependent rows after scaling; > tolerance means inconsistent.
    pub max_inconsistency: f64,
    /// A particular solution (free variables set to zero).
    pub particular: Vec<f64>,
    /// Sparse nullspace basis, one vector per free column.
    pub nullspace: Vec<Vec<(usize, f64)>>,
    pub free_cols: Vec<usize>,
}

/// Gauss–Jordan elimination with partial pivoting on a dense copy of the rows.
/// Rows are normalized to unit max-norm first; entries below `tol` after
/// elimination count as zero.
pub fn eliminate(rows: &[SparseRow], num_cols: usize, tol: f64) -> Elimination {
    let width = num_cols + 1;
    let mut mat: Vec<Vec<f64>> = rows
        .iter()
        .filter_map(|r| {
            let mut v = vec![0.0; width];
            for &(j, a) in &r.coeffs {
                v[j] += a;
            }
            v[num_cols] = r.rhs;
            let scale = v[..num_cols].iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if scale == 0.0 {
                // empty left-hand side: keep only for the consistency check
                return Some(v);
            }
            v.iter_mut().for_each(|x| *x /= scale);
            Some(v)
        })
        .collect();
    let m = mat.len();
    let mut rank = 0;
    let mut pivot_cols = Vec::new();
    let mut free_cols = Vec::new();
    for col in 0..num_cols {
        if rank == m {
            free_cols.push(col);
            continue;
        }
        let (best, best_abs) = (rank..m)
            .map(|i| (i, mat[i][col].abs()))
            .fold((rank, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_abs <= tol {
            free_cols.push(col);
            continue;
        }
        mat.swap(rank, best);
        let pivot = mat[rank][col];
        {
            let prow = &mut mat[rank];
            for x in prow[col..].iter_mut() {
                *x /= pivot;
            }
            prow[col] = 1.0;
        }
        let prow = mat[rank].clone();
        for (i, row) in mat.iter_mut().enumerate() {
            if i == rank {
                continue;
            }
            let f = row[col];
            if f == 0.0 {
                continue;
            }
            for (x, p) in row[col..].iter_mut().zip(&prow[col..]) {
                *x -= f * p;
            }
            row[col] = 0.0;
            // flush tiny values to keep sparsity and avoid noise pivots
            for x in row[col + 1..num_cols].iter_mut() {
                if x.abs() < tol * 1e-3 {
                    *x = 0.0;
                }
            }
        }
        pivot_cols.push(col);
        rank += 1;
    }
    let max_inconsistency = mat[rank..]
        .iter()
        .map(|r| r[num_cols].abs())
        .fold(0.0, f64::max);
    let mut particular = vec![0.0; num_cols];
    for (p, &col) in pivot_cols.iter().enumerate() {
        particular[col] = mat[p][num_cols];
    }
    let nullspace = free_cols
        .iter()
        .map(|&f| {
            let mut v = vec![(f, 1.0)];
            for (p, &col) in pivot_cols.iter().enumerate() {
                let a = mat[p][f];
                if a != 0.0 {
                    v.push((col, -a));
                }
            }
            v.sort_by_key(|e| e.0);
            v
        })
        .collect();
    Elimination {
        num_cols,
        rank,
        dependent_rows: m - rank,
        max_inconsistency,
        particular,
        nullspace,
        free_cols,
    }
}
