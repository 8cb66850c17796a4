//! Dense complex linear algebra shared by the rest of the crate.
//!
//! Matrices are row-major. Multipartite operators always carry an explicit
//! [`SystemShape`]; nothing here reorders tensor factors implicitly.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Hermiticity tolerance used by eigenvalue routines, relative to `max(1, max|m_ij|)`.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("invalid subsystem specification: {0}")]
    InvalidSystems(&'static str),
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::ShapeMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Real matrix from row slices.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let nr = rows.len();
        let nc = rows.first().map_or(0, |r| r.len());
        Self::from_fn(nr, nc, |r, c| Complex64::new(rows[r][c], 0.0))
    }

    /// `|i><j|` of the given side.
    pub fn unit(side: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(side, side);
        m[(i, j)] = Complex64::new(1.0, 0.0);
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::ShapeMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, LinalgError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self, LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::ShapeMismatch {
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        })
    }

    pub fn add_assign_scaled(&mut self, other: &Self, s: Complex64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        crate::math::sqrt(self.data.iter().map(|z| z.norm_sqr()).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |m_ij - conj(m_ji)|`; infinite for non-square input.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev = 0.0f64;
        for r in 0..self.rows {
            for c in r..self.cols {
                dev = dev.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// True when every imaginary part is below `tol` in absolute value.
    pub fn is_real(&self, tol: f64) -> bool {
        self.data.iter().all(|z| z.im.abs() <= tol)
    }

    pub fn real_part(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.re).collect()
    }

    fn check_hermitian(&self) -> Result<(), LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let deviation = self.hermitian_deviation();
        if deviation > HERMITIAN_TOL * self.max_abs().max(1.0) {
            return Err(LinalgError::NotHermitian { deviation });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Ordered subsystem dimensions of a multipartite space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemShape {
    dims: Vec<usize>,
}

impl SystemShape {
    pub fn new(dims: Vec<usize>) -> Result<Self, LinalgError> {
        if dims.contains(&0) {
            return Err(LinalgError::InvalidSystems(
                "subsystem dimension must be at least 1",
            ));
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
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

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.dims[k + 1];
        }
        strides
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac, br, bc) = (a.rows, a.cols, b.rows, b.cols);
    ComplexMatrix::from_fn(ar * br, ac * bc, |r, c| {
        a[(r / br, c / bc)] * b[(r % br, c % bc)]
    })
}

/// Index plan for a partial trace: `out[a][b] = Σ_t m[kept[a] + traced[t]][kept[b] + traced[t]]`.
///
/// Exposed so that the same contraction can be applied to symbolic entries
/// (the dense oracle traces matrices of linear forms).
#[derive(Debug, Clone)]
pub struct PartialTracePlan {
    pub kept_offsets: Vec<usize>,
    pub traced_offsets: Vec<usize>,
    pub kept_shape: SystemShape,
}

impl PartialTracePlan {
    pub fn new(shape: &SystemShape, traced: &[usize]) -> Result<Self, LinalgError> {
        if traced.iter().any(|&t| t >= shape.len()) {
            return Err(LinalgError::InvalidSystems(
                "traced subsystem index out of range",
            ));
        }
        let strides = shape.strides();
        let is_traced = |k: usize| traced.contains(&k);
        let kept: Vec<usize> = (0..shape.len()).filter(|&k| !is_traced(k)).collect();
        let tr: Vec<usize> = (0..shape.len()).filter(|&k| is_traced(k)).collect();
        let offsets = |systems: &[usize]| -> Vec<usize> {
            let mut offs = vec![0usize];
            for &k in systems {
                let mut next = Vec::with_capacity(offs.len() * shape.dims[k]);
                for &o in &offs {
                    for v in 0..shape.dims[k] {
                        next.push(o + v * strides[k]);
                    }
                }
                offs = next;
            }
            offs
        };
        let kept_dims: Vec<usize> = kept.iter().map(|&k| shape.dims[k]).collect();
        Ok(Self {
            kept_offsets: offsets(&kept),
            traced_offsets: offsets(&tr),
            kept_shape: SystemShape { dims: kept_dims },
        })
    }
}

/// Marginal on the subsystems not listed in `traced`, kept in their original order.
pub fn partial_trace(
    m: &ComplexMatrix,
    shape: &SystemShape,
    traced: &[usize],
) -> Result<ComplexMatrix, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    if m.rows != shape.total() {
        return Err(LinalgError::ShapeMismatch {
            expected: shape.total(),
            found: m.rows,
        });
    }
    let plan = PartialTracePlan::new(shape, traced)?;
    let k = plan.kept_offsets.len();
    Ok(ComplexMatrix::from_fn(k, k, |a, b| {
        let (ra, rb) = (plan.kept_offsets[a], plan.kept_offsets[b]);
        plan.traced_offsets
            .iter()
            .map(|&t| m[(ra + t, rb + t)])
            .sum()
    }))
}

/// Index map of a subsystem reordering: new position `k` holds old subsystem `perm[k]`.
/// Returns, for every new basis index, the old basis index.
pub fn permutation_index_map(
    shape: &SystemShape,
    perm: &[usize],
) -> Result<Vec<usize>, LinalgError> {
    let n = shape.len();
    let mut seen = vec![false; n];
    if perm.len() != n
        || perm
            .iter()
            .any(|&p| p >= n || core::mem::replace(&mut seen[p], true))
    {
        return Err(LinalgError::InvalidSystems(
            "not a permutation of the subsystems",
        ));
    }
    let old_strides = shape.strides();
    let new_shape = SystemShape {
        dims: perm.iter().map(|&p| shape.dims[p]).collect(),
    };
    let new_strides = new_shape.strides();
    let total = shape.total();
    Ok((0..total)
        .map(|idx| {
            let mut old = 0;
            for k in 0..n {
                let digit = (idx / new_strides[k]) % new_shape.dims[k];
                old += digit * old_strides[perm[k]];
            }
            old
        })
        .collect())
}

/// Reorders tensor factors: the result lives on `shape.dims[perm[0]] ⊗ shape.dims[perm[1]] ⊗ …`.
pub fn permute_systems(
    m: &ComplexMatrix,
    shape: &SystemShape,
    perm: &[usize],
) -> Result<ComplexMatrix, LinalgError> {
    if m.rows != shape.total() || m.cols != shape.total() {
        return Err(LinalgError::ShapeMismatch {
            expected: shape.total(),
            found: m.rows,
        });
    }
    let map = permutation_index_map(shape, perm)?;
    Ok(ComplexMatrix::from_fn(m.rows, m.cols, |r, c| {
        m[(map[r], map[c])]
    }))
}

/// Row-stacking vectorization: `vec(|i><j|) = |i>|j>`.
pub fn vec(m: &ComplexMatrix) -> Vec<Complex64> {
    m.data.clone()
}

/// Real symmetric embedding `[[Re h, -Im h], [Im h, Re h]]`.
pub fn realify(h: &ComplexMatrix) -> Result<DMatrix<f64>, LinalgError> {
    h.check_hermitian()?;
    let n = h.rows;
    let mut out = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            let z = h[(r, c)];
            out[(r, c)] = z.re;
            out[(r + n, c + n)] = z.re;
            out[(r, c + n)] = -z.im;
            out[(r + n, c)] = z.im;
        }
    }
    // Symmetrize away rounding noise allowed by the Hermitian tolerance.
    let t = out.transpose();
    out += t;
    out *= 0.5;
    Ok(out)
}

/// Ascending eigenvalues of a real symmetric matrix.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Ascending eigenvalues of a Hermitian matrix, computed on its real embedding.
pub fn eigenvalues_hermitian(m: &ComplexMatrix) -> Result<Vec<f64>, LinalgError> {
    let real = realify(m)?;
    // Every eigenvalue appears twice in the embedding.
    Ok(symmetric_eigenvalues(&real)
        .into_iter()
        .step_by(2)
        .collect())
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64, LinalgError> {
    Ok(eigenvalues_hermitian(m)?.first().copied().unwrap_or(0.0))
}

/// Trace norm of a Hermitian matrix.
pub fn trace_norm_hermitian(m: &ComplexMatrix) -> Result<f64, LinalgError> {
    Ok(eigenvalues_hermitian(m)?.iter().map(|v| v.abs()).sum())
}
