//! Solvers for block-structured semidefinite programs
//!
//! ```text
//!     maximize    cᵀw + c₀
//!     subject to  A w = b,
//!                 F_β(w) = F_β0 + Σ_j w_j F_βj ⪰ 0   for every block β,
//! ```
//!
//! over a real vector `w`. Equalities are removed by a presolve that writes
//! the feasible affine set as `w = w₀ + N z`; both solvers then work on the
//! free coordinates `z` only.
//!
//! - [`solve_ipm`]: primal–dual interior-point method (Nesterov–Todd scaling,
//!   Mehrotra predictor–corrector). Needs a strictly feasible start.
//! - [`solve_admm`]: operator splitting between the affine set and the PSD
//!   cone, for moderate accuracy on large instances.

mod admm;
pub mod dense;
mod ipm;
pub mod sdpa;

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use thiserror::Error;

pub use admm::{solve_admm, AdmmOptions};
pub use dense::{Elimination, SparseRow};
pub use ipm::{solve_ipm, IpmOptions};
pub use sdpa::{parse_sdpa, split_free, write_sdpa, SdpaError, SdpaProblem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("equality constraints are inconsistent (residual {residual:e})")]
    Inconsistent { residual: f64 },
    #[error("start point is not strictly feasible (equality residual {eq_residual:e}, min block eigenvalue {min_eig:e})")]
    StartNotStrictlyFeasible { eq_residual: f64, min_eig: f64 },
    #[error("supplied parametrization is invalid: {0}")]
    BadParametrization(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// One entry `coef · w_var` at position `(row, col)` (and its mirror) of a block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockEntry {
    pub var: usize,
    pub row: usize,
    pub col: usize,
    pub coef: f64,
}

/// Affine symmetric matrix map. Entries are stored for `row ≤ col` only; the
/// lower triangle is implied by symmetry.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlockMap {
    pub side: usize,
    pub constant: Vec<(usize, usize, f64)>,
    pub entries: Vec<BlockEntry>,
}

impl BlockMap {
    pub fn evaluate(&self, w: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.side, self.side);
        for &(r, c, v) in &self.constant {
            m[(r, c)] += v;
            if r != c {
                m[(c, r)] += v;
            }
        }
        for e in &self.entries {
            let v = e.coef * w[e.var];
            m[(e.row, e.col)] += v;
            if e.row != e.col {
                m[(e.col, e.row)] += v;
            }
        }
        m
    }
}

/// Affine description `w = origin + Σ_k z_k · directions[k]` of the
/// equality-feasible set, supplied by a caller that knows its structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Parametrization {
    pub origin: Vec<f64>,
    pub directions: Vec<Vec<(usize, f64)>>,
}

/// Block-structured SDP in real variables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlockSdp {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub objective_offset: f64,
    pub eq_rows: Vec<SparseRow>,
    pub blocks: Vec<BlockMap>,
    /// Optional pre-computed parametrization of `{w : A w = b}`; checked
    /// against the rows before use.
    pub parametrization: Option<Parametrization>,
}

/// Tolerance on equality residuals when checking starts and parametrizations.
pub const EQ_TOL: f64 = 1e-9;

impl BlockSdp {
    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |m: String| Err(SolveError::Malformed(m));
        if self.objective.len() != self.num_vars {
            return bad(format!(
                "objective has {} entries for {} variables",
                self.objective.len(),
                self.num_vars
            ));
        }
        for (k, r) in self.eq_rows.iter().enumerate() {
            if !r.rhs.is_finite()
                || r.coeffs
                    .iter()
                    .any(|&(j, a)| j >= self.num_vars || !a.is_finite())
            {
                return bad(format!("equality row {k} is malformed"));
            }
        }
        for (b, blk) in self.blocks.iter().enumerate() {
            let ok_pos = |r: usize, c: usize| r <= c && c < blk.side;
            if blk
                .constant
                .iter()
                .any(|&(r, c, v)| !ok_pos(r, c) || !v.is_finite())
                || blk
                    .entries
                    .iter()
                    .any(|e| !ok_pos(e.row, e.col) || e.var >= self.num_vars || !e.coef.is_finite())
            {
                return bad(format!(
                    "block {b} has an entry outside its upper triangle or an invalid variable"
                ));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, w: &[f64]) -> f64 {
        self.objective
            .iter()
            .zip(w)
            .map(|(c, x)| c * x)
            .sum::<f64>()
            + self.objective_offset
    }

    /// Largest absolute equality residual.
    pub fn eq_residual(&self, w: &[f64]) -> f64 {
        self.eq_rows
            .iter()
            .map(|r| (r.eval(w) - r.rhs).abs())
            .fold(0.0, f64::max)
    }

    pub fn evaluate_blocks(&self, w: &[f64]) -> Vec<DMatrix<f64>> {
        self.blocks.iter().map(|b| b.evaluate(w)).collect()
    }

    /// Smallest eigenvalue over all blocks (`+∞` without blocks).
    pub fn min_block_eigenvalue(&self, w: &[f64]) -> f64 {
        self.evaluate_blocks(w)
            .iter()
            .map(dense::min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn block_sides(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.side).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    InfeasibleDetected,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIter => "max_iter",
            SolveStatus::InfeasibleDetected => "infeasible_detected",
        }
    }
}

/// Per-iteration diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationLog {
    pub iteration: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// Relative gap for the IPM; combined residual for ADMM.
    pub gap: f64,
    pub infeasibility: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Objective at the returned assignment.
    pub value: f64,
    /// Dual bound (IPM) or objective estimate from the dual iterate.
    pub dual_value: f64,
    pub assignment: Vec<f64>,
    pub duality_gap: f64,
    pub eq_residual: f64,
    pub min_block_eig: f64,
    pub iterations: usize,
    pub presolve: PresolveStats,
    pub log: Vec<IterationLog>,
}

/// Size information produced by the presolve.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PresolveStats {
    pub num_vars: usize,
    pub num_rows: usize,
    /// Rank of the equality system.
    pub rank: usize,
    /// Rows found linearly dependent on the others.
    pub dependent_rows: usize,
    /// Dimension of the feasible affine set.
    pub free_dims: usize,
    pub used_parametrization: bool,
}

/// One block in the eliminated coordinates: `F(z) = f0 + Σ_k z_k F_k` with
/// `vec(F_k)` (column-major) stored as column `k` of `f`.
pub(crate) struct ElimBlock {
    pub side: usize,
    pub f0: DMatrix<f64>,
    pub f: DMatrix<f64>,
}

pub(crate) struct Eliminated {
    pub origin: Vec<f64>,
    pub directions: Vec<Vec<(usize, f64)>>,
    pub c: Vec<f64>,
    pub c0: f64,
    pub blocks: Vec<ElimBlock>,
    pub stats: PresolveStats,
}

impl Eliminated {
    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    pub fn lift(&self, z: &[f64]) -> Vec<f64> {
        let mut w = self.origin.clone();
        for (dir, &zk) in self.directions.iter().zip(z) {
            if zk != 0.0 {
                for &(j, a) in dir {
                    w[j] += a * zk;
                }
            }
        }
        w
    }

    /// `F_β(z)` for every block.
    pub fn blocks_at(&self, z: &[f64]) -> Vec<DMatrix<f64>> {
        self.blocks
            .iter()
            .map(|b| {
                let v = dense::gemv(&b.f, z);
                let mut m = b.f0.clone();
                for (x, d) in m.as_mut_slice().iter_mut().zip(v) {
                    *x += d;
                }
                dense::symmetrize(&mut m);
                m
            })
            .collect()
    }

    pub fn objective(&self, z: &[f64]) -> f64 {
        self.c.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() + self.c0
    }
}

/// Removes the equality constraints. `start`, when given, becomes the origin
/// and must satisfy the equalities within [`EQ_TOL`].
pub(crate) fn presolve(p: &BlockSdp, start: Option<&[f64]>) -> Result<Eliminated, SolveError> {
    p.validate()?;
    let n = p.num_vars;
    let (origin, directions, mut stats) = match &p.parametrization {
        Some(param) => {
            check_parametrization(p, param)?;
            let stats = PresolveStats {
                num_vars: n,
                num_rows: p.eq_rows.len(),
                rank: n - param.directions.len(),
                dependent_rows: p.eq_rows.len().saturating_sub(n - param.directions.len()),
                free_dims: param.directions.len(),
                used_parametrization: true,
            };
            (param.origin.clone(), param.directions.clone(), stats)
        }
        None => {
            let e = dense::eliminate(&p.eq_rows, n, 1e-10);
            if e.max_inconsistency > 1e-8 {
                return Err(SolveError::Inconsistent {
                    residual: e.max_inconsistency,
                });
            }
            let stats = PresolveStats {
                num_vars: n,
                num_rows: p.eq_rows.len(),
                rank: e.rank,
                dependent_rows: e.dependent_rows,
                free_dims: e.nullspace.len(),
                used_parametrization: false,
            };
            // unit-norm directions keep the Schur complement well scaled
            let dirs = e
                .nullspace
                .into_iter()
                .map(|v| {
                    let norm = crate::math::sqrt(v.iter().map(|x| x.1 * x.1).sum());
                    v.into_iter().map(|(j, a)| (j, a / norm)).collect()
                })
                .collect();
            (e.particular, dirs, stats)
        }
    };
    let origin = match start {
        Some(s) => {
            if s.len() != n {
                return Err(SolveError::Malformed(format!(
                    "start has {} entries for {n} variables",
                    s.len()
                )));
            }
            let res = p.eq_residual(s);
            if res > EQ_TOL {
                return Err(SolveError::StartNotStrictlyFeasible {
                    eq_residual: res,
                    min_eig: p.min_block_eigenvalue(s),
                });
            }
            s.to_vec()
        }
        None => origin,
    };
    stats.free_dims = directions.len();

    // per-variable block incidence
    let mut incidence: Vec<Vec<(u32, u32, u32, f64)>> = vec![Vec::new(); n];
    for (b, blk) in p.blocks.iter().enumerate() {
        for e in &blk.entries {
            incidence[e.var].push((b as u32, e.row as u32, e.col as u32, e.coef));
        }
    }
    let r = directions.len();
    let mut blocks: Vec<ElimBlock> = p
        .blocks
        .iter()
        .map(|blk| ElimBlock {
            side: blk.side,
            f0: blk.evaluate(&origin),
            f: DMatrix::zeros(blk.side * blk.side, r),
        })
        .collect();
    for (k, dir) in directions.iter().enumerate() {
        for &(j, a) in dir {
            for &(b, row, col, coef) in &incidence[j] {
                let blk = &mut blocks[b as usize];
                let s = blk.side;
                let (row, col) = (row as usize, col as usize);
                let v = a * coef;
                blk.f[(col * s + row, k)] += v;
                if row != col {
                    blk.f[(row * s + col, k)] += v;
                }
            }
        }
    }
    let c: Vec<f64> = directions
        .iter()
        .map(|dir| dir.iter().map(|&(j, a)| a * p.objective[j]).sum())
        .collect();
    let c0 = p.objective_value(&origin);
    Ok(Eliminated {
        origin,
        directions,
        c,
        c0,
        blocks,
        stats,
    })
}

fn check_parametrization(p: &BlockSdp, param: &Parametrization) -> Result<(), SolveError> {
    let n = p.num_vars;
    if param.origin.len() != n || param.directions.iter().flatten().any(|&(j, _)| j >= n) {
        return Err(SolveError::BadParametrization("index out of range".into()));
    }
    let res = p.eq_residual(&param.origin);
    if res > EQ_TOL {
        return Err(SolveError::BadParametrization(format!(
            "origin violates equalities by {res:e}"
        )));
    }
    // every direction must lie in the kernel of the equality rows
    let mut col_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, row) in p.eq_rows.iter().enumerate() {
        for &(j, a) in &row.coeffs {
            col_rows[j].push((i, a));
        }
    }
    let mut acc = vec![0.0; p.eq_rows.len()];
    let mut touched = Vec::new();
    for (k, dir) in param.directions.iter().enumerate() {
        let scale = dir.iter().map(|x| x.1.abs()).fold(0.0, f64::max).max(1.0);
        for &(j, a) in dir {
            for &(i, c) in &col_rows[j] {
                if acc[i] == 0.0 {
                    touched.push(i);
                }
                acc[i] += a * c;
            }
        }
        let worst = touched.iter().map(|&i| acc[i].abs()).fold(0.0, f64::max);
        for &i in &touched {
            acc[i] = 0.0;
        }
        touched.clear();
        if worst > EQ_TOL * scale {
            return Err(SolveError::BadParametrization(format!(
                "direction {k} leaves the feasible set (residual {worst:e})"
            )));
        }
    }
    Ok(())
}

/// Builds the result record for an assignment `z` in eliminated coordinates.
pub(crate) fn finish(
    p: &BlockSdp,
    e: &Eliminated,
    z: &[f64],
    status: SolveStatus,
    dual_value: f64,
    duality_gap: f64,
    iterations: usize,
    log: Vec<IterationLog>,
) -> SolveResult {
    let w = e.lift(z);
    SolveResult {
        status,
        value: p.objective_value(&w),
        dual_value,
        eq_residual: p.eq_residual(&w),
        min_block_eig: p.min_block_eigenvalue(&w),
        assignment: w,
        duality_gap,
        iterations,
        presolve: e.stats,
        log,
    }
}
