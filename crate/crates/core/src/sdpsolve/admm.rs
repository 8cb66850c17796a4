//! Alternating direction method of multipliers in the eliminated coordinates:
//!
//! ```text
//!     minimize −cᵀz   subject to   F₀ + F z = S,   S ⪰ 0.
//! ```
//!
//! The `z`-update solves a least-squares problem with the Gram matrix
//! `FᵀF`, factored once (it does not depend on the penalty). The `S`-update
//! projects onto the PSD cone blockwise by eigenvalue clipping.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use super::dense::{self, cholesky_regularized, cholesky_solve};
use super::{finish, presolve, BlockSdp, IterationLog, SolveError, SolveResult, SolveStatus};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmOptions {
    /// Relative tolerance on the primal and dual residuals and on the
    /// primal–dual objective gap.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial penalty.
    pub rho: f64,
    /// Over-relaxation factor in `(0, 2)`.
    pub relaxation: f64,
}

impl Default for AdmmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-5,
            max_iter: 20_000,
            rho: 1.0,
            relaxation: 1.6,
        }
    }
}

fn frob(blocks: &[DMatrix<f64>]) -> f64 {
    math::sqrt(blocks.iter().map(|b| b.norm_squared()).sum())
}

/// `Σ_β F_βᵀ vec(M_β)`.
fn apply_ft(p: &super::Eliminated, m: &[DMatrix<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; p.dim()];
    for (b, mb) in p.blocks.iter().zip(m) {
        for (o, v) in out.iter_mut().zip(dense::gemv_tr(&b.f, mb.as_slice())) {
            *o += v;
        }
    }
    out
}

/// Dual objective `c₀ + ⟨X, F₀⟩` at `X = −ρU`; the scaled multiplier `U` is
/// negative semidefinite at optimality.
fn dual_objective(e: &super::Eliminated, u_blocks: &[DMatrix<f64>], rho: f64) -> f64 {
    e.c0 - rho
        * e.blocks
            .iter()
            .zip(u_blocks)
            .map(|(b, u)| b.f0.dot(u))
            .sum::<f64>()
}

/// Solves with ADMM. `start`, if given, must satisfy the equalities; the
/// cone constraint may be violated.
pub fn solve_admm(
    p: &BlockSdp,
    opts: &AdmmOptions,
    start: Option<&[f64]>,
) -> Result<SolveResult, SolveError> {
    let e = presolve(p, start)?;
    let r = e.dim();
    let mut z = vec![0.0; r];
    if r == 0 {
        let v = e.c0;
        return Ok(finish(
            p,
            &e,
            &z,
            SolveStatus::Optimal,
            v,
            0.0,
            0,
            Vec::new(),
        ));
    }
    let mut gram = DMatrix::<f64>::zeros(r, r);
    for b in &e.blocks {
        dense::add_gram(&mut gram, &b.f);
    }
    let (lg, _) = cholesky_regularized(&gram)
        .ok_or_else(|| SolveError::Numerical("Gram matrix factorization failed".into()))?;

    let mut s_blocks: Vec<DMatrix<f64>> = e.blocks_at(&z).iter().map(dense::project_psd).collect();
    let mut u_blocks: Vec<DMatrix<f64>> = e
        .blocks
        .iter()
        .map(|b| DMatrix::zeros(b.side, b.side))
        .collect();
    let mut rho = opts.rho;
    let alpha = opts.relaxation;
    let dim_total: usize = e.blocks.iter().map(|b| b.side * b.side).sum();
    let sqrt_dim = math::sqrt(dim_total as f64);
    let mut log = Vec::new();
    let mut status = SolveStatus::MaxIter;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        // z-update: FᵀF z = c/ρ − Fᵀ(F₀ − S + U)
        let diff: Vec<DMatrix<f64>> = e
            .blocks
            .iter()
            .zip(&s_blocks)
            .zip(&u_blocks)
            .map(|((b, s), u)| &b.f0 - s + u)
            .collect();
        let ft = apply_ft(&e, &diff);
        let rhs: Vec<f64> = e.c.iter().zip(&ft).map(|(c, f)| c / rho - f).collect();
        z = cholesky_solve(&lg, &rhs);
        let fz = e.blocks_at(&z);

        let s_old = s_blocks.clone();
        let mut r_blocks = Vec::with_capacity(fz.len());
        for ((f, s), u) in fz.iter().zip(s_blocks.iter_mut()).zip(u_blocks.iter_mut()) {
            let relaxed = f * alpha + &*s * (1.0 - alpha);
            *s = dense::project_psd(&(&relaxed + &*u));
            *u += &relaxed - &*s;
            r_blocks.push(f - &*s);
        }
        let primal_res = frob(&r_blocks);
        let ds: Vec<DMatrix<f64>> = s_blocks.iter().zip(&s_old).map(|(a, b)| a - b).collect();
        let dual_vec = apply_ft(&e, &ds);
        let dual_res = rho * math::sqrt(dual_vec.iter().map(|x| x * x).sum());

        let eps_p = opts.tol * (sqrt_dim + frob(&fz).max(frob(&s_blocks)));
        let u_scaled: Vec<f64> = apply_ft(&e, &u_blocks);
        let eps_d = opts.tol * (sqrt_dim + rho * math::sqrt(u_scaled.iter().map(|x| x * x).sum()));
        let pobj = e.objective(&z);
        let dobj = dual_objective(&e, &u_blocks, rho);
        let rel_gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let done = primal_res <= eps_p && dual_res <= eps_d && rel_gap <= opts.tol;
        if iterations % 10 == 0 || done {
            log.push(IterationLog {
                iteration: iterations,
                primal_objective: pobj,
                dual_objective: dobj,
                gap: rel_gap,
                infeasibility: primal_res.max(dual_res),
                step: rho,
            });
        }
        if done {
            status = SolveStatus::Optimal;
            break;
        }
        // residual balancing
        if iterations % 10 == 0 {
            let scale = if primal_res > 10.0 * dual_res {
                2.0
            } else if dual_res > 10.0 * primal_res {
                0.5
            } else {
                1.0
            };
            if scale != 1.0 {
                rho *= scale;
                for u in u_blocks.iter_mut() {
                    *u /= scale;
                }
            }
        }
    }
    let dual = dual_objective(&e, &u_blocks, rho);
    let pobj = e.objective(&z);
    Ok(finish(
        p,
        &e,
        &z,
        status,
        dual,
        (dual - pobj).abs(),
        iterations,
        log,
    ))
}

#[cfg(test)]
mod tests {
    use super::super::tests::one_var;
    use super::super::{BlockEntry, BlockMap};
    use super::*;

    #[test]
    fn one_variable_instance() {
        let res = solve_admm(&one_var(), &AdmmOptions::default(), None).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert!((res.value - 1.0).abs() < 1e-4, "{}", res.value);
    }

    #[test]
    fn correlation_bound() {
        let block = |v: usize| BlockMap {
            side: 2,
            constant: vec![(0, 0, 1.0), (1, 1, 1.0)],
            entries: vec![BlockEntry {
                var: v,
                row: 0,
                col: 1,
                coef: 1.0,
            }],
        };
        let p = BlockSdp {
            num_vars: 2,
            objective: vec![1.0, 1.0],
            blocks: vec![block(0), block(1)],
            ..Default::default()
        };
        let res = solve_admm(&p, &AdmmOptions::default(), None).unwrap();
        assert!((res.value - 2.0).abs() < 1e-4, "{}", res.value);
    }

    #[test]
    fn zero_objective_finds_feasible_point() {
        let mut p = one_var();
        p.objective = vec![0.0];
        let res = solve_admm(&p, &AdmmOptions::default(), None).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert!(res.eq_residual <= 1e-6);
        assert!(res.min_block_eig >= -1e-5);
    }
}
