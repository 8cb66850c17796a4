//! Primal–dual path-following method in the eliminated coordinates.
//!
//! Primal (ours): `max cᵀz + c₀` s.t. `S = F₀ + Σ z_k F_k ⪰ 0`.
//! Dual: `min ⟨F₀, X⟩ + c₀` s.t. `⟨F_k, X⟩ = −c_k`, `X ⪰ 0`.
//!
//! The primal iterate stays strictly feasible; the dual starts at a multiple
//! of the identity and becomes feasible along the way. Directions use
//! Nesterov–Todd scaling `W = G Gᵀ` with `Gᵀ S G = G⁻¹ X G⁻ᵀ = diag(λ)`,
//! and a Mehrotra predictor–corrector step.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};

use super::dense::{self, cholesky_regularized, cholesky_solve, smat, svec_len};
use super::{
    finish, presolve, BlockSdp, Eliminated, IterationLog, SolveError, SolveResult, SolveStatus,
};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpmOptions {
    /// Relative duality gap `⟨X,S⟩ / (1 + |p| + |d|)` at which to stop.
    pub gap_tol: f64,
    /// Relative dual infeasibility at which to stop.
    pub feas_tol: f64,
    pub max_iter: usize,
}

impl Default for IpmOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-7,
            feas_tol: 1e-8,
            max_iter: 100,
        }
    }
}

struct Scaling {
    g: DMatrix<f64>,
    lambda: Vec<f64>,
}

fn nt_scaling(s: &DMatrix<f64>, x: &DMatrix<f64>) -> Option<Scaling> {
    let mut ls = s.clone();
    dense::cholesky_in_place(&mut ls).ok()?;
    let mut lx = x.clone();
    dense::cholesky_in_place(&mut lx).ok()?;
    let prod = ls.transpose() * &lx;
    let svd = prod.svd(false, true);
    let v_t = svd.v_t?;
    let lambda: Vec<f64> = svd.singular_values.iter().copied().collect();
    if lambda.iter().any(|&l| !(l > 0.0)) {
        return None;
    }
    // G = L_x V Σ^{-1/2}
    let mut g = lx * v_t.transpose();
    for (j, &l) in lambda.iter().enumerate() {
        g.column_mut(j).scale_mut(1.0 / math::sqrt(l));
    }
    Some(Scaling { g, lambda })
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

/// Scaled direction pieces for one block.
struct BlockDir {
    ds: DMatrix<f64>,
    dx: DMatrix<f64>,
}

pub fn solve_ipm(
    p: &BlockSdp,
    opts: &IpmOptions,
    start: &[f64],
) -> Result<SolveResult, SolveError> {
    let e = presolve(p, Some(start))?;
    let r = e.dim();
    let z0 = vec![0.0; r];
    let s_blocks = e.blocks_at(&z0);
    let min_eig = s_blocks
        .iter()
        .map(dense::min_eigenvalue)
        .fold(f64::INFINITY, f64::min);
    if !(min_eig > 0.0) {
        return Err(SolveError::StartNotStrictlyFeasible {
            eq_residual: p.eq_residual(start),
            min_eig,
        });
    }
    if r == 0 {
        let v = e.c0;
        return Ok(finish(
            p,
            &e,
            &z0,
            SolveStatus::Optimal,
            v,
            0.0,
            0,
            Vec::new(),
        ));
    }
    run(p, &e, opts, s_blocks)
}

fn run(
    p: &BlockSdp,
    e: &Eliminated,
    opts: &IpmOptions,
    mut s_blocks: Vec<DMatrix<f64>>,
) -> Result<SolveResult, SolveError> {
    let r = e.dim();
    let total_side: usize = e.blocks.iter().map(|b| b.side).sum();
    let c_norm = math::sqrt(e.c.iter().map(|x| x * x).sum());
    // initial dual scale, balanced against the size of the data
    let f_norm = e
        .blocks
        .iter()
        .map(|b| b.f.iter().map(|x| x * x).sum::<f64>())
        .sum::<f64>();
    let f_norm = math::sqrt(f_norm / r as f64).max(1e-12);
    let xi = ((1.0 + c_norm) / f_norm).max(1.0) * 10.0;
    let mut x_blocks: Vec<DMatrix<f64>> = e
        .blocks
        .iter()
        .map(|b| DMatrix::identity(b.side, b.side) * xi)
        .collect();
    let mut z = vec![0.0; r];
    let mut kmats: Vec<DMatrix<f64>> = e
        .blocks
        .iter()
        .map(|b| DMatrix::zeros(svec_len(b.side), r))
        .collect();
    let mut m = DMatrix::<f64>::zeros(r, r);
    let mut log = Vec::new();
    let mut status = SolveStatus::MaxIter;
    let mut iterations = 0;
    let (mut pobj, mut dobj, mut rel_gap);

    loop {
        // residuals and termination
        let mut rp: Vec<f64> = e.c.iter().map(|c| -c).collect();
        for (b, x) in e.blocks.iter().zip(&x_blocks) {
            let fx = dense::gemv_tr(&b.f, x.as_slice());
            for (a, v) in rp.iter_mut().zip(fx) {
                *a -= v;
            }
        }
        pobj = e.objective(&z);
        dobj = e.c0
            + e.blocks
                .iter()
                .zip(&x_blocks)
                .map(|(b, x)| inner(&b.f0, x))
                .sum::<f64>();
        let gap: f64 = s_blocks
            .iter()
            .zip(&x_blocks)
            .map(|(s, x)| inner(s, x))
            .sum();
        let mu = gap / total_side as f64;
        rel_gap = gap / (1.0 + pobj.abs() + dobj.abs());
        let dinf = math::sqrt(rp.iter().map(|x| x * x).sum()) / (1.0 + c_norm);
        if rel_gap <= opts.gap_tol && dinf <= opts.feas_tol {
            status = SolveStatus::Optimal;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        if !pobj.is_finite() || z.iter().any(|v| v.abs() > 1e13) {
            status = SolveStatus::InfeasibleDetected;
            break;
        }
        iterations += 1;

        // NT scaling and Schur complement
        let mut scalings = Vec::with_capacity(e.blocks.len());
        for (s, x) in s_blocks.iter().zip(&x_blocks) {
            scalings.push(nt_scaling(s, x).ok_or_else(|| {
                SolveError::Numerical(format!(
                    "lost positive definiteness at iteration {iterations}"
                ))
            })?);
        }
        m.fill(0.0);
        for ((b, sc), kmat) in e.blocks.iter().zip(&scalings).zip(kmats.iter_mut()) {
            let s = b.side;
            let s2 = s * s;
            let len = svec_len(s);
            let mut tmp = DMatrix::zeros(s, s);
            let mut ft = DMatrix::zeros(s, s);
            let fdata = b.f.as_slice();
            let gt = sc.g.transpose();
            let kdata = kmat.as_mut_slice();
            for k in 0..r {
                let fk = DMatrixView::from_slice(&fdata[k * s2..(k + 1) * s2], s, s);
                {
                    let mut out: DMatrixViewMut<'_, f64> = ft.as_view_mut();
                    dense::congruence(&sc.g, &gt, fk, &mut tmp, &mut out);
                }
                dense::svec_into(&ft.as_view(), &mut kdata[k * len..(k + 1) * len]);
            }
            dense::add_gram(&mut m, kmat);
        }
        let (lm, _) = cholesky_regularized(&m).ok_or_else(|| {
            SolveError::Numerical(format!(
                "Schur complement factorization failed at iteration {iterations}"
            ))
        })?;

        let solve_dir = |t_blocks: &[DMatrix<f64>]| -> (Vec<f64>, Vec<BlockDir>) {
            let mut rhs: Vec<f64> = rp.iter().map(|v| -v).collect();
            for (kmat, t) in kmats.iter().zip(t_blocks) {
                let kt = dense::gemv_tr(kmat, &dense::svec(t));
                for (a, v) in rhs.iter_mut().zip(kt) {
                    *a += v;
                }
            }
            let dz = cholesky_solve(&lm, &rhs);
            let dirs = kmats
                .iter()
                .zip(t_blocks)
                .zip(&e.blocks)
                .map(|((kmat, t), b)| {
                    let ds = smat(&dense::gemv(kmat, &dz), b.side);
                    let dx = t - &ds;
                    BlockDir { ds, dx }
                })
                .collect();
            (dz, dirs)
        };
        let steps = |dirs: &[BlockDir], cap: f64| -> (f64, f64) {
            let mut ap = cap;
            let mut ad = cap;
            for (d, sc) in dirs.iter().zip(&scalings) {
                ap = ap.min(dense::step_to_boundary_diag(&sc.lambda, &d.ds, cap));
                ad = ad.min(dense::step_to_boundary_diag(&sc.lambda, &d.dx, cap));
            }
            (ap, ad)
        };

        // predictor
        let t_aff: Vec<DMatrix<f64>> = scalings
            .iter()
            .map(|sc| {
                DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    sc.lambda.len(),
                    sc.lambda.iter().map(|l| -l),
                ))
            })
            .collect();
        let (_, aff) = solve_dir(&t_aff);
        let (ap, ad) = steps(&aff, 1.0);
        let mut mu_aff = 0.0;
        for (d, sc) in aff.iter().zip(&scalings) {
            let v = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&sc.lambda));
            mu_aff += inner(&(&v + &d.dx * ad), &(&v + &d.ds * ap));
        }
        mu_aff /= total_side as f64;
        let ratio = (mu_aff / mu).clamp(0.0, 1.0);
        let sigma = ratio * ratio * ratio;

        // corrector
        let t_cor: Vec<DMatrix<f64>> = aff
            .iter()
            .zip(&scalings)
            .map(|(d, sc)| {
                let s = sc.lambda.len();
                let prod = &d.dx * &d.ds;
                DMatrix::from_fn(s, s, |i, j| {
                    let mut rc = -0.5 * (prod[(i, j)] + prod[(j, i)]);
                    if i == j {
                        rc += sigma * mu - sc.lambda[i] * sc.lambda[i];
                    }
                    2.0 * rc / (sc.lambda[i] + sc.lambda[j])
                })
            })
            .collect();
        let (dz, dirs) = solve_dir(&t_cor);
        let (ap_max, ad_max) = steps(&dirs, f64::INFINITY);
        let gamma = 0.9 + 0.09 * ap.min(ad);
        let mut ap = (gamma * ap_max).min(1.0);
        let ad = (gamma * ad_max).min(1.0);

        // primal update with a positivity safeguard
        let mut accepted = false;
        for _ in 0..30 {
            let z_new: Vec<f64> = z.iter().zip(&dz).map(|(a, b)| a + ap * b).collect();
            let s_new = e.blocks_at(&z_new);
            if s_new.iter().all(|s| {
                let mut l = s.clone();
                dense::cholesky_in_place(&mut l).is_ok()
            }) {
                z = z_new;
                s_blocks = s_new;
                accepted = true;
                break;
            }
            ap *= 0.5;
        }
        if !accepted {
            return Err(SolveError::Numerical(format!(
                "primal step collapsed at iteration {iterations}"
            )));
        }
        for ((x, d), sc) in x_blocks.iter_mut().zip(&dirs).zip(&scalings) {
            let dx = &sc.g * &d.dx * sc.g.transpose();
            *x += dx * ad;
            dense::symmetrize(x);
        }
        log.push(IterationLog {
            iteration: iterations,
            primal_objective: pobj,
            dual_objective: dobj,
            gap: rel_gap,
            infeasibility: dinf,
            step: ap.min(ad),
        });
    }
    let gap = (dobj - pobj).abs();
    Ok(finish(p, e, &z, status, dobj, gap, iterations, log))
}
