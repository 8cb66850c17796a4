//! Channel → reduced program → solver, with timings.

use std::time::Instant;

use chanfid_core::reduction::{assemble, ParamLayout};
use chanfid_core::sdpsolve::{solve_admm, solve_ipm, AdmmOptions, IpmOptions};
use chanfid_core::{BlockSdp, ChannelSpec, Field, ReducedSdp, SolveResult, SolveStatus};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::records::{BlockRecord, PresolveRecord, SolveRecord, Timings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    #[default]
    Ipm,
    Admm,
}

impl Solver {
    pub fn as_str(self) -> &'static str {
        match self {
            Solver::Ipm => "ipm",
            Solver::Admm => "admm",
        }
    }
}

impl std::str::FromStr for Solver {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ipm" => Ok(Solver::Ipm),
            "admm" => Ok(Solver::Admm),
            _ => Err(format!("unknown solver `{s}` (expected ipm or admm)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveSettings {
    pub m: usize,
    pub level: usize,
    pub solver: Solver,
    /// Solver tolerance; `None` keeps the solver default.
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

/// An assembled instance ready for a solver.
pub struct Prepared {
    pub reduced: ReducedSdp,
    pub sdp: BlockSdp,
    pub params: ParamLayout,
    pub start: Vec<f64>,
    pub channel_ms: f64,
    pub assembly_ms: f64,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Validates the channel and assembles the reduced program.
pub fn prepare(spec: &ChannelSpec, m: usize, level: usize) -> Result<Prepared, Error> {
    if level == 0 {
        return Err(Error::BadInput("level must be ≥ 1".into()));
    }
    if m == 0 {
        return Err(Error::BadInput("M must be ≥ 1".into()));
    }
    let t = Instant::now();
    let choi = spec
        .raw_choi()
        .map_err(|e| Error::BadInput(e.to_string()))?;
    let report = choi.report().map_err(|e| Error::BadInput(e.to_string()))?;
    if !report.passes {
        return Err(Error::NotCptp(report));
    }
    let channel_ms = ms(t);

    let t = Instant::now();
    let reduced = assemble(&choi, m, level)?;
    let field = reduced.default_field();
    let (sdp, params) = reduced.to_block_sdp(field)?;
    let start = reduced.start(&params);
    Ok(Prepared {
        reduced,
        sdp,
        params,
        start,
        channel_ms,
        assembly_ms: ms(t),
    })
}

pub fn run_solver(p: &Prepared, settings: &SolveSettings) -> Result<SolveResult, Error> {
    let res = match settings.solver {
        Solver::Ipm => {
            let mut o = IpmOptions::default();
            if let Some(t) = settings.tol {
                o.gap_tol = t;
            }
            if let Some(k) = settings.max_iter {
                o.max_iter = k;
            }
            solve_ipm(&p.sdp, &o, &p.start)
        }
        Solver::Admm => {
            let mut o = AdmmOptions::default();
            if let Some(t) = settings.tol {
                o.tol = t;
            }
            if let Some(k) = settings.max_iter {
                o.max_iter = k;
            }
            solve_admm(&p.sdp, &o, Some(&p.start))
        }
    };
    res.map_err(|e| Error::Solver(e.to_string()))
}

/// Solves one instance end to end. A solver that stops without converging
/// still yields a record (with `status` other than `optimal`).
pub fn solve(
    spec: &ChannelSpec,
    channel_label: &str,
    param: Option<f64>,
    settings: &SolveSettings,
) -> Result<(SolveRecord, SolveResult), Error> {
    let total = Instant::now();
    let p = prepare(spec, settings.m, settings.level)?;
    let t = Instant::now();
    let res = run_solver(&p, settings)?;
    let solve_ms = ms(t);
    let record = SolveRecord {
        value: res.value,
        level: settings.level,
        m: settings.m,
        status: res.status.as_str().to_string(),
        gap: res.duality_gap,
        dual_value: res.dual_value,
        eq_residual: res.eq_residual,
        min_block_eig: res.min_block_eig,
        iterations: res.iterations,
        solver: settings.solver.as_str().to_string(),
        field: match p.params.field {
            Field::Real => "real",
            Field::Complex => "complex",
        }
        .to_string(),
        channel: channel_label.to_string(),
        param,
        blocks: p
            .reduced
            .stats
            .blocks
            .iter()
            .zip(&p.sdp.blocks)
            .map(|((lambda, side), b)| BlockRecord {
                partition: lambda.parts().to_vec(),
                side: *side,
                real_side: b.side,
            })
            .collect(),
        presolve: PresolveRecord::from(&res.presolve),
        timings_ms: Timings {
            channel: p.channel_ms,
            assembly: p.assembly_ms,
            solve: solve_ms,
            total: ms(total),
        },
        assignment: None,
    };
    Ok((record, res))
}

pub fn converged(res: &SolveResult) -> bool {
    res.status == SolveStatus::Optimal
}
