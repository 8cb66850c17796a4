//! Invariant suites behind `chanfid verify`.

use std::time::Instant;

use chanfid_core::channels::builtin_channel;
use chanfid_core::oracle::{brute_force_pairing, build_dense_program};
use chanfid_core::orbitbasis::enumerate_orbits;
use chanfid_core::reduction::assemble;
use chanfid_core::sdpsolve::{solve_ipm, IpmOptions};
use chanfid_core::symrep::{pairing_table, partitions, semistandard_tableaux};
use chanfid_core::{ChoiMatrix, SolveResult};
use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Combinatorics,
    Pairing,
    Oracle,
    Monotonic,
}

impl Suite {
    pub const ALL: [Suite; 4] = [
        Suite::Combinatorics,
        Suite::Pairing,
        Suite::Oracle,
        Suite::Monotonic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Combinatorics => "combinatorics",
            Suite::Pairing => "pairing",
            Suite::Oracle => "oracle",
            Suite::Monotonic => "monotonic",
        }
    }

    /// Parses a `--suite` argument; `all` expands to every suite.
    pub fn parse_arg(s: &str) -> Result<Vec<Suite>, Error> {
        if s == "all" {
            return Ok(Suite::ALL.to_vec());
        }
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .map(|x| vec![x])
            .ok_or_else(|| {
                Error::BadInput(format!(
                    "unknown suite `{s}` (expected combinatorics, pairing, oracle, monotonic or all)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub elapsed_ms: f64,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

/// Channels, at qubit input/output, used by the value suites.
pub const GRID: [(&str, f64); 6] = [
    ("identity", 0.0),
    ("depolarizing", 0.0),
    ("depolarizing", 0.25),
    ("depolarizing", 0.5),
    ("dephasing", 0.5),
    ("amplitude_damping", 0.3),
];

/// Message dimension used by the value suites.
pub const GRID_M: usize = 2;

pub fn grid_choi(name: &str, p: f64) -> ChoiMatrix {
    builtin_channel(name, p, 2)
        .and_then(|s| s.choi())
        .expect("built-in grid channels are CPTP")
}

fn ipm_options() -> IpmOptions {
    IpmOptions {
        gap_tol: 1e-9,
        ..Default::default()
    }
}

/// Solves the reduced program with the interior-point method.
pub fn reduced_solve(choi: &ChoiMatrix, m: usize, n: usize) -> Result<SolveResult, String> {
    let r = assemble(choi, m, n).map_err(|e| e.to_string())?;
    let (sdp, pl) = r
        .to_block_sdp(r.default_field())
        .map_err(|e| e.to_string())?;
    solve_ipm(&sdp, &ipm_options(), &r.start(&pl)).map_err(|e| e.to_string())
}

/// Solves the dense program (tiny instances only).
pub fn dense_solve(choi: &ChoiMatrix, m: usize, n: usize) -> Result<SolveResult, String> {
    let field = if choi.is_real(1e-14) {
        chanfid_core::Field::Real
    } else {
        chanfid_core::Field::Complex
    };
    let p = build_dense_program(choi, m, n, field).map_err(|e| e.to_string())?;
    solve_ipm(&p.sdp, &ipm_options(), &p.start).map_err(|e| e.to_string())
}

fn binomial(n: u64, k: u64) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// `Σ_λ |SSYT(λ, d)|² = C(n + d² − 1, d² − 1)`, also against the orbit count.
pub fn combinatorics(d_max: usize, n_max: usize) -> Vec<Check> {
    let mut out = Vec::new();
    for d in 2..=d_max {
        for n in 1..=n_max {
            let lhs: u128 = partitions(d, n)
                .iter()
                .map(|l| {
                    let t = semistandard_tableaux(l, d).len() as u128;
                    t * t
                })
                .sum();
            let rhs = binomial((n + d * d - 1) as u64, (d * d - 1) as u64);
            let orbits = enumerate_orbits(d, n).len() as u128;
            out.push(Check {
                name: format!("d={d} n={n}"),
                passed: lhs == rhs && orbits == rhs,
                detail: format!("sum of squares {lhs}, binomial {rhs}, orbits {orbits}"),
            });
        }
    }
    out
}

/// Pairing tables against explicit tableau vectors, exhaustively.
pub fn pairing(cases: &[(usize, usize)]) -> Vec<Check> {
    let mut out = Vec::new();
    for &(d, n_max) in cases {
        for n in 1..=n_max {
            let keys = enumerate_orbits(d, n);
            for shape in partitions(d, n) {
                let (mut compared, mut mismatches) = (0usize, 0usize);
                let mut error = None;
                match pairing_table(&shape, d) {
                    Ok(table) => {
                        'outer: for (ti, tau) in table.tableaux.iter().enumerate() {
                            for (gi, gamma) in table.tableaux.iter().enumerate() {
                                for key in &keys {
                                    match brute_force_pairing(tau, gamma, key) {
                                        Ok(v) => {
                                            compared += 1;
                                            if v != table.get(ti, gi, key) {
                                                mismatches += 1;
                                            }
                                        }
                                        Err(e) => {
                                            error = Some(e.to_string());
                                            break 'outer;
                                        }
                                    }
                                }
                            }
                        }
                    }
                    Err(e) => error = Some(e.to_string()),
                }
                out.push(Check {
                    name: format!("d={d} n={n} shape={shape}"),
                    passed: error.is_none() && mismatches == 0,
                    detail: error
                        .unwrap_or_else(|| format!("{compared} entries, {mismatches} mismatches")),
                });
            }
        }
    }
    out
}

/// Reduced against dense values on the channel grid for `n ≤ n_max`.
pub fn oracle(n_max: usize, tol: f64) -> Vec<Check> {
    let mut out = Vec::new();
    for (name, p) in GRID {
        let choi = grid_choi(name, p);
        for n in 1..=n_max {
            let label = format!("{name}({p}) n={n}");
            let check = match (
                reduced_solve(&choi, GRID_M, n),
                dense_solve(&choi, GRID_M, n),
            ) {
                (Ok(r), Ok(d)) => {
                    let diff = (r.value - d.value).abs();
                    Check {
                        name: label,
                        passed: diff <= tol,
                        detail: format!(
                            "reduced {:.9}, dense {:.9}, |diff| {diff:.2e}",
                            r.value, d.value
                        ),
                    }
                }
                (r, d) => Check {
                    name: label,
                    passed: false,
                    detail: format!("reduced {:?}, dense {:?}", r.err(), d.err()),
                },
            };
            out.push(check);
        }
    }
    out
}

/// One grid channel with its values at levels `1, 2, …`.
pub type GridRow = ((&'static str, f64), Vec<Result<f64, String>>);

/// Reduced values on the grid for levels `1..=n_max`, row per channel.
pub fn grid_values(n_max: usize) -> Vec<GridRow> {
    GRID.iter()
        .map(|&(name, p)| {
            let choi = grid_choi(name, p);
            let vals = (1..=n_max)
                .map(|n| reduced_solve(&choi, GRID_M, n).map(|r| r.value))
                .collect();
            ((name, p), vals)
        })
        .collect()
}

/// Non-increasing values across levels, up to `slack`.
pub fn monotonic_checks(values: &[GridRow], slack: f64) -> Vec<Check> {
    values
        .iter()
        .map(|((name, p), vals)| {
            let name = format!("{name}({p})");
            match vals.iter().cloned().collect::<Result<Vec<f64>, String>>() {
                Ok(v) => Check {
                    name,
                    passed: v.windows(2).all(|w| w[0] >= w[1] - slack),
                    detail: format!("{v:.9?}"),
                },
                Err(e) => Check {
                    name,
                    passed: false,
                    detail: e,
                },
            }
        })
        .collect()
}

/// Runs one suite with the default sizes.
pub fn run_suite(suite: Suite, max_level: usize) -> SuiteReport {
    let t = Instant::now();
    let checks = match suite {
        Suite::Combinatorics => combinatorics(4, 6),
        Suite::Pairing => pairing(&[(2, 4), (4, 2)]),
        Suite::Oracle => oracle(2, 1e-4),
        Suite::Monotonic => monotonic_checks(&grid_values(max_level), 1e-5),
    };
    SuiteReport {
        suite: suite.name().to_string(),
        passed: checks.iter().all(|c| c.passed),
        elapsed_ms: t.elapsed().as_secs_f64() * 1e3,
        checks,
    }
}

pub fn run(suites: &[Suite], max_level: usize) -> VerifyReport {
    let suites: Vec<SuiteReport> = suites.iter().map(|&s| run_suite(s, max_level)).collect();
    VerifyReport {
        passed: suites.iter().all(|s| s.passed),
        suites,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_parse() {
        assert_eq!(Suite::parse_arg("all").unwrap().len(), 4);
        assert_eq!(Suite::parse_arg("pairing").unwrap(), vec![Suite::Pairing]);
        let e = Suite::parse_arg("nonsense").unwrap_err();
        assert_eq!(e.exit_code(), crate::error::exit::BAD_INPUT);
    }

    #[test]
    fn small_combinatorics_pass() {
        assert!(combinatorics(3, 3).iter().all(|c| c.passed));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(9, 3), 84);
        assert_eq!(binomial(21, 15), 54264);
    }
}
