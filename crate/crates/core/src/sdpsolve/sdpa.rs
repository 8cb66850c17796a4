//! SDPA sparse format (`.dat-s`) for [`BlockSdp`] instances.
//!
//! SDPA solves `minimize Σ cᵢxᵢ  s.t.  Σ Fᵢxᵢ − F₀ ⪰ 0` with every block of
//! `F` either dense symmetric (positive size) or diagonal (negative size).
//! A [`BlockSdp`] maps onto it as follows:
//!
//! - each real variable `w_j` becomes `x_{j+1} − x_{N+j+1}` with both parts
//!   nonnegative, stated through the leading `2N` entries of a trailing
//!   diagonal block;
//! - each equality `aᵀw = b` becomes the pair `aᵀw − b ≥ 0`, `b − aᵀw ≥ 0`,
//!   occupying two further diagonal entries;
//! - the objective is negated (SDPA minimizes) and the constant offset is
//!   recorded in the header only.
//!
//! Output is a pure function of the instance: entries are merged and sorted,
//! and numbers use Rust's shortest round-trip formatting.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use thiserror::Error;

use super::{BlockEntry, BlockMap, BlockSdp};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SdpaError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unexpected end of input: {0}")]
    Truncated(&'static str),
}

/// An instance as read from a `.dat-s` file, in SDPA's own conventions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SdpaProblem {
    /// Header comment lines without their leading marker.
    pub comments: Vec<String>,
    pub num_vars: usize,
    /// Signed block sizes; negative means diagonal.
    pub block_struct: Vec<i64>,
    pub c: Vec<f64>,
    /// `(mat, blk, i, j, value)`, all indices 1-based as in the file.
    pub entries: Vec<(usize, usize, usize, usize, f64)>,
}

impl SdpaProblem {
    /// Dense block sides, in file order.
    pub fn psd_block_sides(&self) -> Vec<usize> {
        self.block_struct
            .iter()
            .filter(|&&b| b > 0)
            .map(|&b| b as usize)
            .collect()
    }

    /// Total length of the diagonal blocks.
    pub fn diagonal_len(&self) -> usize {
        self.block_struct
            .iter()
            .filter(|&&b| b < 0)
            .map(|&b| b.unsigned_abs() as usize)
            .sum()
    }

    /// SDPA objective `Σ cᵢxᵢ`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// The same program as a [`BlockSdp`] over `x`, maximizing `−cᵀx`; a
    /// diagonal block of size `k` becomes a `k × k` block with diagonal
    /// entries only.
    pub fn to_block_sdp(&self) -> BlockSdp {
        let mut blocks: Vec<BlockMap> = self
            .block_struct
            .iter()
            .map(|&b| BlockMap {
                side: b.unsigned_abs() as usize,
                ..Default::default()
            })
            .collect();
        for &(mat, blk, i, j, v) in &self.entries {
            let (r, c) = if i <= j {
                (i - 1, j - 1)
            } else {
                (j - 1, i - 1)
            };
            let b = &mut blocks[blk - 1];
            if mat == 0 {
                b.constant.push((r, c, -v));
            } else {
                b.entries.push(BlockEntry {
                    var: mat - 1,
                    row: r,
                    col: c,
                    coef: v,
                });
            }
        }
        BlockSdp {
            num_vars: self.num_vars,
            objective: self.c.iter().map(|c| -c).collect(),
            blocks,
            ..Default::default()
        }
    }
}

/// Maps `w` to the SDPA variables `(w⁺, w⁻)`.
pub fn split_free(w: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; 2 * w.len()];
    for (j, &v) in w.iter().enumerate() {
        if v >= 0.0 {
            x[j] = v;
        } else {
            x[w.len() + j] = -v;
        }
    }
    x
}

fn fmt_num(v: f64) -> String {
    // `{:e}` is shortest-round-trip and never prints long zero runs.
    if v == 0.0 {
        return "0".into();
    }
    format!("{v:e}")
}

/// Serializes `p`. `labels[j]`, when present, names variable `j` in the
/// header map.
pub fn write_sdpa(p: &BlockSdp, labels: &[String]) -> String {
    let n = p.num_vars;
    let k = p.eq_rows.len();
    let diag = 2 * n + 2 * k;
    let mut out = String::new();

    let _ = writeln!(out, "* block SDP in SDPA sparse format");
    let _ = writeln!(
        out,
        "* {n} free variables w_j = x_(j+1) - x_(N+j+1), N = {n}; {k} equalities as paired inequalities"
    );
    let _ = writeln!(
        out,
        "* maximize c'w + {}  ==  -(minimize SDPA objective) + offset",
        fmt_num(p.objective_offset)
    );
    for j in 0..n {
        let label = labels.get(j).map(String::as_str).unwrap_or("");
        let _ = writeln!(out, "* w{j} = x{} - x{} {label}", j + 1, n + j + 1);
    }

    let nblocks = p.blocks.len() + usize::from(diag > 0);
    let _ = writeln!(out, "{}", 2 * n);
    let _ = writeln!(out, "{nblocks}");
    let mut structure: Vec<String> = p.blocks.iter().map(|b| b.side.to_string()).collect();
    if diag > 0 {
        structure.push(format!("-{diag}"));
    }
    let _ = writeln!(out, "{}", structure.join(" "));
    let c: Vec<String> = p
        .objective
        .iter()
        .map(|&v| fmt_num(-v))
        .chain(p.objective.iter().map(|&v| fmt_num(v)))
        .collect();
    let _ = writeln!(out, "{}", c.join(" "));

    // (mat, blk, i, j) -> value, all 1-based; merging makes output canonical.
    let mut acc: BTreeMap<(usize, usize, usize, usize), f64> = BTreeMap::new();
    let mut add = |key: (usize, usize, usize, usize), v: f64| {
        *acc.entry(key).or_insert(0.0) += v;
    };
    for (b, blk) in p.blocks.iter().enumerate() {
        for &(r, c, v) in &blk.constant {
            add((0, b + 1, r + 1, c + 1), -v);
        }
        for e in &blk.entries {
            add((e.var + 1, b + 1, e.row + 1, e.col + 1), e.coef);
            add((n + e.var + 1, b + 1, e.row + 1, e.col + 1), -e.coef);
        }
    }
    if diag > 0 {
        let db = p.blocks.len() + 1;
        for j in 0..n {
            add((j + 1, db, j + 1, j + 1), 1.0);
            add((n + j + 1, db, n + j + 1, n + j + 1), 1.0);
        }
        for (r, row) in p.eq_rows.iter().enumerate() {
            let pos = 2 * n + 2 * r + 1;
            let neg = pos + 1;
            add((0, db, pos, pos), row.rhs);
            add((0, db, neg, neg), -row.rhs);
            for &(j, a) in &row.coeffs {
                add((j + 1, db, pos, pos), a);
                add((n + j + 1, db, pos, pos), -a);
                add((j + 1, db, neg, neg), -a);
                add((n + j + 1, db, neg, neg), a);
            }
        }
    }
    for ((mat, blk, i, j), v) in acc {
        if v != 0.0 {
            let _ = writeln!(out, "{mat} {blk} {i} {j} {}", fmt_num(v));
        }
    }
    out
}

/// Splits a line into numeric tokens, accepting the `,(){}` separators that
/// SDPA tolerates.
fn tokens(line: &str) -> impl Iterator<Item = &str> {
    line.split(|ch: char| ch.is_whitespace() || ",(){}".contains(ch))
        .filter(|t| !t.is_empty())
}

/// Parses a `.dat-s` file.
pub fn parse_sdpa(text: &str) -> Result<SdpaProblem, SdpaError> {
    let mut p = SdpaProblem::default();
    let mut lines = text.lines().enumerate().peekable();
    while let Some((_, l)) = lines.peek() {
        let t = l.trim_start();
        if let Some(rest) = t.strip_prefix('*').or_else(|| t.strip_prefix('"')) {
            p.comments.push(rest.trim().to_string());
            lines.next();
        } else if t.is_empty() {
            lines.next();
        } else {
            break;
        }
    }
    let perr = |line: usize, msg: String| SdpaError::Parse {
        line: line + 1,
        msg,
    };
    let mut header = |what: &'static str| {
        lines
            .next()
            .ok_or(SdpaError::Truncated(what))
            .map(|(i, l)| (i, l.to_string()))
    };
    let int = |(i, l): &(usize, String)| -> Result<i64, SdpaError> {
        tokens(l)
            .next()
            .ok_or_else(|| perr(*i, "expected an integer".into()))?
            .parse::<i64>()
            .map_err(|e| perr(*i, format!("{e}")))
    };

    let m_line = header("variable count")?;
    let m = int(&m_line)?;
    if m < 0 {
        return Err(perr(m_line.0, "negative variable count".into()));
    }
    p.num_vars = m as usize;
    let nb_line = header("block count")?;
    let nb = int(&nb_line)?;
    if nb < 0 {
        return Err(perr(nb_line.0, "negative block count".into()));
    }
    let bs_line = header("block structure")?;
    p.block_struct = tokens(&bs_line.1)
        .map(|t| t.parse::<i64>())
        .collect::<Result<_, _>>()
        .map_err(|e| perr(bs_line.0, format!("{e}")))?;
    if p.block_struct.len() != nb as usize || p.block_struct.contains(&0) {
        return Err(perr(
            bs_line.0,
            format!("expected {nb} nonzero block sizes"),
        ));
    }
    let c_line = header("objective vector")?;
    p.c = tokens(&c_line.1)
        .map(|t| t.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| perr(c_line.0, format!("{e}")))?;
    if p.c.len() != p.num_vars {
        return Err(perr(
            c_line.0,
            format!(
                "objective has {} entries, expected {}",
                p.c.len(),
                p.num_vars
            ),
        ));
    }

    for (i, l) in lines {
        let t: Vec<&str> = tokens(l).collect();
        if t.is_empty() {
            continue;
        }
        if t.len() != 5 {
            return Err(perr(i, format!("expected 5 fields, found {}", t.len())));
        }
        let idx = |s: &str| s.parse::<usize>().map_err(|e| perr(i, format!("{e}")));
        let (mat, blk, r, c) = (idx(t[0])?, idx(t[1])?, idx(t[2])?, idx(t[3])?);
        let v: f64 = t[4].parse().map_err(|e| perr(i, format!("{e}")))?;
        if mat > p.num_vars || blk == 0 || blk > p.block_struct.len() {
            return Err(perr(i, "matrix or block index out of range".into()));
        }
        let size = p.block_struct[blk - 1];
        let side = size.unsigned_abs() as usize;
        if r == 0 || c == 0 || r > side || c > side || (size < 0 && r != c) {
            return Err(perr(
                i,
                format!("position ({r},{c}) invalid in block {blk}"),
            ));
        }
        p.entries.push((mat, blk, r, c, v));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::super::tests::one_var;
    use super::super::{solve_admm, AdmmOptions, SparseRow};
    use super::*;

    fn with_equality() -> BlockSdp {
        let mut p = one_var();
        p.num_vars = 2;
        p.objective.push(0.5);
        p.eq_rows.push(SparseRow {
            coeffs: vec![(0, 1.0), (1, -1.0)],
            rhs: 0.25,
        });
        p
    }

    #[test]
    fn deterministic_and_round_trips_dims() {
        let p = with_equality();
        let a = write_sdpa(&p, &[]);
        assert_eq!(a, write_sdpa(&p.clone(), &[]));
        let q = parse_sdpa(&a).unwrap();
        assert_eq!(q.num_vars, 4);
        assert_eq!(q.psd_block_sides(), p.block_sides());
        assert_eq!(q.diagonal_len(), 2 * 2 + 2);
        assert!(q.comments.iter().any(|c| c.starts_with("w1 = x2 - x4")));
    }

    #[test]
    fn parsed_program_agrees_on_split_points() {
        let p = with_equality();
        let q = parse_sdpa(&write_sdpa(&p, &[])).unwrap().to_block_sdp();
        for w in [[0.3, 0.05], [-0.4, -0.65], [0.9, 0.65], [0.3, 0.3]] {
            let x = split_free(&w);
            assert!((q.objective_value(&x) - p.objective_value(&w)).abs() < 1e-15);
            let eq_ok = p.eq_residual(&w) < 1e-12;
            let diag_min = q
                .blocks
                .last()
                .unwrap()
                .evaluate(&x)
                .diagonal()
                .iter()
                .fold(f64::INFINITY, |a, &b| a.min(b));
            assert_eq!(diag_min >= -1e-12, eq_ok, "{w:?}");
            let a = p.blocks[0].evaluate(&w);
            let b = q.blocks[0].evaluate(&x);
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn parsed_one_variable_instance_solves() {
        let q = parse_sdpa(&write_sdpa(&one_var(), &[])).unwrap();
        let res = solve_admm(&q.to_block_sdp(), &AdmmOptions::default(), None).unwrap();
        assert!((res.value - 1.0).abs() < 1e-4, "{}", res.value);
    }

    #[test]
    fn rejects_malformed_entries() {
        let good = write_sdpa(&one_var(), &[]);
        let bad = format!("{good}1 1 3 1 1e0\n");
        assert!(matches!(parse_sdpa(&bad), Err(SdpaError::Parse { .. })));
        assert!(matches!(
            parse_sdpa("* only a comment\n"),
            Err(SdpaError::Truncated(_))
        ));
        let off_diag = format!("{good}1 2 1 2 1e0\n");
        assert!(parse_sdpa(&off_diag).is_err());
    }
}
