//! JSON records written by the CLI. Schemas for each live under `schemas/`.

use std::path::Path;

use chanfid_core::reduction::{ParamLayout, RowKind};
use chanfid_core::sdpsolve::{write_sdpa, PresolveStats};
use chanfid_core::{BlockSdp, ReducedSdp};
use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub partition: Vec<usize>,
    /// Side of the complex block.
    pub side: usize,
    /// Side of the real block handed to the solver.
    pub real_side: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PresolveRecord {
    pub num_vars: usize,
    pub num_rows: usize,
    pub rank: usize,
    pub dependent_rows: usize,
    pub free_dims: usize,
}

impl From<&PresolveStats> for PresolveRecord {
    fn from(s: &PresolveStats) -> Self {
        Self {
            num_vars: s.num_vars,
            num_rows: s.num_rows,
            rank: s.rank,
            dependent_rows: s.dependent_rows,
            free_dims: s.free_dims,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub channel: f64,
    pub assembly: f64,
    pub solve: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub value: f64,
    pub level: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub status: String,
    pub gap: f64,
    pub dual_value: f64,
    pub eq_residual: f64,
    pub min_block_eig: f64,
    pub iterations: usize,
    pub solver: String,
    pub field: String,
    pub channel: String,
    pub param: Option<f64>,
    pub blocks: Vec<BlockRecord>,
    pub presolve: PresolveRecord,
    pub timings_ms: Timings,
    /// Solver parameters; only written to `--out` files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignment: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestDims {
    pub d_a: usize,
    pub d_abar: usize,
    pub d_b: usize,
    pub d_bbar: usize,
    pub n: usize,
}

/// Complex variable `v_c = Σ … |i⟩⟨j| ⊗ |x⟩⟨y| ⊗ C_E`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestVariable {
    pub i: usize,
    pub j: usize,
    pub x: usize,
    pub y: usize,
    /// Row-major counts of the orbit key `E` (`d_H × d_H`).
    pub key: Vec<u16>,
    /// Real parameter holding `Re v_c`.
    pub re: usize,
    /// `(parameter, sign)` with `Im v_c = sign · w[parameter]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub im: Option<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub kind: String,
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestBlock {
    pub partition: Vec<usize>,
    pub num_tableaux: usize,
    pub side: usize,
    pub real_side: usize,
    pub sdpa_block: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub level: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub channel: String,
    pub dims: ManifestDims,
    pub field: String,
    pub num_params: usize,
    pub num_complex_vars: usize,
    pub num_orbits: usize,
    pub variables: Vec<ManifestVariable>,
    pub rows: Vec<ManifestRow>,
    pub blocks: Vec<ManifestBlock>,
    /// Name of the SDPA file this manifest describes, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sdpa_file: Option<String>,
    /// SDPA signed block structure.
    pub sdpa_block_struct: Vec<i64>,
}

impl Manifest {
    pub fn new(channel: &str, r: &ReducedSdp, sdp: &BlockSdp, pl: &ParamLayout) -> Self {
        let d = r.dims();
        let layout = &r.layout;
        let variables = (0..layout.len())
            .map(|c| {
                let e = layout.element(c);
                ManifestVariable {
                    i: e.i,
                    j: e.j,
                    x: e.x,
                    y: e.y,
                    key: e.key.counts().to_vec(),
                    re: pl.re[c],
                    im: pl.im[c],
                }
            })
            .collect();
        let rows = r
            .rows
            .iter()
            .map(|row| ManifestRow {
                kind: match row.kind {
                    RowKind::Normalization => "normalization",
                    RowKind::MarginalA => "marginal_a",
                    RowKind::MarginalBn => "marginal_bn",
                }
                .to_string(),
                coeffs: row.coeffs.clone(),
                rhs: row.rhs,
            })
            .collect();
        let blocks = r
            .blocks
            .iter()
            .zip(&sdp.blocks)
            .enumerate()
            .map(|(k, (b, sb))| ManifestBlock {
                partition: b.partition.parts().to_vec(),
                num_tableaux: b.num_tableaux,
                side: b.side,
                real_side: sb.side,
                sdpa_block: k + 1,
            })
            .collect();
        let mut sdpa_block_struct: Vec<i64> = sdp.blocks.iter().map(|b| b.side as i64).collect();
        let diag = 2 * (sdp.num_vars + sdp.eq_rows.len());
        if diag > 0 {
            sdpa_block_struct.push(-(diag as i64));
        }
        Manifest {
            level: d.n,
            m: d.d_a,
            channel: channel.to_string(),
            dims: ManifestDims {
                d_a: d.d_a,
                d_abar: d.d_abar,
                d_b: d.d_b,
                d_bbar: d.d_bbar,
                n: d.n,
            },
            field: format!("{:?}", pl.field).to_lowercase(),
            num_params: pl.len(),
            num_complex_vars: layout.len(),
            num_orbits: layout.num_orbits(),
            variables,
            rows,
            blocks,
            sdpa_file: None,
            sdpa_block_struct,
        }
    }
}

/// Header labels for the SDPA variable map: `re c` / `im c` per parameter.
pub fn param_labels(pl: &ParamLayout) -> Vec<String> {
    pl.params
        .iter()
        .map(|&(c, imag)| format!("{} v{c}", if imag { "im" } else { "re" }))
        .collect()
}

/// Writes `sdp` as `.dat-s` to `path`.
pub fn export_sdpa(sdp: &BlockSdp, labels: &[String], path: &Path) -> Result<(), Error> {
    std::fs::write(path, write_sdpa(sdp, labels)).map_err(|e| Error::io(path, e))
}

/// Writes pretty JSON followed by a newline.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value).expect("records serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
