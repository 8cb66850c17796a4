//! Channel description files.
//!
//! ```json
//! { "name": "bit flip", "d_in": 2, "d_out": 2,
//!   "kraus": [ [[[0.9487,0],[0,0]], [[0,0],[0.9487,0]]],
//!              [[[0,0],[0.3162,0]], [[0.3162,0],[0,0]]] ] }
//! ```
//!
//! Complex numbers are `[re, im]` pairs, matrices are lists of rows. Exactly
//! one of `kraus` (list of `d_out × d_in` matrices) or `choi` (normalized
//! Choi matrix on input ⊗ output, side `d_in·d_out`) must be present.
//! Unknown fields are rejected. The JSON Schema lives in
//! `schemas/channel.schema.json`.

use std::path::Path;

use chanfid_core::channels::builtin_channel;
use chanfid_core::{ChannelRepr, ChannelSpec, Complex64, ComplexMatrix};
use serde::{Deserialize, Serialize};

use crate::error::Error;

pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub name: String,
    pub d_in: usize,
    pub d_out: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus: Option<Vec<JsonMatrix>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choi: Option<JsonMatrix>,
}

fn to_matrix(
    m: &JsonMatrix,
    rows: usize,
    cols: usize,
    what: &str,
) -> Result<ComplexMatrix, String> {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        return Err(format!("{what} must be {rows}x{cols}"));
    }
    if m.iter().flatten().flatten().any(|v| !v.is_finite()) {
        return Err(format!("{what} has a non-finite entry"));
    }
    Ok(ComplexMatrix::from_fn(rows, cols, |r, c| {
        let [re, im] = m[r][c];
        Complex64::new(re, im)
    }))
}

fn from_matrix(m: &ComplexMatrix) -> JsonMatrix {
    (0..m.rows())
        .map(|r| {
            (0..m.cols())
                .map(|c| [m[(r, c)].re, m[(r, c)].im])
                .collect()
        })
        .collect()
}

impl ChannelFile {
    pub fn to_spec(&self) -> Result<ChannelSpec, String> {
        if self.d_in == 0 || self.d_out == 0 {
            return Err("d_in and d_out must be at least 1".into());
        }
        let repr = match (&self.kraus, &self.choi) {
            (Some(ks), None) => {
                if ks.is_empty() {
                    return Err("`kraus` must contain at least one operator".into());
                }
                ChannelRepr::Kraus(
                    ks.iter()
                        .enumerate()
                        .map(|(k, m)| to_matrix(m, self.d_out, self.d_in, &format!("kraus[{k}]")))
                        .collect::<Result<_, _>>()?,
                )
            }
            (None, Some(c)) => {
                let s = self.d_in * self.d_out;
                ChannelRepr::Choi(to_matrix(c, s, s, "choi")?)
            }
            _ => return Err("exactly one of `kraus` or `choi` must be given".into()),
        };
        Ok(ChannelSpec {
            name: self.name.clone(),
            d_in: self.d_in,
            d_out: self.d_out,
            repr,
        })
    }

    pub fn from_spec(spec: &ChannelSpec) -> Self {
        let (kraus, choi) = match &spec.repr {
            ChannelRepr::Kraus(ks) => (Some(ks.iter().map(from_matrix).collect()), None),
            ChannelRepr::Choi(c) => (None, Some(from_matrix(c))),
        };
        ChannelFile {
            name: spec.name.clone(),
            d_in: spec.d_in,
            d_out: spec.d_out,
            kraus,
            choi,
        }
    }
}

pub fn parse_channel(text: &str, path: &Path) -> Result<ChannelSpec, Error> {
    let err = |msg: String| Error::ChannelFile {
        path: path.to_path_buf(),
        msg,
    };
    let file: ChannelFile = serde_json::from_str(text).map_err(|e| err(e.to_string()))?;
    file.to_spec().map_err(err)
}

pub fn load_channel(path: &Path) -> Result<ChannelSpec, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_channel(&text, path)
}

/// Dimension used for the built-in families that take one.
pub const BUILTIN_DIMENSION: usize = 2;

/// Resolves `--channel`: a built-in family name, or otherwise a path to a
/// channel file.
pub fn resolve_channel(arg: &str, param: Option<f64>) -> Result<ChannelSpec, Error> {
    if chanfid_core::BuiltinChannel::from_name(arg).is_some() {
        return builtin_channel(arg, param.unwrap_or(0.0), BUILTIN_DIMENSION)
            .map_err(|e| Error::BadInput(e.to_string()));
    }
    let path = Path::new(arg);
    if param.is_some() {
        return Err(Error::BadInput(format!(
            "--param only applies to built-in channels, not `{arg}`"
        )));
    }
    if !path.exists() {
        let names: Vec<&str> = chanfid_core::BuiltinChannel::ALL
            .iter()
            .map(|c| c.name())
            .collect();
        return Err(Error::BadInput(format!(
            "`{arg}` is neither a built-in channel ({}) nor an existing file",
            names.join(", ")
        )));
    }
    load_channel(path)
}
