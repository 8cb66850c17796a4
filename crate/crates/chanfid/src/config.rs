//! `--config` files: a JSON object with the same keys as the command-line
//! flags. Flags override the file, the file overrides built-in defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::pipeline::Solver;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub channel: Option<String>,
    pub param: Option<f64>,
    #[serde(rename = "M")]
    pub m: Option<usize>,
    pub level: Option<usize>,
    pub solver: Option<Solver>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::BadInput(format!("invalid config {}: {e}", path.display())))
    }

    /// Fields set in `self` win over those in `base`.
    pub fn over(self, base: Config) -> Config {
        Config {
            channel: self.channel.or(base.channel),
            param: self.param.or(base.param),
            m: self.m.or(base.m),
            level: self.level.or(base.level),
            solver: self.solver.or(base.solver),
            tol: self.tol.or(base.tol),
            max_iter: self.max_iter.or(base.max_iter),
            out: self.out.or(base.out),
            threads: self.threads.or(base.threads),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: Config =
            serde_json::from_str(r#"{"channel":"identity","M":3,"level":2,"solver":"admm"}"#)
                .unwrap();
        let flags = Config {
            level: Some(1),
            ..Default::default()
        };
        let merged = flags.over(file);
        assert_eq!(merged.level, Some(1));
        assert_eq!(merged.m, Some(3));
        assert_eq!(merged.solver, Some(Solver::Admm));
        assert_eq!(merged.channel.as_deref(), Some("identity"));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<Config>(r#"{"levle":2}"#).is_err());
    }
}
