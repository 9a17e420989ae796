use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;

use crate::grid::DEFAULT_NODES;
use crate::ode::DEFAULT_TOL;

/// Settings shared by every subcommand. Read from `key=value` files, then
/// overridden by command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// Builtin name (`paper`, `zero`) or an expression in `x`.
    pub potential: String,
    pub kmin: f64,
    pub kmax: f64,
    pub n_scan: usize,
    pub tol: f64,
    pub n_nodes: usize,
    #[serde(skip)]
    pub out: PathBuf,
    pub json: bool,
    pub csv: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            potential: "paper".into(),
            kmin: 0.1,
            kmax: 6.1,
            n_scan: 601,
            tol: DEFAULT_TOL,
            n_nodes: DEFAULT_NODES,
            out: PathBuf::from("out"),
            json: false,
            csv: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("config line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl RunConfig {
    /// `(json, csv)`; with neither flag set both formats are written.
    pub fn formats(&self) -> (bool, bool) {
        if !self.json && !self.csv {
            (true, true)
        } else {
            (self.json, self.csv)
        }
    }

    pub fn to_file_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "potential={}", self.potential);
        let _ = writeln!(s, "kmin={}", self.kmin);
        let _ = writeln!(s, "kmax={}", self.kmax);
        let _ = writeln!(s, "n={}", self.n_scan);
        let _ = writeln!(s, "tol={}", self.tol);
        let _ = writeln!(s, "nodes={}", self.n_nodes);
        let _ = writeln!(s, "out={}", self.out.display());
        let _ = writeln!(s, "json={}", self.json);
        let _ = writeln!(s, "csv={}", self.csv);
        s
    }

    /// Applies `key=value` lines on top of `self`. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn apply_file_str(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| ConfigError {
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| -> Result<f64, ConfigError> {
                v.parse::<f64>()
                    .map_err(|e| err(format!("{key}: {e}")))
            };
            let int = |v: &str| -> Result<usize, ConfigError> {
                v.parse::<usize>()
                    .map_err(|e| err(format!("{key}: {e}")))
            };
            let flag = |v: &str| -> Result<bool, ConfigError> {
                v.parse::<bool>()
                    .map_err(|e| err(format!("{key}: {e}")))
            };
            match key {
                "potential" => self.potential = value.to_string(),
                "kmin" => self.kmin = num(value)?,
                "kmax" => self.kmax = num(value)?,
                "n" => self.n_scan = int(value)?,
                "tol" => self.tol = num(value)?,
                "nodes" => self.n_nodes = int(value)?,
                "out" => self.out = PathBuf::from(value),
                "json" => self.json = flag(value)?,
                "csv" => self.csv = flag(value)?,
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        Ok(())
    }

    pub fn from_file_str(text: &str) -> Result<Self, ConfigError> {
        let mut c = RunConfig::default();
        c.apply_file_str(text)?;
        Ok(c)
    }
}
