use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// A validation finding, located with a JSON-path-like string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub location: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("density {value} outside [0, {rho_max}]")]
    Domain { value: f64, rho_max: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid priorities: {0}")]
    Priorities(String),

    #[error("CFL condition violated ({condition}): {lhs} > {rhs}")]
    Cfl {
        condition: &'static str,
        lhs: f64,
        rhs: f64,
    },

    #[error("inadmissible state: {0}")]
    Inadmissible(String),

    #[error("{} validation diagnostic(s):\n{}", .0.len(), format_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),

    #[error("malformed scenario document: {0}")]
    Malformed(#[from] serde_json::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| format!("  {d}"))
        .collect::<Vec<_>>()
        .join("\n")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
