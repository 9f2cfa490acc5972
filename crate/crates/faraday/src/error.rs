//! Error taxonomy shared by all modules.
//!
//! Variants are grouped by how the CLI maps them to exit codes:
//! configuration/contract problems (exit 2) versus numerical failures
//! encountered mid-computation (exit 3).

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: bad counts, out-of-range parameters, unknown keys.
    #[error("configuration error: {0}")]
    Config(String),

    /// An operation was called outside its documented contract.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The flattening map lost injectivity: min J fell at or below the floor.
    #[error("flattening degenerate: min J = {min_j:.6e} <= floor {floor}")]
    DegenerateFlattening { min_j: f64, floor: f64 },

    /// Elliptic data violate a solvability condition (flux compatibility).
    #[error("solvability error: {0}")]
    Solvability(String),

    /// A per-mode dense solve failed or was too ill-conditioned to trust.
    #[error("numerical conditioning failure at mode ({m1}, {m2}): {detail}")]
    Conditioning { m1: i64, m2: i64, detail: String },

    /// Zero-frequency elliptic operator with no invertible symbol.
    #[error("singular operator: {0}")]
    SingularOperator(String),

    /// Generic numerical failure (eigensolver breakdown, NaN detected, ...).
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    /// Process exit code for the CLI: 2 for validation problems, 3 for
    /// numerical failures, per the documented contract.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Contract(_) | Error::Format(_) => 2,
            Error::DegenerateFlattening { .. }
            | Error::Solvability(_)
            | Error::Conditioning { .. }
            | Error::SingularOperator(_)
            | Error::Numerical(_)
            | Error::Io(_) => 3,
        }
    }
}
