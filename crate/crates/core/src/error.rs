use std::fmt;

use crate::cox::IterationRecord;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong between reading a panel and rendering a table.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("schema error: {0}")]
    Schema(SchemaMismatch),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("numerical overflow in risk set {risk_set} (time {time})")]
    Overflow { risk_set: usize, time: f64 },

    #[error("covariate `{0}` is constant across all records and cannot be estimated")]
    ConstantColumn(String),

    #[error("information matrix is singular; covariates are collinear")]
    Collinear,

    #[error(
        "monotone likelihood: coefficient for `{covariate}` diverges (|beta| = {beta:.3} > {bound}) \
         while the partial likelihood keeps increasing"
    )]
    Separation {
        covariate: String,
        beta: f64,
        bound: f64,
    },

    #[error("Newton-Raphson did not converge after {} iterations", trace.len().saturating_sub(1))]
    NoConvergence { trace: Vec<IterationRecord> },

    #[error("fit did not converge; residuals are undefined")]
    NotConverged,

    #[error("residuals are already scaled")]
    AlreadyScaled,

    #[error("residuals have not been scaled")]
    NotScaled,

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

/// Column-level header disagreement for a panel file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SchemaMismatch {
    pub missing: Vec<String>,
    pub extra: Vec<String>,
    pub duplicated: Vec<String>,
}

impl fmt::Display for SchemaMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if !self.missing.is_empty() {
            parts.push(format!("missing columns [{}]", self.missing.join(", ")));
        }
        if !self.extra.is_empty() {
            parts.push(format!("unexpected columns [{}]", self.extra.join(", ")));
        }
        if !self.duplicated.is_empty() {
            parts.push(format!(
                "duplicated columns [{}]",
                self.duplicated.join(", ")
            ));
        }
        if parts.is_empty() {
            parts.push("no header row".to_string());
        }
        write!(f, "{}", parts.join("; "))
    }
}
