use std::fmt;
use std::path::PathBuf;

/// Which covariance condition made `S(t)` (or one of its components) undefined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum DegeneracyKind {
    /// `var(W1) var(W2) == cov(W1, W2)^2`
    WCollinear,
    /// `var(D1) var(D2) == cov(D1, D2)^2`
    DCollinear,
    /// `var(D1 + D2) == 0`
    DSumVariance,
    /// `var(W1 + W2) == 0`
    WSumVariance,
    /// A single standardized process has zero permutation variance.
    ZeroVariance,
}

impl fmt::Display for DegeneracyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::WCollinear => "var(W1)var(W2) = cov(W1,W2)^2",
            Self::DCollinear => "var(D1)var(D2) = cov(D1,D2)^2",
            Self::DSumVariance => "var(D1+D2) = 0",
            Self::WSumVariance => "var(W1+W2) = 0",
            Self::ZeroVariance => "zero permutation variance",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate statistic at t={t} ({component}): {kind}")]
    Degenerate {
        t: usize,
        component: &'static str,
        kind: DegeneracyKind,
    },

    #[error("degenerate kernel: {0}")]
    DegenerateKernel(String),

    #[error("weighted graph where a binary graph is required: {0}")]
    NotBinary(String),

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Aborted(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Self::Parameter(msg.into())
    }

    pub(crate) fn format(line: usize, msg: impl Into<String>) -> Self {
        Self::Format {
            line,
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// True for every flavour of degeneracy (used for CLI exit codes).
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Self::Degenerate { .. } | Self::DegenerateKernel(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
