use thiserror::Error;

/// Errors raised by the numerical kernels and experiment drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: argument outside the domain ({detail})")]
    Domain { op: &'static str, detail: String },

    #[error("no sign change of J_{nu} around zero #{index} in [{lo}, {hi}]")]
    ZeroBracket {
        nu: f64,
        index: usize,
        lo: f64,
        hi: f64,
    },

    #[error(
        "grid resolves frequencies up to {resolved:.6} but mode {mode} oscillates at {required:.6}"
    )]
    Resolution {
        mode: usize,
        required: f64,
        resolved: f64,
    },

    #[error("mode index {index} outside 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("quadrature grid would need {nodes} nodes (limit {limit})")]
    GridTooLarge { nodes: u64, limit: u64 },

    #[error("invalid coefficient sequence: {0}")]
    InvalidSequence(String),

    #[error(
        "no diverging subsequence for p = {p}: stage {stage} needs norm >= {target}, \
         largest norm up to index {cap} is {max_norm:.6}"
    )]
    NoSuchSequence {
        p: f64,
        stage: usize,
        target: f64,
        cap: usize,
        max_norm: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        op,
        detail: detail.into(),
    }
}
