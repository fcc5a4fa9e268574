use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation is only defined for some utility kinds.
    #[error("unsupported utility kind `{kind}` for {operation}")]
    UnsupportedUtility {
        kind: &'static str,
        operation: &'static str,
    },

    /// Wrong buyer count, mismatched mechanism/instance and similar misuse.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("invalid instance field `{field}`: {message}")]
    InvalidInstance {
        field: &'static str,
        message: String,
    },

    /// The bounded-transfer condition on the risk parameter fails at `value`.
    #[error(
        "assumption A1 fails at v = {value}: {lhs} is not below 1 - exp(-alpha*z_M) = {rhs}"
    )]
    AssumptionA1 { value: f64, lhs: f64, rhs: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("LP has {size} variables, above the limit of {limit}")]
    SizeGuard { size: usize, limit: usize },

    #[error("LP solver breakdown: {0}")]
    Solver(String),

    /// A mathematical invariant that should hold by construction did not.
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}
