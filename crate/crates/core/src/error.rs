use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("time grid must be strictly increasing and finite (violated at index {index})")]
    UnsortedGrid { index: usize },

    #[error("time grid must start at 0, got {first}")]
    GridStart { first: f64 },

    #[error("time {t} lies outside the span [{lo}, {hi}]")]
    OutOfSpan { t: f64, lo: f64, hi: f64 },

    #[error("grid has fewer than two points in [{a}, {b}]")]
    InsufficientGrid { a: f64, b: f64 },

    #[error("time {t} is not a grid point of the path")]
    NotAGridPoint { t: f64 },

    #[error("adaptive quadrature on [{a}, {b}] did not reach tolerance {tol}")]
    Quadrature { a: f64, b: f64, tol: f64 },

    #[error("degenerate coefficient: {0}")]
    DegenerateCoefficient(String),

    #[error("no index N <= {prefix_len} satisfies a_N + c2/N <= c1 (c1 = {c1:e}, c2 = {c2:e})")]
    NoAdmissibleIndex { prefix_len: usize, c1: f64, c2: f64 },

    #[error("knot sequences are not strictly increasing at N = {n}")]
    NonMonotoneKnots { n: usize },

    #[error("index N = {n} lies outside the stored prefix 1..={len}")]
    PrefixExhausted { n: usize, len: usize },

    #[error("psi cannot be inverted at y = {y}: {reason}")]
    PsiInverse { y: f64, reason: &'static str },

    #[error("evaluation site {site} was already used")]
    DuplicateSite { site: f64 },

    #[error("evaluation site {site} lies outside (0, {delta})")]
    SiteOutOfRange { site: f64, delta: f64 },

    #[error("stopping rule did not fire within {cap} evaluations")]
    NuCapExceeded { cap: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("cannot evaluate expression `{expr}`: {message}")]
    Expression { expr: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
