use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar parameter is outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// An `(n, k)` index is outside the triangle or stored window.
    #[error("index error: {0}")]
    Index(String),

    /// An evaluation point or time lies outside the operator's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A quadrature or grid cannot resolve the requested degree.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// A least-squares or spectral problem is numerically rank deficient.
    #[error("conditioning error: {0}")]
    Conditioning(String),

    /// A field evaluated to NaN or infinity at the reported location.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// A phase point is glancing where the construction is singular.
    #[error("singular configuration: {0}")]
    SingularConfiguration(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// A data file does not match the documented layout.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
