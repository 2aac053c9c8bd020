//! Least-squares recovery of multivariate functions from random point samples.
//!
//! The crate assembles the full pipeline for sampling recovery in spans of
//! orthonormal systems and for the cubature rules induced by the recovered
//! coefficients:
//!
//! * [`index`] — hyperbolic-cross multi-index sets ordered by mixed-smoothness
//!   weights, and the singular values attached to them;
//! * [`bases`] — trigonometric, Chebyshev and Legendre orthonormal systems plus
//!   the spectral models (eigenvalue sequences, kernel diagonals) they induce;
//! * [`sampling`] — counter-based reproducible node draws for the uniform,
//!   Chebyshev and importance (leverage-score) sampling measures;
//! * [`leastsq`] — design matrices (dense, sparse, or implicit tensor form),
//!   the iterative LSQR fit, and plain/weighted recovery front ends;
//! * [`quadrature`] — least-squares cubature weights and integration;
//! * [`bounds`] — worst-case error bounds, spectral functions, matrix
//!   concentration tails, and the empirical experiments that check them;
//! * [`testfns`] — the benchmark functions with certified coefficient tables;
//! * [`wavelet`] — Daubechies refinement tables and hyperbolic wavelet
//!   regression with sparse designs;
//! * [`linalg`], [`numeric`] — the small dependency-free kernels (LSQR,
//!   Householder QR, Jacobi eigensolver, power iteration, quadrature rules)
//!   the rest of the crate is built on.
//!
//! Everything downstream of a seed is byte-reproducible: node generation uses
//! counter-based ChaCha streams, and all parallel reductions combine fixed
//! chunks in a fixed order.

pub mod bases;
pub mod bounds;
pub mod index;
pub mod leastsq;
pub mod linalg;
pub mod numeric;
pub mod quadrature;
pub mod sampling;
pub mod testfns;
pub mod wavelet;

/// Complex scalar used throughout (f64 components).
pub type C64 = num_complex::Complex64;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument was outside its documented range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Two objects that must agree in dimension or length do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// An enumeration or allocation would exceed the library's memory budget.
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    /// An iterative method ran out of iterations before reaching tolerance.
    #[error("no convergence: {0}")]
    NoConvergence(String),
    /// A request went past the certified range of a tabulated quantity.
    #[error("out of tabulated range: {0}")]
    RangeExceeded(String),
    /// A linear system was numerically rank deficient.
    #[error("numerically singular: {0}")]
    Singular(String),
    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// CSV read/write failure.
    #[error(transparent)]
    Csv(#[from] csv::Error),
    /// A text or CSV payload did not parse into the expected shape.
    #[error("parse error: {0}")]
    Parse(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn mismatch(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
