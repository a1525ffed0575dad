//! Error type shared across the crate.

/// Convenience alias used by every fallible function in this crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong outside of plain bugs.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Input outside the mathematical domain of the routine.
    #[error("domain: {0}")]
    Domain(String),

    /// Structurally invalid configuration (step sizes, ranges, grid shapes).
    #[error("config: {0}")]
    Config(String),

    /// Parameters sit on a classification boundary where no verdict holds.
    #[error("boundary: {0}")]
    Boundary(String),

    /// A closed-form stability statement disagrees with the general
    /// classifier; indicates a bug or parameters outside either's premises.
    #[error("consistency: {0}")]
    Consistency(String),

    /// No imaginary-axis crossing exists for the given coefficients.
    #[error("no crossing: {0}")]
    NoCrossing(String),

    /// The time series is too short for the requested analysis.
    #[error("series too short: need at least {needed} samples, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    /// The data carries no usable structure (constant series, no neighbors).
    #[error("degenerate data: {0}")]
    Degenerate(String),
}
