//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by scenario construction, channel synthesis, and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// Scenario configuration failed validation.
    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),

    /// An index was outside the scenario dimensions.
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    /// A channel or beamformer operation received degenerate input.
    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    /// Allocation dimensions do not match the scenario.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An allocation violated the problem constraints.
    #[error("infeasible allocation: {0}")]
    Infeasible(String),

    /// Subproblem construction detected inconsistent data.
    #[error("subproblem error: {0}")]
    Subproblem(String),

    /// The spin enumeration cap was exceeded.
    #[error("spin enumeration cap exceeded: J = {j} > cap = {cap}")]
    SpinCapExceeded {
        /// Number of satellites requested.
        j: usize,
        /// Configured enumeration cap.
        cap: usize,
    },

    /// An oracle was asked to enumerate an instance above its hard size cap.
    #[error("oracle instance too large: {0}")]
    OracleTooLarge(String),

    /// Relaxation solver failed to reach the requested accuracy.
    #[error("relaxation solve failed: {0}")]
    RelaxationFailed(String),

    /// I/O failure while reading configs or writing results.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Config file could not be parsed.
    #[error("config parse error: {0}")]
    ConfigParse(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
