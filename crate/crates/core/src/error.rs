use thiserror::Error;

/// Crate-wide error type. Variants carry the short diagnostic phrases the
/// command-line frontend maps onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// The identity word labels no conjugacy class of closed geodesics.
    #[error("no closed geodesic for identity")]
    IdentityWord,

    /// A cumulative or windowed orbit selection came up empty.
    #[error("empty orbit window ({0})")]
    EmptyWindow(String),

    /// Too few usable grid points to form a slope estimate.
    #[error("insufficient grid: {0}")]
    InsufficientGrid(String),

    /// A group element with |trace| <= 2 has no translation length.
    #[error("non-hyperbolic element (|trace| = {trace_abs})")]
    NonHyperbolic { trace_abs: f64 },

    /// Entropy plus mean potential exceeded the pressure beyond tolerance.
    #[error("variational principle violated: deficit = {deficit}")]
    VariationalViolation { deficit: f64 },

    /// A conditioning event had zero weight on the whole grid.
    #[error("event never realized")]
    EventNeverRealized,

    /// A system definition failed validation (adjacency, roof, disks, ...).
    #[error("invalid system: {0}")]
    InvalidSystem(String),

    /// A potential failed validation or does not fit the backend.
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    /// A measure failed validation (stochasticity, stationarity, support).
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    /// An orbit is missing a cached integral the caller asked for.
    #[error("missing cached integral for potential index {index}")]
    MissingIntegral { index: usize },

    /// Invalid argument to an estimator or report routine.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
