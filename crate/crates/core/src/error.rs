use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A measured value cannot be produced by the model at any parameter.
    #[error("value outside the model range: {0}")]
    OutOfModel(String),

    /// The Poisson lattice would drop more probability mass than allowed.
    #[error(
        "lattice truncation {truncation} too small: tail mass {tail:e} exceeds {limit:e}, need at least {required}"
    )]
    Truncation {
        truncation: usize,
        required: usize,
        tail: f64,
        limit: f64,
    },

    #[error("fit did not converge after {iterations} iterations")]
    FitFailure { iterations: usize },

    /// The drive is too strong for a weak-probe quantity to be meaningful.
    #[error("drive outside the weak-probe regime: mean photon number {photons:e} >= {limit:e}")]
    Regime { photons: f64, limit: f64 },

    #[error("integration step too large: trace drifted by {drift:e}")]
    StepSize { drift: f64 },

    #[error("Hilbert-space dimension {dim} exceeds the solver cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("Liouvillian has more than one steady state")]
    MultipleSteadyStates,
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
