use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid photon cutoff {0}: n_max must be at least 1")]
    InvalidCutoff(usize),

    #[error("level {level} does not exist on the {site} site")]
    InvalidLevel { site: &'static str, level: &'static str },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid rate {name} = {value}")]
    InvalidRate { name: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("steady state is not unique: kernel dimension {kernel_dim}")]
    NonUniqueSteadyState { kernel_dim: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("ambiguous branch labeling: energies {0} and {1} eV are degenerate")]
    AmbiguousLabeling(f64, f64),

    #[error("resonance not bracketed: {0}")]
    ResonanceNotBracketed(String),

    #[error("insufficient data: need {needed}, found {found}")]
    InsufficientData { needed: usize, found: usize },

    #[error("underdetermined fit: {points} data points for {params} free parameters")]
    Underdetermined { points: usize, params: usize },

    #[error("objective is not finite at {0:?}")]
    NonFiniteObjective(Vec<f64>),

    #[error("incomplete scenario: {0}")]
    IncompleteScenario(String),

    #[error("phase {phase}: {source}")]
    Phase {
        phase: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NumericalFailure(_) | Error::NonUniqueSteadyState { .. } => true,
            Error::Phase { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
