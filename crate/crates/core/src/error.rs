use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("convergence condition violated: r = {r} is below d + 1 = {min}")]
    SpectralExponent { r: f64, min: f64 },

    #[error("zero wave vector has no canonical representative")]
    ZeroWaveVector,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("field is not divergence free (max |k.u| = {0:e})")]
    NotSolenoidal(f64),

    #[error("CFL condition violated at t = {time}: Courant number {courant:.3} exceeds {limit:.3}")]
    Cfl { time: f64, courant: f64, limit: f64 },

    #[error("mode count {count} exceeds limit {limit}")]
    TooManyModes { count: usize, limit: usize },

    #[error("too few samples: {found} (need at least {required})")]
    TooFewSamples { found: usize, required: usize },

    #[error("missing noise record: {0}")]
    MissingNoise(String),

    #[error("variation field does not vanish at the end points (max |v| = {0:e})")]
    EndpointVariation(f64),

    #[error("infeasible constraint: {0}")]
    Infeasible(String),

    #[error("empty variation battery")]
    EmptyBattery,

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

