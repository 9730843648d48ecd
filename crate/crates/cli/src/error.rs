use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] chalpha::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Machine-readable failure record written to stderr and `error.json`.
#[derive(Debug, Serialize)]
pub struct ErrorRecord<'a> {
    pub command: &'a str,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        use chalpha::Error as E;
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Json(_) => "json",
            CliError::Core(e) => match e {
                E::Parameter(_) => "parameter",
                E::SpectralExponent { .. } => "spectral_exponent",
                E::ZeroWaveVector => "zero_wave_vector",
                E::Dimension { .. } => "dimension",
                E::NotSolenoidal(_) => "not_solenoidal",
                E::Cfl { .. } => "cfl",
                E::TooManyModes { .. } => "too_many_modes",
                E::TooFewSamples { .. } => "too_few_samples",
                E::MissingNoise(_) => "missing_noise",
                E::EndpointVariation(_) => "endpoint_variation",
                E::Infeasible(_) => "infeasible",
                E::EmptyBattery => "empty_battery",
                E::Format(_) => "format",
                E::Io(_) => "io",
                E::Json(_) => "json",
            },
        }
    }
}
