use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Trap parameters that do not describe a stable linear two-ion chain.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// 4 ω_r² = ω_s²: the Kerr coefficient diverges at the 2:1 rocking/stretch resonance.
    #[error("resonance singularity: 4 omega_rock^2 = omega_stretch^2 (omega_rock = {omega_rock}, omega_stretch = {omega_stretch})")]
    ResonanceSingularity { omega_rock: f64, omega_stretch: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("instability: {0}")]
    Instability(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn require_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("{name} must be positive and finite, got {value}")))
    }
}

pub(crate) fn require_non_negative(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(domain(format!("{name} must be non-negative and finite, got {value}")))
    }
}
