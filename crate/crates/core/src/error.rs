use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("no surface-wave band for m_s={m_s}, alpha_s={alpha_s} (requires alpha_s < m_s)")]
    NoSurfaceBand { m_s: f64, alpha_s: f64 },

    #[error(
        "non-positive discriminant {discriminant} in omega_max for m_s={m_s}, alpha_s={alpha_s}"
    )]
    NonPositiveDiscriminant {
        m_s: f64,
        alpha_s: f64,
        discriminant: f64,
    },

    #[error("root finding failed for {what}: bracket [{lo}, {hi}], residual {residual}")]
    RootFindFailure {
        what: &'static str,
        lo: f64,
        hi: f64,
        residual: f64,
    },

    #[error("frequency {omega} outside the guarded band (0, {limit}] (omega_max={omega_max})")]
    FrequencyOutOfBand {
        omega: f64,
        limit: f64,
        omega_max: f64,
    },

    #[error("gamma={gamma} is outside the spectrum ({lower}, {upper}) and is not gamma0={gamma0}")]
    GammaOutOfSpectrum {
        gamma: f64,
        lower: f64,
        upper: f64,
        gamma0: f64,
    },

    #[error("quadrature for {what} not converged: {coarse} vs {fine}")]
    QuadratureNotConverged {
        what: &'static str,
        coarse: f64,
        fine: f64,
    },

    #[error("singular {size}x{size} system (condition estimate {cond_estimate:e})")]
    SingularSystem { size: usize, cond_estimate: f64 },

    #[error(
        "moment hierarchy not converged at p_max={p_max}: doubling changed {what} by {change:e}"
    )]
    TruncationNotConverged {
        p_max: usize,
        what: &'static str,
        change: f64,
    },

    #[error("{what} outside its domain: {value}")]
    DomainError { what: &'static str, value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("realization {index}: {source}")]
    Realization {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Strips realization context, returning the underlying failure.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::Realization { source, .. } => source.root_cause(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
