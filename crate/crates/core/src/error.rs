use thiserror::Error;

pub type Result<T> = std::result::Result<T, CmtError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CmtError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("singular response at omega = {omega} meV: drive sits on an undamped pole")]
    Degenerate { omega: f64 },

    #[error("scattering matrix is not reciprocal: |s12 - s21| = {mismatch:e}")]
    NonReciprocal { mismatch: f64 },

    #[error("output dephasing undefined: {which} = {value:e} is below {threshold:e}")]
    UndefinedPhase {
        which: &'static str,
        value: f64,
        threshold: f64,
    },

    #[error("energy window [{min}, {max}] meV is too narrow: {reason}")]
    WindowTooNarrow { min: f64, max: f64, reason: String },

    #[error("absorption spectrum has no interior maximum (lossless or flat response)")]
    NoAbsorptionPeak,

    #[error(
        "time-domain transient not converged: demodulated drift {drift:e} exceeds {threshold:e}; \
         try t_end >= {suggested_t_end} meV^-1"
    )]
    NotConverged {
        drift: f64,
        threshold: f64,
        suggested_t_end: f64,
    },

    #[error("steady state undefined: no damping channel is active")]
    SteadyStateUndefined,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
}
