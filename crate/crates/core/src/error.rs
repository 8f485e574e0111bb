use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of a physical formula.
    #[error("domain error: {0}")]
    Domain(String),
    /// Caller supplied unusable input (empty collections, too few points, ...).
    #[error("invalid input: {0}")]
    Usage(String),
    #[error("degenerate calibration: ground and excited responses coincide")]
    DegenerateCalibration,
    #[error("degenerate responses: estimator denominator vanishes ({denominator:e})")]
    DegenerateResponses { denominator: f64 },
    /// The sampled correlator is negative, i.e. the sample is dominated by noise.
    #[error("noise-dominated sample: g1(0) = {g1_0:e}")]
    NoiseDominated { g1_0: f64 },
    #[error("fit failed: {reason} (residual {residual:e})")]
    Fit { reason: String, residual: f64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}
