//! Estimators of the residual excited-state population.
//!
//! * correlator methods ([`correlator_estimate`]): the mean product of two
//!   sequential normalized readouts, inverted exactly or to first order, or
//!   the un-normalized first-order form on raw projections;
//! * [`direct_count`]: single-shot thresholding at the calibration midpoint;
//! * [`qutrit_estimate`]: e-f Rabi amplitudes with and without a g-e π-pulse.

mod bootstrap;
mod calibration;
mod correlator;
mod counting;
mod qutrit;

pub use bootstrap::{bootstrap_replicate, bootstrap_std, MIN_BOOTSTRAP_RECORDS, MIN_RESAMPLES};
pub use calibration::{calibrate, normalize, CalibrationResult};
pub use correlator::{
    correlator_estimate, correlator_estimate_from_data, correlator_g1_zero, p_e_approx, p_e_exact,
    p_e_exact_continued, p_e_general, t1_correction, CorrelationData, CorrelatorStats,
};
pub use counting::{direct_count, direct_count_runs};
pub use qutrit::{qutrit_estimate, MIN_QUTRIT_ANGLES};

use core::fmt;
use core::str::FromStr;

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Method {
    CorrelatorApprox,
    CorrelatorExact,
    CorrelatorGeneral,
    DirectCount,
    Qutrit,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::CorrelatorApprox,
        Method::CorrelatorExact,
        Method::CorrelatorGeneral,
        Method::DirectCount,
        Method::Qutrit,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::CorrelatorApprox => "correlator_approx",
            Method::CorrelatorExact => "correlator_exact",
            Method::CorrelatorGeneral => "correlator_general",
            Method::DirectCount => "direct_count",
            Method::Qutrit => "qutrit",
        }
    }

    pub fn is_correlator(self) -> bool {
        matches!(
            self,
            Method::CorrelatorApprox | Method::CorrelatorExact | Method::CorrelatorGeneral
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Usage(alloc::format!("unknown method `{s}`")))
    }
}

/// Per-estimate diagnostics. Fields that a method does not define are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Diagnostics {
    /// Mean of the first run I readout.
    pub g0: Option<f64>,
    /// Mean of the π-pulsed readout.
    pub g0_pi: Option<f64>,
    /// Mean product of the two run I readouts (before any T1 correction).
    pub g1_0: Option<f64>,
    /// Product of the two run I means, the uncorrelated limit.
    pub g1_inf: Option<f64>,
    pub snr_hat: Option<f64>,
    pub t1_correction_applied: bool,
    /// The sample correlator was negative; `p_e` was clamped to zero.
    pub noise_dominated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Estimate {
    pub method: Method,
    pub p_e: f64,
    pub std_error: f64,
    pub n_shots: u64,
    pub diagnostics: Diagnostics,
}

/// Readout-duration correction: the measurement time and the T1 it is
/// compared with.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct T1Correction {
    pub t_meas: f64,
    pub t1: f64,
}

impl T1Correction {
    /// Multiplicative factor `exp(t_meas / t1)`.
    pub fn factor(&self) -> f64 {
        t1_correction(1.0, self.t_meas, self.t1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Uncertainty {
    /// Sample variance of the per-shot products over N, propagated to `p_e`.
    Analytic,
    /// Resampling of both runs with replacement.
    Bootstrap { resamples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EstimateOptions {
    pub t1_correction: Option<T1Correction>,
    pub uncertainty: Uncertainty,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            t1_correction: None,
            uncertainty: Uncertainty::Bootstrap {
                resamples: 200,
                seed: 0,
            },
        }
    }
}

impl EstimateOptions {
    pub fn analytic() -> Self {
        EstimateOptions {
            t1_correction: None,
            uncertainty: Uncertainty::Analytic,
        }
    }

    pub fn with_t1_correction(mut self, t_meas: f64, t1: f64) -> Self {
        self.t1_correction = Some(T1Correction { t_meas, t1 });
        self
    }
}
