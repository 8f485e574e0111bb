use num_complex::Complex64;

use crate::error::{Error, Result};

/// Mean responses of the no-pulse and π-pulse calibration sets.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CalibrationResult {
    pub v_g_hat: Complex64,
    pub v_e_hat: Complex64,
    pub n_cal: u64,
    /// Separation over the pooled noise along the g-e axis.
    pub snr_hat: f64,
}

impl CalibrationResult {
    /// `v_e_hat - v_g_hat`.
    pub fn axis(&self) -> Complex64 {
        self.v_e_hat - self.v_g_hat
    }

    /// `Re[(v - v_g_hat) / (v_e_hat - v_g_hat)]`. The calibration is
    /// non-degenerate by construction.
    pub fn normalize(&self, v: Complex64) -> f64 {
        let axis = self.axis();
        ((v - self.v_g_hat) * axis.conj()).re / axis.norm_sqr()
    }
}

pub(crate) fn mean_of(values: impl Iterator<Item = Complex64>) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut n = 0usize;
    for v in values {
        sum += v;
        n += 1;
    }
    sum / n as f64
}

/// Builds the normalization map from ground (no-pulse) and π-pulse voltages.
pub fn calibrate(ground: &[Complex64], pi: &[Complex64]) -> Result<CalibrationResult> {
    if ground.is_empty() || pi.is_empty() {
        return Err(Error::usage("calibration needs ground and π-pulse records"));
    }
    let v_g_hat = mean_of(ground.iter().copied());
    let v_e_hat = mean_of(pi.iter().copied());
    let axis = v_e_hat - v_g_hat;
    if axis.norm_sqr() == 0.0 {
        return Err(Error::DegenerateCalibration);
    }
    let unit = axis / axis.norm();
    let spread = |set: &[Complex64], centre: Complex64| -> f64 {
        set.iter()
            .map(|v| {
                let d = ((v - centre) * unit.conj()).re;
                d * d
            })
            .sum()
    };
    let dof = ground.len() + pi.len();
    let snr_hat = if dof > 2 {
        let pooled = (spread(ground, v_g_hat) + spread(pi, v_e_hat)) / (dof - 2) as f64;
        axis.norm() / libm::sqrt(pooled)
    } else {
        f64::NAN
    };
    Ok(CalibrationResult {
        v_g_hat,
        v_e_hat,
        n_cal: dof as u64,
        snr_hat,
    })
}

/// Normalized real voltage; ground mean maps to 0 and π-pulsed mean to 1.
pub fn normalize(v: Complex64, calib: &CalibrationResult) -> Result<f64> {
    if calib.axis().norm_sqr() == 0.0 {
        return Err(Error::DegenerateCalibration);
    }
    Ok(calib.normalize(v))
}
