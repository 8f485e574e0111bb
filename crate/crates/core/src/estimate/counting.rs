use alloc::vec::Vec;

use num_complex::Complex64;

use super::calibration::{calibrate, CalibrationResult};
use super::{Diagnostics, Estimate, Method};
use crate::error::{Error, Result};
use crate::sim::ShotRecord;

/// Single-shot counting: each normalized voltage above 0.5 counts as `e`.
///
/// With Gaussian noise each state is misread with probability about
/// `Φ(-snr/2)`, which sets an absolute floor on the result.
pub fn direct_count(voltages: &[Complex64], calib: &CalibrationResult) -> Result<Estimate> {
    if voltages.is_empty() {
        return Err(Error::usage("direct counting needs at least one record"));
    }
    if calib.axis().norm_sqr() == 0.0 {
        return Err(Error::DegenerateCalibration);
    }
    let n = voltages.len() as f64;
    let (mut excited, mut sum) = (0usize, 0.0);
    for &v in voltages {
        let x = calib.normalize(v);
        sum += x;
        excited += (x > 0.5) as usize;
    }
    let p = excited as f64 / n;
    Ok(Estimate {
        method: Method::DirectCount,
        p_e: p,
        std_error: libm::sqrt(p * (1.0 - p) / n),
        n_shots: voltages.len() as u64,
        diagnostics: Diagnostics {
            g0: Some(sum / n),
            snr_hat: Some(calib.snr_hat),
            ..Diagnostics::default()
        },
    })
}

/// Calibrates on run I first readouts and run II, then counts run I.
pub fn direct_count_runs(run1: &[ShotRecord], run2: &[ShotRecord]) -> Result<Estimate> {
    let ground: Vec<Complex64> = run1.iter().map(|r| r.v1).collect();
    let pi: Vec<Complex64> = run2.iter().map(|r| r.v1).collect();
    let calib = calibrate(&ground, &pi)?;
    let mut estimate = direct_count(&ground, &calib)?;
    estimate.diagnostics.g0_pi =
        Some(pi.iter().map(|&v| calib.normalize(v)).sum::<f64>() / pi.len() as f64);
    Ok(estimate)
}
