//! Estimation over loaded or simulated datasets, with the bootstrap spread
//! across the rayon pool.

use qtherm_core::estimate::{
    bootstrap_replicate, correlator_estimate_from_data, direct_count_runs, qutrit_estimate,
    CorrelationData, Estimate, EstimateOptions, Method, T1Correction, Uncertainty,
    MIN_BOOTSTRAP_RECORDS, MIN_RESAMPLES,
};
use qtherm_core::sim::Dataset;
use qtherm_core::stats::std_dev;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Bootstrap standard deviation; identical to the sequential core routine.
pub fn par_bootstrap_std(
    data: &CorrelationData,
    method: Method,
    resamples: usize,
    seed: u64,
    correction: Option<T1Correction>,
) -> Result<f64> {
    if resamples < MIN_RESAMPLES {
        return Err(Error::Usage(format!(
            "bootstrap needs at least {MIN_RESAMPLES} resamples"
        )));
    }
    if data.pairs.len() < MIN_BOOTSTRAP_RECORDS || data.pi.len() < MIN_BOOTSTRAP_RECORDS {
        return Err(Error::Usage(format!(
            "bootstrap needs at least {MIN_BOOTSTRAP_RECORDS} records per run"
        )));
    }
    let values = (0..resamples as u64)
        .into_par_iter()
        .map(|r| bootstrap_replicate(data, method, seed, r, correction))
        .collect::<qtherm_core::Result<Vec<f64>>>()?;
    Ok(std_dev(&values))
}

pub fn estimate(dataset: &Dataset, method: Method, options: &EstimateOptions) -> Result<Estimate> {
    match method {
        Method::Qutrit => {
            if dataset.qutrit.is_empty() {
                return Err(Error::Usage(
                    "the qutrit method needs e-f Rabi records".into(),
                ));
            }
            Ok(qutrit_estimate(&dataset.qutrit)?)
        }
        Method::DirectCount => {
            if dataset.run1.is_empty() || dataset.run2.is_empty() {
                return Err(Error::Usage(
                    "direct counting needs run I and run II records".into(),
                ));
            }
            Ok(direct_count_runs(&dataset.run1, &dataset.run2)?)
        }
        _ => {
            let data = CorrelationData::from_records(&dataset.run1, &dataset.run2)?;
            let analytic = EstimateOptions {
                uncertainty: Uncertainty::Analytic,
                ..*options
            };
            let mut est = correlator_estimate_from_data(&data, method, &analytic)?;
            if let Uncertainty::Bootstrap { resamples, seed } = options.uncertainty {
                est.std_error =
                    par_bootstrap_std(&data, method, resamples, seed, options.t1_correction)?;
            }
            Ok(est)
        }
    }
}
