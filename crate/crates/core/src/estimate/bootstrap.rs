//! Nonparametric bootstrap over shots.
//!
//! Replicate `r` resamples run I from substream `2r` and run II from
//! substream `2r + 1` of `(seed, Bootstrap)`, then reruns the whole pipeline,
//! calibration included. Replicates are independent of each other, so they
//! can be evaluated in any order or in parallel.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use super::calibration::mean_of;
use super::correlator::{correlator_stats, unclamped_value, CorrelationData};
use super::{Method, T1Correction};
use crate::error::{Error, Result};
use crate::rng::{substream, Stage, StreamRng};
use crate::sim::ShotRecord;
use crate::stats::std_dev;

pub const MIN_RESAMPLES: usize = 100;
pub const MIN_BOOTSTRAP_RECORDS: usize = 10;

/// `n` indices drawn uniformly with replacement. Cloning replays the draw.
#[derive(Clone)]
struct Resample {
    rng: StreamRng,
    n: usize,
    remaining: usize,
}

impl Resample {
    fn new(seed: u64, stream: u64, n: usize) -> Self {
        Resample {
            rng: substream(seed, Stage::Bootstrap, stream),
            n,
            remaining: n,
        }
    }
}

impl Iterator for Resample {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        Some(self.rng.random_range(0..self.n))
    }
}

fn direct_count_fraction<I1, I2>(data: &CorrelationData, idx1: I1, idx2: I2) -> Result<f64>
where
    I1: Iterator<Item = usize> + Clone,
    I2: Iterator<Item = usize> + Clone,
{
    let g_hat = mean_of(idx1.clone().map(|i| data.pairs[i].0));
    let e_hat = mean_of(idx2.map(|i| data.pi[i]));
    let axis = e_hat - g_hat;
    if axis.norm_sqr() == 0.0 {
        return Err(Error::DegenerateCalibration);
    }
    let scaled = axis.conj() / axis.norm_sqr();
    let normalized = |v: Complex64| ((v - g_hat) * scaled).re;
    let (mut n, mut k) = (0usize, 0usize);
    for i in idx1 {
        n += 1;
        k += (normalized(data.pairs[i].0) > 0.5) as usize;
    }
    Ok(k as f64 / n as f64)
}

fn check_inputs(data: &CorrelationData, method: Method) -> Result<()> {
    if !(method.is_correlator() || method == Method::DirectCount) {
        return Err(Error::usage(
            "bootstrap supports the correlator and direct-count methods",
        ));
    }
    if data.pairs.len() < MIN_BOOTSTRAP_RECORDS || data.pi.len() < MIN_BOOTSTRAP_RECORDS {
        return Err(Error::Usage(alloc::format!(
            "bootstrap needs at least {MIN_BOOTSTRAP_RECORDS} records per run"
        )));
    }
    Ok(())
}

/// Estimator value on bootstrap replicate `r`.
pub fn bootstrap_replicate(
    data: &CorrelationData,
    method: Method,
    seed: u64,
    r: u64,
    correction: Option<T1Correction>,
) -> Result<f64> {
    check_inputs(data, method)?;
    let idx1 = Resample::new(seed, 2 * r, data.pairs.len());
    let idx2 = Resample::new(seed, 2 * r + 1, data.pi.len());
    if method == Method::DirectCount {
        return direct_count_fraction(data, idx1, idx2);
    }
    let stats = correlator_stats(data, idx1, idx2)?;
    unclamped_value(method, &stats, correction)
}

pub(crate) fn bootstrap_from_data(
    data: &CorrelationData,
    method: Method,
    resamples: usize,
    seed: u64,
    correction: Option<T1Correction>,
) -> Result<f64> {
    if resamples < MIN_RESAMPLES {
        return Err(Error::Usage(alloc::format!(
            "bootstrap needs at least {MIN_RESAMPLES} resamples"
        )));
    }
    check_inputs(data, method)?;
    let values = (0..resamples as u64)
        .map(|r| bootstrap_replicate(data, method, seed, r, correction))
        .collect::<Result<Vec<f64>>>()?;
    Ok(std_dev(&values))
}

/// Bootstrap standard deviation of an estimator over shots.
pub fn bootstrap_std(
    run1: &[ShotRecord],
    run2: &[ShotRecord],
    method: Method,
    n_resamples: usize,
    seed: u64,
) -> Result<f64> {
    let data = CorrelationData::from_records(run1, run2)?;
    bootstrap_from_data(&data, method, n_resamples, seed, None)
}
