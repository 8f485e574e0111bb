use alloc::vec::Vec;

use num_complex::Complex64;

use super::calibration::{calibrate, mean_of};
use super::{Diagnostics, Estimate, EstimateOptions, Method, T1Correction, Uncertainty};
use crate::error::{Error, Result};
use crate::sim::ShotRecord;

/// Mean of `v̄1·v̄2` over normalized pairs.
pub fn correlator_g1_zero(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::usage("correlator needs at least one pair"));
    }
    Ok(pairs.iter().map(|(a, b)| a * b).sum::<f64>() / pairs.len() as f64)
}

/// Exact inversion of the normalized correlator:
/// `P_e = 1/2 - 1/(2·sqrt(1 + 4·g1_0))`.
pub fn p_e_exact(g1_0: f64) -> Result<f64> {
    if !(g1_0 > -0.25) {
        return Err(Error::NoiseDominated { g1_0 });
    }
    Ok(0.5 - 0.5 / libm::sqrt(1.0 + 4.0 * g1_0))
}

/// Odd continuation of [`p_e_exact`] to negative correlators,
/// `-p_e_exact(-g1_0)`. Defined everywhere with unit slope at zero, so
/// resampled spreads stay finite when noise pushes `g1_0` below -1/4.
pub fn p_e_exact_continued(g1_0: f64) -> f64 {
    let magnitude = 0.5 - 0.5 / libm::sqrt(1.0 + 4.0 * g1_0.abs());
    if g1_0 < 0.0 {
        -magnitude
    } else {
        magnitude
    }
}

/// First-order inversion `P_e ≈ g1_0`, clamped at zero. Overestimates by the
/// relative factor `(1 - P_e)/(1 - 2P_e)² - 1`.
pub fn p_e_approx(g1_0: f64) -> f64 {
    g1_0.max(0.0)
}

/// First-order estimate from un-normalized real responses:
/// `(g1_0 - g0²) / (g0 + g0_pi - 2·sqrt(g1_0))²`.
///
/// Requires the ground response to dominate `g1_0`, i.e. to lie well away
/// from zero on the projection axis.
pub fn p_e_general(g1_0: f64, g0: f64, g0_pi: f64) -> Result<f64> {
    if !(g1_0 >= 0.0) {
        return Err(Error::NoiseDominated { g1_0 });
    }
    let root = libm::sqrt(g1_0);
    let denominator = {
        let d = g0 + g0_pi - 2.0 * root;
        d * d
    };
    let scale = g0.abs().max(g0_pi.abs()).max(root);
    if !(denominator > 1e-9 * scale * scale) {
        return Err(Error::DegenerateResponses { denominator });
    }
    Ok((g1_0 - g0 * g0) / denominator)
}

/// Undoes the relaxation during a readout of length `t_meas`.
pub fn t1_correction(p_e_raw: f64, t_meas: f64, t1: f64) -> f64 {
    p_e_raw * libm::exp(t_meas / t1)
}

/// Run I pairs and run II voltages of a correlation experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationData {
    pub pairs: Vec<(Complex64, Complex64)>,
    pub pi: Vec<Complex64>,
}

impl CorrelationData {
    pub fn from_records(run1: &[ShotRecord], run2: &[ShotRecord]) -> Result<Self> {
        if run1.is_empty() || run2.is_empty() {
            return Err(Error::usage(
                "correlator methods need run I pair records and run II π-pulse records",
            ));
        }
        let pairs = run1
            .iter()
            .map(|r| {
                r.v2.map(|v2| (r.v1, v2))
                    .ok_or_else(|| Error::usage("run I record without a second voltage"))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CorrelationData {
            pairs,
            pi: run2.iter().map(|r| r.v1).collect(),
        })
    }
}

/// Sufficient statistics of a (possibly resampled) correlation dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatorStats {
    pub n1: usize,
    pub n2: usize,
    /// Normalized means and mean product.
    pub g0: f64,
    pub g0_second: f64,
    pub g0_pi: f64,
    pub g1_0: f64,
    /// Sample variance of the normalized products.
    pub product_var: f64,
    /// Same quantities on the raw g-e axis projection.
    pub raw_g0: f64,
    pub raw_g0_pi: f64,
    pub raw_g1_0: f64,
    /// Sample (co)variances of raw products and first readouts, and the
    /// variance of the raw π-pulsed readouts.
    pub raw_cov: [[f64; 2]; 2],
    pub raw_pi_var: f64,
}

/// Two passes over the selected indices: means, then centered moments.
/// `idx1`/`idx2` are replayed, so they must be cheap to clone.
pub(crate) fn correlator_stats<I1, I2>(
    data: &CorrelationData,
    idx1: I1,
    idx2: I2,
) -> Result<CorrelatorStats>
where
    I1: Iterator<Item = usize> + Clone,
    I2: Iterator<Item = usize> + Clone,
{
    let g_hat = mean_of(idx1.clone().map(|i| data.pairs[i].0));
    let e_hat = mean_of(idx2.clone().map(|i| data.pi[i]));
    let axis = e_hat - g_hat;
    let norm_sqr = axis.norm_sqr();
    if norm_sqr == 0.0 || !norm_sqr.is_finite() {
        return Err(Error::DegenerateCalibration);
    }
    let unit = axis.conj() / libm::sqrt(norm_sqr);
    let scaled = axis.conj() / norm_sqr;
    let normalized = |v: Complex64| ((v - g_hat) * scaled).re;
    let raw = |v: Complex64| (v * unit).re;
    // Orient the raw axis so the ground response is positive.
    let sign = if raw(g_hat) < 0.0 { -1.0 } else { 1.0 };

    let (mut n1, mut sx, mut sy, mut sxy, mut sxy2) = (0usize, 0.0, 0.0, 0.0, 0.0);
    let (mut su, mut suv) = (0.0, 0.0);
    for i in idx1.clone() {
        let (a, b) = data.pairs[i];
        let (x, y) = (normalized(a), normalized(b));
        n1 += 1;
        sx += x;
        sy += y;
        sxy += x * y;
        sxy2 += x * y * x * y;
        let (u, v) = (sign * raw(a), sign * raw(b));
        su += u;
        suv += u * v;
    }
    let (mut n2, mut sp, mut sq) = (0usize, 0.0, 0.0);
    for i in idx2.clone() {
        sp += normalized(data.pi[i]);
        sq += sign * raw(data.pi[i]);
        n2 += 1;
    }
    let (f1, f2) = (n1 as f64, n2 as f64);
    let g1_0 = sxy / f1;
    let raw_g0 = su / f1;
    let raw_g1_0 = suv / f1;
    let raw_g0_pi = sq / f2;

    // Third pass for the raw covariances, only needed by the analytic path
    // but cheap next to the two above.
    let (mut c_pp, mut c_pu, mut c_uu) = (0.0, 0.0, 0.0);
    for i in idx1 {
        let (a, b) = data.pairs[i];
        let (u, v) = (sign * raw(a), sign * raw(b));
        let dp = u * v - raw_g1_0;
        let du = u - raw_g0;
        c_pp += dp * dp;
        c_pu += dp * du;
        c_uu += du * du;
    }
    let mut c_qq = 0.0;
    for i in idx2 {
        let d = sign * raw(data.pi[i]) - raw_g0_pi;
        c_qq += d * d;
    }
    let dof1 = (f1 - 1.0).max(1.0);
    let dof2 = (f2 - 1.0).max(1.0);
    Ok(CorrelatorStats {
        n1,
        n2,
        g0: sx / f1,
        g0_second: sy / f1,
        g0_pi: sp / f2,
        g1_0,
        product_var: ((sxy2 - f1 * g1_0 * g1_0) / dof1).max(0.0),
        raw_g0,
        raw_g0_pi,
        raw_g1_0,
        raw_cov: [[c_pp / dof1, c_pu / dof1], [c_pu / dof1, c_uu / dof1]],
        raw_pi_var: c_qq / dof2,
    })
}

pub(crate) struct PointValue {
    pub p_e: f64,
    pub noise_dominated: bool,
}

fn correction_factor(correction: Option<T1Correction>) -> f64 {
    correction.map_or(1.0, |c| c.factor())
}

/// Point estimate from sufficient statistics.
///
/// The readout-duration correction rescales the normalized correlator before
/// inversion, which reduces to the multiplicative correction of `P_e` to first
/// order and stays exact for larger populations. The general form corrects
/// `P_e` itself.
pub(crate) fn point_value(
    method: Method,
    stats: &CorrelatorStats,
    correction: Option<T1Correction>,
) -> Result<PointValue> {
    let factor = correction_factor(correction);
    let g = stats.g1_0 * factor;
    match method {
        Method::CorrelatorExact => Ok(if g < 0.0 {
            PointValue {
                p_e: 0.0,
                noise_dominated: true,
            }
        } else {
            PointValue {
                p_e: p_e_exact(g)?,
                noise_dominated: false,
            }
        }),
        Method::CorrelatorApprox => Ok(PointValue {
            p_e: p_e_approx(g),
            noise_dominated: g < 0.0,
        }),
        Method::CorrelatorGeneral => {
            let p = match p_e_general(stats.raw_g1_0, stats.raw_g0, stats.raw_g0_pi) {
                Ok(p) => p,
                Err(Error::NoiseDominated { .. }) => -1.0,
                Err(e) => return Err(e),
            };
            Ok(if p < 0.0 {
                PointValue {
                    p_e: 0.0,
                    noise_dominated: true,
                }
            } else {
                PointValue {
                    p_e: p * factor,
                    noise_dominated: false,
                }
            })
        }
        _ => Err(Error::usage("not a correlator method")),
    }
}

/// Unclamped estimator value; the statistic that bootstrap resamples.
pub(crate) fn unclamped_value(
    method: Method,
    stats: &CorrelatorStats,
    correction: Option<T1Correction>,
) -> Result<f64> {
    let factor = correction_factor(correction);
    match method {
        Method::CorrelatorExact => Ok(p_e_exact_continued(stats.g1_0 * factor)),
        Method::CorrelatorApprox => Ok(stats.g1_0 * factor),
        Method::CorrelatorGeneral => {
            p_e_general(stats.raw_g1_0, stats.raw_g0, stats.raw_g0_pi).map(|p| p * factor)
        }
        _ => Err(Error::usage("not a correlator method")),
    }
}

/// Delta-method standard error from the per-shot sample variances.
/// Calibration uncertainty is ignored for the normalized forms.
pub(crate) fn analytic_std(
    method: Method,
    stats: &CorrelatorStats,
    correction: Option<T1Correction>,
) -> Result<f64> {
    let factor = correction_factor(correction);
    let n1 = stats.n1 as f64;
    match method {
        Method::CorrelatorApprox => Ok(factor * libm::sqrt(stats.product_var / n1)),
        Method::CorrelatorExact => {
            let g = (stats.g1_0 * factor).max(0.0);
            let slope = libm::pow(1.0 + 4.0 * g, -1.5);
            Ok(slope * factor * libm::sqrt(stats.product_var / n1))
        }
        Method::CorrelatorGeneral => {
            let f = |g1: f64, g0: f64, gp: f64| p_e_general(g1, g0, gp).map(|p| p * factor);
            let (g1, g0, gp) = (stats.raw_g1_0, stats.raw_g0, stats.raw_g0_pi);
            let step = |v: f64| 1e-6 * v.abs().max(1e-12);
            let (h1, h0, hp) = (step(g1), step(g0), step(gp));
            let d1 = (f(g1 + h1, g0, gp)? - f(g1 - h1, g0, gp)?) / (2.0 * h1);
            let d0 = (f(g1, g0 + h0, gp)? - f(g1, g0 - h0, gp)?) / (2.0 * h0);
            let dp = (f(g1, g0, gp + hp)? - f(g1, g0, gp - hp)?) / (2.0 * hp);
            let c = stats.raw_cov;
            let var = (d1 * d1 * c[0][0] + 2.0 * d1 * d0 * c[0][1] + d0 * d0 * c[1][1]) / n1
                + dp * dp * stats.raw_pi_var / stats.n2 as f64;
            Ok(libm::sqrt(var.max(0.0)))
        }
        _ => Err(Error::usage("not a correlator method")),
    }
}

/// Correlator estimate from run I pairs and run II π-pulse records.
pub fn correlator_estimate(
    run1: &[ShotRecord],
    run2: &[ShotRecord],
    method: Method,
    options: &EstimateOptions,
) -> Result<Estimate> {
    let data = CorrelationData::from_records(run1, run2)?;
    correlator_estimate_from_data(&data, method, options)
}

pub fn correlator_estimate_from_data(
    data: &CorrelationData,
    method: Method,
    options: &EstimateOptions,
) -> Result<Estimate> {
    if !method.is_correlator() {
        return Err(Error::usage("not a correlator method"));
    }
    if data.pairs.is_empty() || data.pi.is_empty() {
        return Err(Error::usage("correlator methods need both runs"));
    }
    let stats = correlator_stats(data, 0..data.pairs.len(), 0..data.pi.len())?;
    let value = point_value(method, &stats, options.t1_correction)?;
    let std_error = match options.uncertainty {
        Uncertainty::Analytic => analytic_std(method, &stats, options.t1_correction)?,
        Uncertainty::Bootstrap { resamples, seed } => super::bootstrap::bootstrap_from_data(
            data,
            method,
            resamples,
            seed,
            options.t1_correction,
        )?,
    };
    let ground: Vec<Complex64> = data.pairs.iter().map(|p| p.0).collect();
    let snr_hat = calibrate(&ground, &data.pi)?.snr_hat;
    let diagnostics = if method == Method::CorrelatorGeneral {
        Diagnostics {
            g0: Some(stats.raw_g0),
            g0_pi: Some(stats.raw_g0_pi),
            g1_0: Some(stats.raw_g1_0),
            g1_inf: Some(stats.raw_g0 * stats.raw_g0),
            snr_hat: Some(snr_hat),
            t1_correction_applied: options.t1_correction.is_some(),
            noise_dominated: value.noise_dominated,
        }
    } else {
        Diagnostics {
            g0: Some(stats.g0),
            g0_pi: Some(stats.g0_pi),
            g1_0: Some(stats.g1_0),
            g1_inf: Some(stats.g0 * stats.g0_second),
            snr_hat: Some(snr_hat),
            t1_correction_applied: options.t1_correction.is_some(),
            noise_dominated: value.noise_dominated,
        }
    };
    Ok(Estimate {
        method,
        p_e: value.p_e,
        std_error,
        n_shots: stats.n1 as u64,
        diagnostics,
    })
}
