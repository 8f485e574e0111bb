use qtherm_core::estimate::{
    p_e_exact, p_e_exact_continued, p_e_general, Estimate, EstimateOptions, Method, T1Correction,
    Uncertainty,
};
use qtherm_core::fit::fit_correlator_decay;
use qtherm_core::rng::derive_seed;
use qtherm_core::sim::{Dataset, Protocol, SimConfig};
use qtherm_core::stats::{log_log_slope, mean, std_dev};
use rayon::prelude::*;
use serde_json::json;

use super::points::{build_points, Point};
use super::{DecaySummary, Experiment, SlopeSummary, SweepOutput, SweepRow, SweepSpec};
use crate::dataset::generate;
use crate::error::Result;
use crate::estimation::estimate;

/// Runs a sweep on the current rayon pool.
pub fn run_sweep(spec: &SweepSpec, seed: u64) -> Result<SweepOutput> {
    spec.validate()?;
    let points = build_points(spec)?;
    match spec.experiment() {
        Experiment::Decay => decay(spec, &points, seed),
        Experiment::Precision => precision(spec, &points, seed),
        experiment => comparison(spec, experiment, &points, seed),
    }
}

/// Job results grouped by point, each with the seed it ran under.
fn run_jobs<T: Send>(
    points: &[Point],
    seeds_per_point: usize,
    seed: u64,
    job: impl Fn(&Point, u64) -> Result<T> + Sync,
) -> Result<Vec<Vec<(u64, T)>>> {
    let jobs: Vec<(usize, u64)> = (0..points.len())
        .flat_map(|i| (0..seeds_per_point).map(move |k| (i, derive_seed(seed, i as u64, k as u64))))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(i, job_seed)| job(&points[i], job_seed).map(|r| (job_seed, r)))
        .collect::<Result<Vec<_>>>()?;
    let mut grouped: Vec<Vec<(u64, T)>> = (0..points.len()).map(|_| Vec::new()).collect();
    for (&(i, _), result) in jobs.iter().zip(results) {
        grouped[i].push(result);
    }
    Ok(grouped)
}

fn correction(spec: &SweepSpec, config: &SimConfig) -> Option<T1Correction> {
    (spec.t1_correction && config.apparatus.t_meas > 0.0).then_some(T1Correction {
        t_meas: config.apparatus.t_meas,
        t1: config.qubit.t1,
    })
}

fn simulate(spec: &SweepSpec, config: &SimConfig, methods: &[Method]) -> Result<Dataset> {
    let mut dataset = Dataset::default();
    if methods.iter().any(|&m| m != Method::Qutrit) {
        dataset = generate(config, &Protocol::Correlation, false)?;
    }
    if methods.contains(&Method::Qutrit) {
        let protocol = Protocol::Qutrit {
            rabi_angles: spec.rabi_angles(),
        };
        dataset.qutrit = generate(config, &protocol, false)?.qutrit;
    }
    Ok(dataset)
}

fn estimates_at(
    spec: &SweepSpec,
    point: &Point,
    seed: u64,
    uncertainty: Uncertainty,
) -> Result<Vec<Estimate>> {
    let config = SimConfig {
        seed,
        ..point.config
    };
    let dataset = simulate(spec, &config, &spec.methods)?;
    let options = EstimateOptions {
        t1_correction: correction(spec, &config),
        uncertainty,
    };
    spec.methods
        .iter()
        .map(|&m| estimate(&dataset, m, &options))
        .collect()
}

fn bootstrap(spec: &SweepSpec, seed: u64) -> Uncertainty {
    Uncertainty::Bootstrap {
        resamples: spec.bootstrap_resamples,
        seed,
    }
}

fn row(spec: &SweepSpec, point: &Point, method: String, values: &[(u64, f64, f64)]) -> SweepRow {
    let p: Vec<f64> = values.iter().map(|v| v.1).collect();
    let p_e = mean(&p);
    let std_error = values.iter().map(|v| v.2 * v.2).sum::<f64>().sqrt() / values.len() as f64;
    SweepRow {
        x_name: spec.variable.column().into(),
        x_value: point.x,
        method,
        p_e,
        std_error,
        truth_p_e: Some(point.truth),
        deviation: Some(p_e - point.truth),
        seeds: values.iter().map(|v| v.0).collect(),
    }
}

fn comparison(
    spec: &SweepSpec,
    experiment: Experiment,
    points: &[Point],
    seed: u64,
) -> Result<SweepOutput> {
    let results = run_jobs(points, spec.seeds_per_point, seed, |point, job_seed| {
        estimates_at(spec, point, job_seed, bootstrap(spec, job_seed))
    })?;
    let mut rows = Vec::new();
    for (point, jobs) in points.iter().zip(&results) {
        for (m, method) in spec.methods.iter().enumerate() {
            let values: Vec<_> = jobs
                .iter()
                .map(|(s, ests)| (*s, ests[m].p_e, ests[m].std_error))
                .collect();
            rows.push(row(spec, point, method.to_string(), &values));
        }
    }
    Ok(SweepOutput {
        experiment,
        rows,
        decay: None,
        slopes: Vec::new(),
        points: points.iter().map(|p| p.reference.clone()).collect(),
    })
}

fn decay(spec: &SweepSpec, points: &[Point], seed: u64) -> Result<SweepOutput> {
    let results = run_jobs(points, spec.seeds_per_point, seed, |point, job_seed| {
        let config = SimConfig {
            seed: job_seed,
            ..point.config
        };
        let dataset = generate(&config, &Protocol::Correlation, false)?;
        let options = EstimateOptions {
            t1_correction: None,
            uncertainty: bootstrap(spec, job_seed),
        };
        estimate(&dataset, Method::CorrelatorApprox, &options)
    })?;
    let mut rows = Vec::new();
    let mut details = Vec::new();
    for (point, jobs) in points.iter().zip(&results) {
        let values: Vec<_> = jobs
            .iter()
            .map(|(s, e)| (*s, e.diagnostics.g1_0.unwrap_or(f64::NAN), e.std_error))
            .collect();
        rows.push(row(spec, point, "g1".into(), &values));
        let g1_inf: Vec<f64> = jobs
            .iter()
            .map(|(_, e)| e.diagnostics.g1_inf.unwrap_or(f64::NAN))
            .collect();
        let mut reference = point.reference.clone();
        reference["g1_inf"] = json!(mean(&g1_inf));
        details.push(reference);
    }

    let taus: Vec<f64> = rows.iter().map(|r| r.x_value).collect();
    let values: Vec<f64> = rows.iter().map(|r| r.p_e).collect();
    let sigmas: Vec<f64> = rows.iter().map(|r| r.std_error).collect();
    let weighted = sigmas.iter().all(|&s| s > 0.0 && s.is_finite());
    let fit = fit_correlator_decay(&taus, &values, weighted.then_some(&sigmas[..]))?;

    let base = &points[0].config;
    let factor = if spec.t1_correction && base.apparatus.t_meas > 0.0 {
        (base.apparatus.t_meas / fit.t1).exp()
    } else {
        1.0
    };
    let g = fit.amplitude * factor;
    let p_e = p_e_exact(g)?;
    let slope = (1.0 + 4.0 * g).powf(-1.5);
    let summary = DecaySummary {
        amplitude: fit.amplitude,
        amplitude_std: fit.amplitude_std(),
        t1: fit.t1,
        t1_std: fit.t1_std(),
        offset: fit.offset,
        offset_std: fit.offset_std(),
        residual: fit.residual,
        p_e,
        p_e_std: slope * factor * fit.amplitude_std(),
        truth_p_e: base.qubit.p_e_equilibrium,
    };
    Ok(SweepOutput {
        experiment: Experiment::Decay,
        rows,
        decay: Some(summary),
        slopes: Vec::new(),
        points: details,
    })
}

/// The estimator before clamping at zero, so that spreads over seeds are
/// not distorted near zero population.
pub(crate) fn unclamped(est: &Estimate, correction: Option<T1Correction>) -> f64 {
    let factor = correction.map_or(1.0, |c| c.factor());
    let d = &est.diagnostics;
    let (Some(g1), Some(g0), Some(g0_pi)) = (d.g1_0, d.g0, d.g0_pi) else {
        return est.p_e;
    };
    match est.method {
        Method::CorrelatorApprox => g1 * factor,
        Method::CorrelatorExact => p_e_exact_continued(g1 * factor),
        Method::CorrelatorGeneral => p_e_general(g1, g0, g0_pi).map_or(f64::NAN, |p| p * factor),
        _ => est.p_e,
    }
}

fn precision(spec: &SweepSpec, points: &[Point], seed: u64) -> Result<SweepOutput> {
    let results = run_jobs(points, spec.seeds_per_point, seed, |point, job_seed| {
        let ests = estimates_at(spec, point, job_seed, Uncertainty::Analytic)?;
        let correction = correction(spec, &point.config);
        Ok(ests
            .iter()
            .map(|e| unclamped(e, correction))
            .collect::<Vec<f64>>())
    })?;
    let mut rows = Vec::new();
    for (point, jobs) in points.iter().zip(&results) {
        for (m, method) in spec.methods.iter().enumerate() {
            let finite: Vec<f64> = jobs
                .iter()
                .map(|(_, v)| v[m])
                .filter(|v| v.is_finite())
                .collect();
            let (p_e, spread) = if finite.len() >= 2 {
                let p = mean(&finite);
                (p, std_dev(&finite))
            } else {
                (f64::NAN, f64::NAN)
            };
            rows.push(SweepRow {
                x_name: spec.variable.column().into(),
                x_value: point.x,
                method: series_label(*method, point.series.as_deref()),
                p_e,
                std_error: spread,
                truth_p_e: Some(point.truth),
                deviation: Some(p_e - point.truth),
                seeds: jobs.iter().map(|(s, _)| *s).collect(),
            });
        }
    }

    let mut labels: Vec<String> = Vec::new();
    for r in &rows {
        if !labels.contains(&r.method) {
            labels.push(r.method.clone());
        }
    }
    let slopes = labels
        .into_iter()
        .map(|label| {
            let (n, s): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|r| r.method == label && r.std_error > 0.0 && r.std_error.is_finite())
                .map(|r| (r.x_value, r.std_error))
                .unzip();
            SlopeSummary {
                series: label,
                slope: log_log_slope(&n, &s).unwrap_or(f64::NAN),
            }
        })
        .collect();
    Ok(SweepOutput {
        experiment: Experiment::Precision,
        rows,
        decay: None,
        slopes,
        points: points.iter().map(|p| p.reference.clone()).collect(),
    })
}

fn series_label(method: Method, series: Option<&str>) -> String {
    match series {
        Some(s) => format!("{method}@{s}"),
        None => method.to_string(),
    }
}
