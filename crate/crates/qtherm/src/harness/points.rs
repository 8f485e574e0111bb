use qtherm_core::model::{
    bath_rates_from_temperature, boltzmann_population, two_bath_steady_state, BathModel,
};
use qtherm_core::sim::SimConfig;
use serde_json::json;

use super::{BaseConfig, Experiment, PowerPoint, ProfilePoint, SweepSpec, Variable};
use crate::error::{Error, Result};

/// Resolved simulation settings at one sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub x: f64,
    /// Power label of a per-power precision series.
    pub series: Option<String>,
    /// Seed is filled in per job.
    pub config: SimConfig,
    /// Model prediction of the row quantity: the correlator for decay
    /// points, the excited population otherwise.
    pub truth: f64,
    pub reference: serde_json::Value,
}

fn sim_config(base: &BaseConfig) -> SimConfig {
    SimConfig {
        qubit: base.qubit,
        apparatus: base.apparatus,
        pulses: base.pulses,
        n_shots: base.n_shots,
        tau: base.tau,
        seed: 0,
    }
}

/// Linear interpolation of hot-bath rates; `frequency` must lie within the
/// profile.
pub fn interpolate_profile(profile: &[ProfilePoint], frequency: f64) -> Result<BathModel> {
    let mut sorted = profile.to_vec();
    sorted.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
    let (first, last) = (sorted[0], sorted[sorted.len() - 1]);
    if !(frequency >= first.frequency && frequency <= last.frequency) {
        return Err(Error::Usage(format!(
            "frequency {frequency} Hz lies outside the profile [{}, {}] Hz",
            first.frequency, last.frequency
        )));
    }
    let i = sorted
        .partition_point(|p| p.frequency < frequency)
        .min(sorted.len() - 1);
    let hi = sorted[i];
    if hi.frequency == frequency || i == 0 {
        return Ok(BathModel::new(hi.gamma_up, hi.gamma_down));
    }
    let lo = sorted[i - 1];
    let w = (frequency - lo.frequency) / (hi.frequency - lo.frequency);
    Ok(BathModel::new(
        lo.gamma_up + w * (hi.gamma_up - lo.gamma_up),
        lo.gamma_down + w * (hi.gamma_down - lo.gamma_down),
    ))
}

fn power_point(spec: &SweepSpec, power: f64) -> Result<PowerPoint> {
    spec.power_map
        .iter()
        .copied()
        .find(|p| (p.power_dbm - power).abs() < 1e-9)
        .ok_or_else(|| Error::Usage(format!("power {power} dBm is not in the power_map")))
}

fn apply_power(config: &mut SimConfig, power: &PowerPoint) {
    config.apparatus = config.apparatus.with_snr(power.snr);
    config.apparatus.qnd_flip_prob = power.qnd_flip_prob;
    config.apparatus.readout_excitation_prob = power.readout_excitation_prob;
}

/// Sets the qubit to the steady state of its baths.
fn apply_baths(config: &mut SimConfig, baths: &[BathModel]) -> Result<(f64, f64)> {
    let (p, t1) = two_bath_steady_state(baths)?;
    config.qubit.p_e_equilibrium = p;
    config.qubit.t1 = t1;
    Ok((p, t1))
}

/// Normalized correlator of an equilibrium population after a delay, for an
/// ideal readout whose duration counts towards the delay.
pub fn correlator_prediction(p: f64, tau: f64, t_meas: f64, t1: f64) -> f64 {
    p * (1.0 - p) / ((1.0 - 2.0 * p) * (1.0 - 2.0 * p)) * (-(tau + t_meas) / t1).exp()
}

pub(super) fn build_points(spec: &SweepSpec) -> Result<Vec<Point>> {
    let base = sim_config(&spec.base_config);
    let frequency = base.qubit.frequency;
    let mut points = Vec::new();
    let series: Vec<Option<PowerPoint>> =
        if spec.experiment() == Experiment::Precision && !spec.power_map.is_empty() {
            spec.power_map.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
    for power in series {
        for &x in &spec.values {
            let mut config = base;
            if let Some(power) = &power {
                apply_power(&mut config, power);
            }
            let (truth, reference) = match spec.variable {
                Variable::Tau => {
                    if x < 0.0 {
                        return Err(Error::Usage("tau values must be >= 0".into()));
                    }
                    config.tau = x;
                    let q = config.qubit;
                    let truth =
                        correlator_prediction(q.p_e_equilibrium, x, config.apparatus.t_meas, q.t1);
                    (truth, json!({ "tau_s": x, "g1_prediction": truth }))
                }
                Variable::Temperature => {
                    let cold = bath_rates_from_temperature(base.qubit.t1, frequency, x)?;
                    let hot = spec.hot_bath.unwrap_or(BathModel::new(0.0, 0.0));
                    let (p, t1) = apply_baths(&mut config, &[cold, hot])?;
                    (
                        p,
                        json!({
                            "temperature_k": x,
                            "boltzmann_p_e": boltzmann_population(frequency, x)?,
                            "two_bath_p_e": p,
                            "t1_total_s": t1,
                        }),
                    )
                }
                Variable::NShots => {
                    config.n_shots = x as u64;
                    let p = config.qubit.p_e_equilibrium;
                    (p, json!({ "n_shots": x as u64, "p_e": p }))
                }
                Variable::Power => {
                    apply_power(&mut config, &power_point(spec, x)?);
                    let p = config.qubit.p_e_equilibrium;
                    (
                        p,
                        json!({ "power_dbm": x, "snr": config.apparatus.snr(), "p_e": p }),
                    )
                }
                Variable::Frequency => {
                    let fridge = spec.fridge_temperature.unwrap_or_default();
                    let cold = bath_rates_from_temperature(base.qubit.t1, x, fridge)?;
                    let hot = interpolate_profile(&spec.frequency_profile, x)?;
                    config.qubit.frequency = x;
                    let (p, t1) = apply_baths(&mut config, &[cold, hot])?;
                    (
                        p,
                        json!({
                            "frequency_hz": x,
                            "hot_gamma_up": hot.gamma_up,
                            "hot_gamma_down": hot.gamma_down,
                            "boltzmann_p_e": boltzmann_population(x, fridge)?,
                            "two_bath_p_e": p,
                            "t1_total_s": t1,
                        }),
                    )
                }
            };
            config.validate()?;
            points.push(Point {
                x,
                series: power.map(|p| format!("{}dBm", p.power_dbm)),
                config,
                truth,
                reference,
            });
        }
    }
    Ok(points)
}
