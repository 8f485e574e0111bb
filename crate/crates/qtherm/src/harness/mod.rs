//! Composed experiments over swept parameters.
//!
//! A [`SweepSpec`] names the swept variable, its values and a base config.
//! Every (point, seed) job runs on the rayon pool; results come back in a
//! fixed order and each job's seed is derived from the sweep seed and its
//! position, so output does not depend on the pool size.

mod experiments;
mod points;

use std::io::Write;
use std::path::Path;

use qtherm_core::estimate::Method;
use qtherm_core::model::{ApparatusModel, BathModel, PulseModel, QubitModel};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use experiments::run_sweep;
pub use points::{interpolate_profile, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    Tau,
    Temperature,
    NShots,
    Power,
    Frequency,
}

impl Variable {
    /// Column name in the sweep CSV.
    pub fn column(self) -> &'static str {
        match self {
            Variable::Tau => "tau_s",
            Variable::Temperature => "temperature_k",
            Variable::NShots => "n_shots",
            Variable::Power => "power_dbm",
            Variable::Frequency => "frequency_hz",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Correlator against delay, fitted to an exponential decay.
    Decay,
    /// Estimates against fridge temperature, with an optional hot bath.
    Temperature,
    /// Spread over seeds against shot count.
    Precision,
    /// Several methods side by side over temperature or readout power.
    Methods,
    /// Replay of a measured hot-bath profile over qubit frequency.
    Frequency,
}

impl Experiment {
    pub fn default_for(variable: Variable) -> Experiment {
        match variable {
            Variable::Tau => Experiment::Decay,
            Variable::Temperature => Experiment::Temperature,
            Variable::NShots => Experiment::Precision,
            Variable::Power => Experiment::Methods,
            Variable::Frequency => Experiment::Frequency,
        }
    }

    fn accepts(self, variable: Variable) -> bool {
        match self {
            Experiment::Methods => matches!(variable, Variable::Temperature | Variable::Power),
            _ => Experiment::default_for(variable) == self,
        }
    }
}

/// Simulation settings shared by every point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseConfig {
    pub qubit: QubitModel,
    pub apparatus: ApparatusModel,
    #[serde(default)]
    pub pulses: PulseModel,
    pub n_shots: u64,
    #[serde(default)]
    pub tau: f64,
}

/// Readout settings at one drive power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerPoint {
    pub power_dbm: f64,
    pub snr: f64,
    #[serde(default)]
    pub qnd_flip_prob: f64,
    #[serde(default)]
    pub readout_excitation_prob: f64,
}

/// Hot-bath rates at one qubit frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfilePoint {
    pub frequency: f64,
    pub gamma_up: f64,
    pub gamma_down: f64,
}

fn default_methods() -> Vec<Method> {
    vec![Method::CorrelatorExact]
}

fn default_seeds() -> usize {
    1
}

fn default_resamples() -> usize {
    200
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Inferred from `variable` when absent.
    #[serde(default)]
    pub experiment: Option<Experiment>,
    pub variable: Variable,
    pub values: Vec<f64>,
    pub base_config: BaseConfig,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_seeds")]
    pub seeds_per_point: usize,
    #[serde(default)]
    pub power_map: Vec<PowerPoint>,
    #[serde(default)]
    pub hot_bath: Option<BathModel>,
    #[serde(default)]
    pub frequency_profile: Vec<ProfilePoint>,
    #[serde(default)]
    pub fridge_temperature: Option<f64>,
    /// Qutrit protocol angles; 16 evenly spaced over a full turn by default.
    #[serde(default)]
    pub rabi_angles: Option<Vec<f64>>,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
    /// Apply the readout-duration correction to correlator estimates.
    #[serde(default = "yes")]
    pub t1_correction: bool,
}

pub const MIN_PRECISION_SEEDS: usize = 16;
pub const DEFAULT_RABI_ANGLES: usize = 16;

impl SweepSpec {
    pub fn experiment(&self) -> Experiment {
        self.experiment
            .unwrap_or_else(|| Experiment::default_for(self.variable))
    }

    pub fn rabi_angles(&self) -> Vec<f64> {
        self.rabi_angles.clone().unwrap_or_else(|| {
            (0..DEFAULT_RABI_ANGLES)
                .map(|k| 2.0 * std::f64::consts::PI * k as f64 / DEFAULT_RABI_ANGLES as f64)
                .collect()
        })
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |m: String| Err(Error::Usage(m));
        let experiment = self.experiment();
        if !experiment.accepts(self.variable) {
            return usage(format!(
                "experiment {experiment:?} cannot sweep {}",
                self.variable.column()
            ));
        }
        if self.values.is_empty() {
            return usage("values must not be empty".into());
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return usage("values must be finite".into());
        }
        let increasing = self.values.windows(2).all(|w| w[0] < w[1]);
        let decreasing = self.values.windows(2).all(|w| w[0] > w[1]);
        if !(increasing || decreasing) {
            return usage("values must be strictly monotone".into());
        }
        if self.methods.is_empty() {
            return usage("methods must not be empty".into());
        }
        if self.seeds_per_point == 0 {
            return usage("seeds_per_point must be at least 1".into());
        }
        match experiment {
            Experiment::Precision if self.seeds_per_point < MIN_PRECISION_SEEDS => {
                return usage(format!(
                    "precision scaling needs seeds_per_point >= {MIN_PRECISION_SEEDS}"
                ))
            }
            Experiment::Methods if self.methods.len() < 2 => {
                return usage("method comparison needs at least two methods".into())
            }
            Experiment::Frequency if self.frequency_profile.is_empty() => {
                return usage("frequency replay needs a frequency_profile".into())
            }
            Experiment::Frequency if self.fridge_temperature.is_none() => {
                return usage("frequency replay needs fridge_temperature".into())
            }
            _ => {}
        }
        if self.variable == Variable::Power && self.power_map.is_empty() {
            return usage("a power sweep needs a power_map".into());
        }
        if self.variable == Variable::NShots
            && self.values.iter().any(|&v| !(v >= 1.0 && v.fract() == 0.0))
        {
            return usage("n_shots values must be positive integers".into());
        }
        let base = self.base_config;
        qtherm_core::sim::SimConfig {
            qubit: base.qubit,
            apparatus: base.apparatus,
            pulses: base.pulses,
            n_shots: base.n_shots,
            tau: base.tau,
            seed: 0,
        }
        .validate()?;
        Ok(())
    }
}

pub fn parse_spec(text: &str, path: &Path) -> Result<SweepSpec> {
    let config_error = |message: String| Error::Config {
        path: path.to_path_buf(),
        message,
    };
    let spec: SweepSpec = toml::from_str(text).map_err(|e| config_error(e.to_string()))?;
    spec.validate().map_err(|e| match e {
        Error::Core(e) => config_error(e.to_string()),
        other => other,
    })?;
    Ok(spec)
}

pub fn load_spec(path: &Path) -> Result<SweepSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_spec(&text, path)
}

/// One line of the sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub x_name: String,
    pub x_value: f64,
    /// Method name, `g1` for correlator decay points, with `@<power>dBm`
    /// appended for per-power precision series.
    pub method: String,
    pub p_e: f64,
    pub std_error: f64,
    /// Model prediction for the row's quantity.
    pub truth_p_e: Option<f64>,
    pub deviation: Option<f64>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySummary {
    pub amplitude: f64,
    pub amplitude_std: f64,
    pub t1: f64,
    pub t1_std: f64,
    pub offset: f64,
    pub offset_std: f64,
    pub residual: f64,
    /// Population from the fitted amplitude, readout-corrected with the
    /// fitted T1.
    pub p_e: f64,
    pub p_e_std: f64,
    pub truth_p_e: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeSummary {
    pub series: String,
    /// Log-log slope of the seed spread against shot count.
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub experiment: Experiment,
    pub rows: Vec<SweepRow>,
    pub decay: Option<DecaySummary>,
    pub slopes: Vec<SlopeSummary>,
    /// Reference predictions per point, in point order.
    pub points: Vec<serde_json::Value>,
}

pub const CSV_HEADER: [&str; 7] = [
    "x_name",
    "x_value",
    "method",
    "p_e",
    "std_error",
    "truth_p_e",
    "deviation",
];

pub fn write_rows<W: Write>(out: W, rows: &[SweepRow]) -> csv::Result<()> {
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_HEADER)?;
    for r in rows {
        writer.write_record([
            r.x_name.clone(),
            r.x_value.to_string(),
            r.method.clone(),
            r.p_e.to_string(),
            r.std_error.to_string(),
            opt(r.truth_p_e),
            opt(r.deviation),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
