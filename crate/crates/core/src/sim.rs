//! Synthetic shot records for the two measurement protocols.
//!
//! Correlation protocol, run I: equilibrium state, measure, wait `tau`,
//! measure again. Run II: equilibrium state, g-e π-pulse, measure.
//! Qutrit protocol: equilibrium state, optional g-e π-pulse, e-f rotation by a
//! commanded angle, measure.
//!
//! Every shot is generated from its own pair of substreams (one for state
//! transitions, one for readout noise) keyed by `(seed, stage, shot index)`.
//! Each primitive consumes a fixed number of draws regardless of the branch
//! taken, so changing one imperfection knob leaves the other draws of a shot
//! untouched.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{relax_probabilities, ApparatusModel, PulseModel, QubitModel, State};
use crate::rng::{substream, Stage, StreamRng};

/// Preparation applied before the (first) measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Prep {
    /// Run I: no pulse, two measurements.
    None,
    /// Run II: g-e π-pulse, one measurement.
    PiGe,
    /// Qutrit protocol: optional g-e π-pulse then an e-f rotation.
    PiEfRabi { angle: f64, with_ge_pi: bool },
}

impl Prep {
    pub fn tag(&self) -> &'static str {
        match self {
            Prep::None => "none",
            Prep::PiGe => "pi_ge",
            Prep::PiEfRabi { .. } => "pi_ef_rabi",
        }
    }
}

/// Hidden true state before each measurement of a shot. Diagnostic only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Truth {
    pub first: State,
    pub second: Option<State>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotRecord {
    pub shot_index: u64,
    pub prep: Prep,
    pub v1: Complex64,
    /// Present exactly for run I pairs.
    pub v2: Option<Complex64>,
    pub tau: f64,
    pub truth: Option<Truth>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SimConfig {
    pub qubit: QubitModel,
    pub apparatus: ApparatusModel,
    #[cfg_attr(feature = "serde", serde(default))]
    pub pulses: PulseModel,
    /// Shots per run (per angle and variant for the qutrit protocol).
    pub n_shots: u64,
    /// Delay between the two run I measurements, seconds.
    #[cfg_attr(feature = "serde", serde(default))]
    pub tau: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.qubit.validate()?;
        self.apparatus.validate()?;
        self.pulses.validate()?;
        if self.n_shots == 0 {
            return Err(Error::usage("n_shots must be at least 1"));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::domain("tau must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Which protocol a dataset records.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)
)]
pub enum Protocol {
    Correlation,
    Qutrit { rabi_angles: Vec<f64> },
}

impl Protocol {
    pub fn validate(&self) -> Result<()> {
        if let Protocol::Qutrit { rabi_angles } = self {
            if rabi_angles.is_empty() {
                return Err(Error::usage("rabi_angles must not be empty"));
            }
            if rabi_angles.iter().any(|a| !a.is_finite()) {
                return Err(Error::domain("rabi angles must be finite"));
            }
        }
        Ok(())
    }

    /// Number of records a dataset of this protocol holds.
    pub fn record_count(&self, n_shots: u64) -> u64 {
        match self {
            Protocol::Correlation => 2 * n_shots,
            Protocol::Qutrit { rabi_angles } => 2 * rabi_angles.len() as u64 * n_shots,
        }
    }
}

/// Records of one simulated or loaded experiment, split by preparation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub run1: Vec<ShotRecord>,
    pub run2: Vec<ShotRecord>,
    pub qutrit: Vec<ShotRecord>,
}

impl Dataset {
    /// Sorts records into the three collections by their preparation tag.
    pub fn from_records(records: impl IntoIterator<Item = ShotRecord>) -> Self {
        let mut out = Dataset::default();
        for r in records {
            match r.prep {
                Prep::None => out.run1.push(r),
                Prep::PiGe => out.run2.push(r),
                Prep::PiEfRabi { .. } => out.qutrit.push(r),
            }
        }
        out
    }

    /// All records in file order: run I, run II, qutrit.
    pub fn iter(&self) -> impl Iterator<Item = &ShotRecord> {
        self.run1.iter().chain(&self.run2).chain(&self.qutrit)
    }

    pub fn len(&self) -> usize {
        self.run1.len() + self.run2.len() + self.qutrit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// State-transition and readout-noise streams for one shot.
pub struct ShotRngs {
    pub state: StreamRng,
    pub noise: StreamRng,
}

impl ShotRngs {
    pub fn new(seed: u64, state: Stage, noise: Stage, index: u64) -> Self {
        ShotRngs {
            state: substream(seed, state, index),
            noise: substream(seed, noise, index),
        }
    }
}

fn uniform(rng: &mut StreamRng) -> f64 {
    rng.random::<f64>()
}

pub fn sample_initial_state(p_e: f64, rng: &mut StreamRng) -> State {
    if uniform(rng) < p_e {
        State::Excited
    } else {
        State::Ground
    }
}

/// g-e π-pulse that fails (leaves the state alone) with `pi_ge_error`.
/// The second excited level is a spectator.
pub fn apply_pi_ge(state: State, pulses: &PulseModel, rng: &mut StreamRng) -> State {
    let succeeded = uniform(rng) >= pulses.pi_ge_error;
    match (state, succeeded) {
        (State::Ground, true) => State::Excited,
        (State::Excited, true) => State::Ground,
        (s, _) => s,
    }
}

/// Exact two-level Markov propagation over `tau`.
pub fn evolve_delay(state: State, tau: f64, qubit: &QubitModel, rng: &mut StreamRng) -> State {
    let u = uniform(rng);
    let p_start = match state {
        State::Ground => 0.0,
        State::Excited => 1.0,
        State::Second => return State::Second,
    };
    let p_excited = relax_probabilities(p_start, tau, qubit.p_e_equilibrium, qubit.t1);
    if u < p_excited {
        State::Excited
    } else {
        State::Ground
    }
}

/// One readout. Returns the integrated voltage and the post-measurement state.
///
/// The voltage reflects the pre-measurement state. Afterwards the state is
/// randomised over {g, e} with `qnd_flip_prob`, then a ground state is excited
/// with `readout_excitation_prob`, then the state relaxes over `t_meas`.
pub fn measure(
    state: State,
    apparatus: &ApparatusModel,
    qubit: &QubitModel,
    rngs: &mut ShotRngs,
) -> (Complex64, State) {
    let re: f64 = rngs.noise.sample(StandardNormal);
    let im: f64 = rngs.noise.sample(StandardNormal);
    let voltage = apparatus.response(state) + Complex64::new(re, im) * apparatus.noise_sigma;

    let u_flip = uniform(&mut rngs.state);
    let u_flip_target = uniform(&mut rngs.state);
    let u_excite = uniform(&mut rngs.state);
    let mut post = state;
    if post != State::Second {
        if u_flip < apparatus.qnd_flip_prob {
            post = if u_flip_target < 0.5 {
                State::Ground
            } else {
                State::Excited
            };
        }
        if post == State::Ground && u_excite < apparatus.readout_excitation_prob {
            post = State::Excited;
        }
    }
    let post = evolve_delay(post, apparatus.t_meas, qubit, &mut rngs.state);
    (voltage, post)
}

/// e-f pulse with commanded rotation `angle`.
///
/// Ground population first leaks to e with `ef_leakage_prob`. The rotation
/// then swaps e and f with probability sin²(angle/2), unless the pulse fails
/// outright (`pi_ef_error`).
pub fn apply_ef_rotation(
    state: State,
    angle: f64,
    pulses: &PulseModel,
    rng: &mut StreamRng,
) -> State {
    let u_leak = uniform(rng);
    let u_fail = uniform(rng);
    let u_swap = uniform(rng);
    let state = if state == State::Ground && u_leak < pulses.ef_leakage_prob {
        State::Excited
    } else {
        state
    };
    if u_fail < pulses.pi_ef_error {
        return state;
    }
    let s = libm::sin(0.5 * angle);
    if u_swap < s * s {
        match state {
            State::Excited => State::Second,
            State::Second => State::Excited,
            State::Ground => State::Ground,
        }
    } else {
        state
    }
}

/// Run I shot: measure, delay, measure.
pub fn correlation_shot(config: &SimConfig, index: u64, collect_truth: bool) -> ShotRecord {
    let mut rngs = ShotRngs::new(
        config.seed,
        Stage::CorrelationState,
        Stage::CorrelationNoise,
        index,
    );
    let first = sample_initial_state(config.qubit.p_e_equilibrium, &mut rngs.state);
    let (v1, post) = measure(first, &config.apparatus, &config.qubit, &mut rngs);
    let second = evolve_delay(post, config.tau, &config.qubit, &mut rngs.state);
    let (v2, _) = measure(second, &config.apparatus, &config.qubit, &mut rngs);
    ShotRecord {
        shot_index: index,
        prep: Prep::None,
        v1,
        v2: Some(v2),
        tau: config.tau,
        truth: collect_truth.then_some(Truth {
            first,
            second: Some(second),
        }),
    }
}

/// Run II shot: π-pulse then measure.
pub fn calibration_shot(config: &SimConfig, index: u64, collect_truth: bool) -> ShotRecord {
    let mut rngs = ShotRngs::new(
        config.seed,
        Stage::CalibrationState,
        Stage::CalibrationNoise,
        index,
    );
    let initial = sample_initial_state(config.qubit.p_e_equilibrium, &mut rngs.state);
    let flipped = apply_pi_ge(initial, &config.pulses, &mut rngs.state);
    let (v1, _) = measure(flipped, &config.apparatus, &config.qubit, &mut rngs);
    ShotRecord {
        shot_index: index,
        prep: Prep::PiGe,
        v1,
        v2: None,
        tau: 0.0,
        truth: collect_truth.then_some(Truth {
            first: flipped,
            second: None,
        }),
    }
}

/// Qutrit protocol shot. `index` is the global record index.
pub fn qutrit_shot(
    config: &SimConfig,
    angle: f64,
    with_ge_pi: bool,
    index: u64,
    collect_truth: bool,
) -> ShotRecord {
    let mut rngs = ShotRngs::new(config.seed, Stage::QutritState, Stage::QutritNoise, index);
    let initial = sample_initial_state(config.qubit.p_e_equilibrium, &mut rngs.state);
    // Draw for the g-e pulse even when it is skipped so both variants stay aligned.
    let flipped = apply_pi_ge(initial, &config.pulses, &mut rngs.state);
    let prepared = if with_ge_pi { flipped } else { initial };
    let rotated = apply_ef_rotation(prepared, angle, &config.pulses, &mut rngs.state);
    let (v1, _) = measure(rotated, &config.apparatus, &config.qubit, &mut rngs);
    ShotRecord {
        shot_index: index,
        prep: Prep::PiEfRabi { angle, with_ge_pi },
        v1,
        v2: None,
        tau: 0.0,
        truth: collect_truth.then_some(Truth {
            first: rotated,
            second: None,
        }),
    }
}

/// Maps a global qutrit record index to `(angle index, with_ge_pi)`.
/// Records are ordered by angle, then variant (without π first), then shot.
pub fn qutrit_layout(index: u64, n_shots: u64) -> (usize, bool) {
    let block = index / n_shots;
    ((block / 2) as usize, block % 2 == 1)
}

/// Record `index` of a dataset, in file order.
pub fn dataset_record(
    config: &SimConfig,
    protocol: &Protocol,
    index: u64,
    collect_truth: bool,
) -> ShotRecord {
    match protocol {
        Protocol::Correlation => {
            if index < config.n_shots {
                correlation_shot(config, index, collect_truth)
            } else {
                calibration_shot(config, index - config.n_shots, collect_truth)
            }
        }
        Protocol::Qutrit { rabi_angles } => {
            let (angle_index, with_ge_pi) = qutrit_layout(index, config.n_shots);
            qutrit_shot(
                config,
                rabi_angles[angle_index],
                with_ge_pi,
                index,
                collect_truth,
            )
        }
    }
}

/// Run I and run II, `n_shots` each.
pub fn run_correlation_protocol(config: &SimConfig) -> Result<(Vec<ShotRecord>, Vec<ShotRecord>)> {
    config.validate()?;
    let run1 = (0..config.n_shots)
        .map(|i| correlation_shot(config, i, false))
        .collect();
    let run2 = (0..config.n_shots)
        .map(|i| calibration_shot(config, i, false))
        .collect();
    Ok((run1, run2))
}

/// Both qutrit variants at every angle, `n_shots` each.
pub fn run_qutrit_protocol(config: &SimConfig, rabi_angles: &[f64]) -> Result<Vec<ShotRecord>> {
    let protocol = Protocol::Qutrit {
        rabi_angles: rabi_angles.to_vec(),
    };
    config.validate()?;
    protocol.validate()?;
    Ok((0..protocol.record_count(config.n_shots))
        .map(|i| dataset_record(config, &protocol, i, false))
        .collect())
}

/// Sequential dataset generation. Output depends only on `(config, protocol)`.
pub fn generate_dataset(
    config: &SimConfig,
    protocol: &Protocol,
    collect_truth: bool,
) -> Result<Dataset> {
    config.validate()?;
    protocol.validate()?;
    Ok(Dataset::from_records(
        (0..protocol.record_count(config.n_shots))
            .map(|i| dataset_record(config, protocol, i, collect_truth)),
    ))
}
