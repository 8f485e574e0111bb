//! Physical formulas and parameter containers.
//!
//! Constants are the exact CODATA 2018 SI values:
//!
//! | constant | value |
//! |----------|-------|
//! | Planck constant `h` | 6.626 070 15 × 10⁻³⁴ J·s |
//! | Boltzmann constant `k` | 1.380 649 × 10⁻²³ J/K |

use crate::error::{Error, Result};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhysicalConstants {
    /// J·s
    pub planck: f64,
    /// J/K
    pub boltzmann_k: f64,
}

impl PhysicalConstants {
    pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
        planck: 6.626_070_15e-34,
        boltzmann_k: 1.380_649e-23,
    };

    /// Identifier of the constants table, recorded in run manifests.
    pub const TABLE_VERSION: &'static str = "CODATA-2018";

    /// hf/kT.
    pub fn reduced_energy(&self, frequency: f64, temperature: f64) -> f64 {
        self.planck * frequency / (self.boltzmann_k * temperature)
    }
}

/// Energy eigenstate of the transmon, truncated to three levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum State {
    Ground,
    Excited,
    /// Second excited level, only reached by the qutrit protocol.
    Second,
}

impl State {
    pub fn is_excited(self) -> bool {
        self == State::Excited
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct QubitModel {
    /// g-e transition frequency, Hz.
    pub frequency: f64,
    /// Energy relaxation time, seconds.
    pub t1: f64,
    /// Equilibrium excited-state population.
    pub p_e_equilibrium: f64,
    /// f-e minus e-g transition frequency, Hz. Informational; only the
    /// qutrit protocol concerns the third level.
    #[cfg_attr(feature = "serde", serde(default))]
    pub anharmonicity: f64,
}

impl QubitModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.frequency > 0.0 && self.frequency.is_finite()) {
            return Err(Error::domain("qubit.frequency must be positive"));
        }
        if !(self.t1 > 0.0 && self.t1.is_finite()) {
            return Err(Error::domain("qubit.t1 must be positive"));
        }
        if !(0.0..0.5).contains(&self.p_e_equilibrium) {
            return Err(Error::domain("qubit.p_e_equilibrium must lie in [0, 0.5)"));
        }
        if !self.anharmonicity.is_finite() {
            return Err(Error::domain("qubit.anharmonicity must be finite"));
        }
        Ok(())
    }
}

/// A bath described by the transition rates it induces.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct BathModel {
    /// g -> e rate, Hz.
    pub gamma_up: f64,
    /// e -> g rate, Hz.
    pub gamma_down: f64,
}

impl BathModel {
    pub const fn new(gamma_up: f64, gamma_down: f64) -> Self {
        BathModel {
            gamma_up,
            gamma_down,
        }
    }

    pub fn total_rate(&self) -> f64 {
        self.gamma_up + self.gamma_down
    }
}

/// Readout chain: ideal responses plus the imperfections of a real
/// dispersive measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ApparatusModel {
    pub v_g: Complex64,
    pub v_e: Complex64,
    /// Response of the second excited level. Defaults to
    /// `v_e + i (v_e - v_g)` when absent.
    #[cfg_attr(feature = "serde", serde(default))]
    pub v_f: Option<Complex64>,
    /// Per-quadrature standard deviation of the additive noise.
    pub noise_sigma: f64,
    /// Readout duration, seconds.
    pub t_meas: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub readout_excitation_prob: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub qnd_flip_prob: f64,
}

impl ApparatusModel {
    /// Noiseless, instantaneous, perfectly QND readout.
    pub fn ideal(v_g: Complex64, v_e: Complex64) -> Self {
        ApparatusModel {
            v_g,
            v_e,
            v_f: None,
            noise_sigma: 0.0,
            t_meas: 0.0,
            readout_excitation_prob: 0.0,
            qnd_flip_prob: 0.0,
        }
    }

    /// Sets `noise_sigma` so that `snr()` equals `snr`.
    pub fn with_snr(mut self, snr: f64) -> Self {
        self.noise_sigma = (self.v_e - self.v_g).norm() / snr;
        self
    }

    /// |v_e - v_g| / noise_sigma; infinite for a noiseless readout.
    pub fn snr(&self) -> f64 {
        let separation = (self.v_e - self.v_g).norm();
        if self.noise_sigma == 0.0 {
            f64::INFINITY
        } else {
            separation / self.noise_sigma
        }
    }

    pub fn v_f(&self) -> Complex64 {
        self.v_f
            .unwrap_or_else(|| self.v_e + (self.v_e - self.v_g) * Complex64::i())
    }

    pub fn response(&self, state: State) -> Complex64 {
        match state {
            State::Ground => self.v_g,
            State::Excited => self.v_e,
            State::Second => self.v_f(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: Complex64| v.re.is_finite() && v.im.is_finite();
        if !finite(self.v_g) || !finite(self.v_e) || !self.v_f.is_none_or(finite) {
            return Err(Error::domain("apparatus responses must be finite"));
        }
        if self.v_g == self.v_e {
            return Err(Error::domain("apparatus.v_g and apparatus.v_e must differ"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::domain(
                "apparatus.noise_sigma must be finite and >= 0",
            ));
        }
        if !(self.t_meas >= 0.0 && self.t_meas.is_finite()) {
            return Err(Error::domain("apparatus.t_meas must be finite and >= 0"));
        }
        if !(0.0..1.0).contains(&self.readout_excitation_prob) {
            return Err(Error::domain(
                "apparatus.readout_excitation_prob must lie in [0, 1)",
            ));
        }
        if !(0.0..1.0).contains(&self.qnd_flip_prob) {
            return Err(Error::domain("apparatus.qnd_flip_prob must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Control-pulse imperfections.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct PulseModel {
    /// Probability that the g-e π-pulse leaves the state unchanged.
    pub pi_ge_error: f64,
    /// Probability that an e-f rotation is not applied at all.
    pub pi_ef_error: f64,
    /// Probability that an e-f pulse drives g -> e directly.
    pub ef_leakage_prob: f64,
}

impl PulseModel {
    pub const IDEAL: PulseModel = PulseModel {
        pi_ge_error: 0.0,
        pi_ef_error: 0.0,
        ef_leakage_prob: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("pulses.pi_ge_error", self.pi_ge_error),
            ("pulses.pi_ef_error", self.pi_ef_error),
            ("pulses.ef_leakage_prob", self.ef_leakage_prob),
        ] {
            if !(0.0..1.0).contains(&value) {
                return Err(Error::Domain(alloc::format!("{name} must lie in [0, 1)")));
            }
        }
        Ok(())
    }
}

/// Two-level thermal population `e^{-hf/kT} / (1 + e^{-hf/kT})`.
pub fn boltzmann_population(frequency: f64, temperature: f64) -> Result<f64> {
    if !(frequency > 0.0) || !(temperature > 0.0) {
        return Err(Error::domain(
            "frequency and temperature must both be positive",
        ));
    }
    let x = PhysicalConstants::CODATA_2018.reduced_energy(frequency, temperature);
    // 1 / (1 + e^x) is the same logistic without overflow at large x.
    Ok(1.0 / (1.0 + libm::exp(x)))
}

/// Temperature at which the thermal population equals `p_e`.
pub fn effective_temperature(p_e: f64, frequency: f64) -> Result<f64> {
    if !(p_e > 0.0 && p_e < 0.5) {
        return Err(Error::domain(
            "p_e must lie in (0, 0.5) for a finite positive temperature",
        ));
    }
    if !(frequency > 0.0) {
        return Err(Error::domain("frequency must be positive"));
    }
    let c = PhysicalConstants::CODATA_2018;
    Ok(c.planck * frequency / (c.boltzmann_k * libm::log((1.0 - p_e) / p_e)))
}

/// Steady state of a two-level system coupled to independent Markovian baths.
///
/// Returns `(p_e, t1_total)`.
pub fn two_bath_steady_state(baths: &[BathModel]) -> Result<(f64, f64)> {
    if baths.is_empty() {
        return Err(Error::usage("at least one bath is required"));
    }
    if baths
        .iter()
        .any(|b| !(b.gamma_up >= 0.0) || !(b.gamma_down >= 0.0))
    {
        return Err(Error::domain("bath rates must be non-negative"));
    }
    let up: f64 = baths.iter().map(|b| b.gamma_up).sum();
    let total: f64 = baths.iter().map(BathModel::total_rate).sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::domain("total bath rate must be positive and finite"));
    }
    Ok((up / total, 1.0 / total))
}

/// Bath in detailed balance at `temperature` with total rate `1/t1`.
pub fn bath_rates_from_temperature(t1: f64, frequency: f64, temperature: f64) -> Result<BathModel> {
    if !(t1 > 0.0) {
        return Err(Error::domain("t1 must be positive"));
    }
    let p = boltzmann_population(frequency, temperature)?;
    let total = 1.0 / t1;
    Ok(BathModel::new(p * total, (1.0 - p) * total))
}

/// Population after relaxing for `tau` from `p_start` towards `p_eq`.
pub fn relax_probabilities(p_start: f64, tau: f64, p_eq: f64, t1: f64) -> f64 {
    p_eq + (p_start - p_eq) * libm::exp(-tau / t1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn codata_population_at_20_mk() {
        let p = boltzmann_population(5e9, 0.020).unwrap();
        assert!(p < 1e-5);
        // oracle: mpmath at 30 digits
        assert!((p - 6.155_812_26e-6).abs() < 1e-12, "{p}");
    }

    #[test]
    fn infinite_temperature_limit() {
        let p = boltzmann_population(5e9, 1e9).unwrap();
        assert!((p - 0.5).abs() < 1e-9);
    }

    #[test]
    fn rejects_non_positive_arguments() {
        assert!(boltzmann_population(5e9, 0.0).is_err());
        assert!(boltzmann_population(-1.0, 0.1).is_err());
        assert!(effective_temperature(0.5, 5e9).is_err());
        assert!(effective_temperature(0.0, 5e9).is_err());
    }

    #[test]
    fn effective_temperature_inverts() {
        let p = boltzmann_population(5e9, 0.050).unwrap();
        let t = effective_temperature(p, 5e9).unwrap();
        assert!((t / 0.050 - 1.0).abs() < 1e-9);

        let t = effective_temperature(6.155_81e-6, 5e9).unwrap();
        assert!((t / 0.020 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn cold_bath_only() {
        let (p, t1) = two_bath_steady_state(&[BathModel::new(0.0, 1e5)]).unwrap();
        assert_eq!(p, 0.0);
        assert!((t1 - 1e-5).abs() < 1e-18);
    }

    #[test]
    fn hot_bath_offset() {
        let (p, t1) =
            two_bath_steady_state(&[BathModel::new(0.0, 1e5), BathModel::new(335.0, 335.0)])
                .unwrap();
        assert!((p - 0.003_327_704_380_649_647).abs() < 1e-15);
        assert!((t1 - 9.933_445_912_387_007e-6).abs() < 1e-18);
    }

    #[test]
    fn symmetric_bath_is_infinite_temperature() {
        let (p, _) = two_bath_steady_state(&[BathModel::new(7.0, 7.0)]).unwrap();
        assert_eq!(p, 0.5);
    }

    #[test]
    fn zero_rate_is_a_domain_error() {
        assert!(two_bath_steady_state(&[BathModel::new(0.0, 0.0)]).is_err());
        assert!(two_bath_steady_state(&[]).is_err());
    }

    #[test]
    fn detailed_balance_rates() {
        let bath = bath_rates_from_temperature(10e-6, 5e9, 0.1).unwrap();
        // oracle: hf/kT = 2.3996215366831106
        assert!(
            (bath.gamma_up / bath.gamma_down - libm::exp(-2.399_621_536_683_110_6)).abs() < 1e-6
        );
        assert!((bath.total_rate() - 1e5).abs() < 1e-9);

        let cold = bath_rates_from_temperature(10e-6, 5e9, 1e-6).unwrap();
        assert_eq!(cold.gamma_up, 0.0);
        assert!((cold.gamma_down - 1e5).abs() < 1e-9);
    }

    #[test]
    fn relaxation_examples() {
        assert_eq!(relax_probabilities(0.3, 0.0, 0.01, 1e-5), 0.3);
        assert!((relax_probabilities(0.3, 1.0, 0.01, 1e-5) - 0.01).abs() < 1e-15);
        let p = relax_probabilities(1.0, 10e-6, 0.005, 10e-6);
        assert!((p - 0.371_040_043_965_585_1).abs() < 1e-12);
    }

    #[test]
    fn default_f_response_is_rotated_excited_offset() {
        let a = ApparatusModel::ideal(Complex64::new(1.0, 0.0), Complex64::new(3.0, 1.0));
        assert_eq!(a.v_f(), Complex64::new(2.0, 3.0));
        assert_eq!(a.response(State::Second), a.v_f());
        assert!(a.snr().is_infinite());
        assert!((a.with_snr(6.0).snr() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        let q = QubitModel {
            frequency: 5e9,
            t1: 1e-5,
            p_e_equilibrium: 0.5,
            anharmonicity: -2e8,
        };
        assert!(q.validate().is_err());
        let a = ApparatusModel::ideal(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
        assert!(a.validate().is_err());
        let p = PulseModel {
            pi_ge_error: 1.0,
            ..PulseModel::IDEAL
        };
        assert!(p.validate().is_err());
    }

    proptest! {
        #[test]
        fn population_monotone_and_bounded(t1 in 0.005f64..1.0, dt in 1e-4f64..0.5) {
            let a = boltzmann_population(5e9, t1).unwrap();
            let b = boltzmann_population(5e9, t1 + dt).unwrap();
            prop_assert!(a > 0.0 && b < 0.5);
            prop_assert!(b > a);
        }

        #[test]
        fn temperature_round_trip(t in 0.005f64..1.0, f in 1e9f64..1e10) {
            let p = boltzmann_population(f, t).unwrap();
            let back = effective_temperature(p, f).unwrap();
            prop_assert!((back / t - 1.0).abs() < 1e-9);
        }

        #[test]
        fn steady_state_permutation_and_split(
            up1 in 0.0f64..1e4, down1 in 1.0f64..1e5,
            up2 in 0.0f64..1e3, down2 in 0.0f64..1e3,
            frac in 0.0f64..1.0,
        ) {
            let a = BathModel::new(up1, down1);
            let b = BathModel::new(up2, down2);
            let (p_ab, t_ab) = two_bath_steady_state(&[a, b]).unwrap();
            let (p_ba, t_ba) = two_bath_steady_state(&[b, a]).unwrap();
            prop_assert!((p_ab - p_ba).abs() < 1e-15 && (t_ab - t_ba).abs() < 1e-18);
            let split = vec![
                a,
                BathModel::new(up2 * frac, down2 * frac),
                BathModel::new(up2 * (1.0 - frac), down2 * (1.0 - frac)),
            ];
            let (p_s, t_s) = two_bath_steady_state(&split).unwrap();
            prop_assert!((p_s - p_ab).abs() < 1e-12);
            prop_assert!((t_s / t_ab - 1.0).abs() < 1e-12);
        }

        #[test]
        fn relaxation_semigroup(p0 in 0.0f64..1.0, t1 in 0.0f64..5e-5, t2 in 0.0f64..5e-5, peq in 0.0f64..0.5) {
            let t1_relax = 1e-5;
            let two_step = relax_probabilities(relax_probabilities(p0, t1, peq, t1_relax), t2, peq, t1_relax);
            let one_step = relax_probabilities(p0, t1 + t2, peq, t1_relax);
            prop_assert!((two_step - one_step).abs() < 1e-12);
        }

        #[test]
        fn detailed_balance_closure(t in 0.005f64..1.0) {
            let bath = bath_rates_from_temperature(1e-5, 5e9, t).unwrap();
            let (p, t1) = two_bath_steady_state(&[bath]).unwrap();
            prop_assert!((p - boltzmann_population(5e9, t).unwrap()).abs() < 1e-12);
            prop_assert!((t1 / 1e-5 - 1.0).abs() < 1e-12);
        }
    }
}
