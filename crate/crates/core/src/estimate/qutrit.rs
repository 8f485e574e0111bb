//! Population from e-f Rabi amplitudes.
//!
//! Without a prior g-e π-pulse the e-f oscillation amplitude is proportional
//! to the excited population, with it to the ground population. Each variant
//! is fitted to `a·(1 - cos θ)/2 + c` on the complex voltages; the common
//! scale (response separation, e-f pulse efficiency) cancels in
//! `A / (A + A_π)`. Voltages are projected onto the direction of the π-variant
//! amplitude, so no f-level calibration is required.

use alloc::vec::Vec;

use num_complex::Complex64;

use super::{Diagnostics, Estimate, Method};
use crate::error::{Error, Result};
use crate::sim::{Prep, ShotRecord};

pub const MIN_QUTRIT_ANGLES: usize = 6;

struct Variant {
    h: Vec<f64>,
    v: Vec<Complex64>,
}

impl Variant {
    fn distinct_angles(angles: &mut Vec<f64>) -> usize {
        angles.sort_by(f64::total_cmp);
        angles.dedup();
        angles.len()
    }

    fn centred(&self) -> (f64, Complex64, f64) {
        let n = self.h.len() as f64;
        let h_mean = self.h.iter().sum::<f64>() / n;
        let v_mean = self.v.iter().sum::<Complex64>() / n;
        let sxx = self.h.iter().map(|h| (h - h_mean) * (h - h_mean)).sum();
        (h_mean, v_mean, sxx)
    }

    /// Complex slope of the least-squares line.
    fn complex_slope(&self) -> Result<Complex64> {
        let (h_mean, v_mean, sxx) = self.centred();
        if !(sxx > 0.0) {
            return Err(singular());
        }
        let sxy: Complex64 = self
            .h
            .iter()
            .zip(&self.v)
            .map(|(h, v)| (v - v_mean) * (h - h_mean))
            .sum();
        Ok(sxy / sxx)
    }

    /// Slope and its variance after projecting onto `direction`.
    fn projected_slope(&self, direction: Complex64) -> Result<(f64, f64)> {
        let (h_mean, v_mean, sxx) = self.centred();
        if !(sxx > 0.0) || self.h.len() < 3 {
            return Err(singular());
        }
        let project = |v: &Complex64| (v * direction.conj()).re;
        let y_mean = project(&v_mean);
        let sxy: f64 = self
            .h
            .iter()
            .zip(&self.v)
            .map(|(h, v)| (h - h_mean) * (project(v) - y_mean))
            .sum();
        let slope = sxy / sxx;
        let offset = y_mean - slope * h_mean;
        let rss: f64 = self
            .h
            .iter()
            .zip(&self.v)
            .map(|(h, v)| {
                let r = project(v) - (slope * h + offset);
                r * r
            })
            .sum();
        let var = rss / (self.h.len() - 2) as f64 / sxx;
        Ok((slope, var))
    }
}

fn singular() -> Error {
    Error::Fit {
        reason: "singular design: the Rabi angles do not vary (1 - cos θ)".into(),
        residual: f64::NAN,
    }
}

pub fn qutrit_estimate(records: &[ShotRecord]) -> Result<Estimate> {
    let mut without = Variant {
        h: Vec::new(),
        v: Vec::new(),
    };
    let mut with = Variant {
        h: Vec::new(),
        v: Vec::new(),
    };
    let (mut angles_without, mut angles_with) = (Vec::new(), Vec::new());
    for r in records {
        let Prep::PiEfRabi { angle, with_ge_pi } = r.prep else {
            return Err(Error::usage("qutrit estimate needs e-f Rabi records only"));
        };
        let h = 0.5 * (1.0 - libm::cos(angle));
        let (variant, angles) = if with_ge_pi {
            (&mut with, &mut angles_with)
        } else {
            (&mut without, &mut angles_without)
        };
        variant.h.push(h);
        variant.v.push(r.v1);
        angles.push(angle);
    }
    if without.h.is_empty() || with.h.is_empty() {
        return Err(Error::usage(
            "qutrit estimate needs records with and without the g-e π-pulse",
        ));
    }
    if Variant::distinct_angles(&mut angles_without) < MIN_QUTRIT_ANGLES
        || Variant::distinct_angles(&mut angles_with) < MIN_QUTRIT_ANGLES
    {
        return Err(Error::Usage(alloc::format!(
            "qutrit estimate needs at least {MIN_QUTRIT_ANGLES} distinct angles per variant"
        )));
    }

    let reference = with.complex_slope()?;
    if reference.norm_sqr() == 0.0 {
        return Err(Error::Fit {
            reason: "no e-f oscillation in the π-pulsed variant".into(),
            residual: 0.0,
        });
    }
    let direction = reference / reference.norm();
    let (a, var_a) = without.projected_slope(direction)?;
    let (b, var_b) = with.projected_slope(direction)?;
    let total = a + b;
    if !(total.abs() > 0.0) {
        return Err(Error::Fit {
            reason: "Rabi amplitudes cancel".into(),
            residual: 0.0,
        });
    }
    let p = a / total;
    let var = (b * b * var_a + a * a * var_b) / (total * total * total * total);
    Ok(Estimate {
        method: Method::Qutrit,
        p_e: p,
        std_error: libm::sqrt(var),
        n_shots: records.len() as u64,
        diagnostics: Diagnostics::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ApparatusModel, PulseModel, QubitModel};
    use crate::sim::{run_qutrit_protocol, SimConfig};

    fn angles(n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| 2.0 * core::f64::consts::PI * k as f64 / n as f64)
            .collect()
    }

    fn config(p_e: f64, pulses: PulseModel, snr: f64, n: u64) -> SimConfig {
        SimConfig {
            qubit: QubitModel {
                frequency: 5e9,
                t1: 10e-6,
                p_e_equilibrium: p_e,
                anharmonicity: -2e8,
            },
            apparatus: ApparatusModel::ideal(Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0))
                .with_snr(snr),
            pulses,
            n_shots: n,
            tau: 0.0,
            seed: 23,
        }
    }

    #[test]
    fn recovers_known_population() {
        let records =
            run_qutrit_protocol(&config(0.05, PulseModel::IDEAL, 6.0, 4000), &angles(12)).unwrap();
        let est = qutrit_estimate(&records).unwrap();
        assert!((est.p_e - 0.05).abs() < 3.0 * est.std_error, "{est:?}");
        assert!(est.std_error < 0.01);
    }

    #[test]
    fn zero_population_gives_zero() {
        let records =
            run_qutrit_protocol(&config(0.0, PulseModel::IDEAL, 6.0, 4000), &angles(12)).unwrap();
        let est = qutrit_estimate(&records).unwrap();
        assert!(est.p_e.abs() < 3.0 * est.std_error, "{est:?}");
    }

    #[test]
    fn leakage_biases_upwards() {
        let pulses = PulseModel {
            ef_leakage_prob: 0.003,
            ..PulseModel::IDEAL
        };
        let records = run_qutrit_protocol(&config(0.0, pulses, 6.0, 20_000), &angles(12)).unwrap();
        let est = qutrit_estimate(&records).unwrap();
        assert!((est.p_e - 0.003).abs() < 3.0 * est.std_error, "{est:?}");
        assert!(est.p_e > 0.0015);
    }

    #[test]
    fn failed_ef_pulses_cancel_in_the_ratio() {
        let pulses = PulseModel {
            pi_ef_error: 0.3,
            ..PulseModel::IDEAL
        };
        let records = run_qutrit_protocol(&config(0.1, pulses, 6.0, 4000), &angles(12)).unwrap();
        let est = qutrit_estimate(&records).unwrap();
        assert!((est.p_e - 0.1).abs() < 3.0 * est.std_error, "{est:?}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = config(0.05, PulseModel::IDEAL, 6.0, 10);
        let few = run_qutrit_protocol(&cfg, &angles(5)).unwrap();
        assert!(matches!(qutrit_estimate(&few), Err(Error::Usage(_))));
        let records = run_qutrit_protocol(&cfg, &angles(8)).unwrap();
        let only_one: Vec<_> = records
            .iter()
            .copied()
            .filter(|r| {
                matches!(
                    r.prep,
                    Prep::PiEfRabi {
                        with_ge_pi: false,
                        ..
                    }
                )
            })
            .collect();
        assert!(matches!(qutrit_estimate(&only_one), Err(Error::Usage(_))));
        // angles θ and -θ share cos θ: six distinct angles but three design points
        let mirrored = [0.5, -0.5, 1.0, -1.0, 2.0, -2.0];
        let flat = run_qutrit_protocol(
            &cfg,
            &[
                0.0,
                2.0 * core::f64::consts::PI,
                4.0 * core::f64::consts::PI,
                -2.0 * core::f64::consts::PI,
                6.0 * core::f64::consts::PI,
                -4.0 * core::f64::consts::PI,
            ],
        )
        .unwrap();
        assert!(matches!(qutrit_estimate(&flat), Err(Error::Fit { .. })));
        assert!(qutrit_estimate(&run_qutrit_protocol(&cfg, &mirrored).unwrap()).is_ok());
    }
}
