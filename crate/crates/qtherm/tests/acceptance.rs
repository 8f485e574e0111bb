//! Acceptance criteria, one test each. Every test prints a single
//! `PASS`/`FAIL` line with the measured values; run with `--nocapture` to
//! see them all.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use qtherm::dataset::generate;
use qtherm::estimation::estimate;
use qtherm::harness::{load_spec, run_sweep, PowerPoint, SweepSpec, Variable};
use qtherm::qtherm_core::estimate::{p_e_exact, EstimateOptions, Method};
use qtherm::qtherm_core::model::{ApparatusModel, BathModel, PulseModel, QubitModel};
use qtherm::qtherm_core::sim::{Dataset, Protocol, SimConfig};
use qtherm::qtherm_core::stats::normal_cdf;
use qtherm::qtherm_core::Complex64;
use sha2::{Digest, Sha256};

struct Criterion {
    id: u32,
    title: &'static str,
    started: Instant,
    checks: Vec<(bool, String)>,
}

impl Criterion {
    fn new(id: u32, title: &'static str) -> Self {
        Criterion {
            id,
            title,
            started: Instant::now(),
            checks: Vec::new(),
        }
    }

    fn check(&mut self, pass: bool, detail: String) {
        self.checks.push((pass, detail));
    }

    fn finish(mut self, budget: Option<Duration>) {
        let elapsed = self.started.elapsed();
        if let Some(budget) = budget {
            self.check(
                elapsed < budget,
                format!(
                    "runtime {:.1} s < {} s",
                    elapsed.as_secs_f64(),
                    budget.as_secs()
                ),
            );
        }
        let pass = self.checks.iter().all(|c| c.0);
        let details: Vec<String> = self
            .checks
            .iter()
            .map(|(ok, d)| if *ok { d.clone() } else { format!("[x] {d}") })
            .collect();
        println!(
            "{} criterion {}: {} | {}",
            if pass { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            details.join("; ")
        );
        assert!(pass, "criterion {} failed", self.id);
    }
}

fn apparatus(snr: Option<f64>, t_meas: f64) -> ApparatusModel {
    let mut a = ApparatusModel::ideal(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    if let Some(snr) = snr {
        a = a.with_snr(snr);
    }
    a.t_meas = t_meas;
    a
}

fn config(p_e: f64, apparatus: ApparatusModel, n: u64, seed: u64) -> SimConfig {
    SimConfig {
        qubit: QubitModel {
            frequency: 5e9,
            t1: 10e-6,
            p_e_equilibrium: p_e,
            anharmonicity: -2e8,
        },
        apparatus,
        pulses: PulseModel::IDEAL,
        n_shots: n,
        tau: 0.0,
        seed,
    }
}

fn correlation(config: &SimConfig) -> Dataset {
    generate(config, &Protocol::Correlation, false).unwrap()
}

fn configs(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

fn forward(p: f64) -> f64 {
    p * (1.0 - p) / ((1.0 - 2.0 * p) * (1.0 - 2.0 * p))
}

#[test]
fn criterion_01_exact_inversion_round_trip() {
    let mut c = Criterion::new(1, "exact-inversion round trip");
    let (lo, hi) = (1e-5f64.ln(), 0.49f64.ln());
    let worst = (0..50)
        .map(|k| (lo + (hi - lo) * k as f64 / 49.0).exp())
        .map(|p| (p_e_exact(forward(p)).unwrap() - p).abs())
        .fold(0.0, f64::max);
    c.check(
        worst <= 1e-12,
        format!("max |error| {worst:.2e} <= 1e-12 over 50 P"),
    );
    c.finish(Some(Duration::from_secs(1)));
}

#[test]
fn criterion_02_noiseless_equivalence() {
    let mut c = Criterion::new(2, "noiseless correlator equals direct count");
    let n = 1_000_000u64;
    for (k, p) in [0.001, 0.01, 0.05].into_iter().enumerate() {
        let data = correlation(&config(p, apparatus(None, 0.0), n, 200 + k as u64));
        let exact = estimate(&data, Method::CorrelatorExact, &EstimateOptions::analytic()).unwrap();
        let count = estimate(&data, Method::DirectCount, &EstimateOptions::analytic()).unwrap();
        let binomial = (p * (1.0 - p) / n as f64).sqrt();
        let combined = exact.std_error.hypot(count.std_error);
        c.check(
            (exact.p_e - p).abs() < 4.0 * binomial,
            format!("P={p}: exact {:.6} within 4·{binomial:.1e}", exact.p_e),
        );
        c.check(
            (count.p_e - p).abs() < 4.0 * binomial,
            format!("count {:.6}", count.p_e),
        );
        c.check(
            (exact.p_e - count.p_e).abs() < 4.0 * combined,
            format!(
                "|diff| {:.1e} < 4·{combined:.1e}",
                (exact.p_e - count.p_e).abs()
            ),
        );
    }
    c.finish(Some(Duration::from_secs(30)));
}

#[test]
fn criterion_03_scaling_law() {
    let mut c = Criterion::new(3, "precision scales as N^-1/2");
    let mut spec = load_spec(&configs("precision.toml")).unwrap();
    spec.values = (6..=16).map(|k| (1u64 << k) as f64).collect();
    spec.seeds_per_point = 32;
    spec.methods = vec![Method::CorrelatorExact];
    spec.power_map = vec![PowerPoint {
        power_dbm: -40.0,
        snr: 6.0,
        qnd_flip_prob: 0.0,
        readout_excitation_prob: 0.0,
    }];
    spec.base_config.qubit.p_e_equilibrium = 0.005;
    let out = run_sweep(&spec, 303).unwrap();
    let slope = out.slopes[0].slope;
    c.check(
        (-0.55..=-0.45).contains(&slope),
        format!("log-log slope {slope:.4} in [-0.55, -0.45] over N=2^6..2^16, 32 seeds"),
    );
    c.finish(Some(Duration::from_secs(600)));
}

#[test]
fn criterion_04_low_snr_operability() {
    let mut c = Criterion::new(4, "correlator works at SNR 0.9, counting does not");
    let p = 0.005;
    let data = correlation(&config(p, apparatus(Some(0.9), 0.0), 1 << 20, 404));
    let exact = estimate(&data, Method::CorrelatorExact, &EstimateOptions::default()).unwrap();
    let count = estimate(&data, Method::DirectCount, &EstimateOptions::default()).unwrap();
    c.check(
        (exact.p_e - p).abs() < 4.0 * exact.std_error,
        format!(
            "exact {:.5} ± {:.5} within 4σ of {p}",
            exact.p_e, exact.std_error
        ),
    );
    c.check(
        exact.std_error <= 0.002,
        format!("σ {:.5} <= 0.002", exact.std_error),
    );
    c.check(
        count.p_e - p > 0.25,
        format!(
            "count bias {:.4} > 0.25 (Φ(-0.45) = {:.4})",
            count.p_e - p,
            normal_cdf(-0.45)
        ),
    );
    c.finish(Some(Duration::from_secs(300)));
}

#[test]
fn criterion_05_misclassification_floor() {
    let mut c = Criterion::new(5, "counting floor at SNR 6");
    let data = correlation(&config(0.0, apparatus(Some(6.0), 0.0), 1_000_000, 505));
    let exact = estimate(&data, Method::CorrelatorExact, &EstimateOptions::default()).unwrap();
    let count = estimate(&data, Method::DirectCount, &EstimateOptions::default()).unwrap();
    let floor = normal_cdf(-3.0);
    c.check(
        (count.p_e - floor).abs() <= 0.0004,
        format!("count {:.5} = Φ(-3) {floor:.5} ± 0.0004", count.p_e),
    );
    c.check(
        exact.p_e <= 0.0005,
        format!("exact {:.2e} <= 0.0005", exact.p_e),
    );
    c.finish(None);
}

#[test]
fn criterion_06_correlator_decay() {
    let mut c = Criterion::new(6, "correlator decay fit");
    let mut spec = load_spec(&configs("decay.toml")).unwrap();
    spec.values = (0..8).map(|k| k as f64 * 40e-6 / 7.0).collect();
    let out = run_sweep(&spec, 606).unwrap();
    let fit = out.decay.clone().unwrap();
    let t1 = spec.base_config.qubit.t1;
    c.check(
        (fit.t1 / t1 - 1.0).abs() < 0.1,
        format!(
            "T1 fit {:.3} µs ± {:.3} within 10%",
            fit.t1 * 1e6,
            fit.t1_std * 1e6
        ),
    );
    c.check(
        (fit.p_e - 0.02).abs() < 2.0 * fit.p_e_std,
        format!(
            "P from amplitude {:.5} ± {:.5} within 2σ of 0.02",
            fit.p_e, fit.p_e_std
        ),
    );
    let far = out.rows.last().unwrap();
    let g1_inf = out.points.last().unwrap()["g1_inf"].as_f64().unwrap();
    c.check(
        (far.p_e - g1_inf).abs() < 3.0 * far.std_error,
        format!(
            "g1(40 µs) {:.2e} vs g0² {g1_inf:.2e} within 3·{:.1e}",
            far.p_e, far.std_error
        ),
    );
    c.finish(None);
}

#[test]
fn criterion_07_readout_duration_correction() {
    let mut c = Criterion::new(7, "readout-duration correction");
    let p = 0.01;
    let cfg = config(p, apparatus(Some(6.0), 1e-6), 1 << 20, 707);
    let data = correlation(&cfg);
    let raw = estimate(&data, Method::CorrelatorExact, &EstimateOptions::default()).unwrap();
    let options = EstimateOptions::default().with_t1_correction(1e-6, cfg.qubit.t1);
    let corrected = estimate(&data, Method::CorrelatorExact, &options).unwrap();
    let low = p * (-0.1f64).exp();
    c.check(
        (raw.p_e - low).abs() < 2.0 * raw.std_error,
        format!(
            "raw {:.6} ± {:.6} vs P·e^-0.1 = {low:.6}",
            raw.p_e, raw.std_error
        ),
    );
    c.check(
        (corrected.p_e - p).abs() < 2.0 * corrected.std_error,
        format!(
            "corrected {:.6} ± {:.6} vs {p}",
            corrected.p_e, corrected.std_error
        ),
    );
    c.finish(None);
}

fn temperature_spec() -> SweepSpec {
    let mut spec = load_spec(&configs("temperature.toml")).unwrap();
    let t1 = spec.base_config.qubit.t1;
    let offset = 0.0033;
    // γ / (1/t1 + 2γ) = offset
    let gamma = offset / (t1 * (1.0 - 2.0 * offset));
    spec.hot_bath = Some(BathModel::new(gamma, gamma));
    spec.values = (0..8).map(|k| 0.025 + k as f64 * 0.125 / 7.0).collect();
    spec.base_config.n_shots = 1 << 16;
    spec
}

#[test]
fn criterion_08_temperature_sweep() {
    let mut c = Criterion::new(8, "temperature sweep with 0.33% offset");
    let spec = temperature_spec();
    assert_eq!(spec.variable, Variable::Temperature);
    let out = run_sweep(&spec, 808).unwrap();
    let worst = out
        .rows
        .iter()
        .map(|r| (r.p_e - r.truth_p_e.unwrap()).abs() / r.std_error)
        .fold(0.0, f64::max);
    c.check(
        worst < 3.0,
        format!("max |dev|/σ {worst:.2} < 3 over 8 points"),
    );
    let plateau = &out.rows[0];
    c.check(
        (plateau.p_e - 0.0033).abs() <= 0.0005,
        format!("25 mK plateau {:.5} = 0.0033 ± 0.0005", plateau.p_e),
    );

    let eps = 0.02;
    let mut perturbed = spec.clone();
    perturbed.base_config.pulses.pi_ge_error = eps;
    let shifted = run_sweep(&perturbed, 808).unwrap();
    let mut exceed = Vec::new();
    let mut largest = 0.0f64;
    for (a, b) in out.rows.iter().zip(&shifted.rows) {
        let change = (b.p_e - a.p_e).abs();
        largest = largest.max(change);
        if change >= eps * eps + 2.0 * a.std_error {
            exceed.push(format!(
                "{:.0} mK: {change:.5} >= {:.5}",
                a.x_value * 1e3,
                eps * eps + 2.0 * a.std_error
            ));
        }
    }
    c.check(
        exceed.is_empty(),
        format!(
            "π-pulse error 0.02 changes estimates by < ε² + 2σ (largest change {largest:.5}{}{})",
            if exceed.is_empty() {
                ""
            } else {
                "; exceeded at "
            },
            exceed.join(", ")
        ),
    );
    c.finish(None);
}

#[test]
fn criterion_09_qutrit_leakage_bias() {
    let mut c = Criterion::new(9, "qutrit leakage bias");
    let p = 0.001;
    let mut cfg = config(p, apparatus(Some(6.0), 0.0), 1 << 17, 909);
    cfg.pulses.ef_leakage_prob = 0.003;
    let angles: Vec<f64> = (0..16)
        .map(|k| 2.0 * std::f64::consts::PI * k as f64 / 16.0)
        .collect();
    let qutrit = generate(
        &cfg,
        &Protocol::Qutrit {
            rabi_angles: angles,
        },
        false,
    )
    .unwrap();
    let q = estimate(&qutrit, Method::Qutrit, &EstimateOptions::default()).unwrap();
    c.check(
        (0.003..=0.006).contains(&q.p_e),
        format!("qutrit {:.5} ± {:.5} in [0.003, 0.006]", q.p_e, q.std_error),
    );
    cfg.n_shots = 1 << 20;
    let data = correlation(&cfg);
    let exact = estimate(&data, Method::CorrelatorExact, &EstimateOptions::default()).unwrap();
    c.check(
        (exact.p_e - p).abs() < 2.0 * exact.std_error,
        format!(
            "exact {:.6} ± {:.6} within 2σ of {p}",
            exact.p_e, exact.std_error
        ),
    );
    c.finish(None);
}

fn sha(path: &Path) -> String {
    hex::encode(Sha256::digest(std::fs::read(path).unwrap()))
}

#[test]
fn criterion_10_determinism() {
    let mut c = Criterion::new(10, "bit-identical outputs for workers 1 and 8");
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        let o = Command::new(env!("CARGO_BIN_EXE_qtherm"))
            .args(args)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    for name in ["simulate", "qutrit"] {
        let cfg = configs(&format!("{name}.toml"));
        let mut digests = Vec::new();
        for workers in ["1", "8"] {
            let out = dir.path().join(format!("{name}-{workers}.csv"));
            run(&[
                "simulate",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--seed",
                "1010",
                "--workers",
                workers,
            ]);
            digests.push(sha(&out));
        }
        c.check(
            digests[0] == digests[1],
            format!("{name} records {}…", &digests[0][..12]),
        );
    }
    let spec_text = std::fs::read_to_string(configs("temperature.toml")).unwrap();
    let spec_path = dir.path().join("temperature.toml");
    std::fs::write(&spec_path, spec_text).unwrap();
    for spec in [spec_path, configs("decay.toml")] {
        let mut digests = Vec::new();
        for workers in ["1", "8"] {
            let out = dir.path().join(format!("sweep-{workers}"));
            run(&[
                "sweep",
                "--spec",
                spec.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--seed",
                "1010",
                "--workers",
                workers,
            ]);
            digests.push(sha(&out.join("sweep.csv")));
        }
        let name = spec.file_stem().unwrap().to_string_lossy().into_owned();
        c.check(
            digests[0] == digests[1],
            format!("{name} sweep {}…", &digests[0][..12]),
        );
    }
    c.finish(None);
}
