use std::path::Path;

use qtherm::dataset::with_workers;
use qtherm::harness::{load_spec, run_sweep, write_rows, Experiment, SweepSpec, Variable};
use qtherm::qtherm_core::estimate::Method;
use qtherm::qtherm_core::model::{boltzmann_population, BathModel};
use qtherm::Error;

fn spec(name: &str) -> SweepSpec {
    load_spec(
        &Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("configs")
            .join(name),
    )
    .unwrap()
}

fn csv(rows: &[qtherm::harness::SweepRow]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_rows(&mut buf, rows).unwrap();
    buf
}

#[test]
fn zero_hot_bath_and_zero_profile_agree() {
    let mut temperature = spec("temperature.toml");
    temperature.values = vec![0.08];
    temperature.hot_bath = Some(BathModel::new(0.0, 0.0));
    temperature.base_config.n_shots = 20_000;
    let mut frequency = spec("frequency.toml");
    frequency.values = vec![5e9];
    frequency.fridge_temperature = Some(0.08);
    for p in &mut frequency.frequency_profile {
        p.gamma_up = 0.0;
        p.gamma_down = 0.0;
    }
    frequency.base_config = temperature.base_config;
    let a = run_sweep(&temperature, 11).unwrap();
    let b = run_sweep(&frequency, 11).unwrap();
    assert_eq!(a.rows[0].p_e, b.rows[0].p_e);
    assert_eq!(a.rows[0].truth_p_e, b.rows[0].truth_p_e);
    let mb = boltzmann_population(5e9, 0.08).unwrap();
    assert!((a.rows[0].truth_p_e.unwrap() - mb).abs() < 1e-15);
    assert!((a.rows[0].p_e - mb).abs() < 4.0 * a.rows[0].std_error);
}

#[test]
fn sweeps_do_not_depend_on_pool_size() {
    let mut spec = spec("temperature.toml");
    spec.values = vec![0.03, 0.09, 0.15];
    spec.base_config.n_shots = 4000;
    spec.seeds_per_point = 2;
    spec.methods = vec![Method::CorrelatorExact, Method::DirectCount];
    let one = with_workers(Some(1), || run_sweep(&spec, 3))
        .unwrap()
        .unwrap();
    let many = with_workers(Some(6), || run_sweep(&spec, 3))
        .unwrap()
        .unwrap();
    assert_eq!(csv(&one.rows), csv(&many.rows));
    assert_eq!(one, many);
    assert_eq!(one.rows.len(), 6);
    assert!(one.rows.iter().all(|r| r.seeds.len() == 2));
    assert_ne!(one.rows[0].seeds, one.rows[2].seeds);
}

#[test]
fn invalid_specs_are_usage_errors() {
    let base = spec("precision.toml");
    let check = |edit: &dyn Fn(&mut SweepSpec)| {
        let mut s = base.clone();
        edit(&mut s);
        let err = run_sweep(&s, 0).unwrap_err();
        assert!(matches!(err, Error::Usage(_)), "{err}");
        assert_eq!(err.exit_code(), 2);
    };
    check(&|s| s.seeds_per_point = 15);
    check(&|s| s.values.clear());
    check(&|s| s.values = vec![64.0, 1024.0, 256.0]);
    check(&|s| s.values = vec![64.5, 128.0]);
    check(&|s| s.experiment = Some(Experiment::Decay));
    check(&|s| {
        s.variable = Variable::Power;
        s.experiment = None;
        s.power_map.clear();
        s.values = vec![-30.0];
    });
    check(&|s| {
        s.variable = Variable::Power;
        s.experiment = None;
        s.seeds_per_point = 1;
        s.values = vec![-20.0];
    });
    check(&|s| {
        s.variable = Variable::Temperature;
        s.experiment = Some(Experiment::Methods);
        s.values = vec![0.05];
    });
    let mut frequency = spec("frequency.toml");
    frequency.frequency_profile.clear();
    assert!(matches!(run_sweep(&frequency, 0), Err(Error::Usage(_))));
    let mut frequency = spec("frequency.toml");
    frequency.values = vec![8e9];
    assert!(matches!(run_sweep(&frequency, 0), Err(Error::Usage(_))));
}

#[test]
fn spec_parse_errors_name_the_field() {
    let text = "variable = \"tau\"\nvalues = [0.0]\nseeds = 3\n";
    let err = qtherm::harness::parse_spec(text, Path::new("s.toml")).unwrap_err();
    assert!(err.to_string().contains("seeds"), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn frequency_replay_reproduces_the_profile_peak() {
    let spec = spec("frequency.toml");
    let out = run_sweep(&spec, 21).unwrap();
    for r in &out.rows {
        let truth = r.truth_p_e.unwrap();
        assert!((r.p_e - truth).abs() < 3.0 * r.std_error, "{r:?}");
    }
    let peak = out
        .rows
        .iter()
        .max_by(|a, b| a.p_e.total_cmp(&b.p_e))
        .unwrap();
    assert_eq!(peak.x_value, 6e9);
}

#[test]
fn flat_profile_gives_flat_rows() {
    let mut spec = spec("frequency.toml");
    // at 15 mK the cold bath adds below 1e-6 anywhere in the band
    spec.fridge_temperature = Some(0.015);
    for p in &mut spec.frequency_profile {
        p.gamma_up = 300.0;
        p.gamma_down = 300.0;
    }
    let out = run_sweep(&spec, 5).unwrap();
    let truth = out.rows[0].truth_p_e.unwrap();
    for r in &out.rows {
        assert!((r.truth_p_e.unwrap() - truth).abs() < 1e-5);
        assert!((r.p_e - truth).abs() < 3.0 * r.std_error, "{r:?}");
    }
}

#[test]
fn decay_without_population_has_no_amplitude() {
    let mut spec = spec("decay.toml");
    spec.base_config.qubit.p_e_equilibrium = 0.0;
    spec.base_config.n_shots = 20_000;
    let out = run_sweep(&spec, 9).unwrap();
    let fit = out.decay.unwrap();
    assert!(fit.amplitude.abs() < 2.0 * fit.amplitude_std, "{fit:?}");
}

#[test]
fn qnd_flips_bias_low_but_keep_the_scaling() {
    let mut spec = spec("precision.toml");
    spec.values = vec![64.0, 256.0, 1024.0, 4096.0, 16384.0];
    spec.seeds_per_point = 16;
    spec.base_config.apparatus.t_meas = 0.0;
    spec.power_map[1].snr = 6.0;
    spec.power_map[1].qnd_flip_prob = 0.05;
    let out = run_sweep(&spec, 2).unwrap();
    assert_eq!(out.slopes.len(), 2);
    for s in &out.slopes {
        assert!((s.slope + 0.5).abs() < 0.15, "{s:?}");
    }
    let at_4096 = |label: &str| {
        out.rows
            .iter()
            .find(|r| r.x_value == 4096.0 && r.method == label)
            .unwrap()
            .p_e
    };
    assert!(at_4096("correlator_exact@-30dBm") < at_4096("correlator_exact@-40dBm"));
    assert!(at_4096("correlator_exact@-30dBm") < 0.05);
}
