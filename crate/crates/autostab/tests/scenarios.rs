use std::f64::consts::PI;

use autostab::analytic::compare_analytic;
use autostab::config::{
    default_config, parse_config, resolve, Evaluation, Parity, QqColor, QrColors, ScenarioKind,
};
use autostab::device::builtin_device_table;
use autostab::output::table_to_csv;
use autostab::runner::{run, RunOptions};

fn scenario(json: &str) -> autostab::config::Scenario {
    resolve(&parse_config(json).unwrap()).unwrap()
}

#[test]
fn time_domain_defaults_match_device_table() {
    let s = resolve(&default_config(ScenarioKind::TimeDomain)).unwrap();
    let even = s.even.unwrap();
    let odd = s.odd.unwrap();
    assert_eq!((even.omega_mhz, even.w1_mhz, even.w2_mhz), (2.0, 0.47, 0.47));
    assert_eq!((odd.omega_mhz, odd.w1_mhz, odd.w2_mhz), (3.0, 0.36, 0.36));
    assert_eq!(s.noise.kappa_mhz, [0.33, 0.43]);
    assert_eq!(s.noise.t1_us, [25.0, 12.0]);
    assert_eq!(s.noise.tphi_us, [Some(25.0), Some(25.0)]);
    assert_eq!(*s.axis("times_us").unwrap().last().unwrap(), 49.0);

    // Resonator decay rates follow from the measured resonator lifetimes.
    let device = builtin_device_table();
    let lifetimes = [device.operating.r1_t1.unwrap(), device.operating.r2_t1.unwrap()];
    for (t1, listed) in lifetimes.iter().zip(s.noise.kappa_mhz) {
        let kappa = 1.0 / (2.0 * PI * t1);
        assert!((kappa - listed).abs() < 0.005, "{kappa} vs {listed}");
    }
    let tomo = s.tomography.unwrap();
    assert_eq!(tomo.readout_fidelity, device.readout_fidelity);
    assert_eq!(tomo.shots, 5000);
}

#[test]
fn sweep_defaults() {
    let s = resolve(&default_config(ScenarioKind::ThetaSpectroscopy)).unwrap();
    assert_eq!(s.evaluation, Some(Evaluation::AtTime { at_us: 40.0 }));
    assert_eq!(s.odd.unwrap().qr_colors, QrColors::Swapped);
    let th = s.axis("theta_deg").unwrap();
    assert_eq!((th[0], th[th.len() - 1], th.len()), (5.0, 175.0, 35));

    let s = resolve(&default_config(ScenarioKind::ParitySwitch)).unwrap();
    let segs = s.grid.segments.unwrap();
    let plan: Vec<(Parity, f64)> = segs.iter().map(|g| (g.parity, g.duration_us)).collect();
    assert_eq!(plan, [(Parity::Even, 20.0), (Parity::Odd, 20.0), (Parity::Even, 20.0), (Parity::Odd, 25.0)]);

    for kind in [ScenarioKind::TphiSweep, ScenarioKind::KappaSweep] {
        let s = resolve(&default_config(kind)).unwrap();
        let (e, o) = (s.even.unwrap(), s.odd.unwrap());
        assert_eq!((e.omega_mhz, e.w1_mhz), (1.4, 0.70));
        assert_eq!((o.omega_mhz, o.w1_mhz), (3.0, 0.64));
        assert_eq!(s.noise.kappa_mhz, [0.30, 0.33]);
        assert_eq!(s.noise.t1_us, [21.0, 9.0]);
    }
    let s = resolve(&default_config(ScenarioKind::KappaSweep)).unwrap();
    assert_eq!(s.noise.tphi_us, [None, None]);

    let s = resolve(&default_config(ScenarioKind::OmegaKappaMap)).unwrap();
    assert!(s.axis("omega_mhz").unwrap().contains(&10.0));

    for kind in [ScenarioKind::DressedParitySweep, ScenarioKind::RabiDressedMap] {
        let s = resolve(&default_config(kind)).unwrap();
        let d = s.dressed.unwrap();
        assert_eq!((d.omega_mhz, d.w1_mhz, d.w2_mhz), (5.0, 0.5, 0.5));
        assert_eq!(s.noise.kappa_mhz, [0.3, 0.33]);
        assert_eq!(s.noise.t1_us, [30.0, 30.0]);
        assert_eq!(s.noise.tphi_us, [Some(30.0), Some(30.0)]);
    }
    let s = resolve(&default_config(ScenarioKind::DressedParitySweep)).unwrap();
    assert_eq!(s.dressed.unwrap().qq_colors, [QqColor::Blue, QqColor::Red]);
}

#[test]
fn every_scenario_names_its_figure() {
    for kind in ScenarioKind::ALL {
        assert!(kind.figure().starts_with("Fig."), "{kind}");
    }
}

#[test]
fn empty_grid_is_a_validation_error() {
    for json in [
        r#"{"kind": "theta_spectroscopy", "grid": {"theta_deg": []}}"#,
        r#"{"kind": "omega_kappa_map", "grid": {"kappa_mhz": {"start": 0.1, "stop": 1, "count": 0}}}"#,
        r#"{"kind": "parity_switch", "grid": {"segments": []}}"#,
    ] {
        let err = resolve(&parse_config(json).unwrap()).unwrap_err();
        assert!(format!("{err:#}").contains("empty"), "{json}: {err:#}");
    }
}

#[test]
fn row_count_equals_grid_size() {
    let cases = [
        (r#"{"kind": "kappa_sweep", "grid": {"kappa_over_w": [0.5, 1.0, 1.5]}}"#, 6),
        (r#"{"kind": "omega_kappa_map", "target": {"family": "psi_theta"}, "grid": {"omega_mhz": [2, 4], "kappa_mhz": [0.2, 0.4, 0.6]}}"#, 6),
        (r#"{"kind": "rabi_dressed_map", "grid": {"delta_over_omega": [0, 0.5], "a1_over_omega": [0, 1]}}"#, 4),
        (r#"{"kind": "dressed_parity_sweep", "grid": {"a1_over_omega": [0, 0.5, 1]}}"#, 6),
        (r#"{"kind": "rate_model_compare", "grid": {"theta_deg": [60, 180]}}"#, 2),
        (r#"{"kind": "time_domain", "grid": {"t_end_us": 1, "dt_us": 0.25}, "tomography": {"enabled": false}}"#, 10),
    ];
    for (json, rows) in cases {
        let r = run(&scenario(json), RunOptions { workers: Some(2) }).unwrap();
        assert!(r.failures.is_empty(), "{json}: {:?}", r.failures);
        assert_eq!(r.table.rows.len(), rows, "{json}");
        assert!(r.table.rows.iter().all(|row| row.len() == r.table.header.len()));
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let s = scenario(r#"{"kind": "kappa_sweep", "grid": {"kappa_over_w": [0.3, 0.7, 1.1, 1.5]}}"#);
    let csv: Vec<String> =
        [1, 2, 4].iter().map(|&w| table_to_csv(&run(&s, RunOptions { workers: Some(w) }).unwrap().table).unwrap()).collect();
    assert_eq!(csv[0], csv[1]);
    assert_eq!(csv[0], csv[2]);
}

#[test]
fn tomography_counts_are_seeded() {
    let json = |seed: u64| {
        format!(r#"{{"kind": "time_domain", "target": {{"family": "psi_theta"}}, "grid": {{"t_end_us": 2}}, "tomography": {{"shots": 200}}, "seed": {seed}}}"#)
    };
    let a = run(&scenario(&json(3)), RunOptions::default()).unwrap();
    let b = run(&scenario(&json(3)), RunOptions::default()).unwrap();
    let c = run(&scenario(&json(4)), RunOptions::default()).unwrap();
    assert_eq!(a.files, b.files);
    assert_ne!(a.files, c.files);
    let (name, text) = &a.files[0];
    assert_eq!(name, "counts_psi_theta.csv");
    assert!(text.starts_with("setting,outcome,count\n"));
    // 9 settings x 4 outcomes
    assert_eq!(text.lines().count(), 1 + 36);
    let total: u64 = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 9 * 200);
}

#[test]
fn rate_model_bounds_lindblad_without_qubit_decay() {
    let s = scenario(
        r#"{"kind": "rate_model_compare", "noise": {"t1_us": 1e9, "tphi_us": "none"}, "grid": {"theta_deg": [30, 90, 150, 180]}}"#,
    );
    let r = run(&s, RunOptions::default()).unwrap();
    let rows = compare_analytic(&s, &r.table).unwrap();
    assert_eq!(rows.len(), 4);
    // The rate model drops off-resonant drive errors, so it only bounds the
    // Lindblad result from above. The gap grows with the blending angle.
    for row in &rows {
        assert!(row.lindblad <= row.rate_model + 1e-9, "{row:?}");
    }
    assert!(rows[0].abs_diff < 0.002, "{:?}", rows[0]);
    assert!(rows[1].abs_diff < rows[2].abs_diff);
    let pi_row = rows.iter().find(|r| r.x == 180.0).unwrap();
    assert!(pi_row.abs_diff < 1e-9, "{pi_row:?}");
}

#[test]
fn rate_model_misses_dephasing_in_the_time_domain_case() {
    let s = scenario(r#"{"kind": "time_domain", "grid": {"t_end_us": 30, "dt_us": 10}, "tomography": {"enabled": false}}"#);
    let r = run(&s, RunOptions::default()).unwrap();
    let rows = compare_analytic(&s, &r.table).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].x, 30.0);
    assert!(rows[0].abs_diff > 0.01, "{:?}", rows[0]);
    assert!(compare_analytic(&resolve(&default_config(ScenarioKind::ParitySwitch)).unwrap(), &r.table).is_err());
}

#[test]
fn psi_target_at_pi_is_ground_state() {
    let s = scenario(r#"{"kind": "rate_model_compare", "grid": {"theta_deg": [180]}}"#);
    let r = run(&s, RunOptions::default()).unwrap();
    let f = r.table.numbers("fidelity").unwrap()[0];
    assert!((f - 1.0).abs() < 1e-9, "{f}");
}
