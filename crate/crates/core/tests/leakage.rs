// Copyright 2026 The jpgsim Authors
// SPDX-License-Identifier: Apache-2.0

use jpgsim_core::parallel::Strategy;
use jpgsim_core::quantum::{extra_attenuation_for_nu_pi, JpgParams, QubitParams};
use jpgsim_core::transmon::{leakage_after_pi, leakage_sweep, LeakageSetup};

fn setup() -> LeakageSetup {
    let q = QubitParams::reference_device();
    let jpg = JpgParams::reference_device();
    LeakageSetup {
        jpg: JpgParams {
            extra_attenuation_db: extra_attenuation_for_nu_pi(&jpg, &q, 187.0, 0.15).unwrap(),
            ..jpg
        },
        qubit: q,
        integrator: Default::default(),
    }
}

#[test]
fn narrow_pulses_approach_the_delta_limit() {
    let s = setup();
    let delta = leakage_after_pi(0.033, 0.0, 2, &s).unwrap();
    let narrow = leakage_after_pi(0.033, 0.01, 2, &s).unwrap();
    assert!((delta.rho_ff - 1.781e-3).abs() < 0.01 * 1.781e-3, "{}", delta.rho_ff);
    assert!((narrow.rho_ff - delta.rho_ff).abs() < 0.02 * delta.rho_ff);
    assert_eq!(narrow.nu_pi.abs_diff(delta.nu_pi), 0);
    assert!(delta.rho_ee > 0.99);
}

#[test]
fn wide_pulses_need_more_of_them_and_leak_less() {
    let s = setup();
    let alpha = s.qubit.anharmonicity_fraction();
    let a = leakage_after_pi(alpha, 0.15, 2, &s).unwrap();
    let b = leakage_after_pi(alpha, 0.25, 2, &s).unwrap();
    assert_eq!(a.nu_pi, 187);
    assert!(b.nu_pi > a.nu_pi);
    assert!(b.rho_ff < a.rho_ff);
}

#[test]
fn sweep_order_and_strategy_do_not_change_results() {
    let s = setup();
    let alphas = [0.033, 0.05];
    let widths = [0.0, 0.05, 0.2];
    let par = leakage_sweep(&alphas, &widths, 2, &s, Strategy::Parallel).unwrap();
    let seq = leakage_sweep(&alphas, &widths, 2, &s, Strategy::Sequential).unwrap();
    assert_eq!(par, seq);
    let keys: Vec<(f64, f64)> = par.iter().map(|p| (p.alpha_frac, p.sigma_n)).collect();
    assert_eq!(keys[1], (0.033, 0.05));
    assert_eq!(keys[3], (0.05, 0.0));
}

#[test]
fn single_pulse_period_is_rejected() {
    assert!(leakage_after_pi(0.033, 0.0, 1, &setup()).is_err());
    assert!(leakage_after_pi(0.033, -0.1, 2, &setup()).is_err());
}
