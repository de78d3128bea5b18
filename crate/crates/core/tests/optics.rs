use dichroic_filter::polarization_optics::{
    apply_dichroic_medium, filter_outputs, filter_outputs_with_phase, Basis, InterferometerConfig, PolarizationState,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn ideal() -> InterferometerConfig {
    InterferometerConfig {
        polarizer_extinction: 0.0,
        window_transmission: 0.95,
        balance_error: 0.0,
    }
}

fn depth() -> impl Strategy<Value = f64> {
    0.0..10.0f64
}

proptest! {
    #[test]
    fn energy_split(r in depth(), l in depth()) {
        let cfg = ideal();
        let out = filter_outputs(r, l, &cfg).unwrap();
        let expected = cfg.window_transmission * 0.5 * ((-r).exp() + (-l).exp());
        prop_assert!((out.h + out.v - expected).abs() < 1e-12);
    }

    #[test]
    fn swapping_handedness_leaves_ports_unchanged(r in depth(), l in depth(), eps in 0.0..1e-3f64) {
        let cfg = InterferometerConfig { polarizer_extinction: eps, ..ideal() };
        let a = filter_outputs(r, l, &cfg).unwrap();
        let b = filter_outputs(l, r, &cfg).unwrap();
        prop_assert!((a.h - b.h).abs() < 1e-15 && (a.v - b.v).abs() < 1e-15);
    }

    #[test]
    fn outputs_are_passive(r in depth(), l in depth(), eps in 0.0..0.5f64, theta in -0.5..0.5f64, phi in -3.0..3.0f64) {
        let cfg = InterferometerConfig { polarizer_extinction: eps, window_transmission: 0.95, balance_error: theta };
        let out = filter_outputs_with_phase(r, l, phi, &cfg).unwrap();
        prop_assert!(out.h >= 0.0 && out.v >= 0.0);
        prop_assert!(out.h + out.v <= 0.95 * (1.0 + 1e-12));
    }

    #[test]
    fn v_port_dark_only_without_dichroism(r in depth(), l in depth()) {
        let out = filter_outputs(r, l, &ideal()).unwrap();
        let closed = 0.95 * (-(r + l) / 2.0).exp() * ((r - l) / 4.0).sinh().powi(2);
        prop_assert!((out.v - closed).abs() < 1e-14);
        prop_assert_eq!(out.v < 1e-30, (r - l).abs() < 1e-13);
    }

    #[test]
    fn basis_change_is_unitary(ar in -1.0..1.0f64, ai in -1.0..1.0f64, br in -1.0..1.0f64, bi in -1.0..1.0f64) {
        let s = PolarizationState::new(Basis::HV, Complex64::new(ar, ai), Complex64::new(br, bi));
        let rl = s.to_basis(Basis::RL);
        prop_assert!((rl.intensity() - s.intensity()).abs() < 1e-14);
        let back = rl.to_basis(Basis::HV);
        for (x, y) in back.amplitudes().iter().zip(s.amplitudes()) {
            prop_assert!((x - y).norm() < 1e-15);
        }
    }
}

#[test]
fn leakage_floor_without_dichroism() {
    let cfg = InterferometerConfig {
        polarizer_extinction: 1e-5,
        ..ideal()
    };
    let out = filter_outputs(0.0, 0.0, &cfg).unwrap();
    assert!((out.v - 0.95e-5).abs() < 1e-18);
    assert!((out.h - 0.95 * (1.0 - 1e-5)).abs() < 1e-15);
}

#[test]
fn unbalanced_analyzer_leaks_into_v() {
    let theta = 0.01f64;
    let cfg = InterferometerConfig {
        balance_error: theta,
        ..ideal()
    };
    let out = filter_outputs(0.4, 0.4, &cfg).unwrap();
    let expected = 0.95 * (-0.4f64).exp() * theta.sin().powi(2);
    assert!((out.v - expected).abs() < 1e-15);
}

#[test]
fn right_circular_is_untouched_by_left_absorption() {
    let r = PolarizationState::new(Basis::RL, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    let out = apply_dichroic_medium(r, 0.0, 7.0, 0.0, 0.0).unwrap();
    assert!((out.intensity() - 1.0).abs() < 1e-15);
}

#[test]
fn negative_depth_is_rejected() {
    assert!(filter_outputs(-0.1, 0.0, &ideal()).is_err());
}
