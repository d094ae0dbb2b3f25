use approx::assert_abs_diff_eq;
use coupler::hilbert::{ModeLayout, BUS};
use coupler::model::*;
use coupler::units::{mhz, ns, to_mhz};
use coupler::C64;

fn quiet() -> SystemParams {
    SystemParams {
        omega_1: mhz(5000.0),
        omega_2: mhz(5100.0),
        omega_b: mhz(6000.0),
        omega_r: mhz(7000.0),
        k_1: 0.0,
        k_2: 0.0,
        k_b: 0.0,
        k_r: 0.0,
        g_1: 0.0,
        g_2: 0.0,
        chi: 0.0,
        kappa: 0.0,
        omega_d: mhz(7000.0),
    }
}

fn steady_example() -> SystemParams {
    SystemParams { chi: mhz(-20.0), ..quiet() }.with_delta(mhz(-5.0))
}

#[test]
fn free_oscillators_are_diagonal() {
    let p = quiet();
    let l = ModeLayout::coupler(2, 2, 3, 4).unwrap();
    let h = build_lab_hamiltonian(&p, &l, &DriveEnvelope::zero(), None, Frame::Lab).unwrap().at(0.3);
    for i in 0..l.dim() {
        let lv = l.levels(i);
        let want = lv[0] as f64 * p.omega_1 + lv[1] as f64 * p.omega_2 + lv[2] as f64 * p.omega_b + lv[3] as f64 * p.omega_r;
        assert_abs_diff_eq!(h.get(i, i).re, want, epsilon = 1e-3);
        for j in 0..l.dim() {
            if i != j {
                assert_eq!(h.get(i, j), C64::default());
            }
        }
    }
}

#[test]
fn cross_kerr_shifts_bus_nlr_state() {
    let l = ModeLayout::coupler(2, 2, 3, 4).unwrap();
    let idx = l.flat_index(&[0, 0, 1, 1]).unwrap();
    let env = DriveEnvelope::zero();
    let h0 = build_lab_hamiltonian(&quiet(), &l, &env, None, Frame::Lab).unwrap().at(0.0);
    let p = SystemParams { chi: mhz(-20.0), ..quiet() };
    let h1 = build_lab_hamiltonian(&p, &l, &env, None, Frame::Lab).unwrap().at(0.0);
    assert_abs_diff_eq!(to_mhz(h1.get(idx, idx).re - h0.get(idx, idx).re), -20.0, epsilon = 1e-9);
}

#[test]
fn lab_hamiltonian_hermitian_along_ramp() {
    let p = SystemParams { g_1: mhz(2.0), g_2: mhz(2.0), k_r: mhz(-1.0), ..SystemParams::rabi_preset(-20.0) };
    let l = ModeLayout::coupler(2, 2, 3, 12).unwrap();
    let disp = DisplacementSet::from_alpha0(&p, C64::new(2.0, 0.0), 3).unwrap();
    let eps0 = disp.steady_value(0) * p.lambda_n(0);
    let env = tqd_envelope(BaseRamp::raised_cosine(eps0, ns(5.0)).unwrap(), &p, f64::INFINITY).unwrap();
    for frame in [Frame::Lab, Frame::DriveRotating] {
        let h = build_lab_hamiltonian(&p, &l, &env, Some(&disp), frame).unwrap();
        for k in 0..50 {
            let t = ns(0.17) * k as f64;
            assert!(h.at(t).anti_hermitian_norm() < 1e-10 * h.at(t).max_abs());
        }
    }
}

#[test]
fn steady_displacements_by_division() {
    let p = steady_example();
    let d = DisplacementSet::steady(&p, C64::new(mhz(-15.0), 0.0), 3).unwrap();
    assert_abs_diff_eq!(d.steady_value(0).re, 3.0, epsilon = 1e-12);
    assert_abs_diff_eq!(d.steady_value(1).re, 0.6, epsilon = 1e-12);
    assert_abs_diff_eq!(d.alpha_bar().re, -2.4, epsilon = 1e-12);
    let zero = DisplacementSet::steady(&p, C64::default(), 3).unwrap();
    assert!(zero.steady_values().iter().all(|a| a.norm() == 0.0));
}

#[test]
fn alpha_bar_relation_with_loss() {
    let p = SystemParams { kappa: mhz(0.7), ..steady_example() };
    let d = DisplacementSet::from_alpha0(&p, C64::new(1.3, 0.4), 2).unwrap();
    let want = -p.chi * d.steady_value(0) / C64::new(p.delta() + p.chi, -p.kappa / 2.0);
    assert!((d.alpha_bar() - want).norm() <= 1e-10 * want.norm());
}

#[test]
fn classical_trajectories() {
    let p = SystemParams { kappa: mhz(0.5), ..quiet() }.with_delta(0.0);
    let t: Vec<f64> = (0..=40).map(|k| ns(25.0) * k as f64).collect();
    let d = classical_displacements_with(&p, &|_| C64::default(), &[], C64::default(), &[C64::new(1.0, 0.0)], &t).unwrap();
    for (ti, a) in t.iter().zip(d.trajectory(0)) {
        assert_abs_diff_eq!(a.norm(), (-p.kappa * ti / 2.0).exp(), epsilon = 1e-8);
    }
    let d = classical_displacements(&steady_example(), &DriveEnvelope::zero(), &t, 2).unwrap();
    assert!((0..3).all(|n| d.trajectory(n).iter().all(|a| a.norm() == 0.0)));
}

#[test]
fn tqd_envelope_properties() {
    let p = SystemParams::rabi_preset(-10.0);
    let base = BaseRamp::raised_cosine(C64::new(mhz(-15.0), 0.0), ns(5.0)).unwrap();
    let env = tqd_envelope(base.clone(), &p, f64::INFINITY).unwrap();
    assert!(env.eval(0.0).norm() < 1e-9 * mhz(15.0));
    for t in [ns(5.0), ns(7.0), ns(300.0)] {
        assert_eq!(env.eval(t), base.plateau());
    }
    let t: Vec<f64> = (0..=50).map(|k| ns(0.1) * k as f64).collect();
    let d = classical_displacements(&p, &env, &t, 0).unwrap();
    let target = base.plateau() / p.lambda_n(0);
    let end = d.trajectory(0)[t.len() - 1];
    assert!((end - target).norm() <= 1e-6 * target.norm());
}

#[test]
fn tqd_error_series() {
    let p = steady_example();
    let zero = tqd_error_estimate(&|_, _| C64::default(), &p, 2, 3, ns(10.0)).unwrap();
    assert!(zero.iter().all(|v| v.norm() == 0.0));
    let c = C64::new(mhz(0.2), 0.0);
    let step = |k: usize, _: f64| if k == 0 { c } else { C64::default() };
    let est = tqd_error_estimate(&step, &p, 2, 0, ns(40.0)).unwrap();
    for (n, e) in est.iter().enumerate() {
        let bound = c.norm() / (p.delta() + n as f64 * p.chi).abs();
        assert!(e.norm() <= 2.0 * bound + 1e-12);
    }
}

#[test]
fn polaron_detuning_example() {
    let p = SystemParams { omega_1: mhz(6007.0), omega_b: mhz(6000.0), ..steady_example() };
    let d = DisplacementSet::steady(&p, C64::new(mhz(-15.0), 0.0), 3).unwrap();
    let l = ModeLayout::coupler(2, 2, 3, 8).unwrap();
    let m = build_polaron_model(&p, &l, &d, None).unwrap();
    assert_abs_diff_eq!(to_mhz(m.detunings()[0]), 43.0, epsilon = 1e-9);
}

#[test]
fn polaron_reduces_to_jaynes_cummings_without_drive() {
    let p = SystemParams { g_1: mhz(2.0), omega_1: mhz(6007.0), omega_b: mhz(6000.0), ..steady_example() };
    let d = DisplacementSet::from_alpha0(&p, C64::default(), 3).unwrap();
    let l = ModeLayout::coupler(2, 2, 3, 6).unwrap();
    let m = build_polaron_model(&p, &l, &d, None).unwrap();
    assert_abs_diff_eq!(m.detunings()[0], p.omega_1 - p.omega_b, epsilon = 1e-6);
    let h = m.static_hamiltonian().unwrap();
    let q = l.flat_index(&[1, 0, 0, 0]).unwrap();
    let b = l.flat_index(&[0, 0, 1, 0]).unwrap();
    assert_abs_diff_eq!(h.get(q, b).norm(), p.g_1, epsilon = 1e-6);
    for k in 1..6 {
        assert_eq!(h.get(q, l.flat_index(&[0, 0, 1, k]).unwrap()).norm(), 0.0);
    }
}

#[test]
fn polaron_coupling_carries_rabi_suppression() {
    let p = SystemParams { g_1: mhz(2.0), ..steady_example() };
    let d = DisplacementSet::from_alpha0(&p, C64::new(1.5, 0.2), 3).unwrap();
    let l = ModeLayout::coupler(2, 2, 3, 20).unwrap();
    let h = build_polaron_model(&p, &l, &d, None).unwrap().static_hamiltonian().unwrap();
    let q = l.flat_index(&[1, 0, 0, 0]).unwrap();
    let b = l.flat_index(&[0, 0, 1, 0]).unwrap();
    let want = p.g_1 * (-d.alpha_bar().norm_sqr() / 2.0).exp();
    assert!((h.get(q, b).norm() - want).abs() <= 1e-9 * want);
}

#[test]
fn phase_modulation_of_displacements() {
    let p = steady_example();
    let d = DisplacementSet::from_alpha0(&p, C64::new(2.0, 0.0), 3).unwrap();
    let still = pam_steady_modulation(&d, &PamParams { lambda: 0.0, omega_m: mhz(100.0) }, 1e-7).unwrap();
    assert_eq!(still, d.steady_values());
    let pam = PamParams { lambda: 2.405, omega_m: mhz(100.0) };
    let quarter = pam_steady_modulation(&d, &pam, std::f64::consts::PI / (2.0 * pam.omega_m)).unwrap();
    for (a, b) in quarter.iter().zip(d.steady_values()) {
        assert!((a - b).norm() < 1e-12);
    }
    assert_abs_diff_eq!(2.405 / 2.4, 1.002, epsilon = 1e-3);
}

#[test]
fn polaron_model_rejects_short_displacement_sets() {
    let p = steady_example();
    let d = DisplacementSet::from_alpha0(&p, C64::new(1.0, 0.0), 2).unwrap();
    let l = ModeLayout::coupler(2, 2, 3, 6).unwrap();
    assert!(build_polaron_model(&p, &l, &d, None).is_err());
    assert_eq!(l.dim_of(BUS).unwrap(), 3);
}

#[test]
fn invalid_parameters_rejected() {
    let p = SystemParams { kappa: -1.0, ..quiet() };
    assert!(p.validate().is_err());
    let p = SystemParams { chi: f64::NAN, ..quiet() };
    assert!(p.validate().is_err());
    assert!(BaseRamp::raised_cosine(C64::new(1.0, 0.0), 0.0).is_err());
}
