mod common;

use approx::assert_abs_diff_eq;
use common::{rel, squared_pole_sum};
use coupler::analytics::*;
use coupler::model::{DisplacementSet, PamParams, SystemParams};
use coupler::units::{mhz, to_mhz, us};
use coupler::{Error, C64};

fn inputs(k_r: f64, x: f64) -> SwInputs {
    SwInputs { g: [mhz(2.0), mhz(2.0)], detunings: [mhz(7.0), mhz(14.0)], delta: mhz(-1.5), chi: mhz(-20.0), k_r, x }
}

/// `1 − IPR₁₀₀₀` summed level by level from the ladder `q = ((δ+χ)ℓ + K_r ℓ(ℓ−1)/2)/Δ̃`.
fn ladder_oracle(inp: &SwInputs) -> f64 {
    let d = inp.detunings[0];
    let mut sum = 0.0;
    let mut w = 1.0;
    for l in 0..400 {
        if l > 0 {
            w *= inp.x / l as f64;
        }
        let lf = l as f64;
        let q = ((inp.delta + inp.chi) * lf + inp.k_r * lf * (lf - 1.0) / 2.0) / d;
        sum += w / (1.0 - q).powi(2);
    }
    2.0 * (inp.g[0] / d).powi(2) * (-inp.x).exp() * sum
}

#[test]
fn series_special_values() {
    assert_eq!(hyp_pfq_squaredpoles(&[C64::new(1.0, 0.0)], 0.0).unwrap(), C64::new(1.0, 0.0));
    let inf = C64::new(f64::INFINITY, 0.0);
    let v = hyp_pfq_squaredpoles(&[inf, inf], 2.5).unwrap();
    assert!(rel(v.re, 2.5f64.exp()) < 1e-12);
    // Σ 1/(n!(1+n)²); frozen from the 50-term oracle.
    let v = hyp_pfq_squaredpoles(&[C64::new(1.0, 0.0)], 1.0).unwrap();
    assert!((v.re - 1.3179021514544).abs() < 1e-12);
    assert!((v.re - squared_pole_sum(&[1.0], 1.0)).abs() < 1e-12);
    let v = hyp_pfq_squaredpoles(&[C64::new(0.7, 0.0), C64::new(-3.4, 0.0)], 6.0).unwrap();
    assert!(rel(v.re, squared_pole_sum(&[0.7, -3.4], 6.0)) < 1e-12);
}

#[test]
fn series_pole_reported() {
    match hyp_pfq_squaredpoles(&[C64::new(-2.0, 0.0)], 1.0) {
        Err(Error::Pole { level, .. }) => assert_eq!(level, 2),
        other => panic!("{other:?}"),
    }
    assert!(hyp_pfq_squaredpoles(&[C64::new(1.0, 0.0)], -1.0).is_err());
}

#[test]
fn rabi_and_dephasing_suppression() {
    assert_eq!(rabi_suppression(mhz(1.0), C64::default()), mhz(1.0));
    assert_abs_diff_eq!(to_mhz(rabi_suppression(mhz(1.0), C64::new(2.0, 0.0))), 0.1353, epsilon = 1e-4);
    assert_abs_diff_eq!(to_mhz(rabi_suppression(mhz(1.0), C64::new(2.4, 0.0))), 0.0561, epsilon = 1e-4);

    assert_abs_diff_eq!(dephasing_suppression(us(10.0), mhz(0.1), C64::default()).unwrap(), us(10.0), epsilon = 1e-18);
    let a = C64::new(2.4, 0.0);
    let t = dephasing_suppression(f64::INFINITY, mhz(0.1), a).unwrap();
    assert!(rel(t, us(0.55)) < 0.01, "{t}");
    let half = dephasing_suppression(f64::INFINITY, mhz(0.05), a).unwrap();
    assert!(rel(half, 2.0 * t) < 1e-12);
    assert!(dephasing_suppression(0.0, mhz(0.1), a).is_err());
}

#[test]
fn static_ipr_limits() {
    let mut inp = inputs(0.0, 0.0);
    assert_abs_diff_eq!(1.0 - ipr_static(&inp, IprState::S1000).unwrap(), 0.1633, epsilon = 1e-4);
    inp.g = [0.0, 0.0];
    assert_eq!(ipr_static(&inp, IprState::S1100).unwrap(), 1.0);

    let inp = inputs(mhz(-10.0), 3.0);
    let a = ipr_static(&inp, IprState::S1000).unwrap();
    let b = ipr_static(&inp, IprState::S0100).unwrap();
    assert_abs_diff_eq!(ipr_static(&inp, IprState::S1100).unwrap(), a + b - 1.0, epsilon = 1e-15);
}

#[test]
fn static_ipr_matches_ladder_sum() {
    for k_r in [0.0, mhz(-10.0), mhz(-1.0), mhz(3.0), mhz(-500.0)] {
        for x in [0.0, 0.5, 2.0, 6.0] {
            let inp = inputs(k_r, x);
            let got = 1.0 - ipr_static(&inp, IprState::S1000).unwrap();
            assert!(rel(got, ladder_oracle(&inp)) < 1e-9, "K_r={k_r} x={x}: {got} vs {}", ladder_oracle(&inp));
        }
    }
}

#[test]
fn infinite_anharmonicity_closed_form() {
    for x in [0.0, 1.0, 4.0, 9.0] {
        let inp = inputs(f64::INFINITY, x);
        let zeta = -(inp.delta + inp.chi) / inp.detunings[0];
        let want = 2.0 * (2.0f64 / 7.0).powi(2) * (-x).exp() * (1.0 + x / (1.0 + zeta).powi(2));
        assert!(rel(1.0 - ipr_kr_infinite(&inp, IprState::S1000).unwrap(), want) < 1e-12);
    }
    // A very large finite K_r approaches the limit.
    let big = 1.0 - ipr_static(&inputs(mhz(-1e7), 4.0), IprState::S1000).unwrap();
    let lim = 1.0 - ipr_kr_infinite(&inputs(0.0, 4.0), IprState::S1000).unwrap();
    assert!(rel(big, lim) < 1e-4);
}

#[test]
fn static_ipr_continuous_at_zero_kerr() {
    let inp = inputs(0.0, 3.0);
    let a = ipr_static(&inp, IprState::S1000).unwrap();
    // At K_r = |χ|·1e-6 the function itself moves by about 1.9e-9, so the branches are
    // compared through the ladder oracle there, and directly at a smaller K_r.
    let small = inp.with_k_r(inp.chi.abs() * 1e-6);
    let b = ipr_static(&small, IprState::S1000).unwrap();
    let expected = ladder_oracle(&inp) - ladder_oracle(&small);
    assert!(((b - a) - expected).abs() < 1e-13, "{} vs {expected}", b - a);
    let tiny = ipr_static(&inp.with_k_r(inp.chi.abs() * 1e-8), IprState::S1000).unwrap();
    assert!((a - tiny).abs() < 1e-9);
}

#[test]
fn inputs_from_system() {
    let p = SystemParams::ipr_preset(-1.5, -10.0);
    let d = DisplacementSet::from_alpha0(&p, C64::new(2.0, 0.0), 3).unwrap();
    let inp = SwInputs::new(&p, &d);
    let a = d.steady_values();
    let dac = p.delta() * a[0].norm_sqr() - (p.delta() + p.chi) * a[1].norm_sqr();
    assert!(rel(inp.detunings[0], mhz(7.0) - dac) < 1e-12);
    assert_abs_diff_eq!(inp.x, d.alpha_bar().norm_sqr(), epsilon = 1e-12);
    assert!(inp.dispersive_warnings().is_empty());
    let close = inp.with_detunings([mhz(5.0), mhz(14.0)]);
    assert_eq!(close.dispersive_warnings().len(), 1);
}

#[test]
fn pam_reduces_to_static_without_modulation() {
    let still = PamParams { lambda: 0.0, omega_m: mhz(300.0) };
    for k_r in [0.0, mhz(-10.0), f64::INFINITY] {
        let inp = inputs(k_r, 2.5);
        let s = ipr_static(&inp, IprState::S1000).unwrap();
        assert!((ipr_pam(&inp, &still, IprState::S1000, None).unwrap() - s).abs() < 1e-14);
        assert!((ipr_pam(&inp, &still, IprState::S1000, Some(1.3e-7)).unwrap() - s).abs() < 1e-12);
    }
}

#[test]
fn pam_floor_at_bessel_zero() {
    let omega_m = mhz(500.0);
    let pam = PamParams { lambda: bessel_j0_first_zero(), omega_m };
    let floor = 2.0 * (mhz(2.0) / omega_m).powi(2);
    for x in [0.0, 2.0, 5.0] {
        let v = 1.0 - ipr_pam(&inputs(0.0, x), &pam, IprState::S1000, None).unwrap();
        assert!(v >= 0.5 * floor && v < 1.5 * floor, "x={x}: {v} vs {floor}");
    }
    // The instantaneous form averages to the time-averaged one over a period.
    let inp = inputs(mhz(-10.0), 2.0);
    let avg = ipr_pam(&inp, &pam, IprState::S1000, None).unwrap();
    let period = std::f64::consts::TAU / omega_m;
    let n = 64;
    let mean = (0..n).map(|k| ipr_pam(&inp, &pam, IprState::S1000, Some(period * k as f64 / n as f64)).unwrap()).sum::<f64>()
        / n as f64;
    assert!((mean - avg).abs() < 1e-12 * (1.0 - avg).abs().max(1e-12) + 1e-15);
}

#[test]
fn longitudinal_drive_limits() {
    let inp = inputs(0.0, 2.0);
    let s = ipr_static(&inp, IprState::S1000).unwrap();
    assert!((ipr_ld(&inp, 0.0, mhz(500.0), IprState::S1000).unwrap() - s).abs() < 1e-14);
    // Only the vacuum channel survives at x = 0, and it carries no z dependence.
    let vac = inputs(0.0, 0.0);
    let a = ipr_ld(&vac, 0.0, mhz(500.0), IprState::S1000).unwrap();
    let b = ipr_ld(&vac, 7.3, mhz(500.0), IprState::S1000).unwrap();
    assert_eq!(a, b);
}

#[test]
fn longitudinal_drive_large_z_scaling() {
    // ℓ ≠ 0 channels carry J_s²(ℓz) ~ 1/(ℓz) on average, so a fourfold z cuts them about fourfold.
    let inp = inputs(0.0, 2.0);
    let vacuum = 2.0 * (2.0f64 / 7.0).powi(2) * (-2.0f64).exp();
    let excess = |z0: f64| {
        (0..200).map(|k| 1.0 - ipr_ld(&inp, z0 * (1.0 + k as f64 / 400.0), mhz(500.0), IprState::S1000).unwrap() - vacuum).sum::<f64>()
            / 200.0
    };
    let ratio = excess(10.0) / excess(40.0);
    assert!((3.0..5.5).contains(&ratio), "{ratio}");
}

#[test]
fn pam_ld_reductions() {
    let inp = inputs(0.0, 2.0);
    let off = PamParams { lambda: 0.0, omega_m: mhz(500.0) };
    let s = ipr_static(&inp, IprState::S1000).unwrap();
    assert!((ipr_pam_ld(&inp, &off, 0.0, mhz(10.0), IprState::S1000).unwrap() - s).abs() < 1e-14);
    let pam = PamParams { lambda: 1.7, omega_m: mhz(500.0) };
    let p = ipr_pam(&inp, &pam, IprState::S1000, None).unwrap();
    assert!((ipr_pam_ld(&inp, &pam, 0.0, mhz(10.0), IprState::S1000).unwrap() - p).abs() < 1e-14);
    assert!((ipr_pam_ld(&inp, &pam, 1e-7, mhz(10.0), IprState::S1000).unwrap() - p).abs() < 1e-12);
    assert!(matches!(ipr_pam_ld(&inp, &pam, 0.5, mhz(250.0), IprState::S1000), Err(Error::Invalid(_))));
}

#[test]
fn pam_ld_decreases_with_z() {
    // PAM at the Bessel zero with ω^φ = 2π·0.5 GHz·|ᾱ|, LD at 10 MHz, K_r = 0, δ/2π = −1 MHz.
    let p = SystemParams::ipr_preset(-1.0, 0.0);
    let d = DisplacementSet::from_alpha0(&p, C64::new(6f64.sqrt(), 0.0), 3).unwrap();
    let inp = SwInputs::new(&p, &d);
    let pam = PamParams { lambda: bessel_j0_first_zero(), omega_m: mhz(500.0) * inp.x.sqrt() };
    let v: Vec<f64> = (0..=10).map(|k| ipr_pam_ld(&inp, &pam, k as f64 * 0.5, mhz(10.0), IprState::S1000).unwrap()).collect();
    assert!(v.windows(2).all(|w| w[1] < w[0]), "{v:?}");
}

#[test]
fn zz_baseline() {
    let inp = inputs(0.0, 0.0);
    let chi = chi12_ac(&inp).unwrap();
    assert_abs_diff_eq!(to_mhz(chi) * 1e3, 5.83, epsilon = 5e-3);
    assert_eq!(chi12_ac(&inp.with_detunings([mhz(7.0), mhz(-7.0)])).unwrap(), 0.0);
    let doubled = SwInputs { g: [mhz(4.0), mhz(4.0)], ..inp };
    assert!(rel(chi12_ac(&doubled).unwrap(), 16.0 * chi) < 1e-12);
    assert!(chi12_ac(&inp.with_detunings([0.0, mhz(14.0)])).is_err());
    assert!(chi12_ac_warnings(&inp, [mhz(-300.0); 2], mhz(-300.0)).is_empty());
    assert_eq!(chi12_ac_warnings(&inp, [mhz(-50.0); 2], mhz(-300.0)).len(), 1);
}

#[test]
fn dephasing_estimate_values() {
    let a = C64::new(2.4, 0.0);
    assert_eq!(dephasing_estimate(mhz(0.1), a, 0.0).unwrap(), 0.0);
    let g = dephasing_estimate(mhz(0.1), a, 1e-3).unwrap();
    assert!(rel(g, 9.0e2) < 0.01, "{g}");
    assert!(rel(dephasing_estimate(mhz(0.3), a, 1e-3).unwrap(), 3.0 * g) < 1e-12);
    assert!(dephasing_estimate(mhz(0.1), a, 1.5).is_err());
}

#[test]
fn sweep_angle_limits() {
    let (d1, delta) = (mhz(7.0), mhz(1.5));
    let lam = mhz(0.2);
    let nu = 2.0 * std::f64::consts::PI * lam * lam / delta;
    assert_abs_diff_eq!(sweep_angle(lam, d1, delta, nu, 0.0).unwrap().asymptote, 1.0, epsilon = 1e-12);

    let slow_nu = d1 * d1 / delta / 100.0;
    let root = (delta * slow_nu / 2.0).sqrt();
    assert!(d1 / (2.0 * root) > 3.0);
    // Fresnel ripple from each endpoint is about 1/(2√π|arg|). The start argument is fixed
    // at √50 by this ν; the end ripple is averaged out over a range of stopping times.
    let end_arg = |e: f64| 2.0 * e * root / (delta * slow_nu);
    let mut slow = sweep_angle(lam, d1, delta, slow_nu, end_arg(15.0)).unwrap();
    assert_abs_diff_eq!(slow.t_crit, d1 / (delta * slow_nu), epsilon = 1e-20);
    let n = 57;
    let mean = (0..n).map(|k| sweep_angle(lam, d1, delta, slow_nu, end_arg(15.0 + 0.25 * k as f64)).unwrap().theta).sum::<f64>()
        / n as f64;
    assert!(rel(mean, slow.asymptote) < 0.05, "{mean} vs {}", slow.asymptote);
    for k in 0..n {
        slow = sweep_angle(lam, d1, delta, slow_nu, end_arg(15.0 + 0.25 * k as f64)).unwrap();
        assert!(rel(slow.theta, slow.asymptote) < 0.1, "{slow:?}");
    }
    let tau = end_arg(15.0);
    assert_eq!(sweep_angle(0.0, d1, delta, slow_nu, tau).unwrap().theta, 0.0);

    let fast_nu = 100.0 * d1 * d1 / delta;
    let fast = sweep_angle(lam, d1, delta, fast_nu, d1 / (delta * fast_nu)).unwrap();
    assert!(fast.theta < 0.01 * slow.asymptote, "{fast:?}");
    assert!(sweep_angle(lam, d1, -delta, slow_nu, tau).is_err());

    let (lo, hi) = sweep_window(lam, mhz(-20.0), 2.0, delta);
    assert_eq!(lo, lam);
    assert!(rel(hi, 2.0 * mhz(20.0).powi(2) * 2.0 / delta) < 1e-12);
}

#[test]
fn regime_classification() {
    assert_eq!(classify_regime(&SystemParams::ipr_preset(-1.5, 0.0)).regime, Regime::Monotonic);
    assert_eq!(classify_regime(&SystemParams::ipr_preset(1.0, 0.0)).regime, Regime::Nonmonotonic);
    let r = classify_regime(&SystemParams::ipr_preset(0.0, 0.0));
    assert_eq!(r.regime, Regime::Invalid);
    assert!(r.conditions.iter().any(|(_, ok)| !ok));
    let big = classify_regime(&SystemParams::ipr_preset(-15.0, 0.0));
    assert_eq!(big.regime, Regime::Invalid);
}

#[test]
fn bessel_and_erf_values() {
    assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
    assert_eq!(bessel_j(1, 0.0).unwrap(), 0.0);
    assert_eq!(erf_complex(C64::default()).unwrap(), C64::default());
    // Tabulated references.
    assert!((bessel_j(0, 1.0).unwrap() - 0.765_197_686_557_966_6).abs() < 1e-14);
    assert!((bessel_j(1, 1.0).unwrap() - 0.440_050_585_744_933_5).abs() < 1e-14);
    assert!((bessel_j(5, 10.0).unwrap() - -0.234_061_528_186_793_6).abs() < 1e-13);
    assert!((erf_complex(C64::new(1.0, 0.0)).unwrap() - C64::new(0.842_700_792_949_714_9, 0.0)).norm() < 1e-12);
    assert!((erf_complex(C64::new(0.0, 1.0)).unwrap() - C64::new(0.0, 1.650_425_758_797_542_8)).norm() < 1e-10);

    let z = bessel_j0_first_zero();
    assert!((z - 2.404826).abs() < 1e-6);
    assert!(bessel_j(0, z).unwrap().abs() < 1e-12);
    assert!(bessel_j(61, 1.0).is_err());
    assert!(bessel_j(0, 2e3).is_err());
    assert!(erf_complex(C64::new(40.0, 0.0)).is_err());
}

#[test]
fn auxiliary_estimates() {
    assert_abs_diff_eq!(stray_coupling_bound(mhz(0.1), mhz(5000.0), mhz(5100.0)), -2e-6, epsilon = 1e-15);
    let a = pam_tone_amplitude(mhz(500.0), 2.4, C64::new(0.0, 2.0)).unwrap();
    assert!((a - C64::new(0.0, mhz(500.0) * 1.2)).norm() < 1e-6);
    assert!(pam_tone_amplitude(mhz(500.0), 2.4, C64::default()).is_err());
}
