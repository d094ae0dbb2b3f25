mod common;

use coupler::analytics::{bessel_j, hyp_pfq_squaredpoles, ipr_static, IprState, SwInputs};
use coupler::circuit::{EffectiveParams, MetaModel};
use coupler::dynamics::{evolve, pure_state};
use coupler::hilbert::{annihilate, displacement_matrix, ModeLayout, Operator, TdOperator};
use coupler::model::{build_polaron_model, DisplacementSet, SystemParams};
use coupler::ode::OdeOptions;
use coupler::spectral::{ipr_at, polaron_spectrum};
use coupler::units::{mhz, us};
use coupler::C64;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 24, ..ProptestConfig::default() }
}

fn system(delta: f64, k_r: f64, g: f64) -> SystemParams {
    SystemParams { g_1: mhz(g), g_2: mhz(g), ..SystemParams::ipr_preset(delta, k_r) }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn polaron_hamiltonian_is_hermitian(delta in -3.0..-0.5f64, k_r in -20.0..0.0f64, re in -2.0..2.0f64, im in -2.0..2.0f64) {
        let p = system(delta, k_r, 2.0);
        let l = ModeLayout::coupler(2, 2, 3, 10).unwrap();
        let d = DisplacementSet::from_alpha0(&p, C64::new(re, im), 3).unwrap();
        let h = build_polaron_model(&p, &l, &d, None).unwrap().static_hamiltonian().unwrap();
        prop_assert!(h.anti_hermitian_norm() <= 1e-12 * h.max_abs());
    }

    #[test]
    fn displacement_inverse_on_low_block(re in -1.5..1.5f64, im in -1.5..1.5f64) {
        let alpha = C64::new(re, im);
        let dim = 50;
        let prod = displacement_matrix(dim, alpha).unwrap() * displacement_matrix(dim, -alpha).unwrap();
        let keep = dim - (6.0 * alpha.norm_sqr()).ceil() as usize - 10;
        for i in 0..keep {
            for j in 0..keep {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((prod[(i, j)] - C64::new(want, 0.0)).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn ipr_within_unit_interval(delta in -3.0..-0.5f64, k_r in -20.0..0.0f64, g in 0.0..3.0f64, a in 0.0..2.0f64) {
        let p = system(delta, k_r, g);
        let l = ModeLayout::coupler(2, 2, 3, 8).unwrap();
        let d = DisplacementSet::from_alpha0(&p, C64::new(a, 0.0), 3).unwrap();
        let s = polaron_spectrum(&p, &l, &d).unwrap();
        for b in 0..l.dim() {
            let v = ipr_at(&s, b).unwrap();
            prop_assert!(v > 0.0 && v <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn static_estimate_bounded(k_r in -50.0..-0.1f64, x in 0.0..10.0f64) {
        let inp = SwInputs { g: [mhz(2.0), mhz(2.0)], detunings: [mhz(7.0), mhz(14.0)], delta: mhz(-1.5), chi: mhz(-20.0), k_r: mhz(k_r), x };
        let v = ipr_static(&inp, IprState::S1000).unwrap();
        prop_assert!(v <= 1.0 && v > 0.0);
    }

    #[test]
    fn lindblad_preserves_trace(h01 in -1.0..1.0f64, h11 in -2.0..2.0f64, h22 in -2.0..2.0f64, gamma in 0.0..1.0f64) {
        let l = ModeLayout::single("a", 3).unwrap();
        let c = |v: f64| C64::new(mhz(v), 0.0);
        let m = DMatrix::from_row_slice(3, 3, &[c(0.0), c(h01), c(0.0), c(h01), c(h11), c(0.3), c(0.0), c(0.3), c(h22)]);
        let mut h = TdOperator::new(&l);
        h.add_static(Operator::from_dense(&l, &m).unwrap()).unwrap();
        let jump = annihilate(&l, "a").unwrap().scale(C64::new((gamma / us(1.0)).sqrt(), 0.0));
        let psi = [C64::new(0.0, 0.0), C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let opts = OdeOptions { rtol: 1e-9, atol: 1e-11, ..OdeOptions::default() };
        let tr = evolve(&h, &[jump], &pure_state(&psi), &[0.0, us(0.5), us(1.0)], &[], &opts).unwrap();
        prop_assert!(tr.trace_drift < 1e-8);
        let rho = tr.final_state.unwrap();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-8);
        prop_assert!((&rho - rho.adjoint()).norm() < 1e-10);
    }

    #[test]
    fn bessel_parity(s in -30i64..30, x in 0.0..200.0f64) {
        let a = bessel_j(s, -x).unwrap();
        let b = bessel_j(s, x).unwrap();
        let sign = if s.rem_euclid(2) == 1 { -1.0 } else { 1.0 };
        prop_assert!((a - sign * b).abs() <= 1e-14);
        let c = bessel_j(-s, x).unwrap();
        prop_assert!((c - sign * b).abs() <= 1e-14);
    }

    #[test]
    fn series_increases_with_x(p1 in 0.05..20.0f64, p2 in 0.05..20.0f64, x in 0.0..15.0f64, dx in 0.01..2.0f64) {
        let p = [C64::new(p1, 0.0), C64::new(p2, 0.0)];
        let a = hyp_pfq_squaredpoles(&p, x).unwrap().re;
        let b = hyp_pfq_squaredpoles(&p, x + dx).unwrap().re;
        prop_assert!(b > a);
        prop_assert!((a - common::squared_pole_sum(&[p1, p2], x)).abs() <= 1e-11 * a);
    }

    #[test]
    fn kerr_cat_metapotential_inversion_symmetric(a2 in 0.2..4.0f64, i in -3.0..3.0f64, q in -3.0..3.0f64, n in 0usize..3) {
        let m = MetaModel::KerrCat { effective: EffectiveParams::kerr_cat(mhz(-300.0), mhz(-10.0), mhz(-5.0), a2), delta: mhz(0.5) };
        let z = C64::new(i, q);
        let (e1, e2) = (m.energy(n, z), m.energy(n, -z));
        prop_assert!((e1 - e2).abs() <= 1e-12 * e1.abs().max(1.0));
    }

    #[test]
    fn undriven_metapotential_rotation_symmetric(theta in 0.0..6.3f64, i in -3.0..3.0f64, q in -3.0..3.0f64, n in 0usize..3) {
        let params = SystemParams { kappa: 0.0, ..SystemParams::ipr_preset(-1.5, -10.0) };
        let m = MetaModel::Simple { params, eps: C64::default() };
        let z = C64::new(i, q);
        let (e1, e2) = (m.energy(n, z), m.energy(n, z * C64::from_polar(1.0, theta)));
        prop_assert!((e1 - e2).abs() <= 1e-12 * e1.abs().max(1.0));
    }
}
