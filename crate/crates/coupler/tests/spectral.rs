use approx::assert_abs_diff_eq;
use coupler::hilbert::{dense_to_sparse, ModeLayout, Operator};
use coupler::model::{DisplacementSet, SystemParams};
use coupler::spectral::*;
use coupler::units::{mhz, to_mhz};
use coupler::C64;
use nalgebra::DMatrix;

fn op(layout: &ModeLayout, m: &DMatrix<C64>) -> Operator {
    Operator::hermitian(layout, dense_to_sparse(m, 0.0)).unwrap()
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[test]
fn diagonal_hamiltonian() {
    let l = ModeLayout::single("a", 4).unwrap();
    let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(3.0), c(-1.0), c(2.0), c(0.5)]));
    let e = eigensystem(&op(&l, &m)).unwrap();
    assert_eq!(e.eigenvalues(), &[-1.0, 0.5, 2.0, 3.0]);
    assert_eq!(e.label(0), &[1]);
    assert_eq!(e.index_of(&[0]), Some(3));
    assert!(e.orthonormality_residual() < 1e-14);
}

#[test]
fn jaynes_cummings_splitting() {
    let l = ModeLayout::single("a", 2).unwrap();
    let (g, d) = (0.3, 1.1);
    let m = DMatrix::from_row_slice(2, 2, &[c(0.0), c(g), c(g), c(d)]);
    let e = eigensystem(&op(&l, &m)).unwrap();
    assert_abs_diff_eq!(e.eigenvalues()[1] - e.eigenvalues()[0], (d * d + 4.0 * g * g).sqrt(), epsilon = 1e-12);
}

#[test]
fn non_hermitian_rejected() {
    let l = ModeLayout::single("a", 2).unwrap();
    let m = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
    let h = Operator::from_sparse(&l, dense_to_sparse(&m, 0.0)).unwrap();
    assert!(eigensystem(&h).is_err());
}

#[test]
fn polaron_eigenvectors_orthonormal() {
    let p = SystemParams::ipr_preset(-1.5, -10.0);
    let l = ModeLayout::coupler(3, 3, 4, 8).unwrap();
    let d = DisplacementSet::from_alpha0(&p, C64::new(2.0, 0.0), 4).unwrap();
    let s = polaron_spectrum(&p, &l, &d).unwrap();
    assert!(s.hybrid.orthonormality_residual() < 1e-10);
    assert!(s.hybrid.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn decoupled_ipr_is_one() {
    let p = SystemParams { g_1: 0.0, g_2: 0.0, ..SystemParams::ipr_preset(-1.5, -10.0) };
    let l = ModeLayout::coupler(3, 3, 4, 8).unwrap();
    let d = DisplacementSet::from_alpha0(&p, C64::new(1.5, 0.0), 4).unwrap();
    let s = polaron_spectrum(&p, &l, &d).unwrap();
    for b in 0..l.dim() {
        assert_abs_diff_eq!(ipr_at(&s, b).unwrap(), 1.0, epsilon = 1e-12);
    }
    assert!(zz_shift(&s).unwrap().abs() <= 1e-10 * p.k_b.abs());
    let r = coupling_bound_check(&s, [0.0, 0.0], [mhz(7.0), mhz(14.0)]).unwrap();
    assert_eq!((r.bound, r.chi12_normalized, r.flagged), (0.0, 0.0, false));
}

#[test]
fn equal_mixing_halves_ipr() {
    let l = ModeLayout::single("a", 2).unwrap();
    let bare = op(&l, &DMatrix::from_row_slice(2, 2, &[c(0.0), c(0.0), c(0.0), c(0.0)]));
    let h = op(&l, &DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]));
    let s = Spectrum::new(&bare, &h).unwrap();
    assert_abs_diff_eq!(ipr(&s, &[0]).unwrap(), 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(ipr(&s, &[1]).unwrap(), 0.5, epsilon = 1e-12);
    // Both bare states tie for both hybrids; the assignment keeps them distinct.
    assert_ne!(s.matching.mu_star(0), s.matching.mu_star(1));
}

#[test]
fn undriven_ipr_near_dispersive_estimate() {
    let p = SystemParams::ipr_preset(-1.5, 0.0);
    let l = ModeLayout::coupler(3, 3, 4, 8).unwrap();
    let d = DisplacementSet::from_alpha0(&p, C64::default(), 4).unwrap();
    let s = polaron_spectrum(&p, &l, &d).unwrap();
    let v = 1.0 - ipr(&s, &qubit_label(&l, 1, 0)).unwrap();
    let dispersive = 2.0 * (2.0f64 / 7.0).powi(2);
    assert_abs_diff_eq!(dispersive, 0.1633, epsilon = 1e-4);
    // Exact two-level value 2g²/(Δ² + 4g²) sits below the dispersive estimate.
    assert!((v - 8.0 / 65.0).abs() < 0.01, "{v}");
    let r = coupling_bound_check(&s, [p.g_1, p.g_2], [mhz(7.0), mhz(14.0)]).unwrap();
    assert!((r.bound / (2f64.sqrt() * 2.0 / 7.0) - 1.0).abs() < 0.2);
    assert!(!r.flagged);
}

#[test]
fn zz_at_zero_drive() {
    let p = SystemParams::ipr_preset(-1.5, 0.0);
    let l = ModeLayout::coupler(3, 3, 4, 8).unwrap();
    let d = DisplacementSet::from_alpha0(&p, C64::default(), 4).unwrap();
    let chi = zz_shift(&polaron_spectrum(&p, &l, &d).unwrap()).unwrap();
    // Frozen from this diagonalization; the fourth-order estimate is 5.83 kHz.
    assert!((to_mhz(chi) * 1e3 - 5.661).abs() < 0.01, "{}", to_mhz(chi) * 1e3);
}

#[test]
fn dephasing_rate_forms() {
    let p = SystemParams { kappa: mhz(0.1), ..SystemParams::ipr_preset(-1.5, -10.0) };
    let l = ModeLayout::coupler(3, 3, 4, 8).unwrap();
    let d = DisplacementSet::from_alpha0(&p, C64::new(2.0, 0.0), 4).unwrap();
    let s = polaron_spectrum(&p, &l, &d).unwrap();
    let g1 = qubit_dephasing_rate(&s, p.kappa, d.alpha_bar(), 1).unwrap();
    assert!(g1 > 0.0 && g1 < p.kappa);
    let p0 = SystemParams { g_1: 0.0, ..p };
    let s0 = polaron_spectrum(&p0, &l, &d).unwrap();
    assert_eq!(qubit_dephasing_rate(&s0, p.kappa, d.alpha_bar(), 1).unwrap(), 0.0);
    assert!(qubit_dephasing_rate(&s, 0.0, d.alpha_bar(), 1).is_err());
}

#[test]
fn truncation_convergence() {
    let p = SystemParams::ipr_preset(-1.5, -1.0e4);
    let l = ModeLayout::coupler(3, 3, 4, 8).unwrap();
    let d = DisplacementSet::from_alpha0(&p, C64::new(2.0, 0.0), 4).unwrap();
    let label = qubit_label(&l, 1, 0);
    let c = ipr_convergence(&p, &l, &d, &label).unwrap();
    assert!(c.converged, "{c:?}");

    // A weakly anharmonic NLR at large photon number needs more levels than the default.
    let p = SystemParams::ipr_preset(-1.5, 0.0);
    let d = DisplacementSet::from_alpha0(&p, C64::new(8f64.sqrt(), 0.0), 4).unwrap();
    assert!(!ipr_convergence(&p, &l, &d, &label).unwrap().converged);
    let (s, c) = converged_polaron_spectrum(&p, &l, &d, &[label.clone()], 60).unwrap();
    assert!(c.converged);
    assert!(s.bare.layout().dims()[3] > 8);
}

#[test]
fn labels_pad_missing_modes() {
    let l = ModeLayout::coupler(3, 3, 4, 8).unwrap();
    assert_eq!(qubit_label(&l, 1, 1), vec![1, 1, 0, 0]);
    let l = ModeLayout::bus_nlr(2, 4).unwrap();
    assert_eq!(qubit_label(&l, 1, 0), vec![0, 0]);
}
