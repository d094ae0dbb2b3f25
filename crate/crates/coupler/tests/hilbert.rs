mod common;

use approx::assert_abs_diff_eq;
use common::displacement_element;
use coupler::hilbert::*;
use coupler::C64;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[test]
fn layout_indexing() {
    let l = ModeLayout::coupler(2, 3, 4, 5).unwrap();
    assert_eq!(l.dim(), 120);
    assert_eq!(l.index_of(NLR).unwrap(), 3);
    let idx = l.flat_index(&[1, 2, 3, 4]).unwrap();
    assert_eq!(l.levels(idx), vec![1, 2, 3, 4]);
    // Resonator fastest.
    assert_eq!(l.flat_index(&[0, 0, 0, 1]).unwrap(), 1);
    assert!(l.flat_index(&[2, 0, 0, 0]).is_err());
    assert!(l.index_of("x").is_err());
    assert!(ModeLayout::coupler(1, 3, 4, 5).is_err());
    assert!(ModeLayout::new(&[("a", 2), ("a", 3)]).is_err());
}

#[test]
fn two_level_ladder_and_number() {
    let l = ModeLayout::single("a", 2).unwrap();
    let a = annihilate(&l, "a").unwrap().to_dense();
    assert_eq!(a[(0, 1)], c(1.0));
    assert_eq!(a[(0, 0)] + a[(1, 0)] + a[(1, 1)], c(0.0));
    let l = ModeLayout::single("a", 3).unwrap();
    let n = number(&l, "a").unwrap();
    assert_eq!(n.diagonal(), vec![c(0.0), c(1.0), c(2.0)]);
    assert_eq!(n.nnz(), 2);
}

#[test]
fn canonical_commutator_below_truncation() {
    let l = ModeLayout::single("a", 40).unwrap();
    let a = annihilate(&l, "a").unwrap();
    let ad = create(&l, "a").unwrap();
    let comm = a.mul(&ad).unwrap().sub(&ad.mul(&a).unwrap()).unwrap().to_dense();
    for i in 0..39 {
        for j in 0..39 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(comm[(i, j)].re, want, epsilon = 1e-12);
        }
    }
}

#[test]
fn displacement_closed_forms() {
    assert_eq!(displacement_matrix(10, C64::default()).unwrap(), nalgebra::DMatrix::identity(10, 10));
    let d = displacement_matrix(20, c(1.0)).unwrap();
    assert_abs_diff_eq!(d[(0, 0)].re, (-0.5f64).exp(), epsilon = 1e-10);
    assert_abs_diff_eq!(0.60653, (-0.5f64).exp(), epsilon = 1e-5);
    let alpha = C64::new(0.5, 0.5);
    let d = displacement_matrix(20, alpha).unwrap();
    let want = alpha * (-alpha.norm_sqr() / 2.0).exp();
    assert_abs_diff_eq!((d[(1, 0)] - want).norm(), 0.0, epsilon = 1e-10);
}

#[test]
fn displacement_block_matches_laguerre_form() {
    let alpha = C64::new(-1.3, 2.1);
    let m = displacement_block(30, alpha).unwrap();
    for r in 0..30 {
        for k in 0..30 {
            assert_abs_diff_eq!((m[(r, k)] - displacement_element(r, k, alpha)).norm(), 0.0, epsilon = 1e-9);
        }
    }
}

#[test]
fn displacement_inverse_on_low_block() {
    let dim = 40;
    let alpha = C64::new(1.2, -0.7);
    let d = displacement_matrix(dim, alpha).unwrap();
    let dm = displacement_matrix(dim, -alpha).unwrap();
    let keep = dim - (4.0 * alpha.norm_sqr()).ceil() as usize;
    let prod = &d * &dm;
    let dd = d.adjoint() * &d;
    for i in 0..keep {
        for j in 0..keep {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((prod[(i, j)] - c(want)).norm() < 1e-8);
            assert!((dd[(i, j)] - c(want)).norm() < 1e-8);
        }
    }
}

#[test]
fn projectors() {
    let l = ModeLayout::new(&[("q1", 2), ("q2", 2), ("b", 3), ("r", 4)]).unwrap();
    let p = projector(&l, BUS, 1).unwrap();
    assert_eq!(p.mul(&p).unwrap().max_abs_diff(&p).unwrap(), 0.0);
    assert_abs_diff_eq!(p.trace().re, 16.0);
    let mut sum = Operator::zero(&l);
    for n in 0..3 {
        sum = sum.add(&projector(&l, BUS, n).unwrap()).unwrap();
    }
    assert_eq!(sum.max_abs_diff(&Operator::identity(&l)).unwrap(), 0.0);
    assert!(projector(&l, BUS, 3).is_err());
}

#[test]
fn compose_and_hermitian_sums() {
    let l = ModeLayout::coupler(2, 2, 3, 5).unwrap();
    let id = Operator::identity(&l);
    assert_eq!(compose(&[&id], &[c(1.0)]).unwrap().max_abs_diff(&id).unwrap(), 0.0);
    let ad = create(&l, NLR).unwrap();
    let a = annihilate(&l, NLR).unwrap();
    let n = mode_operator(&l, NLR, OpKind::Number).unwrap();
    assert!(ad.mul(&a).unwrap().max_abs_diff(&n).unwrap() < 1e-14);
    let h = create(&l, Q1).unwrap().mul(&annihilate(&l, BUS).unwrap()).unwrap().scale(C64::new(0.3, 0.7));
    let herm = h.plus_adjoint();
    assert!(herm.anti_hermitian_norm() < 1e-12);
    assert!(herm.is_hermitian());
}

#[test]
fn transitions_and_layout_mismatch() {
    let l = ModeLayout::single("a", 4).unwrap();
    let t = transition(&l, "a", 3, 1).unwrap();
    assert_eq!(t.get(3, 1), c(1.0));
    assert_eq!(t.nnz(), 1);
    let other = ModeLayout::single("a", 5).unwrap();
    assert!(t.add(&Operator::identity(&other)).is_err());
}

#[test]
fn coherent_amplitudes_normalized() {
    let v = coherent_amplitudes(60, C64::new(2.0, -1.0));
    let norm: f64 = v.iter().map(|x| x.norm_sqr()).sum();
    assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(v[1].re, 2.0 * (-2.5f64).exp(), epsilon = 1e-12);
}

#[test]
fn time_dependent_operator_evaluates_terms() {
    let l = ModeLayout::single("a", 3).unwrap();
    let mut h = TdOperator::new(&l);
    h.add_static(number(&l, "a").unwrap()).unwrap();
    h.add_hermitian_pair(annihilate(&l, "a").unwrap(), Coefficient::func(|t| C64::new(t, 0.0))).unwrap();
    let at = h.at(2.0);
    assert_eq!(at.get(0, 1), c(2.0));
    assert_eq!(at.get(1, 0), c(2.0));
    assert_eq!(at.get(2, 2), c(2.0));
}
