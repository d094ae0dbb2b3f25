//! Lab-frame qubit/bus/NLR Hamiltonian with the displaced NLR self-Kerr.

use std::sync::Arc;

use super::{DisplacementSet, DriveEnvelope, SystemParams};
use crate::hilbert::{
    annihilate, constant, create, number, projector, Coefficient, ModeLayout, Operator, TdOperator, BUS, NLR, Q1, Q2,
};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Frame {
    /// All modes at their bare frequencies; the drive carries `e^{−iω_d t}`.
    Lab,
    /// NLR rotating at `ω_d`, so `ω_r → δ` and the drive phase factors drop out.
    DriveRotating,
}

/// `a†²a² = n(n − 1)`.
pub(super) fn kerr_op(layout: &ModeLayout, mode: &str) -> Result<Operator> {
    let n = number(layout, mode)?;
    let nm1 = n.sub(&Operator::identity(layout))?;
    n.mul(&nm1)?.into_hermitian()
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Assembles `H(t)`. Qubit modes absent from `layout` are skipped, which is only
/// allowed when their coupling vanishes. `displacements` must cover every bus level
/// when `K_r ≠ 0`.
pub fn build_lab_hamiltonian(
    params: &SystemParams,
    layout: &ModeLayout,
    envelope: &DriveEnvelope,
    displacements: Option<&DisplacementSet>,
    frame: Frame,
) -> Result<TdOperator> {
    params.validate()?;
    let mut h = TdOperator::new(layout);
    let b = annihilate(layout, BUS)?;
    let nb = number(layout, BUS)?;
    let nr = number(layout, NLR)?;
    let r = annihilate(layout, NLR)?;

    for (j, label) in [(1, Q1), (2, Q2)] {
        if !layout.has(label) {
            if params.g(j) != 0.0 {
                return Err(Error::Invalid(format!("g_{j} is nonzero but mode {label} is not in the layout")));
            }
            continue;
        }
        h.add_static(number(layout, label)?.scale(real(params.omega_q(j))))?;
        h.add_static(kerr_op(layout, label)?.scale(real(params.k_q(j) / 2.0)))?;
        let coupling = create(layout, label)?.mul(&b)?;
        h.add_hermitian_pair(coupling, constant(real(params.g(j))))?;
    }
    h.add_static(nb.scale(real(params.omega_b)))?;
    h.add_static(kerr_op(layout, BUS)?.scale(real(params.k_b / 2.0)))?;
    let omega_nlr = match frame {
        Frame::Lab => params.omega_r,
        Frame::DriveRotating => params.delta(),
    };
    h.add_static(nr.scale(real(omega_nlr)))?;
    h.add_static(nb.mul(&nr)?.scale(real(params.chi)))?;

    let omega_d = params.omega_d;
    let rotation = move |t: f64| match frame {
        Frame::Lab => C64::from_polar(1.0, -omega_d * t),
        Frame::DriveRotating => C64::new(1.0, 0.0),
    };
    let env = Arc::new(envelope.clone());
    h.add_hermitian_pair(r.adjoint(), Coefficient::func(move |t| -env.eval(t) * rotation(t)))?;
    h.add_breakpoints(&envelope.breakpoints());

    if params.k_r != 0.0 {
        let disp = displacements.ok_or_else(|| {
            Error::Invalid("displaced NLR self-Kerr needs displacement trajectories when K_r != 0".into())
        })?;
        let n_bus = layout.dim_of(BUS)?;
        if disp.n_levels() < n_bus {
            return Err(Error::Invalid(format!(
                "displacements cover {} bus levels, layout has {n_bus}",
                disp.n_levels()
            )));
        }
        add_displaced_kerr(&mut h, params.k_r, layout, Arc::new(disp.clone()), rotation)?;
    }

    let probe = h.at(envelope.tau().min(1e-6) * 0.37);
    let dev = probe.anti_hermitian_norm();
    if dev > 1e-10 * probe.max_abs().max(1.0) {
        return Err(Error::NotHermitian(dev));
    }
    Ok(h)
}

/// `(K_r/2) Σₙ |n⟩⟨n| ⊗ (r† − aₙ*)²(r − aₙ)²` with `aₙ(t) = αₙ(t)·rotation(t)`, expanded
/// into normally ordered monomials.
fn add_displaced_kerr(
    h: &mut TdOperator,
    k_r: f64,
    layout: &ModeLayout,
    disp: Arc<DisplacementSet>,
    rotation: impl Fn(f64) -> C64 + Copy + Send + Sync + 'static,
) -> Result<()> {
    let r = annihilate(layout, NLR)?;
    let rd = r.adjoint();
    let nr = number(layout, NLR)?;
    let rd2 = rd.mul(&rd)?;
    let rd2r = rd2.mul(&r)?;
    h.add_static(kerr_op(layout, NLR)?.scale(real(k_r / 2.0)))?;
    let half = k_r / 2.0;
    for n in 0..layout.dim_of(BUS)? {
        let p = projector(layout, BUS, n)?;
        let a = {
            let disp = disp.clone();
            move |t: f64| disp.alpha_at(n, t) * rotation(t)
        };
        let c1 = a.clone();
        h.add_hermitian_pair(p.mul(&rd2r)?, Coefficient::func(move |t| c1(t) * (-2.0 * half)))?;
        let c2 = a.clone();
        h.add_hermitian_pair(p.mul(&rd2)?, Coefficient::func(move |t| c2(t) * c2(t) * half))?;
        let c3 = a.clone();
        h.add_hermitian_pair(p.mul(&rd)?, Coefficient::func(move |t| c3(t) * (-2.0 * half * c3(t).norm_sqr())))?;
        let c4 = a.clone();
        h.add(p.mul(&nr)?, Coefficient::func(move |t| real(4.0 * half * c4(t).norm_sqr())))?;
        h.add(p, Coefficient::func(move |t| real(half * a(t).norm_sqr().powi(2))))?;
    }
    Ok(())
}
