//! Polaron frame: the NLR displaced by `αₙ` conditioned on bus level `n`.
//!
//! In this frame the bus ladder carries the overlaps `D(α_{n+1} − αₙ)`, which is
//! what suppresses qubit-bus exchange. The frame also rotates qubits and bus at
//! `ω_b + Δ_ac`, so the qubit detunings are `Δ̃ⱼ = ωⱼ − ω_b − Δ_ac`.

use super::lab::kerr_op;
use super::{DisplacementSet, PamParams, SystemParams};
use crate::hilbert::{
    annihilate, constant, create, displacement_block, embed, number, projector, transition, Coefficient,
    ModeLayout, Operator, TdOperator, BUS, NLR, Q1, Q2,
};
use crate::{Error, Result, C64};

/// Polaron-frame Hamiltonian pieces and the quantities that define them.
#[derive(Clone, Debug)]
pub struct PolaronModel {
    layout: ModeLayout,
    hamiltonian: TdOperator,
    h_kappa: Operator,
    bus_lowering: Operator,
    collapse_rwa: Vec<Operator>,
    collapse_full: Vec<Operator>,
    lb_two_level: Operator,
    detunings: [f64; 2],
    kb_tilde: f64,
    delta_ac: f64,
    delta_ac_levels: Vec<f64>,
    phases: Vec<f64>,
    alphas: Vec<C64>,
    frame_frequency: f64,
    energy_offset: f64,
    pam: Option<PamParams>,
}

impl PolaronModel {
    pub fn layout(&self) -> &ModeLayout {
        &self.layout
    }

    /// `Ĥ^P − Ĥ_κ^P`; time dependent only when PAM is on.
    pub fn hamiltonian(&self) -> &TdOperator {
        &self.hamiltonian
    }

    /// The static Hamiltonian without `Ĥ_κ^P`. Fails for PAM models.
    pub fn static_hamiltonian(&self) -> Result<Operator> {
        if self.pam.is_some() {
            return Err(Error::Invalid("PAM polaron Hamiltonian is time dependent".into()));
        }
        self.hamiltonian.at(0.0).into_hermitian()
    }

    /// `Ĥ_κ^P = (iκ/2) Σₙ (αₙ r† − αₙ* r)|n⟩⟨n|`.
    pub fn h_kappa(&self) -> &Operator {
        &self.h_kappa
    }

    /// Full `Ĥ^P` including `Ĥ_κ^P`.
    pub fn hamiltonian_with_kappa(&self) -> Result<TdOperator> {
        let mut h = self.hamiltonian.clone();
        h.add_static(self.h_kappa.clone())?;
        Ok(h)
    }

    /// Transformed bus lowering operator `Σₙ √(n+1) e^{−iφₙ} |n⟩⟨n+1| ⊗ D(α_{n+1} − αₙ)`.
    pub fn bus_lowering(&self) -> &Operator {
        &self.bus_lowering
    }

    /// `{√κ r, √κ Σₙ ᾱₙ|n⟩⟨n|}`.
    pub fn collapse_rwa(&self) -> &[Operator] {
        &self.collapse_rwa
    }

    /// `{√κ (r + Σₙ ᾱₙ|n⟩⟨n|)}`.
    pub fn collapse_full(&self) -> &[Operator] {
        &self.collapse_full
    }

    /// `√(κ|ᾱ|²/4)(|1⟩⟨1| − |0⟩⟨0|)` on the bus.
    pub fn lb_two_level(&self) -> &Operator {
        &self.lb_two_level
    }

    /// `[Δ̃₁, Δ̃₂]`, time averaged under PAM.
    pub fn detunings(&self) -> [f64; 2] {
        self.detunings
    }

    pub fn kb_tilde(&self) -> f64 {
        self.kb_tilde
    }

    /// `Δ_ac = δ|ᾱ₀|² − (δ+χ)|ᾱ₁|²`, without the PAM correction.
    pub fn delta_ac(&self) -> f64 {
        self.delta_ac
    }

    /// Bus-level energies `Δ_ac,n` added on top of `K_b/2 b†²b²`.
    pub fn delta_ac_levels(&self) -> &[f64] {
        &self.delta_ac_levels
    }

    /// Static phases `φₙ = Im(ᾱ_{n+1}* ᾱₙ)`.
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn alphas(&self) -> &[C64] {
        &self.alphas
    }

    /// Rotation frequency `ω_b + Δ_ac` of qubits and bus relative to the lab frame.
    pub fn frame_frequency(&self) -> f64 {
        self.frame_frequency
    }

    /// Constant `−δ|ᾱ₀|²` dropped from the transformed Hamiltonian.
    pub fn energy_offset(&self) -> f64 {
        self.energy_offset
    }

    pub fn pam(&self) -> Option<PamParams> {
        self.pam
    }
}

/// `ᾱₙ − iλ cos(ω_m t)/ᾱ*` for every level.
pub fn pam_steady_modulation(displacements: &DisplacementSet, pam: &PamParams, t: f64) -> Result<Vec<C64>> {
    let abar = displacements.alpha_bar();
    if abar.norm() == 0.0 {
        return Err(Error::Invalid("PAM modulation needs a nonzero alpha_bar".into()));
    }
    let shift = -C64::i() * pam.lambda * (pam.omega_m * t).cos() / abar.conj();
    Ok(displacements.steady_values().iter().map(|a| a + shift).collect())
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Builds the polaron-frame model from the steady displacements. With `pam`, the
/// ladder phases follow the modulated `αₙ(t)` and carry the closed-form integral of
/// the oscillating part of `Δ̃ⱼ`; qubit and bus energies use their time averages.
pub fn build_polaron_model(
    params: &SystemParams,
    layout: &ModeLayout,
    displacements: &DisplacementSet,
    pam: Option<PamParams>,
) -> Result<PolaronModel> {
    params.validate()?;
    let n_bus = layout.dim_of(BUS)?;
    let dim_r = layout.dim_of(NLR)?;
    if displacements.n_levels() < n_bus {
        return Err(Error::Invalid(format!(
            "displacements cover {} bus levels but the bus truncation is {n_bus}",
            displacements.n_levels()
        )));
    }
    let alphas: Vec<C64> = displacements.steady_values()[..n_bus].to_vec();
    let abar = displacements.alpha_bar();
    let delta = params.delta();
    let chi = params.chi;

    let pam_sq = match pam {
        Some(p) => {
            if abar.norm() == 0.0 {
                return Err(Error::Invalid("PAM needs a nonzero alpha_bar".into()));
            }
            p.lambda * p.lambda / (2.0 * abar.norm_sqr())
        }
        None => 0.0,
    };
    // Time-averaged |αₙ|²: the modulation adds λ²/(2|ᾱ|²) to every level.
    let msq = |n: usize| alphas[n].norm_sqr() + pam_sq;
    let lvl = |n: usize| delta + n as f64 * chi;
    let delta_ac = delta * alphas[0].norm_sqr() - lvl(1) * alphas[1].norm_sqr();
    let delta_ac_avg = delta * msq(0) - lvl(1) * msq(1);
    let delta_ac_levels: Vec<f64> =
        (0..n_bus).map(|n| delta * msq(0) - lvl(n) * msq(n) - n as f64 * delta_ac_avg).collect();
    // K̃_b needs ᾱ₂ even when the bus is truncated to two levels.
    let alpha2 = match displacements.steady_values().get(2) {
        Some(a) => *a,
        None => params.lambda_n(0) * alphas[0] / params.lambda_n(2),
    };
    let kb_tilde = params.k_b - delta * alphas[0].norm_sqr() + 2.0 * lvl(1) * alphas[1].norm_sqr()
        - lvl(2) * alpha2.norm_sqr();
    let detunings = [
        params.omega_1 - params.omega_b - delta_ac_avg,
        params.omega_2 - params.omega_b - delta_ac_avg,
    ];
    let phases: Vec<f64> = (0..n_bus.saturating_sub(1)).map(|n| (alphas[n + 1].conj() * alphas[n]).im).collect();

    let mut h = TdOperator::new(layout);
    let nb = number(layout, BUS)?;
    let nr = number(layout, NLR)?;
    let r = annihilate(layout, NLR)?;

    h.add_static(nr.scale(real(delta)))?;
    h.add_static(nb.mul(&nr)?.scale(real(chi)))?;
    h.add_static(kerr_op(layout, BUS)?.scale(real(params.k_b / 2.0)))?;
    h.add_static(kerr_op(layout, NLR)?.scale(real(params.k_r / 2.0)))?;
    let projectors: Vec<Operator> = (0..n_bus).map(|n| projector(layout, BUS, n)).collect::<Result<_>>()?;
    for (p, e) in projectors.iter().zip(&delta_ac_levels) {
        h.add_static(p.scale(real(*e)))?;
    }

    // Ladder pieces √(n+1)|n⟩⟨n+1| ⊗ D(α_{n+1} − αₙ), phase applied separately.
    let mut ladder = Vec::with_capacity(n_bus.saturating_sub(1));
    for n in 0..n_bus.saturating_sub(1) {
        let d = displacement_block(dim_r, alphas[n + 1] - alphas[n])?;
        let step = transition(layout, BUS, n, n + 1)?.scale(real(((n + 1) as f64).sqrt()));
        ladder.push(step.mul(&embed(layout, NLR, &d)?)?);
    }
    let bus_lowering = {
        let mut acc = Operator::zero(layout).unflagged();
        for (n, op) in ladder.iter().enumerate() {
            acc = acc.add(&op.scale(C64::from_polar(1.0, -phases[n])))?;
        }
        acc
    };

    let phase_integral = pam.map(|p| {
        let im_ratio = (alphas[1] / abar).im;
        let a1 = -2.0 * chi * p.lambda * im_ratio / p.omega_m;
        let a2 = chi * pam_sq / (2.0 * p.omega_m);
        move |t: f64| a1 * (p.omega_m * t).sin() + a2 * (2.0 * p.omega_m * t).sin()
    });

    for (j, label) in [(1usize, Q1), (2, Q2)] {
        if !layout.has(label) {
            if params.g(j) != 0.0 {
                return Err(Error::Invalid(format!("g_{j} is nonzero but mode {label} is not in the layout")));
            }
            continue;
        }
        h.add_static(number(layout, label)?.scale(real(detunings[j - 1])))?;
        h.add_static(kerr_op(layout, label)?.scale(real(params.k_q(j) / 2.0)))?;
        let g = params.g(j);
        if g == 0.0 {
            continue;
        }
        let qd = create(layout, label)?;
        match (pam, phase_integral) {
            (Some(p), Some(integral)) => {
                for (n, op) in ladder.iter().enumerate() {
                    let disp = displacements.clone();
                    let coeff = Coefficient::func(move |t| {
                        let a = pam_steady_modulation(&disp, &p, t).expect("alpha_bar checked nonzero");
                        let phi = (a[n + 1].conj() * a[n]).im;
                        C64::from_polar(g, integral(t) - phi)
                    });
                    h.add_hermitian_pair(qd.mul(op)?, coeff)?;
                }
            }
            _ => h.add_hermitian_pair(qd.mul(&bus_lowering)?, constant(real(g)))?,
        }
    }

    let sum_alpha_p = {
        let mut acc = Operator::zero(layout).unflagged();
        for (p, a) in projectors.iter().zip(&alphas) {
            acc = acc.add(&p.scale(*a))?;
        }
        acc
    };
    let h_kappa = {
        let mut acc = Operator::zero(layout).unflagged();
        for (p, a) in projectors.iter().zip(&alphas) {
            let piece = p.mul(&r.adjoint())?.scale(C64::i() * params.kappa / 2.0 * a);
            acc = acc.add(&piece.plus_adjoint())?;
        }
        acc.into_hermitian()?
    };
    let sk = real(params.kappa.sqrt());
    let collapse_rwa = vec![r.scale(sk), sum_alpha_p.scale(sk)];
    let collapse_full = vec![r.add(&sum_alpha_p)?.scale(sk)];
    let lb_two_level = {
        let amp = (params.kappa * abar.norm_sqr() / 4.0).sqrt();
        let diff = if n_bus > 1 { projectors[1].sub(&projectors[0])? } else { projectors[0].scale(real(-1.0)) };
        diff.scale(real(amp))
    };

    Ok(PolaronModel {
        layout: layout.clone(),
        hamiltonian: h,
        h_kappa,
        bus_lowering,
        collapse_rwa,
        collapse_full,
        lb_two_level,
        detunings,
        kb_tilde,
        delta_ac,
        delta_ac_levels,
        phases,
        alphas,
        frame_frequency: params.omega_b + delta_ac,
        energy_offset: -delta * displacements.steady_value(0).norm_sqr(),
        pam,
    })
}
