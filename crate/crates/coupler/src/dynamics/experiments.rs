//! Bus Rabi and bus dephasing experiments with qubits removed.
//!
//! Both run in the frame where the NLR rotates at the drive frequency and the bus at
//! the ac-Stark shifted frequency `ω̃_b`.

use super::{evolve, fit_exponential_decay, pure_state, FitOptions, Trajectory, TwoLevelFit};
use crate::hilbert::{annihilate, coherent_amplitudes, constant, number, Coefficient, ModeLayout, Operator, BUS, NLR};
use crate::model::{build_lab_hamiltonian, build_polaron_model, tqd_envelope, BaseRamp, DisplacementSet, Frame, SystemParams};
use crate::ode::OdeOptions;
use crate::{Error, Result, C64};

/// `ω̃_b = ω_b + [δ(δ + χ) − (κ/2)²]|ᾱ|²/χ`.
pub fn rabi_drive_frequency(params: &SystemParams, alpha_bar: C64) -> f64 {
    if params.chi == 0.0 {
        return params.omega_b;
    }
    let d = params.delta();
    let k = params.kappa / 2.0;
    params.omega_b + (d * (d + params.chi) - k * k) * alpha_bar.norm_sqr() / params.chi
}

/// Bus and NLR layout with the lab-frame NLR headroom `⌈|α|² + 6|α| + 10⌉` for the
/// largest steady displacement among the retained bus levels.
pub fn rabi_layout(disp: &DisplacementSet, bus_dim: usize) -> Result<ModeLayout> {
    let a = disp.steady_values().iter().take(bus_dim).map(|v| v.norm()).fold(0.0, f64::max);
    ModeLayout::bus_nlr(bus_dim, (a * a + 6.0 * a + 10.0).ceil() as usize)
}

/// Inputs shared by the Rabi and dephasing experiments.
#[derive(Clone, Debug)]
pub struct RabiSetup {
    pub params: SystemParams,
    /// Bus drive amplitude `Ω` of `Ω(b e^{iω̃_b t} + h.c.)`.
    pub omega: f64,
    /// Target `|ᾱ₀|²`; the plateau drive is chosen so that `ᾱ₀` is real and positive.
    pub alpha0_sq: f64,
    /// TQD ramp duration.
    pub tau: f64,
    /// Observation window after the ramp.
    pub t_max: f64,
    pub n_samples: usize,
    /// Two bus levels suffice when `|Ω/K_b| ≪ 1`.
    pub bus_dim: usize,
    /// NLR truncation; `None` applies the lab-frame headroom rule.
    pub r_dim: Option<usize>,
    pub ode: OdeOptions,
}

impl RabiSetup {
    pub fn new(params: SystemParams, omega: f64, alpha0_sq: f64, tau: f64, t_max: f64) -> Self {
        Self {
            params,
            omega,
            alpha0_sq,
            tau,
            t_max,
            n_samples: 400,
            bus_dim: 2,
            r_dim: None,
            ode: OdeOptions::default(),
        }
    }

    fn check(&self) -> Result<()> {
        self.params.validate()?;
        if self.params.g_1 != 0.0 || self.params.g_2 != 0.0 {
            return Err(Error::Invalid("the bus experiments require decoupled qubits (g_1 = g_2 = 0)".into()));
        }
        if !(self.alpha0_sq >= 0.0 && self.tau > 0.0 && self.t_max > 0.0) || self.n_samples < 8 {
            return Err(Error::Invalid("need alpha0_sq >= 0, tau > 0, t_max > 0 and at least 8 samples".into()));
        }
        Ok(())
    }

    pub fn displacements(&self) -> Result<DisplacementSet> {
        DisplacementSet::from_alpha0(&self.params, C64::new(self.alpha0_sq.sqrt(), 0.0), self.bus_dim.max(2))
    }

    pub fn layout(&self) -> Result<ModeLayout> {
        let disp = self.displacements()?;
        match self.r_dim {
            Some(r) => ModeLayout::bus_nlr(self.bus_dim, r),
            None => rabi_layout(&disp, self.bus_dim),
        }
    }

    /// Advisory messages: `|Ω/δ|` should be small so drive-induced NLR excitations stay off resonance.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let d = self.params.delta();
        if d != 0.0 && (self.omega / d).abs() > 0.3 {
            out.push(format!("|Omega/delta| = {:.3} is not small", (self.omega / d).abs()));
        }
        out
    }

    fn samples(&self, start: f64) -> Vec<f64> {
        let n = self.n_samples;
        (0..n).map(|k| start + self.t_max * k as f64 / (n - 1) as f64).collect()
    }
}

fn bus_observables(layout: &ModeLayout) -> Result<Vec<(String, Operator)>> {
    Ok(vec![
        ("n_b".to_string(), number(layout, BUS)?),
        ("b".to_string(), annihilate(layout, BUS)?),
        ("n_r".to_string(), number(layout, NLR)?),
    ])
}

fn vacuum(layout: &ModeLayout) -> nalgebra::DMatrix<C64> {
    let mut psi = vec![C64::default(); layout.dim()];
    psi[0] = C64::new(1.0, 0.0);
    pure_state(&psi)
}

/// Drops the leading samples that only anchor the integration start.
fn strip(mut tr: Trajectory, n: usize) -> Trajectory {
    tr.t.drain(..n);
    for (_, s) in &mut tr.expectations {
        s.drain(..n);
    }
    tr
}

/// TQD ramp from vacuum, then the resonant bus drive from `t = τ` to `τ + t_max`.
/// Samples start at `t = τ` and carry `n_b`, `b` and `n_r`.
pub fn rabi_experiment(setup: &RabiSetup) -> Result<Trajectory> {
    setup.check()?;
    let p = &setup.params;
    let disp = setup.displacements()?;
    let layout = setup.layout()?;
    let eps0 = disp.steady_value(0) * p.lambda_n(0);
    let env = tqd_envelope(BaseRamp::raised_cosine(eps0, setup.tau)?, p, f64::INFINITY)?;
    let mut h = build_lab_hamiltonian(p, &layout, &env, None, Frame::DriveRotating)?;
    let nb = number(&layout, BUS)?;
    h.add_static(nb.scale(C64::new(-rabi_drive_frequency(p, disp.alpha_bar()), 0.0)))?;
    let (omega, tau) = (setup.omega, setup.tau);
    let drive = Coefficient::func(move |t| C64::new(if t >= tau { omega } else { 0.0 }, 0.0));
    h.add_hermitian_pair(annihilate(&layout, BUS)?, drive)?;
    h.add_breakpoints(&[tau]);

    let collapse = vec![annihilate(&layout, NLR)?.scale(C64::new(p.kappa.sqrt(), 0.0))];
    let mut grid = vec![0.0];
    grid.extend(setup.samples(tau));
    let tr = evolve(&h, &collapse, &vacuum(&layout), &grid, &bus_observables(&layout)?, &setup.ode)?;
    Ok(strip(tr, 1))
}

/// The same drive in the polaron frame, starting from the ideal post-ramp state
/// (bus vacuum, NLR in `|ᾱ₀⟩`), with the rotating-wave collapse set and NLR dimension
/// `r_dim` (8 when unset). Samples run from 0 to `t_max`.
pub fn polaron_rabi_experiment(setup: &RabiSetup) -> Result<Trajectory> {
    setup.check()?;
    let p = &setup.params;
    let disp = setup.displacements()?;
    let layout = ModeLayout::bus_nlr(setup.bus_dim, setup.r_dim.unwrap_or(8))?;
    let model = build_polaron_model(p, &layout, &disp, None)?;
    let mut h = model.hamiltonian().clone();
    h.add_hermitian_pair(model.bus_lowering().clone(), constant(C64::new(setup.omega, 0.0)))?;
    let tr = evolve(
        &h,
        model.collapse_rwa(),
        &vacuum(&layout),
        &setup.samples(0.0),
        &bus_observables(&layout)?,
        &setup.ode,
    )?;
    Ok(tr)
}

/// Bus coherence under the steady NLR drive, starting from
/// `(|0⟩|ᾱ₀⟩ + |1⟩|ᾱ₁⟩)/√2`: the superposition reached after an ideal ramp.
/// Samples run from 0 to `t_max` and carry `n_b`, `b` and `n_r`.
pub fn dephasing_trace(setup: &RabiSetup) -> Result<Trajectory> {
    setup.check()?;
    let p = &setup.params;
    let disp = setup.displacements()?;
    let layout = setup.layout()?;
    let r_dim = layout.dim_of(NLR)?;
    let eps0 = disp.steady_value(0) * p.lambda_n(0);
    let env = crate::model::DriveEnvelope::constant(eps0);
    let mut h = build_lab_hamiltonian(p, &layout, &env, None, Frame::DriveRotating)?;
    let nb = number(&layout, BUS)?;
    h.add_static(nb.scale(C64::new(-rabi_drive_frequency(p, disp.alpha_bar()), 0.0)))?;

    let mut psi = vec![C64::default(); layout.dim()];
    for (n, a) in disp.steady_values().iter().take(2).enumerate() {
        for (k, c) in coherent_amplitudes(r_dim, *a).into_iter().enumerate() {
            psi[layout.flat_index(&[n, k])?] = c;
        }
    }
    let norm = psi.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    psi.iter_mut().for_each(|v| *v /= norm);

    let collapse = vec![annihilate(&layout, NLR)?.scale(C64::new(p.kappa.sqrt(), 0.0))];
    evolve(&h, &collapse, &pure_state(&psi), &setup.samples(0.0), &bus_observables(&layout)?, &setup.ode)
}

/// Fitted decay time of `|⟨0|ρ_b|1⟩|`, returned as `t2_eff`.
pub fn dephasing_experiment(setup: &RabiSetup, fit: &FitOptions) -> Result<TwoLevelFit> {
    if !(setup.params.kappa > 0.0) {
        return Err(Error::Invalid("dephasing experiment needs kappa > 0".into()));
    }
    let tr = dephasing_trace(setup)?;
    let coherence: Vec<f64> = tr.series("b")?.iter().map(|v| v.norm()).collect();
    fit_exponential_decay(&tr.t, &coherence, fit)
}
