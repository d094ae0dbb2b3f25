//! Closed-form estimates: suppression factors, IPR series, ZZ baseline, dephasing,
//! sweep angle and parameter regimes.

mod ipr;
mod series;
mod special;

pub use ipr::{ipr_kr_infinite, ipr_ld, ipr_pam, ipr_pam_ld, ipr_static, q_ladder, IprState, SwInputs, SwParams};
pub use series::{hyp_pfq_squaredpoles, hyp_pfq_unit_shift};
pub use special::{bessel_j, bessel_j0_first_zero, erf_complex, faddeeva};

use std::f64::consts::PI;

use crate::model::SystemParams;
use crate::{Error, Result, C64};

/// Suppressed Rabi frequency `Ω e^{−|ᾱ|²/2}`.
pub fn rabi_suppression(omega: f64, alpha_bar: C64) -> f64 {
    omega * (-alpha_bar.norm_sqr() / 2.0).exp()
}

/// Dephasing time with the measurement-induced term: `(1/T_φ + κ|ᾱ|²/2)⁻¹`.
pub fn dephasing_suppression(t_phi: f64, kappa: f64, alpha_bar: C64) -> Result<f64> {
    if !(t_phi > 0.0) {
        return Err(Error::Invalid(format!("T_phi must be positive, got {t_phi}")));
    }
    Ok(1.0 / (1.0 / t_phi + kappa * alpha_bar.norm_sqr() / 2.0))
}

/// Fourth-order residual ZZ of the undisplaced-NLR limit:
/// `(1/6)(g₁²/Δ̃₁)(g₂²/Δ̃₂)(1/Δ̃₁ + 1/Δ̃₂)`.
pub fn chi12_ac(inp: &SwInputs) -> Result<f64> {
    let [d1, d2] = inp.detunings;
    if d1 == 0.0 || d2 == 0.0 {
        return Err(Error::Invalid("chi12_ac is undefined at a qubit-bus resonance".into()));
    }
    let [g1, g2] = inp.g;
    Ok((g1 * g1 / d1) * (g2 * g2 / d2) * (1.0 / d1 + 1.0 / d2) / 6.0)
}

/// Warnings for `chi12_ac` when `|Δ̃ⱼ/Kⱼ|` or `|Δ̃ⱼ/K̃_b|` exceeds 0.2.
pub fn chi12_ac_warnings(inp: &SwInputs, k_q: [f64; 2], kb_tilde: f64) -> Vec<String> {
    let mut out = Vec::new();
    for j in 0..2 {
        let d = inp.detunings[j];
        if (d / k_q[j]).abs() > 0.2 {
            out.push(format!("|Delta_{0}/K_{0}| = {1:.3} exceeds 0.2", j + 1, (d / k_q[j]).abs()));
        }
        if (d / kb_tilde).abs() > 0.2 {
            out.push(format!("|Delta_{}/Kb_tilde| = {:.3} exceeds 0.2", j + 1, (d / kb_tilde).abs()));
        }
    }
    out
}

/// Measurement-induced dephasing `(κ|ᾱ|²/2)(1 − IPR)/2`.
pub fn dephasing_estimate(kappa: f64, alpha_bar: C64, one_minus_ipr: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&one_minus_ipr) {
        return Err(Error::Invalid(format!("1 - IPR must lie in [0, 1], got {one_minus_ipr}")));
    }
    Ok(kappa * alpha_bar.norm_sqr() / 2.0 * one_minus_ipr / 2.0)
}

/// First-order Magnus angle of a linear sweep through a qubit-bus resonance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepAngle {
    pub theta: f64,
    /// Slow-sweep limit `|√π λ/√(δν/2)|`.
    pub asymptote: f64,
    /// `Δ₁/(δν)`.
    pub t_crit: f64,
}

/// `θ = |∫₀^{t_crit+τ} λ e^{i∫Δ_λ} dt|` with `Δ_λ(t) = Δ₁ − δνt`, in closed form:
/// `|λ/√(δν/2) (√π/2) [Erf(e^{iπ/4} Δ_λ(t)/(2√(δν/2)))]_{t=0}^{t_crit+τ}|`.
pub fn sweep_angle(coupling: f64, delta1: f64, delta: f64, nu: f64, tau: f64) -> Result<SweepAngle> {
    let rate = delta * nu;
    if !(rate > 0.0) {
        return Err(Error::Invalid("sweep angle needs delta * nu > 0".into()));
    }
    let root = (rate / 2.0).sqrt();
    let t_crit = delta1 / rate;
    let rot = C64::from_polar(1.0, PI / 4.0);
    let arg = |t: f64| rot * ((delta1 - rate * t) / (2.0 * root));
    let diff = erf_complex(arg(t_crit + tau))? - erf_complex(arg(0.0))?;
    let theta = (coupling / root * PI.sqrt() / 2.0 * diff).norm();
    Ok(SweepAngle { theta, asymptote: (PI.sqrt() * coupling / root).abs(), t_crit })
}

/// Recommended sweep-rate window `(|λ|, |2χ²ᾱ₀/δ|)`.
pub fn sweep_window(coupling: f64, chi: f64, alpha0: f64, delta: f64) -> (f64, f64) {
    (coupling.abs(), (2.0 * chi * chi * alpha0 / delta).abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Monotonic,
    Nonmonotonic,
    Invalid,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegimeReport {
    pub regime: Regime,
    pub conditions: Vec<(String, bool)>,
}

/// Sign conditions for monotonic IPR suppression, checked for both qubits.
pub fn classify_regime(params: &SystemParams) -> RegimeReport {
    let delta = params.delta();
    let chi = params.chi;
    let small = chi != 0.0 && (delta / chi).abs() < 0.3;
    let mut conditions = vec![("|delta/chi| < 0.3".to_string(), small)];
    let (mut opposite, mut same, mut chi_ok) = (true, true, true);
    for j in 1..=2 {
        let dq = params.omega_q(j) - params.omega_b;
        let c1 = dq * delta < 0.0;
        let c2 = dq * delta > 0.0;
        let c3 = dq * chi < 0.0;
        conditions.push((format!("(w{j} - wb) delta < 0"), c1));
        conditions.push((format!("(w{j} - wb) chi < 0"), c3));
        opposite &= c1;
        same &= c2;
        chi_ok &= c3;
    }
    let regime = if small && chi_ok && opposite {
        Regime::Monotonic
    } else if small && chi_ok && same {
        Regime::Nonmonotonic
    } else {
        Regime::Invalid
    };
    RegimeReport { regime, conditions }
}

/// Direct qubit-qubit stray coupling estimate `−2g₁₂²/(ω₁ − ω₂)²`.
pub fn stray_coupling_bound(g12: f64, omega_1: f64, omega_2: f64) -> f64 {
    -2.0 * g12 * g12 / (omega_1 - omega_2).powi(2)
}

/// Sideband amplitude `ω_m λ/ᾱ*` of the two PAM tones at `ω_r ± ω_m`.
pub fn pam_tone_amplitude(omega_m: f64, lambda: f64, alpha_bar: C64) -> Result<C64> {
    if alpha_bar.norm() == 0.0 {
        return Err(Error::Invalid("PAM tones need a nonzero alpha_bar".into()));
    }
    Ok(omega_m * lambda / alpha_bar.conj())
}
