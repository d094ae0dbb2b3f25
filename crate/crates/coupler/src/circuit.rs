//! Superconducting realizations: circuit energies mapped onto effective coupler
//! parameters for the Kerr-cat design and the harmonic design with parametric
//! modulation, the doubly rotating Kerr-cat Hamiltonian, and NLR metapotentials.
//!
//! Circuit energies are angular frequencies (ħ = 1). Reduced impedances enter
//! through `πz`, and flux biases are phases in radians.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use rayon::prelude::*;

use crate::hilbert::{annihilate, coherent_amplitudes, create, number, ModeLayout, Operator, BUS, NLR, Q1, Q2};
use crate::model::{PamParams, SystemParams};
use crate::spectral::{ipr_at, Spectrum};
use crate::units::{khz, mhz};
use crate::{Error, Result, C64};

/// Relative agreement required between a supplied `πz_r` and `√(2N E_Cr/E_JN)`.
pub const Z_R_TOLERANCE: f64 = 0.05;

/// Circuit energies, flux biases and drive of the bus/NLR circuit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircuitParams {
    pub e_cb: f64,
    pub e_jb: f64,
    pub e_cr: f64,
    /// `E_{J_ℓ}`, each of the two symmetric junctions.
    pub e_jl: f64,
    pub e_j2: f64,
    pub e_jn: f64,
    /// Number of junctions in the array.
    pub n: u32,
    pub phi_s2: f64,
    /// `None` selects the flux that enforces `λ_r = −2λ_ℓ` in the Kerr-cat design.
    pub phi_sn: Option<f64>,
    /// `φ_ℓ`.
    pub phi_l: f64,
    pub zeta: f64,
    /// `πz_b`; derived from the bus energies when absent.
    pub pi_z_b: Option<f64>,
    /// `πz_r`; derived as `√(2N E_Cr/E_JN)` when absent.
    pub pi_z_r: Option<f64>,
    /// NLR drive amplitude `ε₀`.
    pub eps0: f64,
}

/// Equal modulo `period` to 1e-9.
fn same_phase(a: f64, b: f64, period: f64) -> bool {
    let d = (a - b).rem_euclid(period);
    d.min(period - d) < 1e-9
}

impl CircuitParams {
    /// Kerr-cat configuration: `E_J2 = E_Jℓ`, `φ_ℓ = π − 2ζ`, `φ_s2 = −π − 2ζ`.
    pub fn kerr_cat(e_cb: f64, e_jb: f64, e_cr: f64, e_jl: f64, e_jn: f64, n: u32, zeta: f64, eps0: f64) -> Self {
        Self {
            e_cb,
            e_jb,
            e_cr,
            e_jl,
            e_j2: e_jl,
            e_jn,
            n,
            phi_s2: -PI - 2.0 * zeta,
            phi_sn: None,
            phi_l: PI - 2.0 * zeta,
            zeta,
            pi_z_b: None,
            pi_z_r: None,
            eps0,
        }
    }

    /// Harmonic configuration: `φ_ℓ = 0`, `φ_s2 = 2π`, `φ_sN = 0` and `E_J2 = λE_Jℓ`.
    pub fn harmonic(e_cb: f64, e_jb: f64, e_cr: f64, e_jl: f64, e_jn: f64, n: u32) -> Self {
        let mut c = Self {
            e_cb,
            e_jb,
            e_cr,
            e_jl,
            e_j2: e_jl,
            e_jn,
            n,
            phi_s2: TAU,
            phi_sn: Some(0.0),
            phi_l: 0.0,
            zeta: 0.0,
            pi_z_b: None,
            pi_z_r: None,
            eps0: 0.0,
        };
        c.e_j2 = c.harmonic_ratio() * e_jl;
        c
    }

    fn validate(&self) -> Result<()> {
        let mut all = vec![self.e_cb, self.e_jb, self.e_cr, self.e_jl, self.e_j2, self.e_jn];
        all.extend([self.phi_s2, self.phi_l, self.zeta, self.eps0]);
        all.extend(self.phi_sn);
        all.extend(self.pi_z_b);
        all.extend(self.pi_z_r);
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("circuit parameter"));
        }
        if self.n == 0 || !(self.e_cb > 0.0 && self.e_jb > 0.0 && self.e_cr > 0.0 && self.e_jn > 0.0 && self.e_jl >= 0.0) {
            return Err(Error::Invalid("charging and Josephson energies must be positive and N at least 1".into()));
        }
        if let Some(z) = self.pi_z_r {
            let est = self.pi_z_r_estimate();
            if !(z > 0.0) || ((z - est) / est).abs() > Z_R_TOLERANCE {
                return Err(Error::Invalid(format!(
                    "pi z_r = {z} is inconsistent with sqrt(2 N E_Cr / E_JN) = {est} (tolerance {Z_R_TOLERANCE})"
                )));
            }
        }
        if matches!(self.pi_z_b, Some(z) if !(z > 0.0)) {
            return Err(Error::Invalid("pi z_b must be positive".into()));
        }
        Ok(())
    }

    /// `√(2N E_Cr/E_JN)`.
    pub fn pi_z_r_estimate(&self) -> f64 {
        (2.0 * self.n as f64 * self.e_cr / self.e_jn).sqrt()
    }

    fn pi_z_r(&self) -> f64 {
        self.pi_z_r.unwrap_or_else(|| self.pi_z_r_estimate())
    }

    /// `ω_r = √(8E_Cr E_JN/N) − E_Cr`.
    pub fn omega_r(&self) -> f64 {
        (8.0 * self.e_cr * self.e_jn / self.n as f64).sqrt() - self.e_cr
    }

    /// Displacement amplitude `Ω = 2ε₀/3ω_r` of the driven NLR.
    pub fn omega_disp(&self) -> f64 {
        2.0 * self.eps0 / (3.0 * self.omega_r())
    }

    /// `1 − (3/2)²πz_b/2`, the `E_J2/E_Jℓ` ratio of the harmonic design.
    pub fn harmonic_ratio(&self) -> f64 {
        1.0 - 1.125 * self.harmonic_pi_z_b()
    }

    fn harmonic_e_lb(&self) -> f64 {
        self.e_jb + 4.5 * self.e_jl
    }

    fn harmonic_pi_z_b(&self) -> f64 {
        self.pi_z_b.unwrap_or_else(|| (2.0 * self.e_cb / self.harmonic_e_lb()).sqrt())
    }
}

/// Effective parameters of the doubly rotating Kerr-cat Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveParams {
    /// Bus and NLR frequencies; absent when the parameters were given directly.
    pub omega_b: Option<f64>,
    pub omega_r: Option<f64>,
    pub k_b: f64,
    pub k_r: f64,
    pub lambda_r: f64,
    pub lambda_l: f64,
    pub chi: f64,
    /// `α² = λ_ℓ/K_r`.
    pub alpha_sq: f64,
    /// Array flux used for `λ_r`.
    pub phi_sn: Option<f64>,
}

impl EffectiveParams {
    /// Direct specification with `λ_ℓ = α²K_r` and `λ_r = −2λ_ℓ`.
    pub fn kerr_cat(k_b: f64, k_r: f64, chi: f64, alpha_sq: f64) -> Self {
        let lambda_l = alpha_sq * k_r;
        Self {
            omega_b: None,
            omega_r: None,
            k_b,
            k_r,
            lambda_r: -2.0 * lambda_l,
            lambda_l,
            chi,
            alpha_sq,
            phi_sn: None,
        }
    }

    /// `|λ_r + 2λ_ℓ|` relative to `|λ_ℓ|`.
    pub fn two_photon_mismatch(&self) -> f64 {
        (self.lambda_r + 2.0 * self.lambda_l).abs() / self.lambda_l.abs().max(f64::MIN_POSITIVE)
    }

    /// Cat amplitude `β` of bus level `n`: `β² = −α²(2n − 1)`.
    pub fn well_amplitude(&self, n: usize) -> C64 {
        C64::new(-self.alpha_sq * (2.0 * n as f64 - 1.0), 0.0).sqrt()
    }
}

/// Maps circuit energies onto the Kerr-cat effective model.
pub fn derive_kerr_cat_params(c: &CircuitParams) -> Result<EffectiveParams> {
    c.validate()?;
    let tol = 1e-9 * c.e_jl.abs().max(f64::MIN_POSITIVE);
    if (c.e_j2 - c.e_jl).abs() > tol
        || !same_phase(c.phi_l, PI - 2.0 * c.zeta, 2.0 * TAU)
        || !same_phase(c.phi_s2, -PI - 2.0 * c.zeta, 2.0 * TAU)
    {
        return Err(Error::Invalid(
            "Kerr-cat configuration needs E_J2 = E_Jl, phi_l = pi - 2 zeta and phi_s2 = -pi - 2 zeta".into(),
        ));
    }
    let n = c.n as f64;
    let omega_r = c.omega_r();
    let k_r = -c.e_cr / (n * n);
    let zr = c.pi_z_r();
    let zb = c.pi_z_b.unwrap_or_else(|| (2.0 * c.e_cb / c.e_jb).sqrt());
    let om = c.omega_disp();
    let chi = -9.0 * zb * zr * c.e_jl * c.zeta.sin() / 8.0;
    let lambda_l = 9.0 * zb * zr.powf(1.5) * om * c.e_jl * c.zeta.cos() / 64.0;
    let lambda_r_per_flux = -zr.powf(1.5) * om * c.e_jn / (2.0 * n.powi(3));
    let phi_sn = match c.phi_sn {
        Some(p) => p,
        None if lambda_r_per_flux != 0.0 => -2.0 * lambda_l / lambda_r_per_flux,
        None => return Err(Error::Invalid("no array flux realizes lambda_r = -2 lambda_l without a drive".into())),
    };
    let lambda_r = lambda_r_per_flux * phi_sn;
    let eff = EffectiveParams {
        omega_b: Some((8.0 * c.e_cb * c.e_jb).sqrt() - c.e_cb),
        omega_r: Some(omega_r),
        k_b: -c.e_cb,
        k_r,
        lambda_r,
        lambda_l,
        chi,
        alpha_sq: lambda_l / k_r,
        phi_sn: Some(phi_sn),
    };
    if lambda_l != 0.0 && eff.two_photon_mismatch() > 1e-9 {
        return Err(Error::Invalid(format!(
            "array flux {phi_sn} gives lambda_r = {lambda_r}, not -2 lambda_l = {}",
            -2.0 * lambda_l
        )));
    }
    Ok(eff)
}

fn check_nlr_truncation(eff: &EffectiveParams, layout: &ModeLayout) -> Result<()> {
    if !eff.alpha_sq.is_finite() {
        return Err(Error::NonFinite("alpha squared"));
    }
    let r = layout.dim_of(NLR)?;
    let need = 4.0 * eff.alpha_sq.abs() + 10.0;
    if (r as f64) < need {
        return Err(Error::Invalid(format!("NLR truncation {r} is below 4|alpha|^2 + 10 = {need:.1}")));
    }
    Ok(())
}

fn real(v: f64) -> C64 {
    C64::new(v, 0.0)
}

/// `(K_b/2)b†²b² − (K_rα⁴/2)(2n_b − 1)² + (δ + χ/2 + χn_b)n_r + (K_r/2)[r†² + α²(2n_b − 1)][r² + α²(2n_b − 1)]`.
/// Modes other than the bus and NLR carry identities.
pub fn kerr_cat_hamiltonian(eff: &EffectiveParams, delta: f64, layout: &ModeLayout) -> Result<Operator> {
    check_nlr_truncation(eff, layout)?;
    let detuned = kerr_cat_detuning(eff, delta, layout)?;
    Ok(kerr_cat_static(eff, layout)?.add(&detuned)?.into_hermitian()?)
}

/// `(δ + χ/2 + χn_b)n_r`.
fn kerr_cat_detuning(eff: &EffectiveParams, delta: f64, layout: &ModeLayout) -> Result<Operator> {
    let nb = number(layout, BUS)?;
    let nr = number(layout, NLR)?;
    nr.scale(real(delta + eff.chi / 2.0)).add(&nb.mul(&nr)?.scale(real(eff.chi)))
}

/// The Kerr-cat Hamiltonian without the NLR detuning term.
fn kerr_cat_static(eff: &EffectiveParams, layout: &ModeLayout) -> Result<Operator> {
    let id = Operator::identity(layout);
    let b = annihilate(layout, BUS)?;
    let bd = create(layout, BUS)?;
    let r = annihilate(layout, NLR)?;
    let rd = create(layout, NLR)?;
    let a2 = eff.alpha_sq;
    let p = number(layout, BUS)?.scale(real(2.0)).sub(&id)?;
    let bus_kerr = bd.mul(&bd)?.mul(&b)?.mul(&b)?.scale(real(eff.k_b / 2.0));
    let well = p.mul(&p)?.scale(real(-eff.k_r * a2 * a2 / 2.0));
    let upper = rd.mul(&rd)?.add(&p.scale(real(a2)))?;
    let lower = r.mul(&r)?.add(&p.scale(real(a2)))?;
    let squeeze = upper.mul(&lower)?.scale(real(eff.k_r / 2.0));
    bus_kerr.add(&well)?.add(&squeeze)
}

/// `⟨n, β_n| H |n, β_n⟩` without the detuning term, with the NLR in the coherent state
/// at the centre of a well of bus level `n`. Both levels give `−K_rα⁴/2`.
pub fn well_shift(eff: &EffectiveParams, layout: &ModeLayout, n: usize) -> Result<f64> {
    check_nlr_truncation(eff, layout)?;
    let h = kerr_cat_static(eff, layout)?;
    let ib = layout.index_of(BUS)?;
    let ir = layout.index_of(NLR)?;
    let coh = coherent_amplitudes(layout.dims()[ir], eff.well_amplitude(n));
    let mut psi = vec![C64::default(); layout.dim()];
    let mut levels = vec![0; layout.n_modes()];
    levels[ib] = n;
    for (k, c) in coh.iter().enumerate() {
        levels[ir] = k;
        psi[layout.flat_index(&levels)?] = *c;
    }
    let norm: f64 = psi.iter().map(|v| v.norm_sqr()).sum();
    let bus_kerr = eff.k_b / 2.0 * (n as f64) * (n as f64 - 1.0);
    Ok(h.expect_state(&psi).re / norm - bus_kerr)
}

/// Qubits, bus and NLR of the Kerr-cat circuit in the frame rotating at `ω_b` for the
/// qubits and bus. Detunings are `ω_j − ω_b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KerrCatSystem {
    pub delta: f64,
    pub k_b: f64,
    pub k_r: f64,
    pub chi: f64,
    pub detunings: [f64; 2],
    pub k_q: [f64; 2],
    pub g: [f64; 2],
}

impl KerrCatSystem {
    /// `δ/2π = 1 kHz`, `χ/2π = −5 MHz`, detunings 7 and 14 MHz, `K_j/2π = −300 MHz`,
    /// `g/2π = 2 MHz`, with `K_r/2π = −10 MHz` and `K_b/2π = −300 MHz`.
    pub fn fig7() -> Self {
        Self {
            delta: khz(1.0),
            k_b: mhz(-300.0),
            k_r: mhz(-10.0),
            chi: mhz(-5.0),
            detunings: [mhz(7.0), mhz(14.0)],
            k_q: [mhz(-300.0); 2],
            g: [mhz(2.0); 2],
        }
    }

    /// The second-qubit variant: `δ/2π = 19.9 MHz` and `χ/2π = −20 MHz`.
    pub fn fig7_appendix() -> Self {
        Self { delta: mhz(19.9), chi: mhz(-20.0), ..Self::fig7() }
    }

    pub fn effective(&self, alpha_sq: f64) -> EffectiveParams {
        EffectiveParams::kerr_cat(self.k_b, self.k_r, self.chi, alpha_sq)
    }

    /// Two levels per qubit, three bus levels and `⌈4|α|²⌉ + 12` NLR levels.
    pub fn layout(&self, alpha_sq: f64) -> Result<ModeLayout> {
        ModeLayout::coupler(2, 2, 3, (4.0 * alpha_sq.abs()).ceil() as usize + 12)
    }

    /// Full Hamiltonian; `coupled = false` drops the qubit-bus exchange.
    pub fn hamiltonian(&self, alpha_sq: f64, layout: &ModeLayout, coupled: bool) -> Result<Operator> {
        let mut h = kerr_cat_hamiltonian(&self.effective(alpha_sq), self.delta, layout)?;
        let b = annihilate(layout, BUS)?;
        for (j, mode) in [Q1, Q2].into_iter().enumerate() {
            let q = annihilate(layout, mode)?;
            let qd = create(layout, mode)?;
            let nq = number(layout, mode)?;
            h = h.add(&nq.scale(real(self.detunings[j])))?;
            h = h.add(&qd.mul(&qd)?.mul(&q)?.mul(&q)?.scale(real(self.k_q[j] / 2.0)))?;
            if coupled {
                h = h.add(&qd.mul(&b)?.plus_adjoint().scale(real(self.g[j])))?;
            }
        }
        h.into_hermitian()
    }

    pub fn spectrum(&self, alpha_sq: f64, layout: &ModeLayout) -> Result<Spectrum> {
        Spectrum::new(&self.hamiltonian(alpha_sq, layout, false)?, &self.hamiltonian(alpha_sq, layout, true)?)
    }

    /// IPR of the state with qubit `j ∈ {1, 2}` excited, the bus empty and the NLR in
    /// the even cat of the empty-bus wells. The bare reference is the uncoupled
    /// eigenstate with the largest overlap on `|q⟩|0⟩_b|C₊(β₀)⟩`.
    pub fn ipr(&self, alpha_sq: f64, layout: &ModeLayout, qubit: usize) -> Result<f64> {
        let spec = self.spectrum(alpha_sq, layout)?;
        let bare = cat_reference_index(&spec, &self.effective(alpha_sq), qubit)?;
        ipr_at(&spec, bare)
    }
}

/// Index of the bare eigenstate closest to `|q_j = 1⟩|0⟩_b|C₊(β₀)⟩`.
pub fn cat_reference_index(spec: &Spectrum, eff: &EffectiveParams, qubit: usize) -> Result<usize> {
    if !(qubit == 1 || qubit == 2) {
        return Err(Error::Invalid(format!("qubit index {qubit} is not 1 or 2")));
    }
    let layout = spec.bare.layout();
    let ir = layout.index_of(NLR)?;
    let rdim = layout.dims()[ir];
    let beta = eff.well_amplitude(0);
    let plus = coherent_amplitudes(rdim, beta);
    let minus = coherent_amplitudes(rdim, -beta);
    let cat: Vec<C64> = plus.iter().zip(&minus).map(|(a, b)| a + b).collect();
    let mut levels = vec![0; layout.n_modes()];
    levels[layout.index_of(if qubit == 1 { Q1 } else { Q2 })?] = 1;
    let mut reference = vec![C64::default(); layout.dim()];
    for (k, c) in cat.iter().enumerate() {
        levels[ir] = k;
        reference[layout.flat_index(&levels)?] = *c;
    }
    let vecs = spec.bare.eigenvectors();
    let mut best = (0, -1.0);
    for i in 0..vecs.ncols() {
        let o: C64 = vecs.column(i).iter().zip(&reference).map(|(v, r)| v.conj() * r).sum();
        if o.norm_sqr() > best.1 {
            best = (i, o.norm_sqr());
        }
    }
    Ok(best.0)
}

/// Effective model of the harmonic design. `K_r` carries the positive sign of this
/// design's formula, opposite to the Kerr-cat `K_r = −E_Cr/N²`; the sign is kept as
/// written and flagged through `k_r_sign_differs`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarmonicParams {
    pub omega_b: f64,
    pub omega_r: f64,
    pub k_b: f64,
    pub k_r: f64,
    pub chi: f64,
    pub pi_z_b: f64,
    pub pi_z_r: f64,
    /// `E_J2/E_Jℓ`.
    pub junction_ratio: f64,
    pub k_r_sign_differs: bool,
}

/// Maps circuit energies onto the harmonic model. `χ = −(9/8)πz_b πz_r E_Jℓ` comes from
/// the quadratic expansion of the bus-NLR cosine product.
pub fn derive_harmonic_params(c: &CircuitParams) -> Result<HarmonicParams> {
    c.validate()?;
    let ratio = c.harmonic_ratio();
    let n = c.n as f64;
    let tol = 1e-9 * c.e_jl.abs().max(f64::MIN_POSITIVE);
    let flux_ok = c.phi_sn.is_some_and(|p| same_phase(p, 0.0, TAU * n));
    if (c.e_j2 - ratio * c.e_jl).abs() > tol
        || !same_phase(c.phi_l, 0.0, 2.0 * TAU)
        || !same_phase(c.phi_s2, TAU, 2.0 * TAU)
        || !flux_ok
    {
        return Err(Error::Invalid(
            "harmonic configuration needs phi_l = 0, phi_s2 = 2 pi, phi_sN = 0 mod 2 pi N and E_J2 = lambda E_Jl".into(),
        ));
    }
    let e_lb = c.harmonic_e_lb();
    let e_lr = c.e_jn / n;
    let pi_z_b = c.harmonic_pi_z_b();
    let pi_z_r = c.pi_z_r.unwrap_or_else(|| (2.0 * c.e_cr / e_lr).sqrt());
    Ok(HarmonicParams {
        omega_b: (8.0 * c.e_cb * e_lb).sqrt() - c.e_cb,
        omega_r: (8.0 * c.e_cr * e_lr).sqrt() - c.e_cr,
        k_b: -(c.e_jb + 2.0 * 1.5f64.powi(4) * c.e_jl) * c.e_cb / e_lb,
        k_r: c.e_cr / (n * n),
        chi: -1.125 * pi_z_b * pi_z_r * c.e_jl,
        pi_z_b,
        pi_z_r,
        junction_ratio: ratio,
        k_r_sign_differs: true,
    })
}

/// Two-tone linear drive `Ω(t) = 2δᾱ₀ cos[(ω_r − δ)t] + (ω_m λ/ᾱ) Σ_± ±sin[(ω_m ± ω_r)t]`
/// of the harmonic design, with real `ᾱ₀` and `ᾱ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarmonicDrive {
    pub omega_r: f64,
    pub delta: f64,
    pub alpha0: f64,
    pub alpha_bar: f64,
    pub pam: PamParams,
}

impl HarmonicDrive {
    pub fn eval(&self, t: f64) -> f64 {
        let carrier = 2.0 * self.delta * self.alpha0 * ((self.omega_r - self.delta) * t).cos();
        if self.pam.lambda == 0.0 {
            return carrier;
        }
        let wm = self.pam.omega_m;
        let side = ((wm + self.omega_r) * t).sin() - ((wm - self.omega_r) * t).sin();
        carrier + wm * self.pam.lambda / self.alpha_bar * side
    }

    /// Limit `αₙ(t) ≈ δᾱ₀/(δ + nχ) − i(λ/ᾱ)cos ω_m t` in the frame rotating at `ω_r − δ`,
    /// valid for `|δ/χ|, |χ/ω_m|, |ω_m/ω_r| ≪ 1`.
    pub fn displacement_limit(&self, chi: f64, n: usize, t: f64) -> C64 {
        let stat = self.delta * self.alpha0 / (self.delta + n as f64 * chi);
        let lam = if self.pam.lambda == 0.0 { 0.0 } else { self.pam.lambda / self.alpha_bar };
        C64::new(stat, -lam * (self.pam.omega_m * t).cos())
    }
}

/// Which classical energy a metapotential is drawn from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MetaModel {
    /// Coupler Hamiltonian with qubits traced out, drive amplitude `ε` in the drive frame.
    Simple { params: SystemParams, eps: C64 },
    /// Doubly rotating Kerr-cat Hamiltonian.
    KerrCat { effective: EffectiveParams, delta: f64 },
}

impl MetaModel {
    /// Classical energy of bus level `n` at `r = z`.
    pub fn energy(&self, n: usize, z: C64) -> f64 {
        let nf = n as f64;
        match *self {
            MetaModel::Simple { params, eps } => {
                let d = params.delta() + nf * params.chi;
                let drive = 2.0 * (eps.conj() * z).re;
                let mut e = params.omega_b * nf + params.k_b / 2.0 * nf * (nf - 1.0) + d * z.norm_sqr() - drive;
                if params.k_r != 0.0 {
                    let an = eps / params.lambda_n(n);
                    e += params.k_r / 2.0 * (z - an).norm_sqr().powi(2);
                }
                e
            }
            MetaModel::KerrCat { effective: p, delta } => {
                let s = p.alpha_sq * (2.0 * nf - 1.0);
                p.k_b / 2.0 * nf * (nf - 1.0) - p.k_r * s * s / 2.0
                    + (delta + p.chi / 2.0 + p.chi * nf) * z.norm_sqr()
                    + p.k_r / 2.0 * (z * z + s).norm_sqr()
            }
        }
    }

    /// Signed normalization scale: `(δ + nχ)|ᾱ₀/4|²` for the simple model and
    /// `K_rα⁴/2` for the Kerr-cat model. Wells are minima of the energy divided by it.
    pub fn scale(&self, n: usize) -> f64 {
        match *self {
            MetaModel::Simple { params, eps } => {
                let a0 = eps / params.lambda_n(0);
                (params.delta() + n as f64 * params.chi) * (a0 / 4.0).norm_sqr()
            }
            MetaModel::KerrCat { effective: p, .. } => p.k_r * p.alpha_sq * p.alpha_sq / 2.0,
        }
    }

    /// `+1` when wells are minima of the raw energy and `−1` when they are maxima.
    fn orientation(&self, n: usize) -> f64 {
        let s = match *self {
            MetaModel::Simple { params, .. } => params.delta() + n as f64 * params.chi,
            MetaModel::KerrCat { effective: p, delta } => {
                if p.k_r != 0.0 { p.k_r } else { delta + p.chi * (n as f64 + 0.5) }
            }
        };
        if s < 0.0 { -1.0 } else { 1.0 }
    }
}

/// Rectangular `(I, Q)` grid, endpoints included.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IqGrid {
    pub i_range: (f64, f64),
    pub q_range: (f64, f64),
    pub n_i: usize,
    pub n_q: usize,
}

impl IqGrid {
    pub fn square(half_width: f64, n: usize) -> Self {
        Self { i_range: (-half_width, half_width), q_range: (-half_width, half_width), n_i: n, n_q: n }
    }

    pub fn i_at(&self, k: usize) -> f64 {
        self.i_range.0 + (self.i_range.1 - self.i_range.0) * k as f64 / (self.n_i - 1) as f64
    }

    pub fn q_at(&self, k: usize) -> f64 {
        self.q_range.0 + (self.q_range.1 - self.q_range.0) * k as f64 / (self.n_q - 1) as f64
    }

    /// Largest grid spacing.
    pub fn resolution(&self) -> f64 {
        let di = (self.i_range.1 - self.i_range.0) / (self.n_i - 1) as f64;
        let dq = (self.q_range.1 - self.q_range.0) / (self.n_q - 1) as f64;
        di.max(dq)
    }

    pub fn validate(&self) -> Result<()> {
        let ends = [self.i_range.0, self.i_range.1, self.q_range.0, self.q_range.1];
        if ends.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("metapotential grid"));
        }
        if self.n_i < 3 || self.n_q < 3 || !(self.i_range.1 > self.i_range.0 && self.q_range.1 > self.q_range.0) {
            return Err(Error::Invalid("metapotential grid needs increasing ranges and at least 3 points per axis".into()));
        }
        Ok(())
    }
}

/// Metapotential of one bus level on an `(I, Q)` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Metapotential {
    pub grid: IqGrid,
    pub bus_level: usize,
    pub normalized: bool,
    /// Row-major over `Q` rows, `I` fastest.
    pub values: Vec<f64>,
    /// Grid point of the deepest well.
    pub minimum: (f64, f64),
    orientation: f64,
}

impl Metapotential {
    pub fn value(&self, i: usize, q: usize) -> f64 {
        self.values[q * self.grid.n_i + i]
    }

    /// Interior grid points lying strictly below all eight neighbours, in the
    /// orientation where wells are minima.
    pub fn local_minima(&self) -> Vec<(f64, f64)> {
        let g = &self.grid;
        let w = |i: usize, q: usize| self.orientation * self.value(i, q);
        let mut out = Vec::new();
        for q in 1..g.n_q - 1 {
            for i in 1..g.n_i - 1 {
                let c = w(i, q);
                let lowest = (q - 1..=q + 1)
                    .flat_map(|qq| (i - 1..=i + 1).map(move |ii| (ii, qq)))
                    .filter(|&(ii, qq)| (ii, qq) != (i, q))
                    .all(|(ii, qq)| c < w(ii, qq));
                if lowest {
                    out.push((g.i_at(i), g.q_at(q)));
                }
            }
        }
        out
    }

    /// CSV with `#`-prefixed metadata lines, then `I,Q,value` rows.
    pub fn write_csv<W: Write>(&self, mut w: W, params_hash: &str) -> std::io::Result<()> {
        writeln!(w, "# params_hash={params_hash}")?;
        writeln!(w, "# bus_level={}", self.bus_level)?;
        writeln!(w, "# normalized={}", self.normalized)?;
        writeln!(w, "I,Q,value")?;
        for q in 0..self.grid.n_q {
            for i in 0..self.grid.n_i {
                writeln!(w, "{:.16e},{:.16e},{:.16e}", self.grid.i_at(i), self.grid.q_at(q), self.value(i, q))?;
            }
        }
        Ok(())
    }
}

/// Substitutes `r → I + iQ` into the classical energy of bus level `n`. Without
/// normalization the raw energy is returned; in the drive frame a well is a maximum
/// of the raw energy whenever its curvature is negative, and `minimum` always
/// reports the well. Normalization divides by [`MetaModel::scale`].
pub fn metapotential(model: &MetaModel, n: usize, grid: &IqGrid, normalize: bool) -> Result<Metapotential> {
    grid.validate()?;
    let scale = model.scale(n);
    if normalize && !(scale.is_finite() && scale != 0.0) {
        return Err(Error::Invalid(format!("normalization scale {scale} is not usable")));
    }
    let values: Vec<f64> = (0..grid.n_q)
        .into_par_iter()
        .flat_map_iter(|q| {
            let qv = grid.q_at(q);
            (0..grid.n_i).map(move |i| {
                let e = model.energy(n, C64::new(grid.i_at(i), qv));
                if normalize { e / scale } else { e }
            })
        })
        .collect();
    let orientation = if normalize { 1.0 } else { model.orientation(n) };
    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| (orientation * a.1).total_cmp(&(orientation * b.1)))
        .map(|(k, _)| k)
        .expect("grid is non-empty");
    Ok(Metapotential {
        grid: *grid,
        bus_level: n,
        normalized: normalize,
        minimum: (grid.i_at(best % grid.n_i), grid.q_at(best / grid.n_i)),
        values,
        orientation,
    })
}
