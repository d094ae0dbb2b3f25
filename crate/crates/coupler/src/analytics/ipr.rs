//! Schrieffer-Wolff estimates of the qubit inverse participation ratio (IPR).

use super::series::{hyp_pfq_squaredpoles, hyp_pfq_unit_shift};
use super::special::bessel_j_all;
use crate::model::{DisplacementSet, PamParams, SystemParams};
use crate::{Error, Result, C64};

/// Which dressed computational state the IPR refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IprState {
    S1000,
    S0100,
    S1100,
}

impl IprState {
    pub fn label(&self) -> &'static str {
        match self {
            Self::S1000 => "1000",
            Self::S0100 => "0100",
            Self::S1100 => "1100",
        }
    }
}

/// Everything the estimates need. Detunings default to the polaron-frame `Δ̃ⱼ` but may
/// be overridden, e.g. for an undriven system tuned to the ac-Stark-shifted frequency.
/// `k_r` may be `±∞` to select the infinite-anharmonicity limit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwInputs {
    pub g: [f64; 2],
    pub detunings: [f64; 2],
    pub delta: f64,
    pub chi: f64,
    pub k_r: f64,
    /// `|ᾱ|²`.
    pub x: f64,
}

impl SwInputs {
    pub fn new(params: &SystemParams, displacements: &DisplacementSet) -> Self {
        let a = displacements.steady_values();
        let (a0, a1) = (a.first().copied().unwrap_or_default(), a.get(1).copied().unwrap_or_default());
        let delta = params.delta();
        let delta_ac = delta * a0.norm_sqr() - (delta + params.chi) * a1.norm_sqr();
        Self {
            g: [params.g_1, params.g_2],
            detunings: [params.omega_1 - params.omega_b - delta_ac, params.omega_2 - params.omega_b - delta_ac],
            delta,
            chi: params.chi,
            k_r: params.k_r,
            x: displacements.alpha_bar().norm_sqr(),
        }
    }

    pub fn with_detunings(mut self, detunings: [f64; 2]) -> Self {
        self.detunings = detunings;
        self
    }

    pub fn with_k_r(mut self, k_r: f64) -> Self {
        self.k_r = k_r;
        self
    }

    /// `|g/Δ̃|` above 0.3 for either qubit, where the dispersive estimate is unreliable.
    pub fn dispersive_warnings(&self) -> Vec<String> {
        (0..2)
            .filter(|&j| (self.g[j] / self.detunings[j]).abs() > 0.3)
            .map(|j| format!("|g_{0}/Delta_{0}| = {1:.3} exceeds 0.3", j + 1, (self.g[j] / self.detunings[j]).abs()))
            .collect()
    }
}

/// Derived series parameters for one qubit at detuning `Δ̃ⱼ + shift`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwParams {
    /// `β = (δ+χ)/K_r − 1/2`; infinite when `K_r = 0`.
    pub beta: f64,
    /// `p₊`, infinite when `K_r = 0`.
    pub p_plus: C64,
    /// `p₋`; `−Δ̃/(δ+χ)` when `K_r = 0`.
    pub p_minus: C64,
    /// `ζ = −(δ+χ)/Δ̃`.
    pub zeta: f64,
    pub detuning: f64,
}

impl SwParams {
    pub fn new(inp: &SwInputs, j: usize, shift: f64) -> Self {
        let det = inp.detunings[j] + shift;
        let dpc = inp.delta + inp.chi;
        let zeta = -dpc / det;
        let inf = C64::new(f64::INFINITY, 0.0);
        if inp.k_r == 0.0 {
            return Self { beta: f64::INFINITY, p_plus: inf, p_minus: C64::new(-det / dpc, 0.0), zeta, detuning: det };
        }
        if inp.k_r.is_infinite() {
            return Self { beta: -0.5, p_plus: C64::new(-1.0, 0.0), p_minus: C64::default(), zeta, detuning: det };
        }
        let beta = dpc / inp.k_r - 0.5;
        let root = C64::new(beta * beta + 2.0 * det / inp.k_r, 0.0).sqrt();
        // Larger root first, the smaller from the product p₊p₋ = −2Δ̃/K_r to avoid cancellation.
        let (plus, minus) = (C64::new(beta, 0.0) + root, C64::new(beta, 0.0) - root);
        let product = C64::new(-2.0 * det / inp.k_r, 0.0);
        let (p_plus, p_minus) =
            if plus.norm() >= minus.norm() { (plus, product / plus) } else { (product / minus, minus) };
        Self { beta, p_plus, p_minus, zeta, detuning: det }
    }

    /// Finite series parameters (one for `K_r = 0`, two otherwise).
    pub fn poles(&self) -> Vec<C64> {
        [self.p_minus, self.p_plus].into_iter().filter(|p| p.re.is_finite() && p.im.is_finite()).collect()
    }
}

/// `q_{j,n,k} = ((δ + nχ)k + K_r k(k−1)/2)/Δ̃ⱼ`.
pub fn q_ladder(inp: &SwInputs, j: usize, n: usize, k: usize) -> f64 {
    let k = k as f64;
    ((inp.delta + n as f64 * inp.chi) * k + inp.k_r * k * (k - 1.0) / 2.0) / inp.detunings[j]
}

fn qubit_of(which: IprState) -> Vec<usize> {
    match which {
        IprState::S1000 => vec![0],
        IprState::S0100 => vec![1],
        IprState::S1100 => vec![0, 1],
    }
}

/// `S_j = Σ_ℓ x^ℓ/ℓ!/(1 − q_{j,1,ℓ})²` at detuning shifted by `shift`.
fn static_sum(inp: &SwInputs, j: usize, shift: f64) -> Result<f64> {
    let sp = SwParams::new(inp, j, shift);
    if inp.k_r.is_infinite() {
        let d = 1.0 + sp.zeta;
        if d == 0.0 {
            return Err(Error::Pole { level: 1, sideband: None });
        }
        return Ok(1.0 + inp.x / (d * d));
    }
    Ok(hyp_pfq_squaredpoles(&sp.poles(), inp.x)?.re)
}

/// `1 − IPR` for one qubit: `2(g/Δ̃)² e^{−x} S`.
fn one_minus_static(inp: &SwInputs, j: usize) -> Result<f64> {
    if inp.g[j] == 0.0 {
        return Ok(0.0);
    }
    let det = inp.detunings[j];
    if det == 0.0 {
        return Err(Error::Pole { level: 0, sideband: None });
    }
    Ok(2.0 * (inp.g[j] / det).powi(2) * (-inp.x).exp() * static_sum(inp, j, 0.0)?)
}

/// Static estimate `IPR = 1 − 2e^{−|ᾱ|²}(gⱼ/Δ̃ⱼ)² ₄F₄(𝒑ⱼ; 1+𝒑ⱼ; |ᾱ|²)`; `1100` combines both
/// qubits as `IPR₁₀₀₀ + IPR₀₁₀₀ − 1`.
pub fn ipr_static(inp: &SwInputs, which: IprState) -> Result<f64> {
    let parts = qubit_of(which).into_iter().map(|j| one_minus_static(inp, j)).collect::<Result<Vec<_>>>()?;
    Ok(1.0 - parts.iter().sum::<f64>())
}

/// Closed-form infinite-anharmonicity limit `1 − 2(g/Δ̃)² e^{−x}(1 + x/(1+ζ)²)`.
pub fn ipr_kr_infinite(inp: &SwInputs, which: IprState) -> Result<f64> {
    ipr_static(&inp.with_k_r(f64::INFINITY), which)
}

/// Bessel orders `s` with `|J_s(arg)| ≥ 1e-10` (plus the orders up to `|arg|`).
fn bessel_orders(arg: f64) -> Result<Vec<(i64, f64)>> {
    if !arg.is_finite() || arg.abs() > 1e4 {
        return Err(Error::Invalid(format!("Bessel argument {arg} outside |x| <= 1e4")));
    }
    let a = arg.abs();
    let n_max = (a + 30.0 + 10.0 * a.cbrt()).ceil() as usize;
    let j = bessel_j_all(n_max, a);
    let mut out = vec![(0, j[0])];
    for s in 1..=n_max {
        if j[s].abs() < 1e-10 && s as f64 > a {
            break;
        }
        // J_{−s}(x) = (−1)^s J_s(x); J_s(−x) = (−1)^s J_s(x).
        let odd = if s % 2 == 1 { -1.0 } else { 1.0 };
        let v = if arg < 0.0 { odd * j[s] } else { j[s] };
        out.push((s as i64, v));
        out.push((-(s as i64), odd * v));
    }
    Ok(out)
}

/// Modulated estimate. Time averaged: `Σ_s J_s(λ)² · 2(g/(Δ̃+sω_m))² e^{−x} S(Δ̃+sω_m)`.
/// Instantaneous (`t = Some(t)`): the full double sum over `(s₁, s₂)`.
pub fn ipr_pam(inp: &SwInputs, pam: &PamParams, which: IprState, t: Option<f64>) -> Result<f64> {
    let orders = bessel_orders(pam.lambda)?;
    let mut total = 0.0;
    for j in qubit_of(which) {
        if inp.g[j] == 0.0 {
            continue;
        }
        let pre = 2.0 * inp.g[j] * inp.g[j] * (-inp.x).exp();
        let shifted = |s: i64| inp.detunings[j] + s as f64 * pam.omega_m;
        for &(s, _) in &orders {
            if shifted(s) == 0.0 {
                return Err(Error::Pole { level: 0, sideband: Some(s) });
            }
        }
        match t {
            None => {
                for &(s, js) in &orders {
                    let sum = static_sum(inp, j, s as f64 * pam.omega_m).map_err(|e| with_sideband(e, s))?;
                    total += pre * js * js * sum / shifted(s).powi(2);
                }
            }
            Some(t) => {
                let mut acc = C64::default();
                for &(s1, j1) in &orders {
                    let p1 = SwParams::new(inp, j, s1 as f64 * pam.omega_m);
                    for &(s2, j2) in &orders {
                        let p2 = SwParams::new(inp, j, s2 as f64 * pam.omega_m);
                        let f = if inp.k_r.is_infinite() {
                            C64::new(1.0 + inp.x / ((1.0 + p1.zeta) * (1.0 + p2.zeta)), 0.0)
                        } else {
                            let p: Vec<C64> = p1.poles().into_iter().chain(p2.poles()).collect();
                            hyp_pfq_unit_shift(&p, inp.x).map_err(|e| with_sideband(e, s1))?
                        };
                        let phase = C64::i().powi((s2 - s1) as i32) * C64::from_polar(1.0, (s2 - s1) as f64 * pam.omega_m * t);
                        acc += phase * f * (j1 * j2 / (shifted(s1) * shifted(s2)));
                    }
                }
                total += pre * acc.re;
            }
        }
    }
    Ok(1.0 - total)
}

fn with_sideband(e: Error, s: i64) -> Error {
    match e {
        Error::Pole { level, .. } => Error::Pole { level, sideband: Some(s) },
        other => other,
    }
}

/// Sum over NLR levels `ℓ` of `x^ℓ/ℓ! · inner(ℓ)`, stopping once the tail is negligible.
fn level_sum(x: f64, mut inner: impl FnMut(usize) -> Result<f64>) -> Result<f64> {
    let mut sum = 0.0;
    let mut weight = 1.0f64;
    let mut quiet = 0;
    for l in 0..100_000usize {
        if l > 0 {
            weight *= x / l as f64;
        }
        let term = weight * inner(l)?;
        sum += term;
        if l as f64 > x + 2.0 && term.abs() <= 1e-14 * sum.abs() {
            quiet += 1;
            if quiet >= 3 {
                return Ok(sum);
            }
        } else {
            quiet = 0;
        }
        if x == 0.0 {
            return Ok(sum);
        }
    }
    Err(Error::NoConvergence(100_000))
}

/// Longitudinal-drive estimate (time averaged):
/// `2(g/Δ̃)² e^{−x} Σ_{ℓ,s} J_s²(ℓz) x^ℓ/ℓ! / (1 + sω_m/Δ̃ − q_{j,1,ℓ})²`.
pub fn ipr_ld(inp: &SwInputs, z: f64, omega_m: f64, which: IprState) -> Result<f64> {
    let mut total = 0.0;
    for j in qubit_of(which) {
        if inp.g[j] == 0.0 {
            continue;
        }
        let det = inp.detunings[j];
        let s_sum = level_sum(inp.x, |l| {
            let q = q_ladder(inp, j, 1, l);
            let mut acc = 0.0;
            for (s, js) in bessel_orders(l as f64 * z)? {
                let d = 1.0 + s as f64 * omega_m / det - q;
                if d.abs() < 1e-12 {
                    return Err(Error::Pole { level: l, sideband: Some(s) });
                }
                acc += js * js / (d * d);
            }
            Ok(acc)
        })?;
        total += 2.0 * (inp.g[j] / det).powi(2) * (-inp.x).exp() * s_sum;
    }
    Ok(1.0 - total)
}

/// PAM and longitudinal drive together (time averaged):
/// `Σ_{ℓ,s,r} J_s(λ)² J_r²(ℓz) x^ℓ/ℓ! / (1 + (sω^φ + rω^δ)/Δ̃ − q)²` times `2(g/Δ̃)² e^{−x}`.
pub fn ipr_pam_ld(inp: &SwInputs, pam: &PamParams, z: f64, omega_m_delta: f64, which: IprState) -> Result<f64> {
    let s_orders = bessel_orders(pam.lambda)?;
    let mut total = 0.0;
    for j in qubit_of(which) {
        if inp.g[j] == 0.0 {
            continue;
        }
        let det = inp.detunings[j];
        let s_sum = level_sum(inp.x, |l| {
            let q = q_ladder(inp, j, 1, l);
            let r_orders = bessel_orders(l as f64 * z)?;
            let mut acc = 0.0;
            for &(s, js) in &s_orders {
                for &(r, jr) in &r_orders {
                    let shift = s as f64 * pam.omega_m + r as f64 * omega_m_delta;
                    let scale = (s as f64 * pam.omega_m).abs() + (r as f64 * omega_m_delta).abs();
                    if (s, r) != (0, 0) && shift.abs() <= 1e-9 * scale {
                        return Err(Error::Invalid(format!(
                            "modulation frequencies are commensurate: {s} w_phi + {r} w_delta = 0"
                        )));
                    }
                    let d = 1.0 + shift / det - q;
                    if d.abs() < 1e-12 {
                        return Err(Error::Pole { level: l, sideband: Some(s) });
                    }
                    acc += js * js * jr * jr / (d * d);
                }
            }
            Ok(acc)
        })?;
        total += 2.0 * (inp.g[j] / det).powi(2) * (-inp.x).exp() * s_sum;
    }
    Ok(1.0 - total)
}
