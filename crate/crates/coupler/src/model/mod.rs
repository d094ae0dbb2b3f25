//! Coupler Hamiltonians: lab frame, drive envelopes, classical NLR displacements
//! and the bus-conditional polaron frame.

mod displacement;
mod envelope;
mod lab;
mod polaron;

pub use displacement::{
    central_derivative, classical_displacements, classical_displacements_with, tqd_error_estimate, DisplacementSet,
};
pub use envelope::{tqd_envelope, BaseRamp, DriveEnvelope, EnvelopeKind, RampShape};
pub use lab::{build_lab_hamiltonian, Frame};
pub use polaron::{build_polaron_model, pam_steady_modulation, PolaronModel};

use crate::units::mhz;
use crate::{Error, Result, C64};

/// Every model constant, in rad/s. The NLR-drive detuning is derived.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams {
    pub omega_1: f64,
    pub omega_2: f64,
    pub omega_b: f64,
    pub omega_r: f64,
    pub k_1: f64,
    pub k_2: f64,
    pub k_b: f64,
    pub k_r: f64,
    pub g_1: f64,
    pub g_2: f64,
    pub chi: f64,
    pub kappa: f64,
    pub omega_d: f64,
}

impl SystemParams {
    /// `δ = ω_r − ω_d`.
    pub fn delta(&self) -> f64 {
        self.omega_r - self.omega_d
    }

    /// Moves the drive so that `δ` takes the given value.
    pub fn with_delta(mut self, delta: f64) -> Self {
        self.omega_d = self.omega_r - delta;
        self
    }

    /// `δ + nχ − iκ/2`, the complex detuning of the NLR conditioned on bus level `n`.
    pub fn lambda_n(&self, n: usize) -> C64 {
        C64::new(self.delta() + n as f64 * self.chi, -self.kappa / 2.0)
    }

    pub fn g(&self, j: usize) -> f64 {
        if j == 1 { self.g_1 } else { self.g_2 }
    }

    pub fn omega_q(&self, j: usize) -> f64 {
        if j == 1 { self.omega_1 } else { self.omega_2 }
    }

    pub fn k_q(&self, j: usize) -> f64 {
        if j == 1 { self.k_1 } else { self.k_2 }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.omega_1, self.omega_2, self.omega_b, self.omega_r, self.k_1, self.k_2, self.k_b, self.k_r,
            self.g_1, self.g_2, self.chi, self.kappa, self.omega_d,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("system parameter"));
        }
        if self.kappa < 0.0 {
            return Err(Error::Invalid("kappa must be non-negative".into()));
        }
        Ok(())
    }

    /// Bus and NLR of the Rabi and dephasing experiments: qubits decoupled,
    /// `δ/2π = −5 MHz`, `κ/2π = 100 kHz`, `K_b/2π = −300 MHz`, `K_r = 0`.
    pub fn rabi_preset(chi_mhz: f64) -> Self {
        let omega_b = mhz(6000.0);
        let omega_r = mhz(7500.0);
        Self {
            omega_1: omega_b + mhz(7.0),
            omega_2: omega_b + mhz(14.0),
            omega_b,
            omega_r,
            k_1: mhz(-300.0),
            k_2: mhz(-300.0),
            k_b: mhz(-300.0),
            k_r: 0.0,
            g_1: 0.0,
            g_2: 0.0,
            chi: mhz(chi_mhz),
            kappa: mhz(0.1),
            omega_d: omega_r,
        }
        .with_delta(mhz(-5.0))
    }

    /// Qubit-bus-NLR set used for the hybridization sweeps: detunings 7 and 14 MHz,
    /// `K_j/2π = K_b/2π = −300 MHz`, `χ/2π = −20 MHz`, `g/2π = 2 MHz`, `κ = 0`.
    pub fn ipr_preset(delta_mhz: f64, k_r_mhz: f64) -> Self {
        let omega_b = mhz(6000.0);
        let omega_r = mhz(7500.0);
        Self {
            omega_1: omega_b + mhz(7.0),
            omega_2: omega_b + mhz(14.0),
            omega_b,
            omega_r,
            k_1: mhz(-300.0),
            k_2: mhz(-300.0),
            k_b: mhz(-300.0),
            k_r: mhz(k_r_mhz),
            g_1: mhz(2.0),
            g_2: mhz(2.0),
            chi: mhz(-20.0),
            kappa: 0.0,
            omega_d: omega_r,
        }
        .with_delta(mhz(delta_mhz))
    }
}

/// Two-tone modulation of the NLR drive: dimensionless amplitude and angular frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PamParams {
    pub lambda: f64,
    pub omega_m: f64,
}

impl PamParams {
    /// True when `ω_m` is not well above `|χ|`, where the modulation picture breaks down.
    pub fn slow_modulation(&self, chi: f64) -> bool {
        self.omega_m.abs() < 10.0 * chi.abs()
    }
}
