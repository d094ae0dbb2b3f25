//! NLR drive envelopes and the transitionless (TQD) correction.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use super::SystemParams;
use crate::{Error, Result, C64};

/// Normalized ramp profile `s(u)` on `u ∈ [0, 1]` with `s(0) = 0`, `s(1) = 1`.
#[derive(Clone)]
pub enum RampShape {
    /// `(1 − cos πu)/2`.
    RaisedCosine,
    /// Shifted and rescaled `tanh(k(u − 1/2))`.
    Tanh { steepness: f64 },
    /// User profile; its derivative is taken by central differences.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for RampShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::RaisedCosine => write!(f, "RaisedCosine"),
            Self::Tanh { steepness } => write!(f, "Tanh {{ steepness: {steepness} }}"),
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl RampShape {
    fn value(&self, u: f64) -> f64 {
        match self {
            Self::RaisedCosine => 0.5 * (1.0 - (PI * u).cos()),
            Self::Tanh { steepness: k } => {
                let h = (k / 2.0).tanh();
                ((k * (u - 0.5)).tanh() + h) / (2.0 * h)
            }
            Self::Custom(f) => f(u),
        }
    }

    fn slope(&self, u: f64, du: f64) -> f64 {
        match self {
            Self::RaisedCosine => 0.5 * PI * (PI * u).sin(),
            Self::Tanh { steepness: k } => {
                let c = (k * (u - 0.5)).cosh();
                k / (c * c) / (2.0 * (k / 2.0).tanh())
            }
            Self::Custom(f) => (f(u + du) - f(u - du)) / (2.0 * du),
        }
    }
}

/// Smooth base envelope `ε₀(t) = amplitude · s(t/τ)` for `t ∈ [0, τ]`, held at
/// `amplitude · s(1)` afterwards and zero before.
#[derive(Clone, Debug)]
pub struct BaseRamp {
    pub shape: RampShape,
    pub amplitude: C64,
    pub tau: f64,
}

impl BaseRamp {
    pub fn new(shape: RampShape, amplitude: C64, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Invalid(format!("ramp duration must be positive, got {tau}")));
        }
        if let RampShape::Tanh { steepness } = shape {
            if !(steepness > 0.0) {
                return Err(Error::Invalid("tanh steepness must be positive".into()));
            }
        }
        if !(amplitude.re.is_finite() && amplitude.im.is_finite()) {
            return Err(Error::NonFinite("ramp amplitude"));
        }
        Ok(Self { shape, amplitude, tau })
    }

    pub fn raised_cosine(amplitude: C64, tau: f64) -> Result<Self> {
        Self::new(RampShape::RaisedCosine, amplitude, tau)
    }

    pub fn value(&self, t: f64) -> C64 {
        if t <= 0.0 {
            return self.amplitude * self.shape.value(0.0);
        }
        self.amplitude * self.shape.value((t / self.tau).min(1.0))
    }

    /// `ε̇₀(t)`, zero outside `(0, τ)`.
    pub fn derivative(&self, t: f64) -> C64 {
        if t <= 0.0 || t >= self.tau {
            return C64::default();
        }
        self.amplitude * (self.shape.slope(t / self.tau, 1e-4) / self.tau)
    }

    /// Plateau value `ε₀(τ)`.
    pub fn plateau(&self) -> C64 {
        self.value(self.tau)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnvelopeKind {
    /// Corrected ramp on `[0, τ]`, then held forever.
    TqdOn,
    /// Corrected ramp up, plateau of length `hold`, mirrored corrected ramp down, then off.
    TqdOffOn,
    /// `ε(t) = amplitude` for `t ≥ 0`.
    Constant,
}

/// Complex NLR drive `ε(t)` in the frame rotating at `ω_d`.
#[derive(Clone, Debug)]
pub struct DriveEnvelope {
    base: BaseRamp,
    hold: f64,
    kind: EnvelopeKind,
    lambda0: C64,
}

impl DriveEnvelope {
    /// Constant drive switched on abruptly at `t = 0`.
    pub fn constant(amplitude: C64) -> Self {
        let base = BaseRamp { shape: RampShape::RaisedCosine, amplitude, tau: 1.0 };
        Self { base, hold: f64::INFINITY, kind: EnvelopeKind::Constant, lambda0: C64::new(1.0, 0.0) }
    }

    pub fn zero() -> Self {
        Self::constant(C64::default())
    }

    pub fn base(&self) -> &BaseRamp {
        &self.base
    }

    pub fn tau(&self) -> f64 {
        self.base.tau
    }

    pub fn hold(&self) -> f64 {
        self.hold
    }

    pub fn kind(&self) -> EnvelopeKind {
        self.kind
    }

    /// Drive amplitude during the plateau.
    pub fn plateau(&self) -> C64 {
        match self.kind {
            EnvelopeKind::Constant => self.base.amplitude,
            _ => self.base.plateau(),
        }
    }

    /// Instants where `ε(t)` or its derivative may jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        let tau = self.base.tau;
        match self.kind {
            EnvelopeKind::Constant => vec![0.0],
            EnvelopeKind::TqdOn => vec![0.0, tau],
            EnvelopeKind::TqdOffOn => vec![0.0, tau, tau + self.hold, 2.0 * tau + self.hold],
        }
    }

    pub fn eval(&self, t: f64) -> C64 {
        if t < 0.0 {
            return C64::default();
        }
        let tau = self.base.tau;
        let i = C64::i();
        match self.kind {
            EnvelopeKind::Constant => self.base.amplitude,
            EnvelopeKind::TqdOn | EnvelopeKind::TqdOffOn if t < tau => {
                self.base.value(t) - i * self.base.derivative(t) / self.lambda0
            }
            EnvelopeKind::TqdOn => self.base.plateau(),
            EnvelopeKind::TqdOffOn => {
                let down = tau + self.hold;
                if t < down {
                    self.base.plateau()
                } else if t < down + tau {
                    // Mirror image of the ramp; the time reversal flips the sign of the correction.
                    let s = 2.0 * tau + self.hold - t;
                    self.base.value(s) + i * self.base.derivative(s) / self.lambda0
                } else {
                    C64::default()
                }
            }
        }
    }
}

/// Transitionless envelope `ε₀ − iε̇₀/(δ − iκ/2)` on the ramp. An infinite `hold`
/// gives the one-sided switch-on; a finite one adds the mirrored switch-off.
pub fn tqd_envelope(base: BaseRamp, params: &SystemParams, hold: f64) -> Result<DriveEnvelope> {
    let lambda0 = params.lambda_n(0);
    if lambda0.norm() == 0.0 {
        return Err(Error::Invalid("TQD correction undefined for delta - i kappa/2 = 0".into()));
    }
    if !(hold >= 0.0) {
        return Err(Error::Invalid(format!("hold must be non-negative, got {hold}")));
    }
    let start = base.value(0.0).norm();
    if start > 1e-12 * base.amplitude.norm().max(1.0) {
        return Err(Error::Invalid(format!("base envelope must vanish at t = 0, got |eps0(0)| = {start:e}")));
    }
    let kind = if hold.is_finite() { EnvelopeKind::TqdOffOn } else { EnvelopeKind::TqdOn };
    Ok(DriveEnvelope { base, hold, kind, lambda0 })
}
