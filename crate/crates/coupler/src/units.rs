//! Conversions between ordinary-frequency inputs and internal angular units.

use std::f64::consts::TAU;

/// `f` in MHz to rad/s.
pub fn mhz(f: f64) -> f64 {
    TAU * 1e6 * f
}

/// `f` in GHz to rad/s.
pub fn ghz(f: f64) -> f64 {
    TAU * 1e9 * f
}

/// `f` in kHz to rad/s.
pub fn khz(f: f64) -> f64 {
    TAU * 1e3 * f
}

/// rad/s to MHz.
pub fn to_mhz(w: f64) -> f64 {
    w / (TAU * 1e6)
}

pub fn ns(t: f64) -> f64 {
    t * 1e-9
}

pub fn us(t: f64) -> f64 {
    t * 1e-6
}
