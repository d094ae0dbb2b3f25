//! Tunable two-qubit coupler built from a bus mode and a driven nonlinear
//! resonator (NLR) whose bus-conditional displacement suppresses bus transitions.
//!
//! Mode order everywhere is `(q1, q2, b, r)` with the resonator index fastest.
//! Frequencies are angular (rad/s) and times are seconds unless a name says otherwise.

pub mod analytics;
pub mod circuit;
pub mod dynamics;
mod error;
pub mod hilbert;
pub mod model;
pub mod ode;
pub mod spectral;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
