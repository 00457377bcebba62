//! Variable-step, stabilized exponential time differencing multistep (ETD-MS)
//! schemes for gradient flows `du/dt + εLu = F(u)` on doubly periodic grids.
//!
//! The crate is `no_std` and only needs `alloc`. It contains the numerical
//! pieces only: spectral operators, the Lagrange/stabilization coefficient
//! engine, the exact per-mode ETD stepper with dense output, the
//! no-slope-selection thin-film model, time meshes, the adaptive controller
//! and a set of independent reference solvers used for verification.
//! File formats, configuration and the CLI live in the `etdms` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod adaptive;
pub mod coefficients;
pub mod error;
pub mod etd;
pub mod integrator;
pub mod mesh;
pub mod model;
pub mod nss;
pub mod oracle;
pub mod quadrature;
pub mod random;
pub mod spectral;

mod math;

pub use error::{Error, Result};
pub use num_complex::Complex64;
