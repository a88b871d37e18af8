//! Modal machinery for boundary control of a viscoelastic (Maxwell–Boltzmann)
//! plate or beam.
//!
//! The crate is `no_std` and only needs `alloc`. It is organized bottom-up:
//!
//! * [`numgrid`]: uniform time grids, boundary quadrature, trapezoid
//!   convolution and inner products.
//! * [`kernels`]: Prony memory kernels, their resolvent, the MacCamy constants
//!   `(a, b, K)` and the damping shift `v = e^{-(a/2)t} w`.
//! * [`spectral`]: eigenvalues and boundary traces of desk-scale bases, the
//!   normalized trace sequence `Ψ_n`, and the weighted state spaces `Y`, `X`.
//! * [`dynamics`]: the scalar memory oscillator `z_n`, forward simulation of the
//!   raw viscoelastic equation, and the elastic Duhamel response.
//! * [`control`]: moment functions, Gram systems, minimum-norm control
//!   synthesis, reachability maps and the compactness/annihilator diagnostics.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod control;
pub mod dynamics;
pub mod error;
pub mod kernels;
mod linalg;
pub mod numgrid;
pub mod spectral;

pub use error::{Error, Result};
