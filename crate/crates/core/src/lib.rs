//! Classical wave functions on phase space and their quantum transform.
//!
//! A classical wave function is a real amplitude `ψ(z, p)` with `w = ψ²`.
//! Partial Fourier transform in `p` gives a hermitian two-point field
//! `ψ̃(x, y)`; coarse graining over `y` gives a density matrix, and its
//! Wigner function is the quantum counterpart of `w`. This crate holds the
//! grids, transforms, evolution laws, observables and diagnostics. It is
//! `no_std` and only needs `alloc`.
//!
//! Conventions: `ħ = 1`, one dimension, phase-space measure `dz dp / 2π`.

#![no_std]
// `!(x > 0.0)` is how NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod fft;
pub mod grid;
pub mod linalg;
pub mod observables;
pub mod phase_ext;
pub mod potential;
pub mod states;
pub mod transforms;

pub use error::{Error, Result};
pub use grid::{Axes, Axis, Field2D, Grid};
pub use num_complex::Complex64;
pub use potential::Potential;
