//! Spectral laboratory for small perturbations of shear flows close to Couette.
//!
//! Everything in this crate works on the doubly periodic box `T × [-L_v/2, L_v/2)`
//! in frequency space. The x-direction has period `2π`, so `k` is an integer,
//! and the v-direction is a truncation of the real line with period `L_v`.
//!
//! The crate is `no_std` (it needs `alloc`). Anything that touches files,
//! threads, or a fast FFT lives in the companion `shearlab` crate, which plugs
//! a real FFT into [`transform::FftBackend`].
//!
//! Module map:
//!
//! * [`grid`], [`field`], [`ops`], [`transform`]: frequency grids, fields,
//!   moving-frame derivative multipliers, dealiasing, physical-space transforms.
//! * [`kelvin`]: closed-form linear evolution around Couette and the rates it
//!   implies (enhanced dissipation, inviscid damping, Orr amplification).
//! * [`multiplier`]: the ghost multiplier `M = M1 M2` and the weight `A = M<D>^N`.
//! * [`shear`]: heat-evolved background shear, the coordinate change and its
//!   inverse, and the coefficients `a`, `b`.
//! * [`solver`]: time stepping in the Couette frame and in the general frame.
//! * [`diagnostics`]: weighted energies, dissipation functionals, the energy
//!   budget, bootstrap classification, and rate fits.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod diagnostics;
pub mod error;
pub mod field;
pub mod fit;
pub mod grid;
pub mod kelvin;
pub mod math;
pub mod multiplier;
pub mod ops;
pub mod shear;
pub mod solver;
pub mod transform;

pub use error::{Error, Result};
pub use field::SpectralField;
pub use grid::FrequencyGrid;
pub use num_complex::Complex64;

/// `exp(-2π)`: the lower bound on the ghost multiplier used throughout.
pub const MULTIPLIER_FLOOR: f64 = 0.001_867_442_731_707_988_8;
