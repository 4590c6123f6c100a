//! Quantum Zeno and anti-Zeno decay rates of a two-level system coupled to a
//! continuum, under repeated projective measurements.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod criterion;
pub mod error;
pub mod estimate;
pub mod filter;
pub mod lorentzian;
pub mod quad;
pub mod special;
pub mod spectra;
pub mod spline;
pub mod sweep;
pub mod volterra;

pub use error::{Result, ZenoError};
pub use estimate::{DecayEstimate, EstimateWarning, Method};
pub use spectra::{SpectrumModel, SystemConfig, TabulatedSpectrum};
