//! Spectral Faedo-Galerkin approximation of the regularized compressible
//! Navier-Stokes-Fourier system on the periodic torus, with energy, entropy
//! and inequality diagnostics.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod cutoffs;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod momentum;
pub mod params;
pub mod rates;
pub mod state;
pub mod thermal;
pub mod transport;

pub use error::{Error, Result};
