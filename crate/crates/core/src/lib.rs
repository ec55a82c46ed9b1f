//! Numerical laboratory for the GRW collapse model in which every flash
//! sources a classical Newtonian potential.
//!
//! The crate is organised around the objects of the model:
//!
//! * [`units`] holds the physical parameters and the gravitational length
//!   `r_G = G m_k m_l / (hbar lambda)`.
//! * [`state`] discretises wavefunctions and density matrices on tensor grids.
//! * [`collapse`] implements the Gaussian jump operators and flash sampling.
//! * [`gravity`] turns a flash into the instantaneous phase kick it imprints.
//! * [`dynamics`] contains the stochastic unraveling and the master equation.
//! * [`analysis`] evaluates the decoherence kernel and its signatures.
//!
//! Parallel loops go through [`exec::Execution`]; with the `parallel` feature
//! disabled every loop runs sequentially and produces identical results.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod collapse;
pub mod dynamics;
mod error;
pub mod exec;
pub mod gravity;
pub mod quadrature;
pub mod rng;
pub mod state;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64;
