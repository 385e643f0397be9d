//! Holistic finite-difference models of the Kuramoto-Sivashinsky equation
//! `u_t + u u_x + R u_xx + u_xxxx = 0` on periodic domains, with an adaptive
//! time integrator, a Fourier pseudospectral reference solver and the
//! verification harness that compares them.
//!
//! The `parallel` feature (on by default) lets independent runs fan out over
//! rayon; see [`exec::Execution`].

pub mod consistency;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod grid;
pub mod integrator;
pub mod rhs;
pub mod series;
pub mod spectral;
pub mod suite;

pub use error::{Error, Result};
pub use exec::Execution;
pub use grid::{norm, wrap, GridSpec, ModelParams, NormKind, StateVector, TruncationLevel};
pub use rhs::{rhs, rhs_with, Corrections, RhsEvaluation};
