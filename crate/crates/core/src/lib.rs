//! Pseudo-spectral simulation of the 2D Kuramoto–Sivashinsky equation (vector
//! and scalar forms) and the reduced r-KSE system on the periodic square.
//!
//! The pieces, bottom up:
//!
//! * [`grid`] and [`field`]: the torus discretization, transforms, 2/3-rule
//!   dealiasing, spectral derivatives and Sobolev norms.
//! * [`models`]: linear symbols and dealiased nonlinear terms.
//! * [`phi`] and [`etd`]: contour-integral φ-functions and the ETD-RK4
//!   integrator with an advective CFL controller.
//! * [`galerkin`]: the Galerkin-truncated ODE system evaluated by exact
//!   convolution, used as an independent oracle.
//! * [`diagnostics`]: norms, spectra and runtime invariant monitors.
//! * [`config`], [`initial`], [`harness`], [`fixture`]: run orchestration
//!   and regression replay behind the `kse` binary.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod error;
mod fft;
pub mod field;
pub mod grid;
pub mod models;
pub mod phi;
pub mod etd;
pub mod snapshot;
pub mod galerkin;
pub mod diagnostics;
pub mod config;
pub mod initial;
pub mod harness;
pub mod fixture;

pub use error::{KseError, Result};
pub use field::{NormKind, SpectralField, SpectralOp, VectorField};
pub use grid::{build_grid, Grid, GridSpec, Truncation};
pub use config::RunConfig;
pub use models::{Fields, Model, ModelKind, ModelParams, Nonlinearity};
