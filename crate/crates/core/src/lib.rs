//! Nodal discontinuous Galerkin solver for the one-dimensional Euler equations
//! whose time derivative is corrected cell by cell so that the discrete total
//! entropy decays at least as fast as the most dissipative weak solution allows.
//!
//! The pieces, bottom up:
//!
//! - [`element`]: LGL collocation element and Legendre transform.
//! - [`physics`]: Euler (and Burgers) fluxes, entropy pairs, wave-speed bounds.
//! - [`dg`]: the uncorrected semidiscretisation with local Lax-Friedrichs fluxes.
//! - [`predictor`]: per-interface lower bounds on the entropy dissipation rate.
//! - [`filter`]: positive conservative filter and its generator from a heat semigroup.
//! - [`limiter`]: correction sizes and the corrected right-hand side.
//! - [`time`]: SSPRK(4,3) and eighth-order Dormand-Prince steppers.
//! - [`fv`]: first-order Lax-Friedrichs finite-volume reference.
//! - [`experiment`]: problem catalogue, runs, studies and file output.

pub mod dg;
pub mod element;
pub mod error;
pub mod experiment;
pub mod filter;
pub mod fv;
pub mod limiter;
pub mod physics;
pub mod predictor;
pub mod time;

pub use error::{PhysicsError, SetupError, SolverError};
pub use physics::{Burgers, ConservationLaw, Conserved, EulerParams, StateVector};
