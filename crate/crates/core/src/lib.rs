//! Exact non-Markovian dynamics of a damped cavity mode under homodyne-mediated
//! feedback with a loop delay.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] holds the parameter record and initial states.
//! * [`dde`] evaluates the delay series χ(t), the commutator kernels and a
//!   method-of-steps oracle for the underlying delay differential equation.
//! * [`moments`] and [`distribution`] build the Gaussian quadrature statistics
//!   and the marginal distributions of cat states.
//! * [`charfn`] evaluates the symmetrically ordered characteristic function.
//! * [`trajectories`] covers zero-delay quantum trajectories and a Fock-space
//!   oracle for them.
//! * [`verify`] bundles the cross-module property checks behind `delayfb verify`.

pub mod charfn;
pub mod dde;
pub mod distribution;
pub mod error;
pub mod exec;
pub mod model;
pub mod moments;
pub mod quadrature;
pub mod series;
pub mod trajectories;
pub mod verify;

pub use error::{Error, Result};
pub use model::{CoherentSuperposition, FeedbackConfig, NormMode, TimeGrid};
pub use num_complex::Complex64;
