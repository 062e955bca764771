//! Zero-delay stochastic trajectories and their number-basis oracle.
//!
//! Only τ = 0 is covered; every entry point rejects a delayed configuration.
//! Independent paths can be mapped over seeds with [`crate::exec::Execution`].

pub mod fock;
pub mod path;
pub mod solution;

pub use fock::{
    coherent_fidelity, coherent_fit, coherent_projection, coherent_vector, fock_sde_oracle, fock_sde_oracle_with,
    FockOptions, FockScheme, FockTrajectory,
};
pub use path::{generate_path, WienerPath};
pub use solution::{
    coherence_trajectory, f_functions, ito_functionals, trajectory, write_trajectory_csv, CoherenceMode, Functionals,
    TrajectoryState,
};
