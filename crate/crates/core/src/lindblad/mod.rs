//! Master-equation checks of the microscopic readout numbers.
//!
//! [`solver`] holds the density matrix, the model container, fixed-step
//! integration and the steady-state solve. [`models`] builds the two-level
//! and full Zeeman-resolved atom-cavity models and reads weak-probe fluxes
//! from them.

mod cg;
pub mod models;
pub mod solver;

pub use cg::{branching_ratio, cg_coefficient, clebsch_gordan};
pub use models::{
    build_full_model, build_two_level_model, extinction_ratio, purcell_ratio, scatter_fraction, AtomCavitySpec,
    ReadoutModel, ScatterTally, TwoLevelSpec, WeakDriveResponse, DEFAULT_DRIVE,
};
pub use solver::{evolve, steady_state, CollapseOp, DecayChannel, DensityMatrix, LindbladModel};
