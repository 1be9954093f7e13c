//! Statevector laboratory for measuring barren plateaus in layered
//! hardware-efficient circuits.
//!
//! The crate is organised bottom-up:
//!
//! - [`sim`]: exact statevector simulation (RY, RZ, CNOT), Pauli-Z
//!   expectations, reduced density matrices and von Neumann entropy.
//! - [`ansatz`]: layered circuits with nearest-neighbour or all-to-all CNOT
//!   entanglers.
//! - [`losses`]: global/local costs and data + physics losses built from
//!   periodic finite-difference stencils (heat, Burgers, Saint-Venant).
//! - [`gradients`]: parameter-shift gradients with an analytic outer chain
//!   rule, a finite-difference oracle and the gradient-variance estimator.
//! - [`experiments`]: qubit/depth/PDE sweeps, entanglement sweep, training
//!   and scaling fits.
//! - [`report`]: CSV/JSON serialisation of experiment tables.
//!
//! Qubit `k` is bit `k` of the basis-state index (qubit 0 is the least
//! significant bit) throughout.

pub mod ansatz;
pub mod error;
pub mod experiments;
pub mod gradients;
pub mod losses;
pub mod report;
pub mod sim;

pub use ansatz::{run_circuit, CircuitSpec, Gate, ParamVector, Topology};
pub use error::{Error, Result};
pub use experiments::{
    EntropyResult, EntropyRow, ScalingFit, ScalingModel, SweepResult, SweepRow, TrainTrace,
};
pub use gradients::{GradientVector, VarianceReport};
pub use losses::{Discretization, LossConfig, LossKind, PdeKind, PhysicsTerm};
pub use sim::{DensityMatrix, StateVector};
