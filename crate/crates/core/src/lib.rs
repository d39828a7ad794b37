//! Calibrated energy model for matrix-vector multiplications on 1T1R RRAM
//! crossbars.
//!
//! The crate condenses the circuit-level behaviour of a 1T1R cell into a
//! handful of calibrated parameters ([`cellmodel::CellModel`]) and evaluates
//! the energy of whole MVM operations from them. Wire parasitic resistance is
//! handled by a steady-state solve of the crossbar network
//! ([`solver`]), which reduces every pulse to one equivalent conductance.
//!
//! The pipeline for one request is:
//!
//! 1. [`mapping`] turns signed integer weights into conductance tiles
//!    (bias or differential mapping, with cell spatial bit-slicing),
//! 2. [`encoding`] streams integer inputs one bit per pulse,
//! 3. [`solver`] reduces each pulse on each tile to an equivalent conductance,
//! 4. [`energy`] accumulates the pulse energies into an [`energy::EnergyReport`].
//!
//! [`mvmunit::MvmUnit`] glues these together and returns the exact integer
//! result next to the energy report. [`workload`] provides im2col lowering,
//! synthetic generators and the tensor fixture format.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cellmodel;
pub mod encoding;
pub mod energy;
mod error;
pub mod mapping;
pub mod mvmunit;
pub mod solver;
pub mod workload;

pub use error::{Error, Result};

pub use cellmodel::{CalibrationFit, CellModel, PulseSpec};
pub use encoding::{PulseTrain, Signedness};
pub use energy::EnergyReport;
pub use mapping::{ConductanceTile, MappingKind, MappingScheme};
pub use mvmunit::{MvmConfig, MvmRequest, MvmUnit, SolverKind};
pub use solver::{CrossbarCircuit, SolveResult, SolverOptions};
