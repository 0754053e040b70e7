//! Steady-state thermodynamics of a two-qubit autonomous thermal machine
//! driven by a tape of (possibly coherent) qubits.

pub mod error;
pub mod model;
pub mod presets;
pub mod oracle;
pub mod steady;
pub mod sweepopt;
pub mod tapemap;
pub mod validate;
pub mod thermo;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use model::{
    bath_rates, gibbs_qubit, incoherent_tape_beta, qubit_spectrum, tape_rates, virtual_beta,
    GapTemplate, MachineConfig, RatePair, TapeQubitState,
};
pub use steady::{build_dynamical_matrix, solve_steady_state, DynamicalMatrix, SteadyState};
pub use tapemap::{apply_map, second_order_shifts, MapOutput};
pub use thermo::{classify_regime, default_tolerance, CurrentSet, Regime};
pub use sweepopt::{
    evaluate_point, optimize_gap, sweep, CAxis, GapRange, OptimizationTarget, SweepGrid,
    SweepRecord, SweepTable,
};
pub use validate::{run_validation, Fault, ValidationLevel, ValidationReport};
