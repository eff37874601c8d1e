//! The incremental variational time-stepping scheme.

mod data;
mod disc;
mod run;
mod step;

pub use data::{DamageDescriptor, FieldDescriptor, ForcingTerm, SpaceProfile, TimeProfile};
pub use disc::{Discretization, SolverSettings};
pub use run::{run_dynamics, run_with, RunFailure, Scenario, Snapshot, StepReport, ThresholdRow, Trajectory};
pub use step::{
    brute_force_step, incremental_step, initial_step, solve_displacement, BruteForceOutcome, DynamicState,
    StepOutcome, BRUTE_FORCE_CAP,
};
