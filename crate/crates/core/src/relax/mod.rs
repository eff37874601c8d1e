//! Relaxed energy density, rank-one laminates and periodic cell problems.

mod cell;
mod density;
mod laminate;

pub use cell::{solve_cell_problem, CellMesh, CellPattern, CellSolution};
pub use density::{w_density, w_relaxed, w_relaxed_slope};
pub use laminate::{
    laminate_effective, laminate_for_gradient, relaxed_via_lamination_oracle, EffectiveTensor, LaminateSpec,
};
