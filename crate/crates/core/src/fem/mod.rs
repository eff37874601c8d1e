//! P1 finite elements on uniform triangulations of a rectangle.

mod assemble;
mod cg;
mod dofs;
mod mesh;
mod sparse;

pub use assemble::{assemble_mass, assemble_stiffness, element_gradients, Assembler};
pub use cg::{solve_spd, solve_spd_from, SolveStats, DEFAULT_MAX_ITER, DEFAULT_TOL};
pub use dofs::DofMap;
pub use mesh::{build_mesh, ElementField, Mesh, MeshSpec, ScalarField};
pub use sparse::SparseSpd;
