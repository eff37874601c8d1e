//! Dynamic two-phase brittle damage in anti-plane elasticity.
//!
//! The crate discretizes the displacement with P1 finite elements on a
//! uniform triangulation and advances time with an incremental variational
//! scheme: each step jointly minimizes elastic energy, dissipated energy
//! `k |D|` and a kinetic penalty built from the two previous displacements,
//! over displacements `u` and damage sets `D` containing the previous one.
//! Around the scheme sit exact discrete energy audits, threshold audits, the
//! relaxed energy density and its laminate realization, and a periodic
//! cell-problem solver for effective coefficients.

// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod damage;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod fem;
pub mod harness;
pub mod io;
pub mod par;
pub mod relax;

pub use damage::{DamageState, MaterialParams};
pub use error::{ConfigError, IoError, SolverError, StepError};
