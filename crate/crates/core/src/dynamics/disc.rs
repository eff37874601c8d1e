use crate::damage::{coefficient_field, DamageState, MaterialParams};
use crate::fem::{element_gradients, Assembler, DofMap, ElementField, Mesh, ScalarField, SparseSpd};
use crate::fem::{DEFAULT_MAX_ITER, DEFAULT_TOL};

use super::data::ForcingTerm;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub lumped_mass: bool,
    /// Cap on alternating (u, D) iterations per time step.
    pub max_alternations: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            lumped_mass: false,
            max_alternations: 50,
        }
    }
}

/// Mesh, assembled operators and loads shared by every step of a run.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: Mesh,
    pub params: MaterialParams,
    pub settings: SolverSettings,
    asm: Assembler,
    /// Mass matrix on interior unknowns.
    pub mass: SparseSpd,
    /// Mass matrix over all nodes; pairs nodal forcing with test functions.
    full_mass: SparseSpd,
}

impl Discretization {
    pub fn new(mesh: Mesh, params: MaterialParams, settings: SolverSettings) -> Self {
        let asm = Assembler::new(&mesh, DofMap::dirichlet(&mesh));
        let mass = asm.mass(settings.lumped_mass);
        let full_mass = Assembler::new(&mesh, DofMap::all(&mesh)).mass(settings.lumped_mass);
        Discretization {
            mesh,
            params,
            settings,
            asm,
            mass,
            full_mass,
        }
    }

    pub fn num_dofs(&self) -> usize {
        self.asm.num_dofs()
    }

    pub fn restrict(&self, u: &ScalarField) -> Vec<f64> {
        self.asm.dofs.restrict(u)
    }

    pub fn expand(&self, x: &[f64]) -> ScalarField {
        self.asm.dofs.expand(x)
    }

    pub fn coefficients(&self, d: &DamageState) -> ElementField {
        coefficient_field(&self.params, d)
    }

    pub fn stiffness(&self, d: &DamageState) -> SparseSpd {
        self.asm
            .stiffness(&self.coefficients(d))
            .expect("damage state sized to the mesh")
    }

    /// Load vector `<f(t), phi_i>` on interior unknowns.
    pub fn load(&self, forcing: &ForcingTerm, t: f64) -> Vec<f64> {
        if forcing.is_zero() {
            return vec![0.0; self.num_dofs()];
        }
        let f = forcing.nodal(&self.mesh, t);
        self.pair_nodal(&f)
    }

    /// Load vector of `d/dt f(t)`.
    pub fn load_time_derivative(&self, forcing: &ForcingTerm, t: f64) -> Vec<f64> {
        if forcing.is_zero() {
            return vec![0.0; self.num_dofs()];
        }
        let f = forcing.nodal_time_derivative(&self.mesh, t);
        self.pair_nodal(&f)
    }

    fn pair_nodal(&self, f: &ScalarField) -> Vec<f64> {
        let full = self.full_mass.matvec(&f.values);
        self.restrict(&ScalarField::new(full))
    }

    pub fn gradients(&self, u: &ScalarField) -> ElementField<[f64; 2]> {
        element_gradients(&self.mesh, u)
    }

    /// `||x||_{L2}^2` of an interior vector.
    pub fn l2_sq(&self, x: &[f64]) -> f64 {
        self.mass.quad_form(x)
    }
}
