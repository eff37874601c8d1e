use super::dofs::DofMap;
use super::mesh::{ElementField, Mesh, ScalarField};
use super::sparse::SparseSpd;
use crate::error::StepError;
use crate::par;

/// Fixed sparsity layout plus per-triangle scatter positions for one
/// mesh and one dof map. Every matrix it produces shares the same layout,
/// so matrices can be combined entry-wise.
#[derive(Debug, Clone)]
pub struct Assembler {
    pub dofs: DofMap,
    pattern: SparseSpd,
    /// `scatter[t][3 * a + b]` is the value slot receiving the local
    /// `(a, b)` entry of triangle `t`, if both nodes carry unknowns.
    scatter: Vec<[Option<usize>; 9]>,
    /// Unit-coefficient local stiffness `|T| grad(phi_a) . grad(phi_b)`.
    unit_stiffness: Vec<[f64; 9]>,
    areas: Vec<f64>,
}

impl Assembler {
    pub fn new(mesh: &Mesh, dofs: DofMap) -> Self {
        let mut rows = vec![Vec::new(); dofs.num_dofs];
        for tri in &mesh.triangles {
            for &a in tri {
                if let Some(da) = dofs.node_to_dof[a] {
                    for &b in tri {
                        if let Some(db) = dofs.node_to_dof[b] {
                            rows[da].push(db);
                        }
                    }
                }
            }
        }
        let pattern = SparseSpd::from_pattern(rows);

        let scatter = mesh
            .triangles
            .iter()
            .map(|tri| {
                let mut s = [None; 9];
                for a in 0..3 {
                    for b in 0..3 {
                        if let (Some(da), Some(db)) = (dofs.node_to_dof[tri[a]], dofs.node_to_dof[tri[b]]) {
                            s[3 * a + b] = pattern.position(da, db);
                        }
                    }
                }
                s
            })
            .collect();

        let unit_stiffness = par::map_range(mesh.num_triangles(), |t| {
            let g = &mesh.hat_gradients[t];
            let area = mesh.areas[t];
            let mut k = [0.0; 9];
            for a in 0..3 {
                for b in 0..3 {
                    k[3 * a + b] = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                }
            }
            k
        });

        Assembler {
            dofs,
            pattern,
            scatter,
            unit_stiffness,
            areas: mesh.areas.clone(),
        }
    }

    pub fn num_dofs(&self) -> usize {
        self.dofs.num_dofs
    }

    pub fn num_triangles(&self) -> usize {
        self.areas.len()
    }

    fn scatter_locals(&self, locals: &[[f64; 9]]) -> SparseSpd {
        let mut m = self.pattern.clone();
        // sequential in triangle order: every slot sums in a fixed order
        for (slots, local) in self.scatter.iter().zip(locals) {
            for (slot, v) in slots.iter().zip(local) {
                if let Some(p) = *slot {
                    m.values[p] += v;
                }
            }
        }
        m
    }

    /// Consistent P1 mass matrix, or its row-sum lumped variant.
    pub fn mass(&self, lumped: bool) -> SparseSpd {
        let locals = par::map_slice(&self.areas, |&area| {
            let mut m = [0.0; 9];
            if lumped {
                for a in 0..3 {
                    m[4 * a] = area / 3.0;
                }
            } else {
                for a in 0..3 {
                    for b in 0..3 {
                        m[3 * a + b] = if a == b { area / 6.0 } else { area / 12.0 };
                    }
                }
            }
            m
        });
        self.scatter_locals(&locals)
    }

    /// Stiffness matrix of `sum_T coeff_T |T| grad(u) . grad(v)`.
    pub fn stiffness(&self, coeff: &ElementField) -> Result<SparseSpd, StepError> {
        if coeff.len() != self.num_triangles() {
            return Err(StepError::Argument(format!(
                "coefficient field has {} entries, mesh has {} triangles",
                coeff.len(),
                self.num_triangles()
            )));
        }
        let locals = par::map_range(self.num_triangles(), |t| {
            let c = coeff.values[t];
            self.unit_stiffness[t].map(|k| c * k)
        });
        Ok(self.scatter_locals(&locals))
    }

    /// Right-hand side `b_a = sum_T coeff_T |T| xi . grad(phi_a)`.
    pub fn flux_load(&self, mesh: &Mesh, coeff: &ElementField, xi: [f64; 2]) -> Vec<f64> {
        let mut b = vec![0.0; self.num_dofs()];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let g = &mesh.hat_gradients[t];
            let w = coeff.values[t] * mesh.areas[t];
            for a in 0..3 {
                if let Some(d) = self.dofs.node_to_dof[tri[a]] {
                    b[d] += w * (xi[0] * g[a][0] + xi[1] * g[a][1]);
                }
            }
        }
        b
    }
}

/// Consistent mass matrix on the interior (Dirichlet) unknowns.
pub fn assemble_mass(mesh: &Mesh) -> SparseSpd {
    Assembler::new(mesh, DofMap::dirichlet(mesh)).mass(false)
}

/// Stiffness matrix on the interior (Dirichlet) unknowns.
pub fn assemble_stiffness(mesh: &Mesh, coeff: &ElementField) -> Result<SparseSpd, StepError> {
    Assembler::new(mesh, DofMap::dirichlet(mesh)).stiffness(coeff)
}

/// Piecewise-constant gradient of a P1 field on each triangle.
pub fn element_gradients(mesh: &Mesh, u: &ScalarField) -> ElementField<[f64; 2]> {
    assert_eq!(u.len(), mesh.num_nodes(), "field length does not match mesh");
    ElementField::new(par::map_range(mesh.num_triangles(), |t| {
        let tri = &mesh.triangles[t];
        let g = &mesh.hat_gradients[t];
        let mut out = [0.0; 2];
        for a in 0..3 {
            let v = u.values[tri[a]];
            out[0] += v * g[a][0];
            out[1] += v * g[a][1];
        }
        out
    }))
}
