use super::mesh::{Mesh, ScalarField};

/// Maps mesh nodes to unknowns. Several nodes may share one unknown
/// (periodic identification); nodes mapped to `None` are held at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub node_to_dof: Vec<Option<usize>>,
    pub num_dofs: usize,
}

impl DofMap {
    /// Homogeneous Dirichlet data: interior nodes only, in `mesh.free_dofs` order.
    pub fn dirichlet(mesh: &Mesh) -> Self {
        let mut node_to_dof = vec![None; mesh.num_nodes()];
        for (d, &n) in mesh.free_dofs.iter().enumerate() {
            node_to_dof[n] = Some(d);
        }
        DofMap {
            node_to_dof,
            num_dofs: mesh.free_dofs.len(),
        }
    }

    /// Every node is its own unknown (the matrix before boundary elimination).
    pub fn all(mesh: &Mesh) -> Self {
        DofMap {
            node_to_dof: (0..mesh.num_nodes()).map(Some).collect(),
            num_dofs: mesh.num_nodes(),
        }
    }

    /// Opposite edges identified; the class of node `(0, 0)` is pinned to
    /// zero to remove the constant null space.
    pub fn periodic_pinned(mesh: &Mesh) -> Self {
        let (nx, ny) = (mesh.nx, mesh.ny);
        let mut node_to_dof = vec![None; mesh.num_nodes()];
        for j in 0..=ny {
            for i in 0..=nx {
                let class = (i % nx) + (j % ny) * nx;
                node_to_dof[i + j * (nx + 1)] = if class == 0 { None } else { Some(class - 1) };
            }
        }
        DofMap {
            node_to_dof,
            num_dofs: nx * ny - 1,
        }
    }

    /// Gathers unknowns from nodal values (first node of each class wins).
    pub fn restrict(&self, field: &ScalarField) -> Vec<f64> {
        let mut out = vec![0.0; self.num_dofs];
        let mut seen = vec![false; self.num_dofs];
        for (n, d) in self.node_to_dof.iter().enumerate() {
            if let Some(d) = *d {
                if !seen[d] {
                    out[d] = field.values[n];
                    seen[d] = true;
                }
            }
        }
        out
    }

    /// Scatters unknowns to nodes; unmapped nodes get exactly zero.
    pub fn expand(&self, x: &[f64]) -> ScalarField {
        assert_eq!(x.len(), self.num_dofs);
        ScalarField::new(self.node_to_dof.iter().map(|d| d.map_or(0.0, |d| x[d])).collect())
    }
}
