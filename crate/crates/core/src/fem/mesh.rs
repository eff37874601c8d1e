use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Uniform triangulation of the rectangle `[0, lx] x [0, ly]`.
///
/// Node `(i, j)` sits at `(i * lx / nx, j * ly / ny)` and has index
/// `i + j * (nx + 1)`. Cell `(i, j)` is split along its lower-left to
/// upper-right diagonal into triangles `2 * (i + j * nx)` (below the
/// diagonal) and `2 * (i + j * nx) + 1` (above it), both counter-clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub areas: Vec<f64>,
    pub boundary_mask: Vec<bool>,
    pub free_dofs: Vec<usize>,
    /// Gradients of the three nodal hat functions on each triangle.
    pub hat_gradients: Vec<[[f64; 2]; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub nx: usize,
    pub ny: usize,
    #[serde(rename = "Lx")]
    pub lx: f64,
    #[serde(rename = "Ly")]
    pub ly: f64,
}

pub fn build_mesh(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Mesh, ConfigError> {
    if nx == 0 {
        return Err(ConfigError::invalid("mesh.nx", "must be at least 1"));
    }
    if ny == 0 {
        return Err(ConfigError::invalid("mesh.ny", "must be at least 1"));
    }
    if !(lx > 0.0 && lx.is_finite()) {
        return Err(ConfigError::invalid("mesh.Lx", "must be positive and finite"));
    }
    if !(ly > 0.0 && ly.is_finite()) {
        return Err(ConfigError::invalid("mesh.Ly", "must be positive and finite"));
    }

    let hx = lx / nx as f64;
    let hy = ly / ny as f64;
    let node_index = |i: usize, j: usize| i + j * (nx + 1);

    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut boundary_mask = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            // endpoints are set exactly so boundary tests are exact
            let x = if i == nx { lx } else { i as f64 * hx };
            let y = if j == ny { ly } else { j as f64 * hy };
            nodes.push([x, y]);
            boundary_mask.push(i == 0 || i == nx || j == 0 || j == ny);
        }
    }

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let n00 = node_index(i, j);
            let n10 = node_index(i + 1, j);
            let n01 = node_index(i, j + 1);
            let n11 = node_index(i + 1, j + 1);
            triangles.push([n00, n10, n11]);
            triangles.push([n00, n11, n01]);
        }
    }

    let mut areas = Vec::with_capacity(triangles.len());
    let mut hat_gradients = Vec::with_capacity(triangles.len());
    for tri in &triangles {
        let (area, grads) = p1_geometry(&nodes, tri);
        areas.push(area);
        hat_gradients.push(grads);
    }

    let free_dofs = (0..nodes.len()).filter(|&n| !boundary_mask[n]).collect();

    Ok(Mesh {
        nx,
        ny,
        lx,
        ly,
        nodes,
        triangles,
        areas,
        boundary_mask,
        free_dofs,
        hat_gradients,
    })
}

fn p1_geometry(nodes: &[[f64; 2]], tri: &[usize; 3]) -> (f64, [[f64; 2]; 3]) {
    let [a, b, c] = tri.map(|n| nodes[n]);
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let inv = 1.0 / det;
    // grad of the hat at vertex k is the rotated opposite edge over 2|T|
    let grads = [
        [(b[1] - c[1]) * inv, (c[0] - b[0]) * inv],
        [(c[1] - a[1]) * inv, (a[0] - c[0]) * inv],
        [(a[1] - b[1]) * inv, (b[0] - a[0]) * inv],
    ];
    (0.5 * det, grads)
}

impl Mesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn domain_area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t].map(|n| self.nodes[n]);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Mesh width `max(lx / nx, ly / ny)`.
    pub fn h(&self) -> f64 {
        (self.lx / self.nx as f64).max(self.ly / self.ny as f64)
    }

    pub fn spec(&self) -> MeshSpec {
        MeshSpec {
            nx: self.nx,
            ny: self.ny,
            lx: self.lx,
            ly: self.ly,
        }
    }

    /// Samples `f` at every node.
    pub fn interpolate<F: Fn(f64, f64) -> f64>(&self, f: F) -> ScalarField {
        ScalarField::new(self.nodes.iter().map(|p| f(p[0], p[1])).collect())
    }

    /// Samples `f` at every node and zeroes the boundary values.
    pub fn interpolate_h10<F: Fn(f64, f64) -> f64>(&self, f: F) -> ScalarField {
        let mut u = self.interpolate(f);
        u.zero_boundary(self);
        u
    }
}

/// Nodal values of a P1 function.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Self {
        ScalarField { values }
    }

    pub fn zeros(mesh: &Mesh) -> Self {
        ScalarField::new(vec![0.0; mesh.num_nodes()])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn zero_boundary(&mut self, mesh: &Mesh) {
        for (v, &b) in self.values.iter_mut().zip(&mesh.boundary_mask) {
            if b {
                *v = 0.0;
            }
        }
    }

    pub fn vanishes_on_boundary(&self, mesh: &Mesh) -> bool {
        self.values
            .iter()
            .zip(&mesh.boundary_mask)
            .all(|(&v, &b)| !b || v == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `a * self + b * other`
    pub fn lincomb(&self, a: f64, other: &ScalarField, b: f64) -> ScalarField {
        ScalarField::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
    }
}

/// Per-triangle values.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementField<T = f64> {
    pub values: Vec<T>,
}

impl<T> ElementField<T> {
    pub fn new(values: Vec<T>) -> Self {
        ElementField { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl ElementField<[f64; 2]> {
    pub fn norms(&self) -> Vec<f64> {
        self.values.iter().map(|g| g[0].hypot(g[1])).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell() {
        let m = build_mesh(1, 1, 1.0, 1.0).unwrap();
        assert_eq!(m.num_nodes(), 4);
        assert_eq!(m.num_triangles(), 2);
        assert_eq!(m.areas.iter().sum::<f64>(), 1.0);
        assert!(m.free_dofs.is_empty());
    }

    #[test]
    fn two_by_two_has_one_interior_node() {
        let m = build_mesh(2, 2, 1.0, 1.0).unwrap();
        assert_eq!(m.num_nodes(), 9);
        assert_eq!(m.num_triangles(), 8);
        assert_eq!(m.free_dofs, vec![4]);
    }

    #[test]
    fn rectangular_counts_and_area() {
        let m = build_mesh(4, 3, 2.0, 1.0).unwrap();
        assert_eq!(m.num_nodes(), 20);
        assert_eq!(m.num_triangles(), 24);
        let total: f64 = m.areas.iter().sum();
        assert!((total - 2.0).abs() <= 2.0 * 1e-12);
        assert!(m.areas.iter().all(|&a| a > 0.0));
    }

    #[test]
    fn boundary_mask_matches_coordinates() {
        let m = build_mesh(5, 7, 1.3, 0.7).unwrap();
        for (p, &b) in m.nodes.iter().zip(&m.boundary_mask) {
            let on = p[0] == 0.0 || p[0] == 1.3 || p[1] == 0.0 || p[1] == 0.7;
            assert_eq!(on, b);
        }
        assert_eq!(m.free_dofs.len(), 4 * 6);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(build_mesh(0, 1, 1.0, 1.0).is_err());
        assert!(build_mesh(1, 0, 1.0, 1.0).is_err());
        assert!(build_mesh(1, 1, 0.0, 1.0).is_err());
        assert!(build_mesh(1, 1, 1.0, -2.0).is_err());
    }

    #[test]
    fn hat_gradients_sum_to_zero() {
        let m = build_mesh(3, 2, 1.0, 2.0).unwrap();
        for g in &m.hat_gradients {
            assert!((g[0][0] + g[1][0] + g[2][0]).abs() < 1e-12);
            assert!((g[0][1] + g[1][1] + g[2][1]).abs() < 1e-12);
        }
    }
}
