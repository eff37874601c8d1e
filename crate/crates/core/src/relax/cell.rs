use serde::{Deserialize, Serialize};

use super::laminate::EffectiveTensor;
use crate::error::SolverError;
use crate::fem::{build_mesh, solve_spd_from, Assembler, DofMap, ElementField, Mesh, ScalarField};
use crate::fem::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::par;

/// Periodic P1 discretization of the unit cell `[0, 1)^2`.
#[derive(Debug, Clone)]
pub struct CellMesh {
    pub mesh: Mesh,
    asm: Assembler,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSolution {
    /// `inf_phi int A (xi + grad phi) . (xi + grad phi)`
    pub value: f64,
    /// Periodic corrector with zero mean.
    pub corrector: ScalarField,
}

impl CellMesh {
    pub fn new(n: usize) -> Self {
        let mesh = build_mesh(n, n, 1.0, 1.0).expect("positive cell resolution");
        let asm = Assembler::new(&mesh, DofMap::periodic_pinned(&mesh));
        CellMesh {
            mesh,
            asm,
            tol: DEFAULT_TOL,
        }
    }

    pub fn solve(&self, coeff: &ElementField, xi: [f64; 2]) -> Result<CellSolution, SolverError> {
        let k = self.asm.stiffness(coeff).map_err(|_| SolverError {
            iterations: 0,
            residual: f64::NAN,
        })?;
        let b: Vec<f64> = self
            .asm
            .flux_load(&self.mesh, coeff, xi)
            .into_iter()
            .map(|v| -v)
            .collect();
        let (phi, _) = solve_spd_from(&k, &b, None, self.tol, DEFAULT_MAX_ITER.max(10 * k.dim))?;
        let mut corrector = self.asm.dofs.expand(&phi);
        // pinning one node fixes the additive constant; shift to zero mean
        let mean = cell_mean(&self.mesh, &corrector);
        corrector.values.iter_mut().for_each(|v| *v -= mean);

        let grads = crate::fem::element_gradients(&self.mesh, &corrector);
        let value = par::sum_range(self.mesh.num_triangles(), |t| {
            let g = grads.values[t];
            let e = [xi[0] + g[0], xi[1] + g[1]];
            coeff.values[t] * self.mesh.areas[t] * (e[0] * e[0] + e[1] * e[1])
        });
        Ok(CellSolution { value, corrector })
    }

    /// Full tensor from the directions `e1`, `e2` and `(e1 + e2) / sqrt 2`.
    pub fn effective_tensor(&self, coeff: &ElementField) -> Result<EffectiveTensor, SolverError> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let dirs = [[1.0, 0.0], [0.0, 1.0], [s, s]];
        let values = par::map_tasks(3, |i| self.solve(coeff, dirs[i]).map(|c| c.value));
        let [q1, q2, q12] = [values[0].clone()?, values[1].clone()?, values[2].clone()?];
        let off = q12 - 0.5 * (q1 + q2);
        Ok(EffectiveTensor([[q1, off], [off, q2]]))
    }

    pub fn coefficients(&self, pattern: &CellPattern) -> ElementField {
        pattern.sample(&self.mesh)
    }
}

fn cell_mean(mesh: &Mesh, u: &ScalarField) -> f64 {
    mesh.triangles
        .iter()
        .zip(&mesh.areas)
        .map(|(tri, a)| a * tri.iter().map(|&n| u.values[n]).sum::<f64>() / 3.0)
        .sum()
}

/// `A0 xi . xi` for a coefficient field on a periodic unit-cell mesh.
pub fn solve_cell_problem(cell: &CellMesh, coeff: &ElementField, xi: [f64; 2]) -> Result<f64, SolverError> {
    cell.solve(coeff, xi).map(|s| s.value)
}

/// Two-phase microstructures on the unit cell, sampled at triangle centroids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CellPattern {
    Uniform {
        value: f64,
    },
    /// `alpha` for `y < d`, `beta` above (layers normal to `e2`).
    HorizontalLaminate {
        alpha: f64,
        beta: f64,
        d: f64,
    },
    /// `alpha` for `x < d`, `beta` to the right (layers normal to `e1`).
    VerticalLaminate {
        alpha: f64,
        beta: f64,
        d: f64,
    },
    /// 2x2 checkerboard with `alpha` on the diagonal squares.
    Checkerboard {
        alpha: f64,
        beta: f64,
    },
}

impl CellPattern {
    pub fn sample(&self, mesh: &Mesh) -> ElementField {
        ElementField::new(
            (0..mesh.num_triangles())
                .map(|t| {
                    let [x, y] = mesh.centroid(t);
                    match *self {
                        CellPattern::Uniform { value } => value,
                        CellPattern::HorizontalLaminate { alpha, beta, d } => {
                            if y < d {
                                alpha
                            } else {
                                beta
                            }
                        }
                        CellPattern::VerticalLaminate { alpha, beta, d } => {
                            if x < d {
                                alpha
                            } else {
                                beta
                            }
                        }
                        CellPattern::Checkerboard { alpha, beta } => {
                            if (x < 0.5) == (y < 0.5) {
                                alpha
                            } else {
                                beta
                            }
                        }
                    }
                })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_coefficient() {
        let cell = CellMesh::new(8);
        let c = cell.coefficients(&CellPattern::Uniform { value: 2.5 });
        let sol = cell.solve(&c, [0.6, 0.8]).unwrap();
        assert!((sol.value - 2.5).abs() < 1e-12);
        assert!(sol.corrector.values.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn small_laminate_is_exact() {
        let cell = CellMesh::new(8);
        let c = cell.coefficients(&CellPattern::HorizontalLaminate {
            alpha: 1.0,
            beta: 3.0,
            d: 0.5,
        });
        let across = solve_cell_problem(&cell, &c, [0.0, 1.0]).unwrap();
        let along = solve_cell_problem(&cell, &c, [1.0, 0.0]).unwrap();
        assert!((across - 1.5).abs() < 1e-8, "{across}");
        assert!((along - 2.0).abs() < 1e-12, "{along}");
        let a = cell.effective_tensor(&c).unwrap();
        assert!(a.0[0][1].abs() < 1e-8);
    }

    #[test]
    fn corrector_has_zero_mean() {
        let cell = CellMesh::new(6);
        let c = cell.coefficients(&CellPattern::Checkerboard {
            alpha: 1.0,
            beta: 4.0,
        });
        let sol = cell.solve(&c, [1.0, 0.0]).unwrap();
        assert!(cell_mean(&cell.mesh, &sol.corrector).abs() < 1e-14);
    }
}
