use super::sparse::SparseSpd;
use crate::error::SolverError;
use crate::par;

/// Default relative residual target.
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final `||A x - b|| / ||b||`, recomputed from the returned iterate.
    pub relative_residual: f64,
}

/// Solves `A x = b` by Jacobi-preconditioned conjugate gradients.
pub fn solve_spd(a: &SparseSpd, b: &[f64], tol: f64) -> Result<Vec<f64>, SolverError> {
    solve_spd_from(a, b, None, tol, DEFAULT_MAX_ITER).map(|(x, _)| x)
}

/// Like [`solve_spd`] with an optional initial guess and iteration cap.
///
/// Converged means the recomputed residual satisfies `||A x - b|| <= tol ||b||`.
pub fn solve_spd_from(
    a: &SparseSpd,
    b: &[f64],
    guess: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats), SolverError> {
    let n = a.dim;
    assert_eq!(b.len(), n, "right-hand side length does not match matrix");
    let b_norm = par::norm(b);
    if b_norm == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveStats {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }

    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = match guess {
        Some(g) => g.to_vec(),
        None => vec![0.0; n],
    };
    let mut ax = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut ap = vec![0.0; n];

    a.matvec_into(&x, &mut ax);
    par::fill(&mut r, |i| b[i] - ax[i]);
    let target = tol * b_norm;
    // a few restarts guard against drift between the recursive and true residual
    let mut iterations = 0;
    loop {
        par::fill(&mut z, |i| inv_diag[i] * r[i]);
        let mut p = z.clone();
        let mut rz = par::dot(&r, &z);
        let mut r_norm = par::norm(&r);
        while r_norm > target && iterations < max_iter {
            a.matvec_into(&p, &mut ap);
            let pap = par::dot(&p, &ap);
            if pap <= 0.0 {
                break;
            }
            let step = rz / pap;
            for i in 0..n {
                x[i] += step * p[i];
                r[i] -= step * ap[i];
            }
            par::fill(&mut z, |i| inv_diag[i] * r[i]);
            let rz_next = par::dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
            r_norm = par::norm(&r);
            iterations += 1;
        }

        a.matvec_into(&x, &mut ax);
        par::fill(&mut r, |i| b[i] - ax[i]);
        let true_norm = par::norm(&r);
        if true_norm <= target {
            return Ok((
                x,
                SolveStats {
                    iterations,
                    relative_residual: true_norm / b_norm,
                },
            ));
        }
        if iterations >= max_iter {
            return Err(SolverError {
                iterations,
                residual: true_norm / b_norm,
            });
        }
    }
}
