use crate::damage::MaterialParams;
use crate::error::StepError;

/// Rank-one laminate: weak-phase volume fraction `d`, layer normal, and the
/// gradient magnitudes `(beta lambda / alpha, lambda)` in the weak and
/// strong layers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaminateSpec {
    pub d: f64,
    pub normal: [f64; 2],
    pub slopes: (f64, f64),
}

impl LaminateSpec {
    pub fn mean_gradient(&self) -> f64 {
        self.d * self.slopes.0 + (1.0 - self.d) * self.slopes.1
    }

    /// Layer-wise energy `d W_alpha(s_0) + (1 - d) W_beta(s_1)`.
    pub fn energy(&self, params: &MaterialParams) -> f64 {
        let (weak, strong) = self.slopes;
        self.d * (0.5 * params.alpha * weak * weak + params.k)
            + (1.0 - self.d) * 0.5 * params.beta * strong * strong
    }
}

/// Optimal laminate realizing the relaxed energy at an intermediate
/// gradient `t` in `[lambda, beta lambda / alpha]`.
pub fn laminate_for_gradient(
    params: &MaterialParams,
    t: f64,
    normal: [f64; 2],
) -> Result<LaminateSpec, StepError> {
    let (lambda, upper) = (params.lambda, params.upper_knee());
    if !(t >= lambda && t <= upper) {
        return Err(StepError::Argument(format!(
            "gradient {t} outside the laminate range [{lambda}, {upper}]"
        )));
    }
    let norm = normal[0].hypot(normal[1]);
    if !(norm > 0.0) {
        return Err(StepError::Argument("laminate normal must be non-zero".into()));
    }
    let d = ((t - lambda) * params.alpha / (lambda * (params.beta - params.alpha))).clamp(0.0, 1.0);
    Ok(LaminateSpec {
        d,
        normal: [normal[0] / norm, normal[1] / norm],
        slopes: (upper, lambda),
    })
}

/// Symmetric 2x2 effective coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveTensor(pub [[f64; 2]; 2]);

impl EffectiveTensor {
    pub fn isotropic(c: f64) -> Self {
        EffectiveTensor([[c, 0.0], [0.0, c]])
    }

    pub fn quad(&self, xi: [f64; 2]) -> f64 {
        let a = &self.0;
        xi[0] * (a[0][0] * xi[0] + a[0][1] * xi[1]) + xi[1] * (a[1][0] * xi[0] + a[1][1] * xi[1])
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let [[a, b], [_, c]] = self.0;
        let mean = 0.5 * (a + c);
        let r = (0.5 * (a - c)).hypot(b);
        [mean - r, mean + r]
    }

    pub fn is_symmetric(&self) -> bool {
        self.0[0][1] == self.0[1][0]
    }
}

/// Harmonic mean across the layers (along `normal`), arithmetic mean along them.
pub fn laminate_effective(params: &MaterialParams, d: f64, normal: [f64; 2]) -> EffectiveTensor {
    let (alpha, beta) = (params.alpha, params.beta);
    let harmonic = 1.0 / (d / alpha + (1.0 - d) / beta);
    let arithmetic = d * alpha + (1.0 - d) * beta;
    let norm = normal[0].hypot(normal[1]);
    let n = [normal[0] / norm, normal[1] / norm];
    let mut a = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let nn = n[i] * n[j];
            let id = if i == j { 1.0 } else { 0.0 };
            a[i][j] = harmonic * nn + arithmetic * (id - nn);
        }
    }
    // round-off guard: the formula is symmetric term by term
    a[1][0] = a[0][1];
    EffectiveTensor(a)
}

/// Relaxed density by direct search over rank-one laminates with layers
/// orthogonal to the gradient: minimizes `h(d) t^2 / 2 + k d` over a
/// uniform grid of `d`, then refines by ternary search (the objective is
/// convex in `d`).
pub fn relaxed_via_lamination_oracle(params: &MaterialParams, t: f64, grid_size: usize) -> f64 {
    let grid_size = grid_size.max(100);
    let objective = |d: f64| {
        let harmonic = 1.0 / (d / params.alpha + (1.0 - d) / params.beta);
        let dissipation = if d == 0.0 { 0.0 } else { params.k * d };
        0.5 * harmonic * t * t + dissipation
    };
    let (mut best_i, mut best) = (0, objective(0.0));
    for i in 1..=grid_size {
        let v = objective(i as f64 / grid_size as f64);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let step = 1.0 / grid_size as f64;
    let mut lo = (best_i as f64 - 1.0).max(0.0) * step;
    let mut hi = (best_i as f64 + 1.0).min(grid_size as f64) * step;
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if objective(m1) <= objective(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    best.min(objective(0.5 * (lo + hi)))
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::relax::w_relaxed;

    fn p() -> MaterialParams {
        MaterialParams::new(1.0, 2.0, 1.0).unwrap()
    }

    #[test]
    fn laminate_endpoints_and_midpoint() {
        let params = p();
        assert_eq!(laminate_for_gradient(&params, 1.0, [1.0, 0.0]).unwrap().d, 0.0);
        assert_eq!(laminate_for_gradient(&params, 2.0, [1.0, 0.0]).unwrap().d, 1.0);
        let lam = laminate_for_gradient(&params, 1.5, [0.0, 2.0]).unwrap();
        assert_eq!(lam.d, 0.5);
        assert_eq!(lam.normal, [0.0, 1.0]);
        assert_eq!(lam.mean_gradient(), 1.5);
        assert_eq!(lam.energy(&params), 2.0);
        // harmonic-mean form: 1/2 (4/3) 2.25 + 0.5
        let h = 1.0 / (0.5 / 1.0 + 0.5 / 2.0);
        assert!((0.5 * h * 2.25 + 0.5 - 2.0f64).abs() < 1e-15);
        assert!(laminate_for_gradient(&params, 0.9, [1.0, 0.0]).is_err());
        assert!(laminate_for_gradient(&params, 2.1, [1.0, 0.0]).is_err());
    }

    #[test]
    fn effective_tensor_examples() {
        let params = MaterialParams::new(1.0, 3.0, 1.0).unwrap();
        assert_eq!(
            laminate_effective(&params, 0.0, [1.0, 0.0]),
            EffectiveTensor::isotropic(3.0)
        );
        assert_eq!(
            laminate_effective(&params, 1.0, [0.0, 1.0]),
            EffectiveTensor::isotropic(1.0)
        );
        let a = laminate_effective(&params, 0.5, [1.0, 1.0]);
        let ev = a.eigenvalues();
        assert!((ev[0] - 1.5).abs() < 1e-14 && (ev[1] - 2.0).abs() < 1e-14);
        let n = [std::f64::consts::FRAC_1_SQRT_2; 2];
        assert!((a.quad(n) - 1.5).abs() < 1e-14);
        assert!(a.is_symmetric());
    }

    #[test]
    fn oracle_examples() {
        let params = p();
        assert_eq!(relaxed_via_lamination_oracle(&params, 0.0, 100), 0.0);
        assert!((relaxed_via_lamination_oracle(&params, 1.5, 100) - 2.0).abs() < 1e-12);
        for t in [2.0, 2.5, 4.0] {
            let v = relaxed_via_lamination_oracle(&params, t, 200);
            assert!((v - (0.5 * t * t + 1.0)).abs() < 1e-12);
            assert!((v - w_relaxed(&params, t)).abs() < 1e-12);
        }
    }
}
