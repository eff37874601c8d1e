use crate::damage::MaterialParams;

/// `W(t) = min(beta t^2 / 2, alpha t^2 / 2 + k)`; branches cross at `t = M`.
pub fn w_density(params: &MaterialParams, t: f64) -> f64 {
    let sound = 0.5 * params.beta * t * t;
    let damaged = 0.5 * params.alpha * t * t + params.k;
    sound.min(damaged)
}

/// Convex envelope of [`w_density`]: quadratic in the sound phase up to
/// `lambda`, affine (common tangent) on `[lambda, beta lambda / alpha]`,
/// quadratic in the damaged phase beyond.
pub fn w_relaxed(params: &MaterialParams, t: f64) -> f64 {
    let MaterialParams {
        alpha,
        beta,
        lambda,
        k,
        ..
    } = *params;
    if !params.damage_enabled() || t <= lambda {
        0.5 * beta * t * t
    } else if t <= params.upper_knee() {
        beta * lambda * t - 0.5 * beta * lambda * lambda
    } else {
        0.5 * alpha * t * t + k
    }
}

/// Derivative of [`w_relaxed`].
pub fn w_relaxed_slope(params: &MaterialParams, t: f64) -> f64 {
    if !params.damage_enabled() || t <= params.lambda {
        params.beta * t
    } else if t <= params.upper_knee() {
        params.beta * params.lambda
    } else {
        params.alpha * t
    }
}
