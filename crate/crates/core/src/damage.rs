//! Material parameters, the two-phase coefficient field and the exact
//! damage update for a fixed displacement.

use crate::error::ConfigError;
use crate::fem::{element_gradients, ElementField, Mesh, ScalarField};

/// Stiffnesses `alpha < beta` of the damaged and sound phases and the
/// dissipation `k` per unit damaged volume. `k = +inf` disables damage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    pub alpha: f64,
    pub beta: f64,
    pub k: f64,
    /// `sqrt(2 alpha k / (beta (beta - alpha)))`
    pub lambda: f64,
    /// `sqrt(2 k / (beta - alpha))`
    pub m: f64,
}

impl MaterialParams {
    pub fn new(alpha: f64, beta: f64, k: f64) -> Result<Self, ConfigError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(ConfigError::invalid(
                "material.alpha",
                "must be positive and finite",
            ));
        }
        if !(beta > alpha && beta.is_finite()) {
            return Err(ConfigError::invalid(
                "material.beta",
                format!("ordering 0 < alpha < beta violated (alpha = {alpha}, beta = {beta})"),
            ));
        }
        if !(k > 0.0) {
            return Err(ConfigError::invalid(
                "material.k",
                "must be positive (or \"inf\")",
            ));
        }
        let lambda = (2.0 * alpha * k / (beta * (beta - alpha))).sqrt();
        let m = (2.0 * k / (beta - alpha)).sqrt();
        Ok(MaterialParams {
            alpha,
            beta,
            k,
            lambda,
            m,
        })
    }

    pub fn damage_enabled(&self) -> bool {
        self.k.is_finite()
    }

    /// Upper end `beta lambda / alpha` of the laminate range.
    pub fn upper_knee(&self) -> f64 {
        self.beta * self.lambda / self.alpha
    }

    /// `k |D|`; zero when damage is disabled.
    pub fn dissipation(&self, volume: f64) -> f64 {
        if self.damage_enabled() {
            self.k * volume
        } else {
            0.0
        }
    }
}

/// Element-wise damage indicator with its cached volume.
#[derive(Debug, Clone, PartialEq)]
pub struct DamageState {
    pub damaged: Vec<bool>,
    pub volume: f64,
}

impl DamageState {
    pub fn from_flags(mesh: &Mesh, damaged: Vec<bool>) -> Self {
        assert_eq!(damaged.len(), mesh.num_triangles());
        let volume = damaged_volume(&mesh.areas, &damaged);
        DamageState { damaged, volume }
    }

    pub fn empty(mesh: &Mesh) -> Self {
        DamageState {
            damaged: vec![false; mesh.num_triangles()],
            volume: 0.0,
        }
    }

    pub fn full(mesh: &Mesh) -> Self {
        Self::from_flags(mesh, vec![true; mesh.num_triangles()])
    }

    pub fn count(&self) -> usize {
        self.damaged.iter().filter(|&&d| d).count()
    }

    pub fn contains(&self, other: &DamageState) -> bool {
        self.damaged
            .iter()
            .zip(&other.damaged)
            .all(|(&mine, &theirs)| mine || !theirs)
    }

    pub fn volume_consistent(&self, mesh: &Mesh) -> bool {
        let v = damaged_volume(&mesh.areas, &self.damaged);
        (v - self.volume).abs() <= 1e-12 * mesh.domain_area().max(1.0)
    }

    pub fn fraction(&self, mesh: &Mesh) -> f64 {
        self.volume / mesh.domain_area()
    }
}

fn damaged_volume(areas: &[f64], damaged: &[bool]) -> f64 {
    areas
        .iter()
        .zip(damaged)
        .filter(|(_, &d)| d)
        .fold(0.0, |s, (a, _)| s + a)
}

/// `alpha` on damaged triangles, `beta` elsewhere.
pub fn coefficient_field(params: &MaterialParams, d: &DamageState) -> ElementField {
    ElementField::new(
        d.damaged
            .iter()
            .map(|&x| if x { params.alpha } else { params.beta })
            .collect(),
    )
}

/// Exact minimizer over `D ⊇ prev` for fixed gradients: adds every
/// triangle with `|grad u| > M`. At `|grad u| = M` the two energies tie
/// and the triangle stays sound.
pub fn minimize_damage_given_u(
    mesh: &Mesh,
    params: &MaterialParams,
    prev: &DamageState,
    grads: &ElementField<[f64; 2]>,
) -> DamageState {
    let flags = prev
        .damaged
        .iter()
        .zip(&grads.values)
        .map(|(&d, g)| d || g[0].hypot(g[1]) > params.m)
        .collect();
    DamageState::from_flags(mesh, flags)
}

/// Sound triangles with `|grad u| > M`; empty at every accepted step.
pub fn undamaged_above_m(
    params: &MaterialParams,
    d: &DamageState,
    grads: &ElementField<[f64; 2]>,
) -> Vec<usize> {
    d.damaged
        .iter()
        .zip(&grads.values)
        .enumerate()
        .filter(|(_, (&dam, g))| !dam && g[0].hypot(g[1]) > params.m)
        .map(|(t, _)| t)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialDamageViolation {
    pub lambda: f64,
    pub elements: Vec<usize>,
}

impl From<InitialDamageViolation> for ConfigError {
    fn from(v: InitialDamageViolation) -> Self {
        ConfigError::InitialThreshold {
            lambda: v.lambda,
            elements: v.elements,
        }
    }
}

/// Checks `D0 ⊇ {|grad u0| >= lambda}`.
pub fn validate_initial_damage(
    mesh: &Mesh,
    params: &MaterialParams,
    d0: &DamageState,
    u0: &ScalarField,
) -> Result<(), InitialDamageViolation> {
    let grads = element_gradients(mesh, u0);
    let elements: Vec<usize> = grads
        .values
        .iter()
        .enumerate()
        .filter(|(t, g)| !d0.damaged[*t] && g[0].hypot(g[1]) >= params.lambda)
        .map(|(t, _)| t)
        .collect();
    if elements.is_empty() {
        Ok(())
    } else {
        Err(InitialDamageViolation {
            lambda: params.lambda,
            elements,
        })
    }
}

/// Adds the offending triangles reported by [`validate_initial_damage`].
pub fn repair_initial_damage(
    mesh: &Mesh,
    params: &MaterialParams,
    d0: &DamageState,
    u0: &ScalarField,
) -> (DamageState, Vec<usize>) {
    match validate_initial_damage(mesh, params, d0, u0) {
        Ok(()) => (d0.clone(), Vec::new()),
        Err(v) => {
            let mut flags = d0.damaged.clone();
            for &t in &v.elements {
                flags[t] = true;
            }
            log::info!(
                "initial damage repaired: added {} element(s) with |grad u0| >= lambda",
                v.elements.len()
            );
            (DamageState::from_flags(mesh, flags), v.elements)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdAudit {
    /// `(delta, area of sound triangles with |grad u| > lambda + delta)`
    pub above_lambda: Vec<(f64, f64)>,
    /// Area of sound triangles with `|grad u| > M`.
    pub above_m: f64,
}

pub fn threshold_audit(
    mesh: &Mesh,
    params: &MaterialParams,
    d: &DamageState,
    grads: &ElementField<[f64; 2]>,
    deltas: &[f64],
) -> ThresholdAudit {
    let sound: Vec<(f64, f64)> = grads
        .values
        .iter()
        .enumerate()
        .filter(|(t, _)| !d.damaged[*t])
        .map(|(t, g)| (g[0].hypot(g[1]), mesh.areas[t]))
        .collect();
    let area_above = |level: f64| -> f64 {
        sound
            .iter()
            .filter(|(n, _)| *n > level)
            .fold(0.0, |s, (_, a)| s + a)
    };
    ThresholdAudit {
        above_lambda: deltas
            .iter()
            .map(|&delta| (delta, area_above(params.lambda + delta)))
            .collect(),
        above_m: area_above(params.m),
    }
}
