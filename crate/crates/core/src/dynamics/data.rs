use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::fem::{Mesh, ScalarField};

/// Closed catalog of initial displacement / velocity fields.
///
/// Fields are sampled at the nodes; boundary values are then set to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldDescriptor {
    #[default]
    Zero,
    /// `amplitude * sin(mx pi x / Lx) sin(my pi y / Ly)`
    SinSin {
        amplitude: f64,
        #[serde(default = "one")]
        mx: u32,
        #[serde(default = "one")]
        my: u32,
    },
    /// `amplitude * exp(-|x - c|^2 / (2 width^2))`
    Gaussian {
        amplitude: f64,
        cx: f64,
        cy: f64,
        width: f64,
    },
    /// `gx (x - x0) + gy (y - y0)` inside `[x0, x1] x [y0, y1]`, zero outside.
    AffineSubdomain {
        gx: f64,
        gy: f64,
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
    },
}

fn one() -> u32 {
    1
}

impl FieldDescriptor {
    pub fn eval(&self, x: f64, y: f64, lx: f64, ly: f64) -> f64 {
        match *self {
            FieldDescriptor::Zero => 0.0,
            FieldDescriptor::SinSin { amplitude, mx, my } => {
                amplitude * (mx as f64 * PI * x / lx).sin() * (my as f64 * PI * y / ly).sin()
            }
            FieldDescriptor::Gaussian {
                amplitude,
                cx,
                cy,
                width,
            } => {
                let r2 = (x - cx).powi(2) + (y - cy).powi(2);
                amplitude * (-r2 / (2.0 * width * width)).exp()
            }
            FieldDescriptor::AffineSubdomain {
                gx,
                gy,
                x0,
                x1,
                y0,
                y1,
            } => {
                if x >= x0 && x <= x1 && y >= y0 && y <= y1 {
                    gx * (x - x0) + gy * (y - y0)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn sample(&self, mesh: &Mesh) -> ScalarField {
        let (lx, ly) = (mesh.lx, mesh.ly);
        mesh.interpolate_h10(|x, y| self.eval(x, y, lx, ly))
    }

    pub fn validate(&self, path: &str) -> Result<(), crate::ConfigError> {
        use crate::ConfigError;
        match *self {
            FieldDescriptor::Gaussian { width, amplitude, .. } => {
                if !(width > 0.0) {
                    return Err(ConfigError::invalid(format!("{path}.width"), "must be positive"));
                }
                if !amplitude.is_finite() {
                    return Err(ConfigError::invalid(
                        format!("{path}.amplitude"),
                        "must be finite",
                    ));
                }
            }
            FieldDescriptor::SinSin { amplitude, .. } if !amplitude.is_finite() => {
                return Err(ConfigError::invalid(
                    format!("{path}.amplitude"),
                    "must be finite",
                ));
            }
            FieldDescriptor::AffineSubdomain { x0, x1, y0, y1, .. } if !(x0 < x1 && y0 < y1) => {
                return Err(ConfigError::invalid(
                    path,
                    "subdomain must satisfy x0 < x1 and y0 < y1",
                ));
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeProfile {
    Const,
    /// `sin(omega t + phase)`
    Sin {
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `min(t / t_ramp, 1)`
    Ramp {
        t_ramp: f64,
    },
}

impl TimeProfile {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Const => 1.0,
            TimeProfile::Sin { omega, phase } => (omega * t + phase).sin(),
            TimeProfile::Ramp { t_ramp } => (t / t_ramp).min(1.0),
        }
    }

    /// Time derivative; the ramp takes its left derivative at the kink.
    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Const => 0.0,
            TimeProfile::Sin { omega, phase } => omega * (omega * t + phase).cos(),
            TimeProfile::Ramp { t_ramp } => {
                if t <= t_ramp {
                    1.0 / t_ramp
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceProfile {
    Const,
    SinSin {
        #[serde(default = "one")]
        mx: u32,
        #[serde(default = "one")]
        my: u32,
    },
    Gaussian {
        cx: f64,
        cy: f64,
        width: f64,
    },
}

impl SpaceProfile {
    pub fn value(&self, x: f64, y: f64, lx: f64, ly: f64) -> f64 {
        match *self {
            SpaceProfile::Const => 1.0,
            SpaceProfile::SinSin { mx, my } => {
                (mx as f64 * PI * x / lx).sin() * (my as f64 * PI * y / ly).sin()
            }
            SpaceProfile::Gaussian { cx, cy, width } => {
                let r2 = (x - cx).powi(2) + (y - cy).powi(2);
                (-r2 / (2.0 * width * width)).exp()
            }
        }
    }
}

/// Body force `f(t, x)` from a closed catalog.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingTerm {
    #[default]
    Zero,
    /// `amplitude * time(t) * space(x)`
    Separable {
        amplitude: f64,
        time: TimeProfile,
        space: SpaceProfile,
    },
}

impl ForcingTerm {
    pub fn is_zero(&self) -> bool {
        match self {
            ForcingTerm::Zero => true,
            ForcingTerm::Separable { amplitude, .. } => *amplitude == 0.0,
        }
    }

    /// Every catalog entry has an analytic time derivative.
    pub fn time_regular(&self) -> bool {
        true
    }

    pub fn nodal(&self, mesh: &Mesh, t: f64) -> ScalarField {
        match *self {
            ForcingTerm::Zero => ScalarField::zeros(mesh),
            ForcingTerm::Separable {
                amplitude,
                time,
                space,
            } => {
                let g = amplitude * time.value(t);
                mesh.interpolate(|x, y| g * space.value(x, y, mesh.lx, mesh.ly))
            }
        }
    }

    pub fn nodal_time_derivative(&self, mesh: &Mesh, t: f64) -> ScalarField {
        match *self {
            ForcingTerm::Zero => ScalarField::zeros(mesh),
            ForcingTerm::Separable {
                amplitude,
                time,
                space,
            } => {
                let g = amplitude * time.derivative(t);
                mesh.interpolate(|x, y| g * space.value(x, y, mesh.lx, mesh.ly))
            }
        }
    }

    pub fn validate(&self, path: &str) -> Result<(), crate::ConfigError> {
        use crate::ConfigError;
        if let ForcingTerm::Separable {
            amplitude,
            time,
            space,
        } = *self
        {
            if !amplitude.is_finite() {
                return Err(ConfigError::invalid(
                    format!("{path}.amplitude"),
                    "must be finite",
                ));
            }
            if let TimeProfile::Ramp { t_ramp } = time {
                if !(t_ramp > 0.0) {
                    return Err(ConfigError::invalid(
                        format!("{path}.time.t_ramp"),
                        "must be positive",
                    ));
                }
            }
            if let SpaceProfile::Gaussian { width, .. } = space {
                if !(width > 0.0) {
                    return Err(ConfigError::invalid(
                        format!("{path}.space.width"),
                        "must be positive",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Initial damage: triangles whose centroid lies in one of the rectangles
/// `[x0, x1, y0, y1]`, plus explicitly listed triangles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DamageDescriptor {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rectangles: Vec<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub elements: Vec<usize>,
}

impl DamageDescriptor {
    pub fn is_empty(&self) -> bool {
        self.rectangles.is_empty() && self.elements.is_empty()
    }

    pub fn flags(&self, mesh: &Mesh) -> Result<Vec<bool>, crate::ConfigError> {
        let mut flags = vec![false; mesh.num_triangles()];
        for (t, flag) in flags.iter_mut().enumerate() {
            let c = mesh.centroid(t);
            *flag = self
                .rectangles
                .iter()
                .any(|r| c[0] >= r[0] && c[0] <= r[1] && c[1] >= r[2] && c[1] <= r[3]);
        }
        for &e in &self.elements {
            if e >= flags.len() {
                return Err(crate::ConfigError::invalid(
                    "initial.D0.elements",
                    format!("element {e} out of range (mesh has {} triangles)", flags.len()),
                ));
            }
            flags[e] = true;
        }
        Ok(flags)
    }
}
