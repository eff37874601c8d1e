//! JSON run configuration.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::damage::{repair_initial_damage, validate_initial_damage, DamageState, MaterialParams};
use crate::dynamics::{DamageDescriptor, FieldDescriptor, ForcingTerm, Scenario, SolverSettings};
use crate::error::ConfigError;
use crate::fem::{build_mesh, Mesh, MeshSpec, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::relax::CellPattern;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub material: MaterialConfig,
    pub mesh: MeshSpec,
    pub time: TimeConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub forcing: ForcingTerm,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default)]
    pub audit: AuditConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub relaxation: RelaxationConfig,
    #[serde(default)]
    pub homogenize: HomogenizeConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub alpha: f64,
    pub beta: f64,
    /// A positive number or `"inf"` (damage disabled).
    #[serde(serialize_with = "ser_k", deserialize_with = "de_k")]
    pub k: f64,
}

fn ser_k<S: Serializer>(k: &f64, s: S) -> Result<S::Ok, S::Error> {
    if k.is_infinite() && *k > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*k)
    }
}

fn de_k<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum K {
        Num(f64),
        Text(String),
    }
    match K::deserialize(d)? {
        K::Num(v) => Ok(v),
        K::Text(s) if matches!(s.as_str(), "inf" | "Inf" | "infinity" | "Infinity") => Ok(f64::INFINITY),
        K::Text(s) => Err(serde::de::Error::custom(format!(
            "expected a number or \"inf\", found \"{s}\""
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(rename = "T")]
    pub t_final: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default)]
    pub u0: FieldDescriptor,
    #[serde(default)]
    pub v0: FieldDescriptor,
    #[serde(default, rename = "D0")]
    pub d0: DamageDescriptor,
    /// Add offending triangles to `D0` instead of rejecting the config.
    #[serde(default)]
    pub auto_repair: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub lumped_mass: bool,
    pub max_alternations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            lumped_mass: false,
            max_alternations: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: String,
    pub snapshot_every: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: "out".into(),
            snapshot_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditConfig {
    pub deltas: Vec<f64>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            deltas: vec![0.05, 0.1, 0.2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelaxationConfig {
    /// Number of tabulated gradient magnitudes.
    pub points: usize,
    /// Volume-fraction grid of the lamination oracle.
    pub grid_size: usize,
    /// Upper end of the table; defaults to `2 beta lambda / alpha`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        RelaxationConfig {
            points: 200,
            grid_size: 1000,
            t_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomogenizeConfig {
    /// Cells per side of the periodic unit-cell mesh.
    pub n: usize,
    /// Defaults to a half/half horizontal laminate and a checkerboard of
    /// the configured phases.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub patterns: Vec<CellPattern>,
}

impl Default for HomogenizeConfig {
    fn default() -> Self {
        HomogenizeConfig {
            n: 64,
            patterns: Vec::new(),
        }
    }
}

/// Parses and validates a configuration document, including the initial
/// damage admissibility `D0 ⊇ {|grad u0| >= lambda}`.
pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut config: Config = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::Parse(if path.is_empty() || path == "." {
            e.inner().to_string()
        } else {
            format!("{path}: {}", e.inner())
        })
    })?;
    config.validate()?;
    Ok(config)
}

impl Config {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn params(&self) -> Result<MaterialParams, ConfigError> {
        MaterialParams::new(self.material.alpha, self.material.beta, self.material.k)
    }

    pub fn build_mesh(&self) -> Result<Mesh, ConfigError> {
        build_mesh(self.mesh.nx, self.mesh.ny, self.mesh.lx, self.mesh.ly)
    }

    pub fn solver_settings(&self) -> SolverSettings {
        SolverSettings {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            lumped_mass: self.solver.lumped_mass,
            max_alternations: self.solver.max_alternations,
        }
    }

    pub fn homogenize_patterns(&self) -> Vec<CellPattern> {
        if !self.homogenize.patterns.is_empty() {
            return self.homogenize.patterns.clone();
        }
        let (alpha, beta) = (self.material.alpha, self.material.beta);
        vec![
            CellPattern::HorizontalLaminate { alpha, beta, d: 0.5 },
            CellPattern::Checkerboard { alpha, beta },
        ]
    }

    /// Checks every numeric constraint; with `initial.auto_repair` the
    /// admissibility violation is fixed by listing the offending elements
    /// in `D0`.
    pub fn validate(&mut self) -> Result<(), ConfigError> {
        let params = self.params()?;
        let mesh = self.build_mesh()?;
        if !(self.time.t_final > 0.0 && self.time.t_final.is_finite()) {
            return Err(ConfigError::invalid("time.T", "must be positive and finite"));
        }
        if self.time.steps == 0 {
            return Err(ConfigError::invalid("time.steps", "must be at least 1"));
        }
        if !(self.solver.tol > 0.0) {
            return Err(ConfigError::invalid("solver.tol", "must be positive"));
        }
        if self.solver.max_iter == 0 {
            return Err(ConfigError::invalid("solver.max_iter", "must be at least 1"));
        }
        if self.solver.max_alternations == 0 {
            return Err(ConfigError::invalid(
                "solver.max_alternations",
                "must be at least 1",
            ));
        }
        for (i, d) in self.audit.deltas.iter().enumerate() {
            if !(*d >= 0.0 && d.is_finite()) {
                return Err(ConfigError::invalid(
                    format!("audit.deltas[{i}]"),
                    "must be non-negative",
                ));
            }
        }
        if self.relaxation.points < 2 {
            return Err(ConfigError::invalid("relaxation.points", "must be at least 2"));
        }
        if self.relaxation.grid_size < 100 {
            return Err(ConfigError::invalid(
                "relaxation.grid_size",
                "must be at least 100",
            ));
        }
        if self.homogenize.n < 2 {
            return Err(ConfigError::invalid("homogenize.n", "must be at least 2"));
        }
        self.initial.u0.validate("initial.u0")?;
        self.initial.v0.validate("initial.v0")?;
        self.forcing.validate("forcing")?;

        let d0 = DamageState::from_flags(&mesh, self.initial.d0.flags(&mesh)?);
        let u0 = self.initial.u0.sample(&mesh);
        if let Err(violation) = validate_initial_damage(&mesh, &params, &d0, &u0) {
            if !self.initial.auto_repair {
                return Err(violation.into());
            }
            let (_, added) = repair_initial_damage(&mesh, &params, &d0, &u0);
            self.initial.d0.elements.extend(added);
            self.initial.d0.elements.sort_unstable();
            self.initial.d0.elements.dedup();
        }
        Ok(())
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        let mesh = self.build_mesh()?;
        let params = self.params()?;
        let d0 = DamageState::from_flags(&mesh, self.initial.d0.flags(&mesh)?);
        Ok(Scenario {
            u0: self.initial.u0.sample(&mesh),
            v0: self.initial.v0.sample(&mesh),
            d0,
            mesh,
            params,
            settings: self.solver_settings(),
            t_final: self.time.t_final,
            steps: self.time.steps,
            forcing: self.forcing,
            snapshot_every: self.outputs.snapshot_every,
            deltas: self.audit.deltas.clone(),
        })
    }

    /// Copy with mesh and step counts multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Config {
        let mut c = self.clone();
        c.mesh.nx *= factor;
        c.mesh.ny *= factor;
        c.time.steps *= factor;
        c
    }
}
