//! Refinement harness, brute-force oracle battery, and tabulations for
//! the relaxed density and effective coefficients.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::damage::{repair_initial_damage, DamageState, MaterialParams};
use crate::dynamics::{
    brute_force_step, initial_step, run_with, Discretization, FieldDescriptor, ForcingTerm, SolverSettings,
    SpaceProfile, TimeProfile,
};
use crate::energy::audit_inequality;
use crate::error::{ConfigError, SolverError};
use crate::fem::{build_mesh, ScalarField};
use crate::relax::{
    laminate_for_gradient, relaxed_via_lamination_oracle, w_density, w_relaxed, CellMesh, CellPattern,
    EffectiveTensor,
};

/// Closed-form solution of `u_tt = beta Lap u` for a single sine mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Manufactured {
    pub u_amp: f64,
    pub v_amp: f64,
    pub mx: u32,
    pub my: u32,
    pub omega: f64,
    pub lx: f64,
    pub ly: f64,
}

impl Manufactured {
    /// Available when damage cannot occur (k infinite, no initial damage),
    /// the forcing vanishes, and `u0`, `v0` share one sine mode.
    pub fn from_config(config: &Config) -> Option<Manufactured> {
        let params = config.params().ok()?;
        if params.damage_enabled() || !config.initial.d0.is_empty() || !config.forcing.is_zero() {
            return None;
        }
        let mode = |f: &FieldDescriptor| match *f {
            FieldDescriptor::Zero => Some((0.0, None)),
            FieldDescriptor::SinSin { amplitude, mx, my } => Some((amplitude, Some((mx, my)))),
            _ => None,
        };
        let (u_amp, mu) = mode(&config.initial.u0)?;
        let (v_amp, mv) = mode(&config.initial.v0)?;
        let (mx, my) = match (mu, mv) {
            (Some(a), Some(b)) if a != b => return None,
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => (1, 1),
        };
        let (lx, ly) = (config.mesh.lx, config.mesh.ly);
        let kx = mx as f64 * PI / lx;
        let ky = my as f64 * PI / ly;
        Some(Manufactured {
            u_amp,
            v_amp,
            mx,
            my,
            omega: (params.beta * (kx * kx + ky * ky)).sqrt(),
            lx,
            ly,
        })
    }

    pub fn eval(&self, x: f64, y: f64, t: f64) -> f64 {
        let time = self.u_amp * (self.omega * t).cos() + self.v_amp / self.omega * (self.omega * t).sin();
        time * (self.mx as f64 * PI * x / self.lx).sin() * (self.my as f64 * PI * y / self.ly).sin()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelReport {
    pub level: usize,
    pub nx: usize,
    pub ny: usize,
    pub steps: usize,
    pub h: f64,
    pub dt: f64,
    /// Final-time L2 error against the manufactured solution.
    pub l2_error: Option<f64>,
    /// `(delta, largest area of sound triangles above lambda + delta)`
    pub max_area_above_lambda: Vec<(f64, f64)>,
    pub max_area_above_m: f64,
    pub damage_volume: f64,
    pub max_grad_undamaged: f64,
    pub max_identity_residual: f64,
    pub max_inequality_slack: f64,
    pub inequality_tolerance: f64,
    pub nestedness_violations: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub levels: Vec<LevelReport>,
    /// `log2(e_l / e_{l+1})` between consecutive levels.
    pub orders: Vec<Option<f64>>,
}

impl ConvergenceReport {
    pub fn errors_decreasing(&self) -> bool {
        self.levels
            .windows(2)
            .all(|w| match (w[0].l2_error, w[1].l2_error) {
                (Some(a), Some(b)) => b < a,
                _ => false,
            })
    }

    pub fn min_order(&self) -> Option<f64> {
        self.orders
            .iter()
            .map(|o| o.unwrap_or(f64::NEG_INFINITY))
            .reduce(f64::min)
    }
}

/// Runs `levels` refinements of `base`, halving `h` and `dt` together.
/// Failed levels are recorded and the harness moves on.
pub fn converge_harness(base: &Config, levels: usize) -> Result<ConvergenceReport, ConfigError> {
    if levels < 2 {
        return Err(ConfigError::invalid("levels", "must be at least 2"));
    }
    let exact = Manufactured::from_config(base);
    let mut reports = Vec::with_capacity(levels);
    for level in 0..levels {
        let config = base.refined(1 << level);
        reports.push(run_level(&config, level, exact.as_ref())?);
    }
    let orders = reports
        .windows(2)
        .map(|w| match (w[0].l2_error, w[1].l2_error) {
            (Some(a), Some(b)) if a > 0.0 && b > 0.0 => Some((a / b).log2()),
            _ => None,
        })
        .collect();
    Ok(ConvergenceReport {
        levels: reports,
        orders,
    })
}

fn run_level(
    config: &Config,
    level: usize,
    exact: Option<&Manufactured>,
) -> Result<LevelReport, ConfigError> {
    let scenario = config.scenario()?;
    let disc = Discretization::new(scenario.mesh.clone(), scenario.params, scenario.settings);
    let (trajectory, error) = match run_with(&disc, &scenario) {
        Ok(t) => (t, None),
        Err(f) => {
            log::warn!("level {level} failed at step {}: {}", f.step, f.error);
            (f.partial, Some(format!("step {}: {}", f.step, f.error)))
        }
    };
    let last = &trajectory.final_state;
    let l2_error = match (exact, &error) {
        (Some(m), None) => {
            let reference = disc.mesh.interpolate(|x, y| m.eval(x, y, last.t));
            let diff = last.u_curr.lincomb(1.0, &reference, -1.0);
            Some(disc.l2_sq(&disc.restrict(&diff)).sqrt())
        }
        _ => None,
    };
    let mut max_area_above_lambda: Vec<(f64, f64)> = scenario.deltas.iter().map(|&d| (d, 0.0)).collect();
    for row in &trajectory.thresholds {
        for entry in max_area_above_lambda.iter_mut() {
            if entry.0 == row.delta {
                entry.1 = entry.1.max(row.area_above_lambda_plus_delta);
            }
        }
    }
    let max_area_above_m = trajectory
        .thresholds
        .iter()
        .map(|r| r.area_above_m)
        .fold(0.0, f64::max);
    let audit = audit_inequality(&trajectory.ledger, crate::io::INEQUALITY_TOL);
    let final_row = trajectory.ledger.last().expect("initial row");
    Ok(LevelReport {
        level,
        nx: config.mesh.nx,
        ny: config.mesh.ny,
        steps: config.time.steps,
        h: disc.mesh.h(),
        dt: scenario.dt(),
        l2_error,
        max_area_above_lambda,
        max_area_above_m,
        damage_volume: last.damage.volume,
        max_grad_undamaged: final_row.max_grad_undamaged,
        max_identity_residual: trajectory
            .ledger
            .iter()
            .map(|r| r.identity_residual)
            .fold(0.0, f64::max),
        max_inequality_slack: audit.max_slack,
        inequality_tolerance: audit.tolerance,
        nestedness_violations: audit.nestedness_violations.len()
            + trajectory.steps.iter().filter(|s| !s.nested).count(),
        error,
    })
}

/// Absolute tolerance for calling two step energies equal.
pub const ORACLE_EQUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCase {
    pub index: usize,
    pub dt: f64,
    pub u0_center: f64,
    pub v0_center: f64,
    pub force: f64,
    /// Initial damage flags after admissibility repair.
    pub initial_damage: Vec<bool>,
    pub alternating_energy: f64,
    pub oracle_energy: f64,
    /// `alternating - oracle`; never negative beyond round-off.
    pub gap: f64,
    pub equal: bool,
    /// Suboptimality the scheme tolerates at the first step, `dt^2 / 2`.
    pub allowed_slack: f64,
    pub alternations: usize,
    pub alternating_damaged: usize,
    pub oracle_damaged: usize,
    pub candidates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleBattery {
    pub cases: Vec<OracleCase>,
    pub failures: Vec<(usize, String)>,
}

impl OracleBattery {
    pub fn equal_count(&self) -> usize {
        self.cases.iter().filter(|c| c.equal).count()
    }

    /// Cases where the alternating energy is not below the oracle energy.
    pub fn bounded_count(&self) -> usize {
        self.cases
            .iter()
            .filter(|c| c.alternating_energy >= c.oracle_energy - ORACLE_EQUAL_TOL)
            .count()
    }
}

/// Compares the alternating first step against exhaustive enumeration on
/// the 2x2-cell unit square (8 triangles, one interior node) for `count`
/// random instances drawn from `seed`. Each instance draws `dt`, the
/// center values of `u0` and `v0`, a constant force and a random `D0`.
pub fn oracle_battery(
    params: &MaterialParams,
    settings: SolverSettings,
    count: usize,
    seed: u64,
) -> OracleBattery {
    let mesh = build_mesh(2, 2, 1.0, 1.0).expect("valid mesh");
    let center = 4;
    let disc = Discretization::new(mesh, *params, settings);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut battery = OracleBattery {
        cases: Vec::with_capacity(count),
        failures: Vec::new(),
    };
    // Largest hat gradient at the center sets the scales: |u0| stays below
    // the admissibility level lambda, and the inertial target dt v0 reaches
    // up to four times the damage level M.
    let mut hat = ScalarField::zeros(&disc.mesh);
    hat.values[center] = 1.0;
    let g_max = disc.gradients(&hat).norms().into_iter().fold(0.0, f64::max);
    let (lambda, m) = if params.damage_enabled() {
        (params.lambda, params.m)
    } else {
        (1.0, 1.0)
    };
    for index in 0..count {
        let dt: f64 = rng.gen_range(0.05..0.5);
        let u0_center = rng.gen_range(-0.9..0.9) * lambda / g_max;
        let v0_center = rng.gen_range(-4.0..4.0) * m / (g_max * dt);
        let force: f64 = rng.gen_range(-10.0..10.0);
        let flags: Vec<bool> = (0..disc.mesh.num_triangles())
            .map(|_| rng.gen_bool(0.25))
            .collect();

        let mut u0 = ScalarField::zeros(&disc.mesh);
        u0.values[center] = u0_center;
        let mut v0 = ScalarField::zeros(&disc.mesh);
        v0.values[center] = v0_center;
        let d0 = DamageState::from_flags(&disc.mesh, flags);
        let (d0, _) = repair_initial_damage(&disc.mesh, params, &d0, &u0);
        let forcing = ForcingTerm::Separable {
            amplitude: force,
            time: TimeProfile::Const,
            space: SpaceProfile::Const,
        };
        let load = disc.load(&forcing, dt);

        let alt = match initial_step(&disc, u0.clone(), &v0, d0.clone(), dt, &load) {
            Ok(o) => o,
            Err(e) => {
                battery.failures.push((index, e.to_string()));
                continue;
            }
        };
        let start = crate::dynamics::DynamicState::initial(u0, &v0, d0.clone(), dt);
        let oracle = match brute_force_step(&disc, &start, &load) {
            Ok(o) => o,
            Err(e) => {
                battery.failures.push((index, e.to_string()));
                continue;
            }
        };
        let gap = alt.energy - oracle.energy;
        battery.cases.push(OracleCase {
            index,
            dt,
            u0_center,
            v0_center,
            force,
            initial_damage: d0.damaged.clone(),
            alternating_energy: alt.energy,
            oracle_energy: oracle.energy,
            gap,
            equal: gap.abs() <= ORACLE_EQUAL_TOL,
            allowed_slack: 0.5 * dt * dt,
            alternations: alt.alternations,
            alternating_damaged: alt.state.damage.count(),
            oracle_damaged: oracle.damage.count(),
            candidates: oracle.candidates,
        });
    }
    battery
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationRow {
    pub t: f64,
    pub w: f64,
    pub w_relaxed: f64,
    pub lamination_oracle: f64,
    /// Volume fraction of the damaged phase in the optimal laminate.
    pub d: f64,
}

/// Tabulates `W`, `W**`, the lamination oracle and the optimal fraction on
/// `points` equispaced magnitudes in `[0, t_max]`.
pub fn relaxation_table(
    params: &MaterialParams,
    points: usize,
    grid_size: usize,
    t_max: f64,
) -> Vec<RelaxationRow> {
    (0..points)
        .map(|i| {
            let t = t_max * i as f64 / (points - 1) as f64;
            let d = if !params.damage_enabled() || t <= params.lambda {
                0.0
            } else if t >= params.upper_knee() {
                1.0
            } else {
                laminate_for_gradient(params, t, [1.0, 0.0]).map_or(f64::NAN, |l| l.d)
            };
            RelaxationRow {
                t,
                w: w_density(params, t),
                w_relaxed: w_relaxed(params, t),
                lamination_oracle: relaxed_via_lamination_oracle(params, t, grid_size),
                d,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomogenizationRow {
    pub pattern: CellPattern,
    pub tensor: EffectiveTensor,
    pub eigenvalues: [f64; 2],
}

/// Effective tensors of the given periodic patterns on an `n x n` cell.
pub fn homogenize_patterns(
    n: usize,
    patterns: &[CellPattern],
) -> Result<Vec<HomogenizationRow>, SolverError> {
    let cell = CellMesh::new(n);
    patterns
        .iter()
        .map(|p| {
            let tensor = cell.effective_tensor(&cell.coefficients(p))?;
            Ok(HomogenizationRow {
                pattern: *p,
                eigenvalues: tensor.eigenvalues(),
                tensor,
            })
        })
        .collect()
}
