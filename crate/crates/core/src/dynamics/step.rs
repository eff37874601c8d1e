use crate::damage::{minimize_damage_given_u, DamageState};
use crate::error::StepError;
use crate::fem::{solve_spd_from, ScalarField, SparseSpd};
use crate::par;

use super::disc::Discretization;

/// Two consecutive displacements `(u_{i-1}, u_i)` and the damage `D_i`.
///
/// Before the first step `u_prev` holds `u0 - dt v0`, so that the first
/// step's kinetic penalty `|(u - u0)/dt - v0|^2` has the same form as every
/// later one.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicState {
    pub u_prev: ScalarField,
    pub u_curr: ScalarField,
    pub damage: DamageState,
    pub step_index: usize,
    pub dt: f64,
    /// Time of `u_curr`.
    pub t: f64,
}

impl DynamicState {
    pub fn initial(u0: ScalarField, v0: &ScalarField, d0: DamageState, dt: f64) -> Self {
        let u_prev = u0.lincomb(1.0, v0, -dt);
        DynamicState {
            u_prev,
            u_curr: u0,
            damage: d0,
            step_index: 0,
            dt,
            t: 0.0,
        }
    }

    /// `(u_curr - u_prev) / dt`
    pub fn velocity(&self) -> ScalarField {
        let inv = 1.0 / self.dt;
        self.u_curr.lincomb(inv, &self.u_prev, -inv)
    }

    /// Inertial target `2 u_i - u_{i-1}` of the kinetic penalty.
    pub fn target(&self) -> ScalarField {
        self.u_curr.lincomb(2.0, &self.u_prev, -1.0)
    }
}

/// Per-step quantities for fixed `(u_{i-1}, u_i)` and load `F_{i+1}`.
pub(crate) struct StepProblem<'a> {
    pub disc: &'a Discretization,
    pub target: Vec<f64>,
    pub load: Vec<f64>,
    pub dt: f64,
    pub mass_target: Vec<f64>,
}

impl<'a> StepProblem<'a> {
    pub fn new(disc: &'a Discretization, state: &DynamicState, load: Vec<f64>) -> Self {
        let target = disc.restrict(&state.target());
        let mass_target = disc.mass.matvec(&target);
        StepProblem {
            disc,
            target,
            load,
            dt: state.dt,
            mass_target,
        }
    }

    fn system(&self, stiffness: &SparseSpd) -> (SparseSpd, Vec<f64>) {
        let inv_dt2 = 1.0 / (self.dt * self.dt);
        let a = stiffness.lincomb(1.0, &self.disc.mass, inv_dt2);
        let b = self
            .load
            .iter()
            .zip(&self.mass_target)
            .map(|(f, m)| f + inv_dt2 * m)
            .collect();
        (a, b)
    }

    /// Minimizer over `u` for fixed damage, with the relative Euler-Lagrange
    /// residual `||A u - b|| / ||b||`.
    pub fn solve(&self, d: &DamageState) -> Result<(Vec<f64>, f64), StepError> {
        let k = self.disc.stiffness(d);
        let (a, b) = self.system(&k);
        let s = &self.disc.settings;
        let (x, stats) = solve_spd_from(&a, &b, Some(&self.target), s.tol, s.max_iter)?;
        Ok((x, stats.relative_residual))
    }

    /// Step functional and a magnitude scale for tolerances.
    pub fn energy(&self, u: &[f64], d: &DamageState) -> (f64, f64) {
        let k = self.disc.stiffness(d);
        let elastic = 0.5 * k.quad_form(u);
        let work = par::dot(&self.load, u);
        let diff: Vec<f64> = u.iter().zip(&self.target).map(|(a, b)| a - b).collect();
        let kinetic = 0.5 * self.disc.mass.quad_form(&diff) / (self.dt * self.dt);
        let dissipation = self.disc.params.dissipation(d.volume);
        let value = elastic + dissipation - work + kinetic;
        let scale = 1f64.max(elastic + dissipation + work.abs() + kinetic);
        (value, scale)
    }
}

/// Minimizer of the step functional for fixed damage `d`: solves
/// `(K_d + M / dt^2) u = F + M (2 u_i - u_{i-1}) / dt^2`.
pub fn solve_displacement(
    disc: &Discretization,
    state: &DynamicState,
    d: &DamageState,
    load: &[f64],
) -> Result<ScalarField, StepError> {
    let problem = StepProblem::new(disc, state, load.to_vec());
    let (u, _) = problem.solve(d)?;
    Ok(disc.expand(&u))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: DynamicState,
    /// Step functional at the returned pair.
    pub energy: f64,
    pub alternations: usize,
    pub el_residual: f64,
}

/// One step of the scheme: alternate exact minimization in `u` (fixed `D`)
/// and in `D ⊇ D_i` (fixed `u`) until the damage set repeats.
pub fn incremental_step(
    disc: &Discretization,
    state: &DynamicState,
    load_next: &[f64],
) -> Result<StepOutcome, StepError> {
    let problem = StepProblem::new(disc, state, load_next.to_vec());
    let entry = &state.damage;
    let cap = disc.settings.max_alternations.max(1);
    let slack = 10.0 * disc.settings.tol;

    let mut damage = entry.clone();
    let mut visited: Vec<Vec<bool>> = vec![damage.damaged.clone()];
    let mut last_energies = [f64::NAN; 2];
    let mut previous: Option<f64> = None;

    for it in 1..=cap {
        let (u, el_residual) = problem.solve(&damage)?;
        let (after_u, scale) = problem.energy(&u, &damage);
        if let Some(before) = previous {
            if after_u - before > slack * scale {
                return Err(StepError::NotMonotone {
                    increase: after_u - before,
                });
            }
        }
        last_energies = [last_energies[1], after_u];

        if !disc.params.damage_enabled() {
            return Ok(finish(disc, state, u, damage, after_u, it, el_residual));
        }

        let u_nodal = disc.expand(&u);
        let grads = disc.gradients(&u_nodal);
        let next = minimize_damage_given_u(&disc.mesh, &disc.params, entry, &grads);
        if next.damaged == damage.damaged {
            return Ok(finish(disc, state, u, damage, after_u, it, el_residual));
        }
        let (after_d, scale) = problem.energy(&u, &next);
        if after_d - after_u > slack * scale {
            return Err(StepError::NotMonotone {
                increase: after_d - after_u,
            });
        }
        if visited.contains(&next.damaged) {
            return Err(StepError::Cycle {
                iterations: it,
                last_energies: [after_u, after_d],
            });
        }
        visited.push(next.damaged.clone());
        previous = Some(after_d);
        damage = next;
    }
    Err(StepError::NoFixedPoint {
        iterations: cap,
        last_energies,
    })
}

fn finish(
    disc: &Discretization,
    state: &DynamicState,
    u: Vec<f64>,
    damage: DamageState,
    energy: f64,
    alternations: usize,
    el_residual: f64,
) -> StepOutcome {
    StepOutcome {
        state: DynamicState {
            u_prev: state.u_curr.clone(),
            u_curr: disc.expand(&u),
            damage,
            step_index: state.step_index + 1,
            dt: state.dt,
            t: state.t + state.dt,
        },
        energy,
        alternations,
        el_residual,
    }
}

/// First step from `(u0, v0, D0)`; the returned state holds `(u0, u1)`.
pub fn initial_step(
    disc: &Discretization,
    u0: ScalarField,
    v0: &ScalarField,
    d0: DamageState,
    dt: f64,
    load_first: &[f64],
) -> Result<StepOutcome, StepError> {
    let state = DynamicState::initial(u0, v0, d0, dt);
    let mut out = incremental_step(disc, &state, load_first)?;
    out.state.u_prev = state.u_curr;
    Ok(out)
}

/// Hard cap on sound triangles for exhaustive enumeration.
pub const BRUTE_FORCE_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceOutcome {
    pub u: ScalarField,
    pub damage: DamageState,
    pub energy: f64,
    pub candidates: usize,
}

/// Exact minimum of the step functional over every element-wise damage
/// set containing `D_i`. Ties (relative 1e-12) go to the smaller damaged
/// volume, then to the lexicographically smaller flag vector.
pub fn brute_force_step(
    disc: &Discretization,
    state: &DynamicState,
    load_next: &[f64],
) -> Result<BruteForceOutcome, StepError> {
    let free: Vec<usize> = if disc.params.damage_enabled() {
        (0..state.damage.damaged.len())
            .filter(|&t| !state.damage.damaged[t])
            .collect()
    } else {
        Vec::new()
    };
    if free.len() > BRUTE_FORCE_CAP {
        return Err(StepError::TooManyCandidates {
            undamaged: free.len(),
            cap: BRUTE_FORCE_CAP,
        });
    }
    let problem = StepProblem::new(disc, state, load_next.to_vec());
    let count = 1usize << free.len();

    let evaluated = par::map_tasks(count, |mask| {
        let mut flags = state.damage.damaged.clone();
        for (bit, &t) in free.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                flags[t] = true;
            }
        }
        let d = DamageState::from_flags(&disc.mesh, flags);
        let (u, _) = problem.solve(&d)?;
        let (energy, scale) = problem.energy(&u, &d);
        Ok::<_, StepError>((energy, scale, u, d))
    });

    let mut best: Option<(f64, f64, Vec<f64>, DamageState)> = None;
    for candidate in evaluated {
        let candidate = candidate?;
        best = match best {
            None => Some(candidate),
            Some(current) => {
                if prefer(&candidate, &current) {
                    Some(candidate)
                } else {
                    Some(current)
                }
            }
        };
    }
    let (energy, _, u, damage) = best.expect("at least one candidate");
    Ok(BruteForceOutcome {
        u: disc.expand(&u),
        damage,
        energy,
        candidates: count,
    })
}

fn prefer(a: &(f64, f64, Vec<f64>, DamageState), b: &(f64, f64, Vec<f64>, DamageState)) -> bool {
    let tie = 1e-12 * a.1.max(b.1);
    if a.0 < b.0 - tie {
        return true;
    }
    if a.0 > b.0 + tie {
        return false;
    }
    if a.3.volume != b.3.volume {
        return a.3.volume < b.3.volume;
    }
    a.3.damaged < b.3.damaged
}
