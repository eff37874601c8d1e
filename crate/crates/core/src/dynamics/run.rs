use crate::damage::{threshold_audit, undamaged_above_m, DamageState, MaterialParams};
use crate::energy::{EnergyAuditor, LedgerRow};
use crate::error::StepError;
use crate::fem::{ElementField, Mesh, ScalarField};

use super::data::ForcingTerm;
use super::disc::{Discretization, SolverSettings};
use super::step::{incremental_step, DynamicState};

/// Everything needed to run the scheme, already sampled on the mesh.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub mesh: Mesh,
    pub params: MaterialParams,
    pub settings: SolverSettings,
    pub t_final: f64,
    pub steps: usize,
    pub u0: ScalarField,
    pub v0: ScalarField,
    pub d0: DamageState,
    pub forcing: ForcingTerm,
    /// Keep a snapshot every this many steps; 0 keeps none.
    pub snapshot_every: usize,
    pub deltas: Vec<f64>,
}

impl Scenario {
    pub fn dt(&self) -> f64 {
        self.t_final / self.steps.max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub u: ScalarField,
    pub damage: DamageState,
    pub grads: ElementField<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdRow {
    pub step: usize,
    pub t: f64,
    pub delta: f64,
    pub area_above_lambda_plus_delta: f64,
    pub area_above_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub energy: f64,
    pub alternations: usize,
    pub el_residual: f64,
    /// Sound triangles with `|grad u| > M` after the step (always empty).
    pub above_m_after: usize,
    pub nested: bool,
}

/// Result of a run. Times are `i * dt` for `i = 0..=steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub ledger: Vec<LedgerRow>,
    pub thresholds: Vec<ThresholdRow>,
    pub snapshots: Vec<Snapshot>,
    pub steps: Vec<StepReport>,
    pub final_state: DynamicState,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.ledger.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ledger.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.ledger.iter().map(|r| r.t).collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunFailure {
    pub step: usize,
    pub error: StepError,
    pub partial: Trajectory,
}

/// Iterates [`incremental_step`] over the uniform partition of `[0, T]`.
pub fn run_dynamics(scenario: &Scenario) -> Result<Trajectory, Box<RunFailure>> {
    let disc = Discretization::new(scenario.mesh.clone(), scenario.params, scenario.settings);
    run_with(&disc, scenario)
}

pub fn run_with(disc: &Discretization, scenario: &Scenario) -> Result<Trajectory, Box<RunFailure>> {
    let dt = scenario.dt();
    let forcing = &scenario.forcing;
    let mut state = DynamicState::initial(scenario.u0.clone(), &scenario.v0, scenario.d0.clone(), dt);

    let load0 = disc.load(forcing, 0.0);
    let rate0 = disc.load_time_derivative(forcing, 0.0);
    let mut auditor = EnergyAuditor::new(disc, &state, &load0, &rate0);
    let mut thresholds = Vec::new();
    let mut snapshots = Vec::new();
    let mut reports = Vec::new();
    let keep = |step: usize| scenario.snapshot_every > 0 && step.is_multiple_of(scenario.snapshot_every);

    let grads = disc.gradients(&state.u_curr);
    push_thresholds(&mut thresholds, disc, scenario, &state, &grads);
    if keep(0) {
        snapshots.push(snapshot(&state, grads));
    }

    for step in 1..=scenario.steps {
        let t_next = step as f64 * dt;
        // f_n(t) = f(t_{i+1}) on (t_i, t_{i+1}]
        let load = disc.load(forcing, t_next);
        let outcome = match incremental_step(disc, &state, &load) {
            Ok(o) => o,
            Err(error) => {
                return Err(Box::new(RunFailure {
                    step,
                    error,
                    partial: Trajectory {
                        dt,
                        ledger: auditor.into_rows(),
                        thresholds,
                        snapshots,
                        steps: reports,
                        final_state: state,
                    },
                }))
            }
        };
        let mut next = outcome.state;
        next.t = t_next;
        if step == 1 {
            // u_prev held the virtual u0 - dt v0
            debug_assert_eq!(next.u_prev, state.u_curr);
        }
        let rate = disc.load_time_derivative(forcing, t_next);
        auditor.record(disc, &state, &next, &load, &rate);

        let grads = disc.gradients(&next.u_curr);
        reports.push(StepReport {
            step,
            energy: outcome.energy,
            alternations: outcome.alternations,
            el_residual: outcome.el_residual,
            above_m_after: undamaged_above_m(&disc.params, &next.damage, &grads).len(),
            nested: next.damage.contains(&state.damage),
        });
        push_thresholds(&mut thresholds, disc, scenario, &next, &grads);
        if keep(step) {
            snapshots.push(snapshot(&next, grads));
        }
        state = next;
    }

    Ok(Trajectory {
        dt,
        ledger: auditor.into_rows(),
        thresholds,
        snapshots,
        steps: reports,
        final_state: state,
    })
}

fn snapshot(state: &DynamicState, grads: ElementField<[f64; 2]>) -> Snapshot {
    Snapshot {
        step: state.step_index,
        t: state.t,
        u: state.u_curr.clone(),
        damage: state.damage.clone(),
        grads,
    }
}

fn push_thresholds(
    out: &mut Vec<ThresholdRow>,
    disc: &Discretization,
    scenario: &Scenario,
    state: &DynamicState,
    grads: &ElementField<[f64; 2]>,
) {
    let audit = threshold_audit(&disc.mesh, &disc.params, &state.damage, grads, &scenario.deltas);
    for (delta, area) in audit.above_lambda {
        out.push(ThresholdRow {
            step: state.step_index,
            t: state.t,
            delta,
            area_above_lambda_plus_delta: area,
            area_above_m: audit.above_m,
        });
    }
}
