//! Energy bookkeeping: total energy, the exact per-step energy identity
//! obtained by testing the discrete Euler-Lagrange equation with
//! `u_{j+1} - u_j`, and the trajectory-level energy inequality.

use crate::damage::DamageState;
use crate::dynamics::{Discretization, DynamicState};
use crate::par;

/// One ledger row, describing the state after `step` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerRow {
    pub step: usize,
    pub t: f64,
    /// `1/2 ||(u_j - u_{j-1}) / dt||^2`; row 0 uses `v0`.
    pub kinetic: f64,
    /// `1/2 int sigma_{D_j} |grad u_j|^2`
    pub elastic: f64,
    /// `k |D_j|`
    pub dissipated: f64,
    /// `<f_j, u_j - u_{j-1}>` (zero on row 0).
    pub work_increment: f64,
    pub work_cum: f64,
    /// `kinetic + elastic + dissipated - <f(t_j), u_j>`
    pub total: f64,
    pub identity_residual: f64,
    pub inequality_slack: f64,
    pub damage_fraction: f64,
    pub max_grad_undamaged: f64,
    /// `<f(t_j), u_j>`
    pub load_pairing: f64,
    /// `<d/dt f(t_j), u_j>`
    pub load_rate_pairing: f64,
}

impl LedgerRow {
    pub fn mechanical(&self) -> f64 {
        self.kinetic + self.elastic
    }
}

/// `1/2 ||v||^2 + 1/2 int sigma_D |grad u|^2 + k |D| - <f, u>` with the
/// load vector `load` of `f(t)`; `u` and `v` are interior vectors.
pub fn total_energy(disc: &Discretization, u: &[f64], v: &[f64], d: &DamageState, load: &[f64]) -> f64 {
    let kinetic = 0.5 * disc.l2_sq(v);
    let elastic = 0.5 * disc.stiffness(d).quad_form(u);
    kinetic + elastic + disc.params.dissipation(d.volume) - par::dot(load, u)
}

/// Both sides of the per-step identity
///
/// ```text
/// |a_j|^2 + |a_j - a_{j-1}|^2 + int s |grad u_{j+1}|^2 + int s |grad (u_{j+1} - u_j)|^2
///   = 2 <f_{j+1}, u_{j+1} - u_j> + int s |grad u_j|^2 + |a_{j-1}|^2
/// ```
///
/// with `a_j = (u_{j+1} - u_j) / dt` and `s = sigma_{D_{j+1}}` throughout.
pub fn step_identity_sides(
    disc: &Discretization,
    prev: &DynamicState,
    next: &DynamicState,
    load_next: &[f64],
) -> (f64, f64) {
    let dt = next.dt;
    let u_old = disc.restrict(&prev.u_prev);
    let u_mid = disc.restrict(&prev.u_curr);
    let u_new = disc.restrict(&next.u_curr);
    let a_old: Vec<f64> = u_mid.iter().zip(&u_old).map(|(a, b)| (a - b) / dt).collect();
    let a_new: Vec<f64> = u_new.iter().zip(&u_mid).map(|(a, b)| (a - b) / dt).collect();
    let jump: Vec<f64> = a_new.iter().zip(&a_old).map(|(a, b)| a - b).collect();
    let du: Vec<f64> = u_new.iter().zip(&u_mid).map(|(a, b)| a - b).collect();
    let k = disc.stiffness(&next.damage);

    let lhs = disc.l2_sq(&a_new) + disc.l2_sq(&jump) + k.quad_form(&u_new) + k.quad_form(&du);
    let rhs = 2.0 * par::dot(load_next, &du) + k.quad_form(&u_mid) + disc.l2_sq(&a_old);
    (lhs, rhs)
}

/// `|LHS - RHS| / max(|LHS|, |RHS|, 1)` of [`step_identity_sides`].
pub fn step_identity_residual(
    disc: &Discretization,
    prev: &DynamicState,
    next: &DynamicState,
    load_next: &[f64],
) -> f64 {
    let (lhs, rhs) = step_identity_sides(disc, prev, next, load_next);
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0)
}

/// Builds ledger rows as a run advances.
#[derive(Debug, Clone)]
pub struct EnergyAuditor {
    rows: Vec<LedgerRow>,
    mechanical0: f64,
}

impl EnergyAuditor {
    pub fn new(disc: &Discretization, initial: &DynamicState, load0: &[f64], load_rate0: &[f64]) -> Self {
        let row = state_row(disc, initial, load0, load_rate0, 0.0, 0.0, 0.0);
        let mechanical0 = row.mechanical();
        EnergyAuditor {
            rows: vec![row],
            mechanical0,
        }
    }

    /// Appends the row for `next`, reached from `prev` with load `load_next`.
    pub fn record(
        &mut self,
        disc: &Discretization,
        prev: &DynamicState,
        next: &DynamicState,
        load_next: &[f64],
        load_rate_next: &[f64],
    ) -> &LedgerRow {
        let du: Vec<f64> = disc
            .restrict(&next.u_curr)
            .iter()
            .zip(disc.restrict(&prev.u_curr))
            .map(|(a, b)| a - b)
            .collect();
        let work_increment = par::dot(load_next, &du);
        let work_cum = self.rows.last().map_or(0.0, |r| r.work_cum) + work_increment;
        let residual = step_identity_residual(disc, prev, next, load_next);
        let mut row = state_row(
            disc,
            next,
            load_next,
            load_rate_next,
            work_increment,
            work_cum,
            residual,
        );
        row.inequality_slack = row.mechanical() - self.mechanical0 - work_cum;
        self.rows.push(row);
        self.rows.last().expect("row just pushed")
    }

    pub fn rows(&self) -> &[LedgerRow] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<LedgerRow> {
        self.rows
    }
}

fn state_row(
    disc: &Discretization,
    state: &DynamicState,
    load: &[f64],
    load_rate: &[f64],
    work_increment: f64,
    work_cum: f64,
    identity_residual: f64,
) -> LedgerRow {
    let u = disc.restrict(&state.u_curr);
    let v = disc.restrict(&state.velocity());
    let kinetic = 0.5 * disc.l2_sq(&v);
    let elastic = 0.5 * disc.stiffness(&state.damage).quad_form(&u);
    let dissipated = disc.params.dissipation(state.damage.volume);
    let load_pairing = par::dot(load, &u);
    let grads = disc.gradients(&state.u_curr);
    let max_grad_undamaged = grads
        .values
        .iter()
        .zip(&state.damage.damaged)
        .filter(|(_, &d)| !d)
        .map(|(g, _)| g[0].hypot(g[1]))
        .fold(0.0, f64::max);
    LedgerRow {
        step: state.step_index,
        t: state.t,
        kinetic,
        elastic,
        dissipated,
        work_increment,
        work_cum,
        total: kinetic + elastic + dissipated - load_pairing,
        identity_residual,
        inequality_slack: 0.0,
        damage_fraction: state.damage.fraction(&disc.mesh),
        max_grad_undamaged,
        load_pairing,
        load_rate_pairing: par::dot(load_rate, &u),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityAudit {
    /// `(K_j + E_j) - (K_0 + E_0) - sum_{i<j} <f_{i+1}, u_{i+1} - u_i>` per row.
    pub slack: Vec<f64>,
    pub max_slack: f64,
    /// `max(1, |E_tot(0)|)`
    pub energy_scale: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// The same balance with the dissipation growth `k (|D_j| - |D_0|)`
    /// added; diagnostic only.
    pub max_slack_with_dissipation: f64,
    /// Largest gap between the discrete work and the quadrature of
    /// `-int <d/dt f, u>`; diagnostic only.
    pub max_work_quadrature_gap: f64,
    /// Steps at which the damaged fraction decreased.
    pub nestedness_violations: Vec<usize>,
}

/// Energy inequality audit; passes iff every slack is at most
/// `rel_tol * max(1, |E_tot(0)|)`.
pub fn audit_inequality(rows: &[LedgerRow], rel_tol: f64) -> InequalityAudit {
    let first = rows.first().expect("ledger has the initial row");
    let mech0 = first.mechanical();
    let slack: Vec<f64> = rows.iter().map(|r| r.mechanical() - mech0 - r.work_cum).collect();
    let max_slack = slack.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let energy_scale = 1f64.max(first.total.abs());
    let tolerance = rel_tol * energy_scale;

    let max_slack_with_dissipation = rows
        .iter()
        .zip(&slack)
        .map(|(r, s)| s + r.dissipated - first.dissipated)
        .fold(f64::NEG_INFINITY, f64::max);

    // sum_{i<j} <f_{i+1} - f_i, u_i> versus trapezoid of <f', u>
    let mut discrete = 0.0;
    let mut quadrature = 0.0;
    let mut max_gap: f64 = 0.0;
    for w in rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        // <f_{i+1}, u_{i+1}> - <f_i, u_i> - <f_{i+1}, u_{i+1} - u_i>
        discrete += b.load_pairing - a.load_pairing - b.work_increment;
        quadrature += 0.5 * (b.t - a.t) * (a.load_rate_pairing + b.load_rate_pairing);
        max_gap = max_gap.max((discrete - quadrature).abs());
    }

    let nestedness_violations = rows
        .windows(2)
        .filter(|w| w[1].damage_fraction < w[0].damage_fraction)
        .map(|w| w[1].step)
        .collect();

    InequalityAudit {
        pass: max_slack <= tolerance,
        slack,
        max_slack,
        energy_scale,
        tolerance,
        max_slack_with_dissipation,
        max_work_quadrature_gap: max_gap,
        nestedness_violations,
    }
}
