//! Run-directory files: config echo, ledger, snapshots, threshold audit
//! and the failure record. Floats are written as `{:.16e}`, which is
//! locale-independent and round-trips `f64` exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{parse_config, Config};
use crate::damage::{threshold_audit, DamageState};
use crate::dynamics::{Discretization, DynamicState, RunFailure, Snapshot, ThresholdRow, Trajectory};
use crate::energy::{audit_inequality, EnergyAuditor, InequalityAudit, LedgerRow};
use crate::error::IoError;
use crate::fem::{Mesh, ScalarField};

pub const LEDGER_COLUMNS: [&str; 11] = [
    "step",
    "t",
    "kinetic",
    "elastic",
    "dissipated",
    "work_cum",
    "total",
    "identity_residual",
    "inequality_slack",
    "damage_fraction",
    "max_grad_undamaged",
];

pub const THRESHOLD_COLUMNS: [&str; 5] = [
    "step",
    "t",
    "delta",
    "area_above_lambda_plus_delta",
    "area_above_M",
];

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, IoError> {
    csv::Writer::from_path(path).map_err(|source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn write_record<I, S>(w: &mut csv::Writer<fs::File>, path: &Path, record: I) -> Result<(), IoError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    w.write_record(record).map_err(|source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<(), IoError> {
    w.flush().map_err(|e| IoError::io(path, e))
}

pub fn snapshot_paths(dir: &Path, step: usize) -> (PathBuf, PathBuf) {
    let base = dir.join("snapshots");
    (
        base.join(format!("step_{step:06}.elements.csv")),
        base.join(format!("step_{step:06}.nodes.csv")),
    )
}

#[derive(Debug, Serialize)]
struct ErrorRecord<'a> {
    step: usize,
    t: f64,
    kind: &'a str,
    message: String,
    rows_written: usize,
}

/// Writes every run file into `dir`, replacing files from earlier runs.
/// With `failure` the partial trajectory is written plus `error.json`.
pub fn write_outputs(
    dir: &Path,
    config: &Config,
    mesh: &Mesh,
    trajectory: &Trajectory,
    failure: Option<&RunFailure>,
) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    let echo = dir.join("config.echo.json");
    fs::write(&echo, config.to_json() + "\n").map_err(|e| IoError::io(&echo, e))?;
    write_ledger(&dir.join("ledger.csv"), &trajectory.ledger)?;
    write_thresholds(&dir.join("threshold_audit.csv"), &trajectory.thresholds)?;

    let snaps = dir.join("snapshots");
    if snaps.exists() {
        fs::remove_dir_all(&snaps).map_err(|e| IoError::io(&snaps, e))?;
    }
    if !trajectory.snapshots.is_empty() {
        fs::create_dir_all(&snaps).map_err(|e| IoError::io(&snaps, e))?;
    }
    for snap in &trajectory.snapshots {
        write_snapshot(dir, mesh, snap)?;
    }

    let err_path = dir.join("error.json");
    match failure {
        Some(f) => {
            let kind = match f.error {
                crate::StepError::Solver(_) => "solver",
                _ => "step",
            };
            let record = ErrorRecord {
                step: f.step,
                t: f.step as f64 * trajectory.dt,
                kind,
                message: f.error.to_string(),
                rows_written: trajectory.ledger.len(),
            };
            let text = serde_json::to_string_pretty(&record).map_err(|source| IoError::Json {
                path: err_path.clone(),
                source,
            })?;
            fs::write(&err_path, text + "\n").map_err(|e| IoError::io(&err_path, e))?;
        }
        None => {
            if err_path.exists() {
                fs::remove_file(&err_path).map_err(|e| IoError::io(&err_path, e))?;
            }
        }
    }
    Ok(())
}

pub fn write_ledger(path: &Path, rows: &[LedgerRow]) -> Result<(), IoError> {
    let mut w = csv_writer(path)?;
    write_record(&mut w, path, LEDGER_COLUMNS)?;
    for r in rows {
        write_record(
            &mut w,
            path,
            [
                r.step.to_string(),
                num(r.t),
                num(r.kinetic),
                num(r.elastic),
                num(r.dissipated),
                num(r.work_cum),
                num(r.total),
                num(r.identity_residual),
                num(r.inequality_slack),
                num(r.damage_fraction),
                num(r.max_grad_undamaged),
            ],
        )?;
    }
    finish(w, path)
}

pub fn write_thresholds(path: &Path, rows: &[ThresholdRow]) -> Result<(), IoError> {
    let mut w = csv_writer(path)?;
    write_record(&mut w, path, THRESHOLD_COLUMNS)?;
    for r in rows {
        write_record(
            &mut w,
            path,
            [
                r.step.to_string(),
                num(r.t),
                num(r.delta),
                num(r.area_above_lambda_plus_delta),
                num(r.area_above_m),
            ],
        )?;
    }
    finish(w, path)
}

fn write_snapshot(dir: &Path, mesh: &Mesh, snap: &Snapshot) -> Result<(), IoError> {
    let (elements, nodes) = snapshot_paths(dir, snap.step);
    let mut w = csv_writer(&elements)?;
    write_record(
        &mut w,
        &elements,
        ["index", "damaged", "grad_x", "grad_y", "grad_norm"],
    )?;
    for (t, (g, d)) in snap.grads.values.iter().zip(&snap.damage.damaged).enumerate() {
        write_record(
            &mut w,
            &elements,
            [
                t.to_string(),
                u8::from(*d).to_string(),
                num(g[0]),
                num(g[1]),
                num(g[0].hypot(g[1])),
            ],
        )?;
    }
    finish(w, &elements)?;

    let mut w = csv_writer(&nodes)?;
    write_record(&mut w, &nodes, ["index", "x", "y", "u"])?;
    for (n, (p, u)) in mesh.nodes.iter().zip(&snap.u.values).enumerate() {
        write_record(&mut w, &nodes, [n.to_string(), num(p[0]), num(p[1]), num(*u)])?;
    }
    finish(w, &nodes)
}

fn read_rows(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), IoError> {
    let csv_err = |source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec.map_err(csv_err)?.iter().map(str::to_owned).collect());
    }
    Ok((header, rows))
}

fn parse_f64(path: &Path, s: &str) -> Result<f64, IoError> {
    s.trim().parse().map_err(|_| IoError::Format {
        path: path.to_path_buf(),
        message: format!("not a number: {s:?}"),
    })
}

/// Reads `ledger.csv` back; columns not stored in the file are zero.
pub fn read_ledger(path: &Path) -> Result<Vec<LedgerRow>, IoError> {
    let (header, rows) = read_rows(path)?;
    if header != LEDGER_COLUMNS {
        return Err(IoError::Format {
            path: path.to_path_buf(),
            message: format!("unexpected ledger header {header:?}"),
        });
    }
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let v: Vec<f64> = row.iter().map(|s| parse_f64(path, s)).collect::<Result<_, _>>()?;
        out.push(LedgerRow {
            step: v[0] as usize,
            t: v[1],
            kinetic: v[2],
            elastic: v[3],
            dissipated: v[4],
            work_increment: 0.0,
            work_cum: v[5],
            total: v[6],
            identity_residual: v[7],
            inequality_slack: v[8],
            damage_fraction: v[9],
            max_grad_undamaged: v[10],
            load_pairing: 0.0,
            load_rate_pairing: 0.0,
        });
    }
    Ok(out)
}

/// Reads one snapshot pair back as nodal displacement and damage set.
pub fn read_snapshot(dir: &Path, mesh: &Mesh, step: usize) -> Result<(ScalarField, DamageState), IoError> {
    let (elements, nodes) = snapshot_paths(dir, step);
    let (_, erows) = read_rows(&elements)?;
    let (_, nrows) = read_rows(&nodes)?;
    if erows.len() != mesh.num_triangles() || nrows.len() != mesh.num_nodes() {
        return Err(IoError::Format {
            path: elements,
            message: "snapshot size does not match the configured mesh".into(),
        });
    }
    let flags = erows.iter().map(|r| r[1] == "1").collect();
    let u = nrows
        .iter()
        .map(|r| parse_f64(&nodes, &r[3]))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((ScalarField::new(u), DamageState::from_flags(mesh, flags)))
}

/// Result of re-auditing a run directory from its snapshots.
#[derive(Debug, Clone)]
pub struct RunDirAudit {
    pub snapshot_steps: Vec<usize>,
    /// True when every step from 0 to the last ledger row has a snapshot,
    /// which is needed to recompute the ledger.
    pub complete: bool,
    pub recomputed: Vec<LedgerRow>,
    /// Largest absolute difference between stored and recomputed ledger
    /// columns (zero for an untouched run directory).
    pub max_ledger_difference: f64,
    pub max_identity_residual: f64,
    pub inequality: InequalityAudit,
    pub thresholds: Vec<ThresholdRow>,
    pub max_area_above_m: f64,
    pub nestedness_violations: Vec<usize>,
}

/// Relative tolerance for the per-step identity in audits.
pub const IDENTITY_TOL: f64 = 1e-8;
/// Relative tolerance for the energy inequality in audits.
pub const INEQUALITY_TOL: f64 = 1e-8;

impl RunDirAudit {
    pub fn pass(&self) -> bool {
        self.max_identity_residual <= IDENTITY_TOL
            && self.inequality.pass
            && self.max_area_above_m == 0.0
            && self.nestedness_violations.is_empty()
    }
}

pub fn audit_run_dir(dir: &Path) -> Result<RunDirAudit, IoError> {
    let echo = dir.join("config.echo.json");
    let text = fs::read_to_string(&echo).map_err(|e| IoError::io(&echo, e))?;
    let config = parse_config(&text).map_err(|e| IoError::Format {
        path: echo.clone(),
        message: e.to_string(),
    })?;
    let scenario = config.scenario().map_err(|e| IoError::Format {
        path: echo.clone(),
        message: e.to_string(),
    })?;
    let stored = read_ledger(&dir.join("ledger.csv"))?;
    let last = stored.last().map_or(0, |r| r.step);

    let snaps_dir = dir.join("snapshots");
    let mut snapshot_steps = Vec::new();
    if snaps_dir.is_dir() {
        for entry in fs::read_dir(&snaps_dir).map_err(|e| IoError::io(&snaps_dir, e))? {
            let name = entry.map_err(|e| IoError::io(&snaps_dir, e))?.file_name();
            let name = name.to_string_lossy();
            if let Some(step) = name
                .strip_prefix("step_")
                .and_then(|s| s.strip_suffix(".nodes.csv"))
                .and_then(|s| s.parse::<usize>().ok())
            {
                snapshot_steps.push(step);
            }
        }
    }
    snapshot_steps.sort_unstable();
    let complete =
        snapshot_steps.len() == last + 1 && snapshot_steps.iter().enumerate().all(|(i, &s)| i == s);

    let disc = Discretization::new(scenario.mesh.clone(), scenario.params, scenario.settings);
    let mesh = &disc.mesh;
    let dt = scenario.dt();
    let mut thresholds = Vec::new();
    let mut max_area_above_m: f64 = 0.0;
    let mut nestedness_violations = Vec::new();
    let mut prev_damage: Option<DamageState> = None;
    let mut snapshots = Vec::with_capacity(snapshot_steps.len());
    for &step in &snapshot_steps {
        let (u, d) = read_snapshot(dir, mesh, step)?;
        let grads = disc.gradients(&u);
        let audit = threshold_audit(mesh, &disc.params, &d, &grads, &scenario.deltas);
        max_area_above_m = max_area_above_m.max(audit.above_m);
        for (delta, area) in audit.above_lambda {
            thresholds.push(ThresholdRow {
                step,
                t: step as f64 * dt,
                delta,
                area_above_lambda_plus_delta: area,
                area_above_m: audit.above_m,
            });
        }
        if let Some(p) = &prev_damage {
            if !d.contains(p) {
                nestedness_violations.push(step);
            }
        }
        prev_damage = Some(d.clone());
        snapshots.push((step, u, d));
    }

    let mut recomputed = Vec::new();
    let mut max_ledger_difference: f64 = 0.0;
    if complete {
        let load0 = disc.load(&scenario.forcing, 0.0);
        let rate0 = disc.load_time_derivative(&scenario.forcing, 0.0);
        let (_, u0, d0) = &snapshots[0];
        let mut state = DynamicState::initial(u0.clone(), &scenario.v0, d0.clone(), dt);
        let mut auditor = EnergyAuditor::new(&disc, &state, &load0, &rate0);
        for (step, u, d) in snapshots.iter().skip(1) {
            let t = *step as f64 * dt;
            let next = DynamicState {
                u_prev: state.u_curr.clone(),
                u_curr: u.clone(),
                damage: d.clone(),
                step_index: *step,
                dt,
                t,
            };
            let load = disc.load(&scenario.forcing, t);
            let rate = disc.load_time_derivative(&scenario.forcing, t);
            auditor.record(&disc, &state, &next, &load, &rate);
            state = next;
        }
        recomputed = auditor.into_rows();
        for (a, b) in stored.iter().zip(&recomputed) {
            for (x, y) in [
                (a.t, b.t),
                (a.kinetic, b.kinetic),
                (a.elastic, b.elastic),
                (a.dissipated, b.dissipated),
                (a.work_cum, b.work_cum),
                (a.total, b.total),
                (a.identity_residual, b.identity_residual),
                (a.inequality_slack, b.inequality_slack),
                (a.damage_fraction, b.damage_fraction),
                (a.max_grad_undamaged, b.max_grad_undamaged),
            ] {
                max_ledger_difference = max_ledger_difference.max((x - y).abs());
            }
        }
    }
    let rows = if complete { &recomputed } else { &stored };
    let max_identity_residual = rows.iter().map(|r| r.identity_residual).fold(0.0, f64::max);
    let inequality = audit_inequality(rows, INEQUALITY_TOL);
    if !complete {
        nestedness_violations.extend(inequality.nestedness_violations.iter().copied());
        nestedness_violations.sort_unstable();
        nestedness_violations.dedup();
    }

    Ok(RunDirAudit {
        snapshot_steps,
        complete,
        recomputed,
        max_ledger_difference,
        max_identity_residual,
        inequality,
        thresholds,
        max_area_above_m,
        nestedness_violations,
    })
}
