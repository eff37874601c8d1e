//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion, and exits non-zero if any fails. Expected values come from
//! closed forms evaluated here, independently of the library.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use dyndamage::config::{parse_config, Config};
use dyndamage::dynamics::{initial_step, run_dynamics, Discretization, Trajectory};
use dyndamage::energy::audit_inequality;
use dyndamage::fem::{build_mesh, Mesh, ScalarField};
use dyndamage::harness::{converge_harness, oracle_battery};
use dyndamage::relax::{
    laminate_for_gradient, relaxed_via_lamination_oracle, solve_cell_problem, w_density, w_relaxed, CellMesh,
    CellPattern,
};
use dyndamage::{DamageState, MaterialParams};

struct Line {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn config(text: &str) -> Config {
    parse_config(text).expect("acceptance config is valid")
}

fn wave_config(nx: usize, steps: usize, t_final: f64, u0: &str, v0: &str) -> Config {
    config(&format!(
        r#"{{"material": {{"alpha": 1.0, "beta": 2.0, "k": "inf"}},
            "mesh": {{"nx": {nx}, "ny": {nx}, "Lx": 1.0, "Ly": 1.0}},
            "time": {{"T": {t_final}, "steps": {steps}}},
            "initial": {{"u0": {u0}, "v0": {v0}}},
            "outputs": {{"snapshot_every": 0}}}}"#
    ))
}

fn ramp_config(nx: usize, steps: usize) -> Config {
    config(&format!(
        r#"{{"material": {{"alpha": 1.0, "beta": 2.0, "k": 0.5}},
            "mesh": {{"nx": {nx}, "ny": {nx}, "Lx": 1.0, "Ly": 1.0}},
            "time": {{"T": 1.0, "steps": {steps}}},
            "forcing": {{"kind": "separable", "amplitude": 80.0,
                         "time": {{"kind": "ramp", "t_ramp": 1.0}},
                         "space": {{"kind": "gaussian", "cx": 0.5, "cy": 0.5, "width": 0.1}}}},
            "audit": {{"deltas": [0.05, 0.1, 0.2]}},
            "outputs": {{"snapshot_every": 0}}}}"#
    ))
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn run(c: &Config) -> Trajectory {
    run_dynamics(&c.scenario().unwrap())
        .unwrap_or_else(|f| panic!("run failed at step {}: {}", f.step, f.error))
}

/// L2 norm of `u_h - exact` with the edge-midpoint rule, exact for the
/// quadratic integrand on each triangle when `exact` is linear.
fn l2_error(mesh: &Mesh, u: &ScalarField, exact: impl Fn(f64, f64) -> f64) -> f64 {
    let mut sum = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for e in 0..3 {
            let (a, b) = (tri[e], tri[(e + 1) % 3]);
            let x = 0.5 * (mesh.nodes[a][0] + mesh.nodes[b][0]);
            let y = 0.5 * (mesh.nodes[a][1] + mesh.nodes[b][1]);
            let uh = 0.5 * (u.values[a] + u.values[b]);
            sum += mesh.areas[t] / 3.0 * (uh - exact(x, y)).powi(2);
        }
    }
    sum.sqrt()
}

fn a1(runs: &mut Vec<(String, Trajectory)>) -> Line {
    let start = Instant::now();
    let beta = 2.0;
    // u = sin(pi x) sin(pi y) cos(omega t) solves u_tt = beta Lap u
    let omega = (2.0 * beta * PI * PI).sqrt();
    let t_final = 0.5;
    let mut errors = Vec::new();
    for (nx, steps) in [(16, 40), (32, 80), (64, 160)] {
        let c = wave_config(
            nx,
            steps,
            t_final,
            r#"{"kind": "sin_sin", "amplitude": 1.0}"#,
            r#"{"kind": "zero"}"#,
        );
        let traj = run(&c);
        let mesh = build_mesh(nx, nx, 1.0, 1.0).unwrap();
        let e = l2_error(&mesh, &traj.final_state.u_curr, |x, y| {
            (PI * x).sin() * (PI * y).sin() * (omega * t_final).cos()
        });
        errors.push(e);
        runs.push((format!("A1 {nx}x{nx}/{steps}"), traj));
    }
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let elapsed = start.elapsed().as_secs_f64();
    let decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    Line {
        id: "A1",
        pass: decreasing && orders.iter().all(|&p| p >= 0.8),
        detail: format!(
            "L2 errors {}, orders {orders:.3?} (need >= 0.8), {elapsed:.1}s",
            sci(&errors)
        ),
    }
}

fn a2(runs: &[(String, Trajectory)]) -> Line {
    let mut worst: (f64, String) = (0.0, String::new());
    let mut steps = 0;
    for (name, t) in runs
        .iter()
        .filter(|(n, _)| n.starts_with("A1") || n.starts_with("A4"))
    {
        for r in t.ledger.iter().skip(1) {
            steps += 1;
            if r.identity_residual > worst.0 || worst.1.is_empty() {
                worst = (r.identity_residual, format!("{name} step {}", r.step));
            }
        }
    }
    Line {
        id: "A2",
        pass: worst.0 <= 1e-8,
        detail: format!(
            "max identity residual {:.3e} over {steps} steps (at {}), tolerance 1e-8",
            worst.0, worst.1
        ),
    }
}

fn a3(runs: &[(String, Trajectory)]) -> Line {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, t) in runs {
        // slack recomputed from the ledger columns
        let first = &t.ledger[0];
        let scale = 1f64.max(first.total.abs());
        let slack = t
            .ledger
            .iter()
            .map(|r| (r.kinetic + r.elastic) - (first.kinetic + first.elastic) - r.work_cum)
            .fold(f64::NEG_INFINITY, f64::max);
        let audit = audit_inequality(&t.ledger, 1e-8);
        let mut nested = t.steps.iter().filter(|s| !s.nested).count() + audit.nestedness_violations.len();
        nested += t
            .ledger
            .windows(2)
            .filter(|w| w[1].dissipated < w[0].dissipated)
            .count();
        let ok = slack <= 1e-8 * scale && audit.pass && nested == 0;
        pass &= ok;
        parts.push(format!(
            "{name}: max slack {slack:.2e} (tol {:.0e}), nesting violations {nested}",
            1e-8 * scale
        ));
    }
    Line {
        id: "A3",
        pass,
        detail: parts.join("; "),
    }
}

fn a4(runs: &mut Vec<(String, Trajectory)>) -> Line {
    let (alpha, beta, k) = (1.0, 2.0, 0.5);
    let params = MaterialParams::new(alpha, beta, k).unwrap();
    // M = sqrt(2 k / (beta - alpha)) = 1
    let m = (2.0f64 * k / (beta - alpha)).sqrt();
    let traj = run(&ramp_config(32, 100));
    let mesh = build_mesh(32, 32, 1.0, 1.0).unwrap();
    let disc = Discretization::new(mesh.clone(), params, Default::default());
    let mut worst_area: f64 = traj.thresholds.iter().map(|r| r.area_above_m).fold(0.0, f64::max);
    // final state re-checked from raw gradients
    let mut worst_grad: f64 = 0.0;
    let g = disc.gradients(&traj.final_state.u_curr);
    for (t, gt) in g.values.iter().enumerate() {
        if !traj.final_state.damage.damaged[t] {
            let n = gt[0].hypot(gt[1]);
            worst_grad = worst_grad.max(n);
            if n > m {
                worst_area += mesh.areas[t];
            }
        }
    }
    let above_after: usize = traj.steps.iter().map(|s| s.above_m_after).sum();
    let damaged = traj.final_state.damage.fraction(&mesh);
    runs.push(("A4 32x32/100".into(), traj));

    let table = converge_harness(&ramp_config(8, 25), 3).expect("harness config");
    println!("     lambda-level audit, largest sound area above lambda + delta during the run:");
    println!("     level    nx  steps  damage_volume  delta=0.05  delta=0.1  delta=0.2  area_above_M");
    for l in &table.levels {
        let a: Vec<String> = l
            .max_area_above_lambda
            .iter()
            .map(|(_, a)| format!("{a:10.6}"))
            .collect();
        println!(
            "     {:5} {:5} {:6} {:14.6} {} {:13.6}",
            l.level,
            l.nx,
            l.steps,
            l.damage_volume,
            a.join(" "),
            l.max_area_above_m
        );
    }
    let table_ok = table
        .levels
        .iter()
        .all(|l| l.error.is_none() && l.max_area_above_m == 0.0);

    Line {
        id: "A4",
        pass: worst_area == 0.0 && above_after == 0 && table_ok,
        detail: format!(
            "sound area above M = {worst_area:e} after every step (final max sound |grad u| {worst_grad:.6}, M = {m}), \
             final damaged fraction {damaged:.4}, refinement levels clean: {table_ok}"
        ),
    }
}

fn a5() -> Line {
    let (alpha, beta, k) = (1.0, 2.0, 1.0);
    let params = MaterialParams::new(alpha, beta, k).unwrap();
    let lambda: f64 = (2.0 * alpha * k / (beta * (beta - alpha))).sqrt();
    let knee = beta * lambda / alpha;
    let envelope = |t: f64| {
        if t <= lambda {
            0.5 * beta * t * t
        } else if t <= knee {
            beta * lambda * t - 0.5 * beta * lambda * lambda
        } else {
            0.5 * alpha * t * t + k
        }
    };
    let mut oracle_gap: f64 = 0.0;
    let mut closed_gap: f64 = 0.0;
    let mut below = true;
    let mut equality_gap: f64 = 0.0;
    for i in 0..200 {
        let t = 2.0 * knee * i as f64 / 199.0;
        let relaxed = w_relaxed(&params, t);
        oracle_gap = oracle_gap.max((relaxed_via_lamination_oracle(&params, t, 1000) - relaxed).abs());
        closed_gap = closed_gap.max((envelope(t) - relaxed).abs());
        let w = w_density(&params, t);
        closed_gap = closed_gap.max((w - (0.5 * beta * t * t).min(0.5 * alpha * t * t + k)).abs());
        below &= relaxed <= w + 1e-12;
        if t <= 1.0 || t >= 2.0 {
            equality_gap = equality_gap.max((relaxed - w).abs());
        }
    }
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut uniform = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut convex = 0;
    for _ in 0..1000 {
        let (t1, t2) = (4.0 * uniform(), 4.0 * uniform());
        if w_relaxed(&params, 0.5 * (t1 + t2))
            <= 0.5 * (w_relaxed(&params, t1) + w_relaxed(&params, t2)) + 1e-12
        {
            convex += 1;
        }
    }
    let lam = laminate_for_gradient(&params, 1.5, [1.0, 0.0]).unwrap();
    // harmonic mean of the phases at fraction d, plus k d
    let harmonic = 1.0 / (lam.d / alpha + (1.0 - lam.d) / beta);
    let lam_energy = 0.5 * harmonic * 1.5 * 1.5 + k * lam.d;
    let pass = oracle_gap <= 1e-10
        && closed_gap <= 1e-12
        && below
        && equality_gap <= 1e-12
        && convex == 1000
        && (lam.d - 0.5).abs() <= 1e-12
        && (lam_energy - 2.0).abs() <= 1e-12
        && (lam.energy(&params) - 2.0).abs() <= 1e-12;
    Line {
        id: "A5",
        pass,
        detail: format!(
            "oracle gap {oracle_gap:.2e}, closed-form gap {closed_gap:.2e}, W** <= W: {below}, \
             equality gap {equality_gap:.2e}, convex {convex}/1000, laminate d = {}, energy = {}",
            lam.d,
            lam.energy(&params)
        ),
    }
}

/// Exhaustive minimum of the first-step functional on the 2x2 mesh. The
/// mesh has one interior node, so for each damage superset the minimizer is
/// a scalar in closed form.
fn tiny_oracle(mesh: &Mesh, params: &MaterialParams, d0: &[bool], dt: f64, u0: f64, v0: f64, f: f64) -> f64 {
    let center = 4;
    let target = u0 + dt * v0;
    let n = mesh.triangles.len();
    let mut grad_sq = vec![0.0; n];
    let mut areas = vec![0.0; n];
    let mut mass = 0.0;
    let mut load = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let p = tri.map(|i| mesh.nodes[i]);
        let area = 0.5
            * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])).abs();
        areas[t] = area;
        if let Some(i) = tri.iter().position(|&v| v == center) {
            let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
            // the hat gradient has magnitude 1 / (height over the opposite edge)
            let height = 2.0 * area / (b[0] - a[0]).hypot(b[1] - a[1]);
            grad_sq[t] = 1.0 / (height * height);
            mass += area / 6.0;
            load += f * area / 3.0;
        }
    }
    let free: Vec<usize> = (0..n).filter(|&t| !d0[t]).collect();
    let inv = 1.0 / (dt * dt);
    let mut best = f64::INFINITY;
    for mask in 0..(1usize << free.len()) {
        let mut d = d0.to_vec();
        for (b, &t) in free.iter().enumerate() {
            if mask >> b & 1 == 1 {
                d[t] = true;
            }
        }
        let stiff: f64 = (0..n)
            .map(|t| if d[t] { params.alpha } else { params.beta } * grad_sq[t] * areas[t])
            .sum();
        let volume: f64 = (0..n).filter(|&t| d[t]).map(|t| areas[t]).sum();
        let u = (load + inv * mass * target) / (stiff + inv * mass);
        let j = 0.5 * stiff * u * u + params.k * volume - load * u + 0.5 * inv * mass * (u - target).powi(2);
        best = best.min(j);
    }
    best
}

fn a6() -> Line {
    let start = Instant::now();
    let params = MaterialParams::new(1.0, 2.0, 0.5).unwrap();
    let battery = oracle_battery(&params, Default::default(), 30, 20261016);
    let mesh = build_mesh(2, 2, 1.0, 1.0).unwrap();
    let mut bounded = 0;
    let mut equal = 0;
    let mut library_gap: f64 = 0.0;
    let mut reports = Vec::new();
    for c in &battery.cases {
        let oracle = tiny_oracle(
            &mesh,
            &params,
            &c.initial_damage,
            c.dt,
            c.u0_center,
            c.v0_center,
            c.force,
        );
        library_gap = library_gap.max((oracle - c.oracle_energy).abs() / oracle.abs().max(1.0));
        let gap = c.alternating_energy - oracle;
        if gap >= -1e-9 {
            bounded += 1;
        }
        if gap.abs() <= 1e-9 {
            equal += 1;
        } else {
            reports.push(format!(
                "case {}: gap {gap:.3e}, allowed dt^2/2 = {:.3e}",
                c.index,
                0.5 * c.dt * c.dt
            ));
        }
    }
    let new_damage = battery
        .cases
        .iter()
        .filter(|c| c.oracle_damaged > c.initial_damage.iter().filter(|&&d| d).count())
        .count();
    let elapsed = start.elapsed().as_secs_f64();
    for r in &reports {
        println!("     {r}");
    }
    Line {
        id: "A6",
        pass: battery.failures.is_empty()
            && battery.cases.len() == 30
            && bounded == 30
            && equal >= 27
            && library_gap <= 1e-12
            && elapsed < 120.0,
        detail: format!(
            "not below oracle {bounded}/30, equal within 1e-9 {equal}/30 (need >= 27), \
             {new_damage} cases create damage, library vs test enumerator {library_gap:.1e}, {elapsed:.2}s"
        ),
    }
}

fn a7(runs: &mut Vec<(String, Trajectory)>) -> Line {
    let mesh = build_mesh(64, 64, 1.0, 1.0).unwrap();
    let params = MaterialParams::new(1.0, 2.0, f64::INFINITY).unwrap();
    let disc = Discretization::new(mesh.clone(), params, Default::default());
    let v0 = mesh.interpolate_h10(|x, y| (PI * x).sin() * (PI * y).sin());
    let u0 = ScalarField::zeros(&mesh);
    let d0 = DamageState::empty(&mesh);
    let zero_load = vec![0.0; disc.num_dofs()];
    let mut errors = Vec::new();
    let mut predicted = Vec::new();
    for steps in [40, 80, 160] {
        let dt = 1.0 / steps as f64;
        let out = initial_step(&disc, u0.clone(), &v0, d0.clone(), dt, &zero_load).unwrap();
        let quotient = out.state.u_curr.lincomb(1.0 / dt, &u0, -1.0 / dt);
        errors.push(l2_error(&mesh, &quotient.lincomb(1.0, &v0, -1.0), |_, _| 0.0));
        // single-mode estimate: (u1 - u0)/dt = v0 / (1 + omega^2 dt^2), ||v0|| = 1/2
        let omega2 = 2.0 * 2.0 * PI * PI;
        predicted.push(0.5 * (1.0 - 1.0 / (1.0 + omega2 * dt * dt)));
        let c = wave_config(
            64,
            1,
            dt,
            r#"{"kind": "zero"}"#,
            r#"{"kind": "sin_sin", "amplitude": 1.0}"#,
        );
        runs.push((format!("A7 dt=1/{steps}"), run(&c)));
    }
    Line {
        id: "A7",
        pass: errors.windows(2).all(|w| w[1] < w[0]),
        detail: format!(
            "||(u1-u0)/dt - v0|| = {} (single-mode estimate {})",
            sci(&errors),
            sci(&predicted)
        ),
    }
}

fn a8() -> Line {
    let e1 = [1.0, 0.0];
    let e2 = [0.0, 1.0];
    let diag = [0.5f64.sqrt(), 0.5f64.sqrt()];
    let cell = CellMesh::new(64);
    let lam = cell.coefficients(&CellPattern::HorizontalLaminate {
        alpha: 1.0,
        beta: 3.0,
        d: 0.5,
    });
    let across = solve_cell_problem(&cell, &lam, e2).unwrap();
    let along = solve_cell_problem(&cell, &lam, e1).unwrap();
    // harmonic and arithmetic means of 1 and 3 at equal fractions
    let (harm, arith) = (1.0 / (0.5 / 1.0 + 0.5 / 3.0), 0.5 * 1.0 + 0.5 * 3.0);

    let fine = CellMesh::new(128);
    let board = fine.coefficients(&CellPattern::Checkerboard {
        alpha: 1.0,
        beta: 4.0,
    });
    let checker = solve_cell_problem(&fine, &board, e1).unwrap();
    let geometric = (1.0f64 * 4.0).sqrt();

    let mut ordered = true;
    for (mesh, mixed, lo, hi) in [(&cell, &lam, 1.0, 3.0), (&fine, &board, 1.0, 4.0)] {
        let low = mesh.coefficients(&CellPattern::Uniform { value: lo });
        let high = mesh.coefficients(&CellPattern::Uniform { value: hi });
        for xi in [e1, e2, diag] {
            let a = solve_cell_problem(mesh, &low, xi).unwrap();
            let m = solve_cell_problem(mesh, mixed, xi).unwrap();
            let b = solve_cell_problem(mesh, &high, xi).unwrap();
            ordered &= a <= m + 1e-8 && m <= b + 1e-8;
        }
    }
    let pass = (across - harm).abs() <= 1e-6
        && (along - arith).abs() <= 1e-6
        && (checker - geometric).abs() <= 0.01 * geometric
        && ordered;
    Line {
        id: "A8",
        pass,
        detail: format!(
            "laminate across {across:.10} (expect {harm}), along {along:.10} (expect {arith}), \
             checkerboard {checker:.6} (expect {geometric} within 1%), ordering holds: {ordered}"
        ),
    }
}

fn main() -> ExitCode {
    let mut runs = Vec::new();
    let mut lines = vec![a1(&mut runs), a4(&mut runs), a7(&mut runs)];
    lines.push(a2(&runs));
    lines.push(a3(&runs));
    lines.push(a5());
    lines.push(a6());
    lines.push(a8());
    lines.sort_by_key(|l| l.id);
    let mut failed = 0;
    for l in &lines {
        println!("{} {}: {}", l.id, if l.pass { "PASS" } else { "FAIL" }, l.detail);
        failed += usize::from(!l.pass);
    }
    println!("acceptance: {} passed, {failed} failed", lines.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
