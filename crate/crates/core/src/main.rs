use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dyndamage::config::{parse_config, Config};
use dyndamage::dynamics::{run_dynamics, Trajectory};
use dyndamage::energy::audit_inequality;
use dyndamage::harness::{converge_harness, homogenize_patterns, oracle_battery, relaxation_table};
use dyndamage::io::{audit_run_dir, write_outputs, IDENTITY_TOL, INEQUALITY_TOL};
use dyndamage::relax::CellPattern;

const EXIT_CONFIG: u8 = 2;
const EXIT_STEP: u8 = 3;
const EXIT_AUDIT: u8 = 4;

#[derive(Parser)]
#[command(
    name = "dyndamage",
    version,
    about = "Dynamic two-phase brittle damage simulator"
)]
struct Cli {
    /// Exit with status 4 when an audit fails.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the incremental scheme and write the run directory.
    Run {
        config: PathBuf,
        /// Overrides `outputs.directory`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Refine mesh and time step jointly and report errors and audits.
    Converge {
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Compare the alternating step with exhaustive enumeration on a tiny mesh.
    Oracle {
        config: PathBuf,
        #[arg(long, default_value_t = 30)]
        battery: usize,
        /// Defaults to the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Tabulate W, its convex envelope and the optimal laminate fraction.
    Relaxation { config: PathBuf },
    /// Solve periodic cell problems for effective tensors.
    Homogenize { config: PathBuf },
    /// Recompute energy and threshold audits from a run directory.
    Audit { run_dir: PathBuf },
}

enum Failure {
    Config(String),
    Step(String),
    Audit(String),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, out } => cmd_run(config, out.as_deref(), cli.strict),
        Command::Converge { config, levels } => cmd_converge(config, *levels, cli.strict),
        Command::Oracle {
            config,
            battery,
            seed,
        } => cmd_oracle(config, *battery, *seed, cli.strict),
        Command::Relaxation { config } => cmd_relaxation(config, cli.strict),
        Command::Homogenize { config } => cmd_homogenize(config, cli.strict),
        Command::Audit { run_dir } => cmd_audit(run_dir, cli.strict),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Step(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_STEP)
        }
        Err(Failure::Audit(m)) => {
            eprintln!("audit failed: {m}");
            ExitCode::from(EXIT_AUDIT)
        }
    }
}

fn load(path: &Path) -> Result<Config, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn audit_gate(strict: bool, problems: Vec<String>) -> Result<(), Failure> {
    if problems.is_empty() {
        return Ok(());
    }
    for p in &problems {
        log::warn!("{p}");
    }
    if strict {
        Err(Failure::Audit(problems.join("; ")))
    } else {
        Ok(())
    }
}

fn trajectory_problems(t: &Trajectory) -> Vec<String> {
    let mut problems = Vec::new();
    let identity = t.ledger.iter().map(|r| r.identity_residual).fold(0.0, f64::max);
    if identity > IDENTITY_TOL {
        problems.push(format!("identity residual {identity:e} exceeds {IDENTITY_TOL:e}"));
    }
    let audit = audit_inequality(&t.ledger, INEQUALITY_TOL);
    if !audit.pass {
        problems.push(format!(
            "energy inequality slack {:e} exceeds {:e}",
            audit.max_slack, audit.tolerance
        ));
    }
    if t.steps.iter().any(|s| !s.nested) || !audit.nestedness_violations.is_empty() {
        problems.push("damage sets are not nested".into());
    }
    let above_m: usize = t.steps.iter().map(|s| s.above_m_after).sum();
    if above_m > 0 {
        problems.push(format!("{above_m} sound element(s) above M after a step"));
    }
    problems
}

fn cmd_run(path: &Path, out: Option<&Path>, strict: bool) -> Result<(), Failure> {
    let config = load(path)?;
    let scenario = config.scenario().map_err(|e| Failure::Config(e.to_string()))?;
    let dir = out.map_or_else(|| PathBuf::from(&config.outputs.directory), Path::to_path_buf);
    let result = run_dynamics(&scenario);
    let (trajectory, failure) = match &result {
        Ok(t) => (t, None),
        Err(f) => (&f.partial, Some(f.as_ref())),
    };
    write_outputs(&dir, &config, &scenario.mesh, trajectory, failure)
        .map_err(|e| Failure::Step(format!("writing outputs: {e}")))?;
    if let Some(f) = failure {
        return Err(Failure::Step(format!("step {}: {}", f.step, f.error)));
    }
    let last = trajectory.ledger.last().expect("initial row");
    println!(
        "{} steps written to {}; final damage fraction {:.6}, total energy {:.10e}",
        trajectory.steps.len(),
        dir.display(),
        last.damage_fraction,
        last.total
    );
    audit_gate(strict, trajectory_problems(trajectory))
}

fn cmd_converge(path: &Path, levels: usize, strict: bool) -> Result<(), Failure> {
    let config = load(path)?;
    let report = converge_harness(&config, levels).map_err(|e| Failure::Config(e.to_string()))?;
    let mut header = vec![
        "level",
        "nx",
        "ny",
        "steps",
        "h",
        "dt",
        "l2_error",
        "order",
        "damage_volume",
        "max_grad_undamaged",
        "max_area_above_M",
        "max_identity_residual",
        "max_inequality_slack",
    ]
    .into_iter()
    .map(String::from)
    .collect::<Vec<_>>();
    header.extend(
        config
            .audit
            .deltas
            .iter()
            .map(|d| format!("max_area_above_lambda_plus_{d}")),
    );
    header.push("error".into());
    println!("{}", header.join(","));
    let mut problems = Vec::new();
    for (i, l) in report.levels.iter().enumerate() {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.16e}"));
        let order = if i == 0 { None } else { report.orders[i - 1] };
        let mut row = vec![
            l.level.to_string(),
            l.nx.to_string(),
            l.ny.to_string(),
            l.steps.to_string(),
            format!("{:.16e}", l.h),
            format!("{:.16e}", l.dt),
            opt(l.l2_error),
            opt(order),
            format!("{:.16e}", l.damage_volume),
            format!("{:.16e}", l.max_grad_undamaged),
            format!("{:.16e}", l.max_area_above_m),
            format!("{:.16e}", l.max_identity_residual),
            format!("{:.16e}", l.max_inequality_slack),
        ];
        row.extend(l.max_area_above_lambda.iter().map(|(_, a)| format!("{a:.16e}")));
        row.push(l.error.clone().unwrap_or_default());
        println!("{}", row.join(","));
        if let Some(e) = &l.error {
            problems.push(format!("level {}: {e}", l.level));
        }
        if l.max_area_above_m > 0.0 {
            problems.push(format!("level {}: sound area above M", l.level));
        }
        if l.max_identity_residual > IDENTITY_TOL || l.max_inequality_slack > l.inequality_tolerance {
            problems.push(format!("level {}: energy audit failed", l.level));
        }
    }
    if report.levels.iter().all(|l| l.l2_error.is_some()) && !report.errors_decreasing() {
        problems.push("errors do not decrease under refinement".into());
    }
    audit_gate(strict, problems)
}

fn cmd_oracle(path: &Path, count: usize, seed: Option<u64>, strict: bool) -> Result<(), Failure> {
    let config = load(path)?;
    let params = config.params().map_err(|e| Failure::Config(e.to_string()))?;
    let battery = oracle_battery(
        &params,
        config.solver_settings(),
        count,
        seed.unwrap_or(config.seed),
    );
    println!("case,dt,u0_center,v0_center,force,initial_damaged,alternating_energy,oracle_energy,gap,equal,allowed_slack,alternations,alternating_damaged,oracle_damaged");
    for c in &battery.cases {
        println!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{},{:.16e},{},{},{}",
            c.index,
            c.dt,
            c.u0_center,
            c.v0_center,
            c.force,
            c.initial_damage.iter().filter(|&&d| d).count(),
            c.alternating_energy,
            c.oracle_energy,
            c.gap,
            u8::from(c.equal),
            c.allowed_slack,
            c.alternations,
            c.alternating_damaged,
            c.oracle_damaged
        );
    }
    eprintln!(
        "equal {}/{}, not below oracle {}/{}, failures {}",
        battery.equal_count(),
        count,
        battery.bounded_count(),
        count,
        battery.failures.len()
    );
    let mut problems: Vec<String> = battery
        .failures
        .iter()
        .map(|(i, e)| format!("case {i}: {e}"))
        .collect();
    if battery.bounded_count() < count {
        problems.push("alternating energy below the oracle".into());
    }
    if battery.equal_count() * 10 < count * 9 {
        problems.push(format!(
            "only {} of {count} cases equal the oracle",
            battery.equal_count()
        ));
    }
    audit_gate(strict, problems)
}

fn cmd_relaxation(path: &Path, strict: bool) -> Result<(), Failure> {
    let config = load(path)?;
    let params = config.params().map_err(|e| Failure::Config(e.to_string()))?;
    let t_max = config.relaxation.t_max.unwrap_or(if params.damage_enabled() {
        2.0 * params.upper_knee()
    } else {
        2.0
    });
    let rows = relaxation_table(
        &params,
        config.relaxation.points,
        config.relaxation.grid_size,
        t_max,
    );
    println!("t,W,W_relaxed,lamination_oracle,d");
    let mut worst: f64 = 0.0;
    for r in &rows {
        println!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.t, r.w, r.w_relaxed, r.lamination_oracle, r.d
        );
        worst = worst.max((r.w_relaxed - r.lamination_oracle).abs());
    }
    let mut problems = Vec::new();
    if worst > 1e-10 {
        problems.push(format!("lamination oracle differs from W** by {worst:e}"));
    }
    audit_gate(strict, problems)
}

fn cmd_homogenize(path: &Path, strict: bool) -> Result<(), Failure> {
    let config = load(path)?;
    let patterns = config.homogenize_patterns();
    let rows =
        homogenize_patterns(config.homogenize.n, &patterns).map_err(|e| Failure::Step(e.to_string()))?;
    println!("pattern,a11,a12,a22,eig_min,eig_max");
    let mut problems = Vec::new();
    for r in &rows {
        let name = match r.pattern {
            CellPattern::Uniform { .. } => "uniform",
            CellPattern::HorizontalLaminate { .. } => "horizontal_laminate",
            CellPattern::VerticalLaminate { .. } => "vertical_laminate",
            CellPattern::Checkerboard { .. } => "checkerboard",
        };
        let a = r.tensor.0;
        println!(
            "{name},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            a[0][0], a[0][1], a[1][1], r.eigenvalues[0], r.eigenvalues[1]
        );
        let (lo, hi) = pattern_bounds(&r.pattern);
        if r.eigenvalues[0] < lo - 1e-8 || r.eigenvalues[1] > hi + 1e-8 {
            problems.push(format!(
                "{name}: eigenvalues {:?} outside [{lo}, {hi}]",
                r.eigenvalues
            ));
        }
    }
    audit_gate(strict, problems)
}

fn pattern_bounds(p: &CellPattern) -> (f64, f64) {
    match *p {
        CellPattern::Uniform { value } => (value, value),
        CellPattern::HorizontalLaminate { alpha, beta, .. }
        | CellPattern::VerticalLaminate { alpha, beta, .. }
        | CellPattern::Checkerboard { alpha, beta } => (alpha, beta),
    }
}

fn cmd_audit(dir: &Path, strict: bool) -> Result<(), Failure> {
    let audit = audit_run_dir(dir).map_err(|e| Failure::Config(e.to_string()))?;
    println!(
        "snapshots: {} (complete: {})",
        audit.snapshot_steps.len(),
        audit.complete
    );
    if audit.complete {
        println!(
            "max |stored - recomputed| ledger entry: {:e}",
            audit.max_ledger_difference
        );
    }
    println!("max identity residual: {:e}", audit.max_identity_residual);
    println!(
        "max inequality slack: {:e} (tolerance {:e}); with dissipation: {:e}",
        audit.inequality.max_slack, audit.inequality.tolerance, audit.inequality.max_slack_with_dissipation
    );
    println!("max sound area above M: {:e}", audit.max_area_above_m);
    println!("nestedness violations: {}", audit.nestedness_violations.len());
    let mut problems = Vec::new();
    if !audit.pass() {
        problems.push("run directory audit failed".into());
    }
    if audit.complete && audit.max_ledger_difference != 0.0 {
        problems.push("stored ledger differs from the recomputed one".into());
    }
    audit_gate(strict, problems)
}
