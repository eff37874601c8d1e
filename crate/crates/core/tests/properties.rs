use proptest::prelude::*;

use dyndamage::config::{parse_config, Config};
use dyndamage::damage::{minimize_damage_given_u, DamageState, MaterialParams};
use dyndamage::dynamics::{incremental_step, run_dynamics, Discretization, DynamicState, ForcingTerm};
use dyndamage::fem::{build_mesh, element_gradients, solve_spd, ElementField, ScalarField};
use dyndamage::par;
use dyndamage::relax::{laminate_effective, w_density, w_relaxed, CellMesh, CellPattern};

fn params_strategy() -> impl Strategy<Value = MaterialParams> {
    (0.1f64..5.0, 0.05f64..5.0, 0.01f64..3.0)
        .prop_map(|(alpha, gap, k)| MaterialParams::new(alpha, alpha + gap, k).unwrap())
}

fn random_field(mesh: &dyndamage::fem::Mesh, seed: &[f64]) -> ScalarField {
    let mut u = ScalarField::new(
        (0..mesh.num_nodes())
            .map(|i| seed[i % seed.len()] * ((i * 7 % 5) as f64 - 2.0))
            .collect(),
    );
    u.zero_boundary(mesh);
    u
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn damage_update_is_monotone_and_idempotent(
        params in params_strategy(),
        seed in prop::collection::vec(-3.0f64..3.0, 1..10),
        prev_flags in prop::collection::vec(any::<bool>(), 32),
    ) {
        let mesh = build_mesh(4, 4, 1.0, 1.0).unwrap();
        let u = random_field(&mesh, &seed);
        let grads = element_gradients(&mesh, &u);
        let prev = DamageState::from_flags(&mesh, prev_flags);
        let next = minimize_damage_given_u(&mesh, &params, &prev, &grads);
        prop_assert!(next.contains(&prev));
        prop_assert_eq!(&minimize_damage_given_u(&mesh, &params, &next, &grads), &next);
        // flipping any free flag never lowers the element energy
        for t in 0..mesh.num_triangles() {
            if prev.damaged[t] {
                continue;
            }
            let g2 = grads.values[t][0].powi(2) + grads.values[t][1].powi(2);
            let energy = |d: bool| {
                let s = if d { params.alpha } else { params.beta };
                (0.5 * s * g2 + if d { params.k } else { 0.0 }) * mesh.areas[t]
            };
            prop_assert!(energy(next.damaged[t]) <= energy(!next.damaged[t]));
        }
    }

    #[test]
    fn relaxed_density_is_convex_and_below(params in params_strategy(), t1 in 0.0f64..10.0, t2 in 0.0f64..10.0) {
        let mid = w_relaxed(&params, 0.5 * (t1 + t2));
        let scale = 1.0 + w_density(&params, t1.max(t2));
        prop_assert!(mid <= 0.5 * (w_relaxed(&params, t1) + w_relaxed(&params, t2)) + 1e-12 * scale);
        prop_assert!(w_relaxed(&params, t1) <= w_density(&params, t1) + 1e-12 * scale);
    }

    #[test]
    fn laminate_tensor_lies_in_bounds(params in params_strategy(), d in 0.0f64..1.0, angle in 0.0f64..std::f64::consts::TAU) {
        let a = laminate_effective(&params, d, [angle.cos(), angle.sin()]);
        prop_assert!(a.is_symmetric());
        let [lo, hi] = a.eigenvalues();
        let tol = 1e-12 * params.beta;
        prop_assert!(lo >= params.alpha - tol && hi <= params.beta + tol);
    }

    #[test]
    fn stiffness_scales_linearly(c in 0.1f64..10.0, coeffs in prop::collection::vec(0.5f64..4.0, 18)) {
        let mesh = build_mesh(3, 3, 1.0, 2.0).unwrap();
        let field = ElementField::new(coeffs.clone());
        let scaled = ElementField::new(coeffs.iter().map(|v| v * c).collect());
        let a = dyndamage::fem::assemble_stiffness(&mesh, &field).unwrap();
        let b = dyndamage::fem::assemble_stiffness(&mesh, &scaled).unwrap();
        prop_assert!(a.is_symmetric());
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x * c - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
    }

    #[test]
    fn cg_solves_mass_plus_stiffness(rhs in prop::collection::vec(-1.0f64..1.0, 9), dt in 0.01f64..1.0) {
        let mesh = build_mesh(4, 4, 1.0, 1.0).unwrap();
        let params = MaterialParams::new(1.0, 2.0, 1.0).unwrap();
        let disc = Discretization::new(mesh.clone(), params, Default::default());
        let k = disc.stiffness(&DamageState::empty(&mesh));
        let a = k.lincomb(1.0, &disc.mass, 1.0 / (dt * dt));
        let x = solve_spd(&a, &rhs, 1e-12).unwrap();
        let r: Vec<f64> = a.matvec(&x).iter().zip(&rhs).map(|(p, q)| p - q).collect();
        prop_assert!(par::norm(&r) <= 1e-10 * par::norm(&rhs).max(1e-300));
    }

    #[test]
    fn cell_value_is_bounded_by_the_mean(values in prop::collection::vec(1.0f64..4.0, 4), angle in 0.0f64..std::f64::consts::PI) {
        let cell = CellMesh::new(8);
        let coeff = ElementField::new(
            (0..cell.mesh.num_triangles()).map(|t| values[t % values.len()]).collect(),
        );
        let xi = [angle.cos(), angle.sin()];
        let value = cell.solve(&coeff, xi).unwrap().value;
        let mean: f64 = coeff.values.iter().zip(&cell.mesh.areas).map(|(c, a)| c * a).sum();
        let harmonic = 1.0 / coeff.values.iter().zip(&cell.mesh.areas).map(|(c, a)| a / c).sum::<f64>();
        prop_assert!(value <= mean * (1.0 + 1e-9));
        prop_assert!(value >= harmonic * (1.0 - 1e-9));
    }

    #[test]
    fn step_keeps_nesting_and_threshold(
        amp in 0.0f64..60.0,
        dt in 0.01f64..0.2,
        flags in prop::collection::vec(prop::bool::weighted(0.2), 72),
    ) {
        let mesh = build_mesh(6, 6, 1.0, 1.0).unwrap();
        let params = MaterialParams::new(1.0, 2.0, 0.5).unwrap();
        let disc = Discretization::new(mesh.clone(), params, Default::default());
        let d0 = DamageState::from_flags(&mesh, flags);
        let state = DynamicState::initial(ScalarField::zeros(&mesh), &ScalarField::zeros(&mesh), d0.clone(), dt);
        let load = vec![amp; disc.num_dofs()];
        let out = incremental_step(&disc, &state, &load).unwrap();
        prop_assert!(out.state.damage.contains(&d0));
        let grads = disc.gradients(&out.state.u_curr);
        for (t, g) in grads.values.iter().enumerate() {
            if !out.state.damage.damaged[t] {
                prop_assert!(g[0].hypot(g[1]) <= params.m);
            }
        }
    }

    #[test]
    fn config_round_trips(
        alpha in 0.1f64..2.0,
        gap in 0.1f64..2.0,
        k in prop::option::of(0.01f64..5.0),
        nx in 1usize..20,
        ny in 1usize..20,
        lx in 0.1f64..3.0,
        steps in 1usize..200,
        t_final in 0.01f64..5.0,
        tol in 1e-14f64..1e-6,
        every in 0usize..10,
        deltas in prop::collection::vec(0.0f64..1.0, 0..4),
        seed in any::<u64>(),
        amp in -2.0f64..2.0,
        omega in 0.0f64..10.0,
    ) {
        let k_text = k.map_or("\"inf\"".to_string(), |v| format!("{v:e}"));
        let text = format!(
            r#"{{"material": {{"alpha": {alpha:e}, "beta": {:e}, "k": {k_text}}},
                "mesh": {{"nx": {nx}, "ny": {ny}, "Lx": {lx:e}, "Ly": 1.0}},
                "time": {{"T": {t_final:e}, "steps": {steps}}},
                "initial": {{"v0": {{"kind": "sin_sin", "amplitude": {amp:e}, "mx": 2}}}},
                "forcing": {{"kind": "separable", "amplitude": {amp:e},
                             "time": {{"kind": "sin", "omega": {omega:e}}},
                             "space": {{"kind": "gaussian", "cx": 0.5, "cy": 0.5, "width": 0.2}}}},
                "solver": {{"tol": {tol:e}}},
                "outputs": {{"directory": "runs/x", "snapshot_every": {every}}},
                "audit": {{"deltas": {deltas:?}}},
                "seed": {seed}}}"#,
            alpha + gap
        );
        let config: Config = parse_config(&text).unwrap();
        let again = parse_config(&config.to_json()).unwrap();
        prop_assert_eq!(again, config);
    }
}

fn damage_scenario() -> Config {
    parse_config(
        r#"{"material": {"alpha": 1.0, "beta": 2.0, "k": 0.5},
            "mesh": {"nx": 24, "ny": 24, "Lx": 1.0, "Ly": 1.0},
            "time": {"T": 1.0, "steps": 30},
            "forcing": {"kind": "separable", "amplitude": 80.0,
                        "time": {"kind": "ramp", "t_ramp": 1.0},
                        "space": {"kind": "gaussian", "cx": 0.5, "cy": 0.5, "width": 0.1}}}"#,
    )
    .unwrap()
}

#[test]
fn identical_inputs_give_bit_identical_ledgers() {
    let scenario = damage_scenario().scenario().unwrap();
    let a = run_dynamics(&scenario).unwrap();
    let b = run_dynamics(&scenario).unwrap();
    assert_eq!(a, b);
    assert!(a.final_state.damage.count() > 0);
}

#[test]
fn thread_count_does_not_change_results() {
    let scenario = damage_scenario().scenario().unwrap();
    let one = par::with_threads(1, || run_dynamics(&scenario).unwrap());
    let many = par::with_threads(4, || run_dynamics(&scenario).unwrap());
    assert_eq!(one, many);

    let cell = CellMesh::new(48);
    let coeff = cell.coefficients(&CellPattern::Checkerboard {
        alpha: 1.0,
        beta: 4.0,
    });
    let t1 = par::with_threads(1, || cell.effective_tensor(&coeff).unwrap());
    let t4 = par::with_threads(4, || cell.effective_tensor(&coeff).unwrap());
    assert_eq!(t1, t4);
}

#[test]
fn zero_forcing_keeps_zero_state() {
    let mesh = build_mesh(5, 5, 1.0, 1.0).unwrap();
    let params = MaterialParams::new(1.0, 3.0, 0.2).unwrap();
    let disc = Discretization::new(mesh.clone(), params, Default::default());
    let z = ScalarField::zeros(&mesh);
    let state = DynamicState::initial(z.clone(), &z, DamageState::empty(&mesh), 0.1);
    let load = disc.load(&ForcingTerm::Zero, 0.1);
    let out = incremental_step(&disc, &state, &load).unwrap();
    assert!(out.state.u_curr.values.iter().all(|&v| v == 0.0));
    assert_eq!(out.state.damage.count(), 0);
}
