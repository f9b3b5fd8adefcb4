//! Time integration: conservation, accuracy, stability and failure modes.

use dendrite_core::params::{derive_alloy_params, AlloyMaterial};
use dendrite_core::scenarios::{
    build_initial_state, Scenario, ScenarioKind, Seed, SeedLayout, Symmetry,
};
use dendrite_core::stepper::{conserved_integral, stable_dt};
use dendrite_core::{
    Error, FieldState, Grid, Model, PureMeltParams, Simulation, StepControl, StepMode,
};

fn seeded_pure(extent: f64, dx: f64, center: [f64; 3]) -> (Grid, Model, FieldState) {
    let mut s = Scenario::preset(ScenarioKind::SingleEquiaxed);
    s.domain_extent = vec![extent, extent];
    s.dx = dx;
    s.seeds = SeedLayout::Seeds(vec![Seed {
        center,
        radius: 6.0,
    }]);
    let grid = s.grid().unwrap();
    let state = build_initial_state(&s, &grid).unwrap();
    (grid, s.model, state)
}

fn relative_drift(sim: &Simulation, c0: f64) -> f64 {
    (sim.conserved_integral() - c0).abs() / c0.abs()
}

#[test]
fn pure_melt_conserves_each_step() {
    let (grid, model, state) = seeded_pure(40.0, 1.0, [20.0, 20.0, 0.0]);
    let dt = stable_dt(&grid, &model, 0.9);
    let mut sim = Simulation::new(grid, model, StepControl::explicit(dt), state).unwrap();
    let c0 = sim.conserved_integral();
    for _ in 0..50 {
        let before = sim.conserved_integral();
        sim.step().unwrap();
        assert!((sim.conserved_integral() - before).abs() <= 1e-10 * before.abs());
    }
    assert!(relative_drift(&sim, c0) < 1e-10);
}

#[test]
fn alloy_conserves_each_step() {
    for mode in [StepMode::Explicit, StepMode::SemiImplicit] {
        let mut s = Scenario::preset(ScenarioKind::SingleColumnar);
        s.domain_extent = vec![36.0, 36.0];
        s.seeds = SeedLayout::Seeds(vec![Seed {
            center: [18.0, 0.0, 0.0],
            radius: 8.0,
        }]);
        let grid = s.grid().unwrap();
        let state = build_initial_state(&s, &grid).unwrap();
        let ctl = match mode {
            StepMode::Explicit => StepControl::explicit(stable_dt(&grid, &s.model, 0.9)),
            StepMode::SemiImplicit => StepControl::semi_implicit(0.02),
        };
        let mut sim = Simulation::new(grid, s.model, ctl, state).unwrap();
        let c0 = sim.conserved_integral();
        for _ in 0..20 {
            let before = sim.conserved_integral();
            sim.step().unwrap();
            assert!(
                (sim.conserved_integral() - before).abs() <= 1e-9 * before.abs(),
                "{mode:?}: {} -> {}",
                before,
                sim.conserved_integral()
            );
        }
        assert!(relative_drift(&sim, c0) < 1e-9);
    }
}

/// Pure-melt setup on `[0, L] x [0, h]` with phi frozen in the liquid
/// (`phi = -1` zeroes the coupling and the latent-heat source) and a single
/// cosine mode in `u`.
fn cosine_mode(l: f64, n: usize) -> (Grid, Model, FieldState, f64) {
    let h = l / (n - 1) as f64;
    let grid = Grid::new(&[n, 2], &[h, h], &[0.0, 0.0]).unwrap();
    let mut p = PureMeltParams::benchmark();
    p.d = 1.0;
    p.delta = 0.0;
    let k = core::f64::consts::PI / l;
    let mut state = FieldState::uniform(&grid, 0.0, -1.0);
    for i in 0..grid.node_count() {
        state.scalar[i] = (k * grid.node_coord(i)[0]).cos();
    }
    (grid, Model::PureMelt(p), state, k)
}

#[test]
fn frozen_phase_diffusion_follows_fourier_decay() {
    let l = 10.0;
    let (grid, model, state, k) = cosine_mode(l, 129);
    let dt = stable_dt(&grid, &model, 0.9);
    let mut sim = Simulation::new(grid.clone(), model, StepControl::explicit(dt), state).unwrap();
    sim.advance_to(1.0 / (k * k)).unwrap();
    let decay = (-k * k * sim.state.time).exp();
    for i in 0..grid.node_count() {
        let exact = decay * (k * grid.node_coord(i)[0]).cos();
        assert!(
            (sim.state.scalar[i] - exact).abs() < 1e-3 * decay,
            "node {i}"
        );
        assert_eq!(sim.state.phi[i], -1.0);
    }
}

#[test]
fn explicit_stepping_is_first_order_in_time() {
    // Compared with the exact time evolution of the discrete mode, so only
    // the time-stepping error remains.
    let l = 10.0;
    let n = 65;
    let (grid, model, state, k) = cosine_mode(l, n);
    let h = l / (n - 1) as f64;
    let lam = 4.0 / (h * h) * (0.5 * k * h).sin().powi(2);
    let t_end = 2.0;
    let dts = [1e-3, 5e-4, 2.5e-4, 1.25e-4];
    assert!(dts[0] < stable_dt(&grid, &model, 1.0));
    let mut pairs = Vec::new();
    for dt in dts {
        let mut sim = Simulation::new(
            grid.clone(),
            model,
            StepControl::explicit(dt),
            state.clone(),
        )
        .unwrap();
        sim.advance_to(t_end).unwrap();
        let amp = (-lam * sim.state.time).exp();
        let err = (0..grid.node_count())
            .map(|i| (sim.state.scalar[i] - amp * (k * grid.node_coord(i)[0]).cos()).abs())
            .fold(0.0, f64::max);
        pairs.push((dt, err));
    }
    let (slope, _) = dendrite_core::analysis::fit_rate(&pairs).unwrap();
    assert!(
        (slope - 1.0).abs() <= 0.15,
        "slope {slope}, errors {pairs:?}"
    );
}

#[test]
fn stable_step_stays_bounded() {
    let (grid, model, state) = seeded_pure(60.0, 1.0, [30.0, 30.0, 0.0]);
    let dt = stable_dt(&grid, &model, 0.9);
    let mut sim = Simulation::new(grid, model, StepControl::explicit(dt), state).unwrap();
    for _ in 0..500 {
        sim.step().unwrap();
    }
    assert!(sim.state.is_finite());
    assert!(sim.state.phi_overshoot() < 0.05);
}

#[test]
fn quadrant_run_matches_the_full_domain() {
    let (full_grid, model, full_state) = seeded_pure(40.0, 1.0, [20.0, 20.0, 0.0]);
    let (quad_grid, _, quad_state) = seeded_pure(20.0, 1.0, [0.0, 0.0, 0.0]);
    let dt = stable_dt(&full_grid, &model, 0.9);
    let mut full = Simulation::new(
        full_grid.clone(),
        model,
        StepControl::explicit(dt),
        full_state,
    )
    .unwrap();
    let mut quad = Simulation::new(
        quad_grid.clone(),
        model,
        StepControl::explicit(dt),
        quad_state,
    )
    .unwrap();
    for _ in 0..100 {
        full.step().unwrap();
        quad.step().unwrap();
    }
    let mut worst: f64 = 0.0;
    for i in 0..quad_grid.node_count() {
        let [ix, iy, _] = quad_grid.node_ijk(i);
        let j = full_grid.index(ix + 20, iy + 20, 0);
        worst = worst
            .max((quad.state.phi[i] - full.state.phi[j]).abs())
            .max((quad.state.scalar[i] - full.state.scalar[j]).abs());
    }
    assert!(worst < 1e-12, "max difference {worst}");
    let qi = conserved_integral(&quad.state, &quad_grid, &model);
    let fi = conserved_integral(&full.state, &full_grid, &model);
    assert!((4.0 * qi - fi).abs() < 1e-9 * fi.abs());
    let _ = Symmetry::Quadrant;
}

#[test]
fn non_finite_values_report_the_element() {
    let (grid, model, mut state) = seeded_pure(10.0, 1.0, [5.0, 5.0, 0.0]);
    let bad = grid.index(4, 6, 0);
    state.phi[bad] = f64::NAN;
    let dt = stable_dt(&grid, &model, 0.5);
    let mut sim = Simulation::new(grid.clone(), model, StepControl::explicit(dt), state).unwrap();
    match sim.step() {
        Err(Error::NonFinite { element }) => {
            // One of the four elements around the node.
            let ne = grid.nodes_per_axis()[0] - 1;
            let (ex, ey) = (element % ne, element / ne);
            assert!(
                (3..=4).contains(&ex) && (5..=6).contains(&ey),
                "element {element}"
            );
        }
        other => panic!("expected NonFinite, got {other:?}"),
    }
}

#[test]
fn fixed_point_reports_non_convergence() {
    let (grid, model, state) = seeded_pure(20.0, 1.0, [10.0, 10.0, 0.0]);
    let mut ctl = StepControl::semi_implicit(0.5);
    ctl.max_fixed_point_iters = 1;
    ctl.fp_tolerance = 1e-14;
    let mut sim = Simulation::new(grid, model, ctl, state).unwrap();
    match sim.step() {
        Err(Error::NoConvergence { history }) => {
            assert_eq!(history.len(), 1);
            assert!(history[0] > 1e-14);
        }
        other => panic!("expected NoConvergence, got {other:?}"),
    }
}

#[test]
fn semi_implicit_converges_and_tracks_explicit() {
    let (grid, model, state) = seeded_pure(30.0, 1.0, [15.0, 15.0, 0.0]);
    let dt = 0.02;
    let mut ex = Simulation::new(
        grid.clone(),
        model,
        StepControl::explicit(dt),
        state.clone(),
    )
    .unwrap();
    let mut im = Simulation::new(grid, model, StepControl::semi_implicit(dt), state).unwrap();
    ex.advance_to(2.0).unwrap();
    im.advance_to(2.0).unwrap();
    assert!(im.fixed_point_history().last().unwrap() < &1e-8);
    let e = ex
        .state
        .phi
        .iter()
        .zip(&im.state.phi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(e < 3e-2, "explicit vs semi-implicit max difference {e}");
}

#[test]
fn ohno_matsuura_reductions() {
    let mut mat = AlloyMaterial::al_cu();
    let base = derive_alloy_params(mat).unwrap();
    mat.d_s = 0.0;
    let mut om = derive_alloy_params(mat).unwrap();
    om.use_ohno_matsuura = true;
    for phi in [-1.0, -0.3, 0.0, 0.7, 1.0] {
        assert_eq!(om.diffusivity_factor(phi), base.diffusivity_factor(phi));
    }
    assert_eq!(om.antitrapping_factor(), base.antitrapping_factor());
    // Equal diffusivities and no partitioning remove the anti-trapping current.
    let mut eq = base;
    eq.use_ohno_matsuura = true;
    eq.ds_over_dl = 1.0;
    eq.k = 1.0;
    assert_eq!(eq.antitrapping_factor(), 0.0);
}

#[test]
fn explicit_step_above_bound_is_refused() {
    let (grid, model, state) = seeded_pure(20.0, 1.0, [10.0, 10.0, 0.0]);
    let bound = stable_dt(&grid, &model, 1.0);
    match Simulation::new(grid, model, StepControl::explicit(1.01 * bound), state) {
        Err(Error::UnstableTimeStep { dt, bound: b }) => assert!(dt > b),
        other => panic!("expected refusal, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn bulk_solid_at_melting_point_is_a_fixed_point() {
    let grid = Grid::new(&[12, 9], &[1.0, 1.0], &[0.0, 0.0]).unwrap();
    let model = Model::PureMelt(PureMeltParams::benchmark());
    let state = FieldState::uniform(&grid, 0.0, 1.0);
    for ctl in [
        StepControl::explicit(stable_dt(&grid, &model, 0.9)),
        StepControl::semi_implicit(0.5),
    ] {
        let mut sim = Simulation::new(grid.clone(), model, ctl, state.clone()).unwrap();
        for _ in 0..25 {
            sim.step().unwrap();
        }
        assert!(sim.state.phi.iter().all(|&p| (p - 1.0).abs() <= 1e-15));
        assert!(sim.state.scalar.iter().all(|&u| u.abs() <= 1e-15));
    }
}
