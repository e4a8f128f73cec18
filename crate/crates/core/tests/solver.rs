use shearlab::fem::{interpolate, sparse::norm2, MixedSpace};
use shearlab::mesh::{build_annulus_mesh, build_channel_mesh, AnnulusSpec, ChannelSpec};
use shearlab::solver::{
    dirichlet_defect, divergence_residual, parse_checkpoint, render_checkpoint, BoundaryData, FlowState, Integrator,
    ModelParams, TimeSteppingConfig,
};

fn channel_space(n: usize) -> MixedSpace {
    MixedSpace::new(build_channel_mesh(&ChannelSpec::new(1.0, n, n)).unwrap()).unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn stokes_recovers_couette_profile() {
    let params = ModelParams::new(0.01, 0.0, 0.0, 1.0, 1.0).unwrap();
    let mut integ = Integrator::new(channel_space(6), params, BoundaryData::Couette { speed: 1.0 }).unwrap();
    let state = integ.solve_stokes(0.0).unwrap();
    let exact = interpolate(integ.space(), |p| [p[1], 0.0]);
    assert!(max_diff(&state.u, &exact) <= 1e-10);
    assert!(integ.forms().pressure_integral(&state.p).abs() <= 1e-10);
}

#[test]
fn annulus_zero_data_gives_zero_state() {
    let space = MixedSpace::new(build_annulus_mesh(&AnnulusSpec::new(24, 12), 1).unwrap()).unwrap();
    let params = ModelParams::new(1e-3, 0.0, 0.0, 1.0, 1.0).unwrap();
    let state = shearlab::solver::solve_stokes(&space, &params, &BoundaryData::Zero).unwrap();
    assert!(state.u.iter().all(|v| *v == 0.0));
    assert!(state.p.iter().all(|v| *v == 0.0));
}

#[test]
fn annulus_rotating_drive_is_divergence_free() {
    let space = MixedSpace::new(build_annulus_mesh(&AnnulusSpec::default(), 1).unwrap()).unwrap();
    let params = ModelParams::from_reynolds(4500.0, 1.0, 1.0, 0.0, 0.0).unwrap();
    let bc = BoundaryData::RotatingOuter { speed: 1.0 };
    let mut integ = Integrator::new(space, params, bc.clone()).unwrap();
    let state = integ.solve_stokes(0.0).unwrap();
    assert!(norm2(&state.u) > 1.0);
    assert!(divergence_residual(integ.space(), integ.forms(), &state.u) <= 1e-10);
    assert!(dirichlet_defect(integ.space(), &state.u, &bc, 0.0) == 0.0);
}

fn couette_fixed_point(cs: f64, delta: f64) {
    let params = ModelParams::new(0.01, cs, delta, 1.0, 1.0).unwrap();
    let mut integ = Integrator::new(channel_space(6), params, BoundaryData::Couette { speed: 1.0 }).unwrap();
    let exact = interpolate(integ.space(), |p| [p[1], 0.0]);
    let mut state = FlowState { u: exact.clone(), p: vec![0.0; integ.space().n_pres()], t: 0.0 };
    let cfg = TimeSteppingConfig::new(0.05, 5.0);
    for step in 1..=100 {
        let (next, report) = integ.step(&state, &cfg).unwrap();
        assert!(report.converged);
        if step == 1 {
            assert!(max_diff(&next.u, &exact) <= 1e-9);
        }
        state = next;
    }
    assert!(max_diff(&state.u, &exact) <= 1e-7);
}

#[test]
fn couette_is_a_fixed_point_without_model() {
    couette_fixed_point(0.0, 0.0);
}

#[test]
fn couette_is_a_fixed_point_with_model() {
    couette_fixed_point(0.17, 0.1);
}

#[test]
fn zero_time_step_is_rejected() {
    let params = ModelParams::new(0.01, 0.0, 0.0, 1.0, 1.0).unwrap();
    let mut integ = Integrator::new(channel_space(3), params, BoundaryData::Zero).unwrap();
    let state = FlowState::zero(integ.space(), 0.0);
    assert!(integ.step(&state, &TimeSteppingConfig::new(0.0, 1.0)).is_err());
}

#[test]
fn energy_identity_with_homogeneous_data() {
    let params = ModelParams::new(0.01, 0.2, 0.1, 1.0, 1.0).unwrap();
    let mut integ = Integrator::new(channel_space(6), params, BoundaryData::Zero).unwrap();
    let space = integ.space();
    let pi = std::f64::consts::PI;
    let mut u = interpolate(space, |p| {
        let (x, z) = (2.0 * pi * p[0], pi * p[1]);
        [z.sin().powi(2) * x.cos() + z.sin(), -0.5 * (2.0 * z).sin() * x.sin() * 0.5]
    });
    for i in space.dirichlet_nodes().collect::<Vec<_>>() {
        let n = space.n_nodes();
        u[i] = 0.0;
        u[n + i] = 0.0;
    }
    let mut state = FlowState { u, p: vec![0.0; space.n_pres()], t: 0.0 };
    let mut cfg = TimeSteppingConfig::new(0.01, 1.0);
    cfg.picard_tol = 1e-13;
    for _ in 0..5 {
        let (next, report) = integ.step(&state, &cfg).unwrap();
        let bal = integ.energy_balance(&state.u, &next.u, cfg.dt).unwrap();
        assert!(bal.model > 0.0 && bal.viscous > 0.0);
        assert!(bal.relative <= 1e-10, "energy residual {:e} (increment {:e})", bal.relative, report.increment);
        state = next;
    }
}

#[test]
fn checkpoint_round_trip() {
    let space = channel_space(3);
    let u: Vec<f64> = (0..space.n_vel()).map(|i| (i as f64).sqrt() / 7.0).collect();
    let p: Vec<f64> = (0..space.n_pres()).map(|i| -(i as f64) / 3.0).collect();
    let state = FlowState { u, p, t: 0.1 + 0.2 };
    let text = render_checkpoint(&space, &state);
    assert_eq!(parse_checkpoint(&space, &text).unwrap(), state);
    let other = channel_space(4);
    assert!(parse_checkpoint(&other, &text).is_err());
}
