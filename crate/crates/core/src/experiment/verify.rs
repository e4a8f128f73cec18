//! Self-check suite: background-flow identities, strip Poincaré ratio,
//! Couette fixed point, skew-symmetry, divergence and energy identity.

use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::error::ExperimentError;
use crate::fem::{apply_trilinear, assemble_constant_forms, block_quad, interpolate, MixedSpace};
use crate::mesh::{build_annulus_mesh, build_channel_mesh, AnnulusSpec, ChannelSpec};
use crate::solver::{divergence_residual, BoundaryData, FlowState, Integrator, ModelParams, TimeSteppingConfig};
use crate::stats::{dissipation_rate, lemma1_quadrature_check, poincare_strip_check};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        CheckResult { name: name.into(), measured, tolerance, passed: measured <= tolerance }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

fn channel(n: usize, strip: Option<f64>) -> Result<MixedSpace, ExperimentError> {
    let mut spec = ChannelSpec::new(1.0, n, n);
    spec.align_strip = strip;
    Ok(MixedSpace::new(build_channel_mesh(&spec)?)?)
}

/// Random field vanishing on Dirichlet nodes and periodic-consistent.
pub fn random_interior_field(space: &MixedSpace, rng: &mut impl Rng) -> Vec<f64> {
    let n = space.n_nodes();
    let mut u: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    for i in space.dirichlet_nodes().collect::<Vec<_>>() {
        u[i] = 0.0;
        u[n + i] = 0.0;
    }
    space.apply_periodic(&mut u);
    u
}

fn background_flow() -> Result<Vec<CheckResult>, ExperimentError> {
    let mut out = Vec::new();
    for h in [0.05, 0.1, 0.25] {
        let space = channel(8, Some(h))?;
        let forms = assemble_constant_forms(&space);
        let r = lemma1_quadrature_check(&space, &forms, h, 1.0, 1.0)?;
        out.push(CheckResult::new(format!("background-flow norms (h = {h})"), r.max_rel_err, 1e-10));
    }
    Ok(out)
}

fn skew(rng: &mut impl Rng) -> Result<CheckResult, ExperimentError> {
    let space = channel(10, None)?;
    let forms = assemble_constant_forms(&space);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let u = random_interior_field(&space, rng);
        let v = random_interior_field(&space, rng);
        let b = apply_trilinear(&space, &u, &v, &v)?;
        let scale = block_quad(&forms.stiffness, &u).sqrt() * block_quad(&forms.stiffness, &v);
        worst = worst.max(b.abs() / scale);
    }
    Ok(CheckResult::new("skew-symmetry |b(u,v,v)| / (|u|_A |v|_A^2)", worst, 1e-12))
}

fn couette() -> Result<Vec<CheckResult>, ExperimentError> {
    let space = channel(8, None)?;
    let h = space.mesh().h_max();
    let params = ModelParams::new(0.01, 0.17, h, 1.0, 1.0)?;
    let mut integ = Integrator::new(space, params, BoundaryData::Couette { speed: 1.0 })?;
    let exact = interpolate(integ.space(), |p| [p[1], 0.0]);
    let mut state = FlowState { u: exact.clone(), p: vec![0.0; integ.space().n_pres()], t: 0.0 };
    let cfg = TimeSteppingConfig::new(0.01, 1.0);
    for _ in 0..100 {
        state = integ.step(&state, &cfg)?.0;
    }
    let diff: Vec<f64> = state.u.iter().zip(&exact).map(|(a, b)| a - b).collect();
    let l2 = block_quad(&integ.forms().mass, &diff).max(0.0).sqrt();
    let eps = dissipation_rate(integ.space(), integ.forms(), &state, &params)?;
    let expect = 1.0 / params.re() + params.cs_delta_sq();
    Ok(vec![
        CheckResult::new("Couette fixed point, L2 change over 100 steps", l2, 1e-7),
        CheckResult::new("Couette dissipation coefficient, relative error", (eps - expect).abs() / expect, 1e-8),
    ])
}

fn divergence() -> Result<CheckResult, ExperimentError> {
    let space = MixedSpace::new(build_annulus_mesh(&AnnulusSpec::new(24, 12), 1)?)?;
    let params = ModelParams::from_reynolds(1000.0, 1.0, 1.0, 0.0, 0.0)?;
    let mut integ = Integrator::new(space, params, BoundaryData::RotatingOuter { speed: 1.0 })?;
    let state = integ.solve_stokes(0.0)?;
    let r = divergence_residual(integ.space(), integ.forms(), &state.u);
    Ok(CheckResult::new("annulus Stokes divergence residual", r, 1e-10))
}

fn energy(rng: &mut impl Rng) -> Result<CheckResult, ExperimentError> {
    let space = channel(6, None)?;
    let params = ModelParams::new(0.01, 0.17, 0.1, 1.0, 1.0)?;
    let mut integ = Integrator::new(space, params, BoundaryData::Zero)?;
    let u = random_interior_field(integ.space(), rng);
    let mut state = FlowState { u, p: vec![0.0; integ.space().n_pres()], t: 0.0 };
    let mut cfg = TimeSteppingConfig::new(0.01, 1.0);
    cfg.picard_tol = 1e-13;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let next = integ.step(&state, &cfg)?.0;
        worst = worst.max(integ.energy_balance(&state.u, &next.u, cfg.dt)?.relative);
        state = next;
    }
    Ok(CheckResult::new("discrete energy identity, relative residual", worst, 1e-10))
}

/// Runs every check; individual failures are recorded, not raised.
pub fn cmd_verify(seed: u64) -> Result<VerifyReport, ExperimentError> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut checks = background_flow()?;
    let space = channel(10, Some(0.1))?;
    let ratio = poincare_strip_check(&space, 0.1, 1.0, 100, seed)?;
    checks.push(CheckResult::new("strip Poincare ratio over 100 fields", ratio, 1.0));
    checks.extend(couette()?);
    checks.push(skew(&mut rng)?);
    checks.push(divergence()?);
    checks.push(energy(&mut rng)?);
    let all_passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport { seed, checks, all_passed })
}
