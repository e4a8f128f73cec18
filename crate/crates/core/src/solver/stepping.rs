use std::sync::Arc;

use serde::Serialize;

use super::saddle::SaddleSolver;
use super::{BoundaryData, FlowState, ModelParams, TimeSteppingConfig};
use crate::error::SolverError;
use crate::fem::{
    assemble_advection, assemble_body_force, assemble_constant_forms, assemble_eddy_viscosity, block_quad,
    sparse::norm2, AssembledForms, CsrMatrix, MixedSpace, NodeKind,
};
use crate::mesh::Point;

pub type ForcingFn = dyn Fn(Point, f64) -> [f64; 2] + Send + Sync;

/// Diagnostics of one accepted time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepReport {
    pub t: f64,
    pub picard_iterations: usize,
    /// False when the Picard increment never reached the tolerance; the last
    /// iterate is kept.
    pub converged: bool,
    pub increment: f64,
    pub linear_residual: f64,
    pub divergence_residual: f64,
}

/// Terms of the discrete energy identity of one backward-Euler step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBalance {
    pub kinetic_new: f64,
    pub kinetic_old: f64,
    /// `½‖u₁ − u₀‖²_M`, the numerical dissipation of backward Euler.
    pub numerical: f64,
    /// `dt ν ‖∇u₁‖²`.
    pub viscous: f64,
    /// `dt ∫ (C_s δ)² |∇u₁|³`.
    pub model: f64,
    /// Sum of all terms; zero for homogeneous data without forcing.
    pub residual: f64,
    /// `|residual|` relative to the old kinetic energy.
    pub relative: f64,
}

/// Time integrator bound to one space, parameter set and boundary data.
pub struct Integrator {
    space: MixedSpace,
    forms: AssembledForms,
    params: ModelParams,
    bc: BoundaryData,
    forcing: Option<Arc<ForcingFn>>,
    saddle: SaddleSolver,
    base: Option<(f64, f64, CsrMatrix)>,
}

impl std::fmt::Debug for Integrator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Integrator")
            .field("params", &self.params)
            .field("bc", &self.bc)
            .field("saddle", &self.saddle)
            .finish()
    }
}

impl Integrator {
    pub fn new(space: MixedSpace, params: ModelParams, bc: BoundaryData) -> Result<Self, SolverError> {
        params.validate()?;
        let forms = assemble_constant_forms(&space);
        let saddle = SaddleSolver::new(&space, &forms)?;
        Ok(Integrator { space, forms, params, bc, forcing: None, saddle, base: None })
    }

    pub fn with_forcing(mut self, f: Arc<ForcingFn>) -> Self {
        self.forcing = Some(f);
        self
    }

    pub fn space(&self) -> &MixedSpace {
        &self.space
    }

    pub fn forms(&self) -> &AssembledForms {
        &self.forms
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn saddle(&self) -> &SaddleSolver {
        &self.saddle
    }

    pub fn saddle_mut(&mut self) -> &mut SaddleSolver {
        &mut self.saddle
    }

    pub fn boundary(&self) -> &BoundaryData {
        &self.bc
    }

    pub fn set_params(&mut self, params: ModelParams) -> Result<(), SolverError> {
        params.validate()?;
        self.params = params;
        self.base = None;
        Ok(())
    }

    fn load(&self, t: f64) -> Vec<f64> {
        match &self.forcing {
            Some(f) => assemble_body_force(&self.space, |p| f(p, t)),
            None => vec![0.0; self.space.n_vel()],
        }
    }

    /// Steady Stokes solution with the boundary data at time `t`.
    pub fn solve_stokes(&mut self, t: f64) -> Result<FlowState, SolverError> {
        let mut k = self.forms.stiffness.clone();
        k.scale(self.params.nu);
        let g = self.bc.dirichlet_vector(&self.space, t);
        let f = self.load(t);
        let sol = self.saddle.solve(&self.space, &self.forms, &k, &f, &g)?;
        let state = FlowState { u: sol.u, p: sol.p, t };
        if !state.is_finite() {
            return Err(SolverError::NonFinite(t));
        }
        Ok(state)
    }

    /// `M/dt + ν A`, cached per (dt, ν).
    fn base_operator(&mut self, dt: f64) -> CsrMatrix {
        let nu = self.params.nu;
        if let Some((d, n, m)) = &self.base {
            if *d == dt && *n == nu {
                return m.clone();
            }
        }
        let mut k = self.forms.mass.clone();
        k.scale(1.0 / dt);
        k.add_scaled(nu, &self.forms.stiffness);
        self.base = Some((dt, nu, k.clone()));
        k
    }

    /// One backward-Euler step with Picard iteration on advection and eddy
    /// viscosity.
    pub fn step(&mut self, state: &FlowState, cfg: &TimeSteppingConfig) -> Result<(FlowState, StepReport), SolverError> {
        cfg.validate()?;
        self.space.check_velocity(&state.u)?;
        let dt = cfg.dt;
        let t1 = state.t + dt;
        let g = self.bc.dirichlet_vector(&self.space, t1);
        let base = self.base_operator(dt);
        let mut f = self.load(t1);
        let mu = crate::fem::block_apply(&self.forms.mass, &state.u);
        for (fi, m) in f.iter_mut().zip(&mu) {
            *fi += m / dt;
        }
        let csd2 = self.params.cs_delta_sq();

        let n = self.space.n_nodes();
        let mut w = state.u.clone();
        for i in 0..n {
            if self.space.node_kind(i) == NodeKind::Dirichlet {
                w[i] = g[i];
                w[n + i] = g[n + i];
            }
        }
        let mut p = state.p.clone();
        let mut report = StepReport {
            t: t1,
            picard_iterations: 0,
            converged: false,
            increment: f64::INFINITY,
            linear_residual: 0.0,
            divergence_residual: 0.0,
        };
        for it in 1..=cfg.picard_max {
            let mut k = base.clone();
            k.add_scaled(1.0, &assemble_advection(&self.space, &w)?);
            if csd2 > 0.0 {
                k.add_scaled(1.0, &assemble_eddy_viscosity(&self.space, &w, csd2)?);
            }
            let sol = self.saddle.solve(&self.space, &self.forms, &k, &f, &g)?;
            let diff: Vec<f64> = sol.u.iter().zip(&w).map(|(a, b)| a - b).collect();
            let un = norm2(&sol.u);
            let incr = if un > 0.0 { norm2(&diff) / un } else { norm2(&diff) };
            w = sol.u;
            p = sol.p;
            report.picard_iterations = it;
            report.increment = incr;
            report.linear_residual = sol.residual;
            if !incr.is_finite() {
                return Err(SolverError::NonFinite(t1));
            }
            if incr <= cfg.picard_tol {
                report.converged = true;
                break;
            }
        }
        report.divergence_residual = divergence_residual(&self.space, &self.forms, &w);
        let next = FlowState { u: w, p, t: t1 };
        if !next.is_finite() {
            return Err(SolverError::NonFinite(t1));
        }
        Ok((next, report))
    }

    /// Evaluates the discrete energy identity between consecutive states.
    pub fn energy_balance(&self, u0: &[f64], u1: &[f64], dt: f64) -> Result<EnergyBalance, SolverError> {
        let m = &self.forms.mass;
        let diff: Vec<f64> = u1.iter().zip(u0).map(|(a, b)| a - b).collect();
        let kinetic_new = 0.5 * block_quad(m, u1);
        let kinetic_old = 0.5 * block_quad(m, u0);
        let numerical = 0.5 * block_quad(m, &diff);
        let viscous = dt * self.params.nu * block_quad(&self.forms.stiffness, u1);
        let csd2 = self.params.cs_delta_sq();
        let model = if csd2 > 0.0 {
            dt * block_quad(&assemble_eddy_viscosity(&self.space, u1, csd2)?, u1)
        } else {
            0.0
        };
        let residual = kinetic_new - kinetic_old + numerical + viscous + model;
        let relative = residual.abs() / kinetic_old.max(f64::MIN_POSITIVE);
        Ok(EnergyBalance { kinetic_new, kinetic_old, numerical, viscous, model, residual, relative })
    }
}

/// `‖B u‖ / ‖u‖` with the divergence rows of periodically identified
/// vertices combined.
pub fn divergence_residual(space: &MixedSpace, forms: &AssembledForms, u: &[f64]) -> f64 {
    let bu = space.fold_pressure(&forms.divergence(u));
    let un = norm2(u);
    if un == 0.0 {
        norm2(&bu)
    } else {
        norm2(&bu) / un
    }
}

/// Steady Stokes state for the given space, parameters and boundary data.
pub fn solve_stokes(space: &MixedSpace, params: &ModelParams, bc: &BoundaryData) -> Result<FlowState, SolverError> {
    Integrator::new(space.clone(), *params, bc.clone())?.solve_stokes(0.0)
}
