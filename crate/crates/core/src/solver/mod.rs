//! Steady Stokes initialization and backward-Euler time stepping for the
//! Navier–Stokes equations (`cs = 0`) and the Smagorinsky model.

mod checkpoint;
mod krylov;
mod saddle;
mod stepping;
mod transient;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use checkpoint::{load_checkpoint, parse_checkpoint, render_checkpoint, save_checkpoint, write_snapshot};
pub use saddle::{solve_saddle, SaddleSolution, SaddleSolver};
pub use stepping::{divergence_residual, solve_stokes, EnergyBalance, Integrator, StepReport};
pub use transient::{run_transient, Hooks, SampleEvent, TransientOutcome};

use crate::error::SolverError;
use crate::fem::{MixedSpace, NodeKind};
use crate::mesh::{Marker, Point};

/// Physical and model configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Kinematic viscosity.
    pub nu: f64,
    /// Smagorinsky constant.
    pub cs: f64,
    /// Filter length.
    pub delta: f64,
    /// Driving speed.
    #[serde(rename = "U")]
    pub u_ref: f64,
    /// Length scale.
    #[serde(rename = "L")]
    pub length: f64,
}

impl ModelParams {
    pub fn new(nu: f64, cs: f64, delta: f64, u_ref: f64, length: f64) -> Result<Self, SolverError> {
        let p = ModelParams { nu, cs, delta, u_ref, length };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with `nu = U L / re`.
    pub fn from_reynolds(re: f64, u_ref: f64, length: f64, cs: f64, delta: f64) -> Result<Self, SolverError> {
        if !(re > 0.0 && re.is_finite()) {
            return Err(SolverError::InvalidConfig(format!("Reynolds number must be positive, got {re}")));
        }
        Self::new(u_ref * length / re, cs, delta, u_ref, length)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let checks = [
            (self.nu > 0.0, "nu must be positive"),
            (self.cs >= 0.0, "cs must be nonnegative"),
            (self.delta >= 0.0, "delta must be nonnegative"),
            (self.u_ref > 0.0, "U must be positive"),
            (self.length > 0.0, "L must be positive"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(SolverError::InvalidConfig(format!("{msg} ({self:?})")));
            }
        }
        if ![self.nu, self.cs, self.delta, self.u_ref, self.length].iter().all(|v| v.is_finite()) {
            return Err(SolverError::InvalidConfig("model parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn re(&self) -> f64 {
        self.u_ref * self.length / self.nu
    }

    pub fn cs_delta(&self) -> f64 {
        self.cs * self.delta
    }

    pub fn cs_delta_sq(&self) -> f64 {
        self.cs_delta() * self.cs_delta()
    }

    /// Dissipation scale `U³/L`.
    pub fn dissipation_scale(&self) -> f64 {
        self.u_ref.powi(3) / self.length
    }
}

fn default_picard_tol() -> f64 {
    1e-8
}

fn default_picard_max() -> usize {
    50
}

fn default_output_every() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSteppingConfig {
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_picard_tol")]
    pub picard_tol: f64,
    #[serde(default = "default_picard_max")]
    pub picard_max: usize,
    /// Steps between statistic samples.
    #[serde(default = "default_output_every")]
    pub output_every: usize,
    /// Start of the averaging window; `t_final / 2` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<f64>,
}

impl TimeSteppingConfig {
    pub fn new(dt: f64, t_final: f64) -> Self {
        TimeSteppingConfig {
            dt,
            t_final,
            picard_tol: default_picard_tol(),
            picard_max: default_picard_max(),
            output_every: default_output_every(),
            burn_in: None,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::InvalidConfig(msg));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_final >= self.dt && self.t_final.is_finite()) {
            return bad(format!("t_final ({}) must be at least dt ({})", self.t_final, self.dt));
        }
        if !(self.picard_tol > 0.0 && self.picard_tol < 1.0) {
            return bad(format!("picard_tol must lie in (0, 1), got {}", self.picard_tol));
        }
        if self.picard_max < 1 {
            return bad("picard_max must be at least 1".into());
        }
        if self.output_every < 1 {
            return bad("output_every must be at least 1".into());
        }
        if let Some(b) = self.burn_in {
            if !(b >= 0.0 && b < self.t_final) {
                return bad(format!("burn_in must lie in [0, t_final), got {b}"));
            }
        }
        Ok(())
    }

    /// Number of steps to reach `t_final`.
    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt + 1e-9).floor() as usize
    }

    pub fn burn_in(&self) -> f64 {
        self.burn_in.unwrap_or(0.5 * self.t_final)
    }
}

pub type BoundaryFn = dyn Fn(Point, Marker, f64) -> [f64; 2] + Send + Sync;

/// Dirichlet data on the marked boundary.
#[derive(Clone)]
pub enum BoundaryData {
    /// Homogeneous data on every Dirichlet marker.
    Zero,
    /// Moving top wall `(U, 0)`, fixed bottom wall.
    Couette { speed: f64 },
    /// Tangential drive `U (−y, x)/r` on the outer circle, no slip elsewhere.
    RotatingOuter { speed: f64 },
    /// Arbitrary data `g(x, marker, t)`.
    Custom(Arc<BoundaryFn>),
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryData::Zero => write!(f, "Zero"),
            BoundaryData::Couette { speed } => write!(f, "Couette {{ speed: {speed} }}"),
            BoundaryData::RotatingOuter { speed } => write!(f, "RotatingOuter {{ speed: {speed} }}"),
            BoundaryData::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl BoundaryData {
    pub fn value(&self, p: Point, marker: Marker, t: f64) -> [f64; 2] {
        match self {
            BoundaryData::Zero => [0.0, 0.0],
            BoundaryData::Couette { speed } => match marker {
                Marker::TopWall => [*speed, 0.0],
                _ => [0.0, 0.0],
            },
            BoundaryData::RotatingOuter { speed } => match marker {
                Marker::OuterCircle => {
                    let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                    [-speed * p[1] / r, speed * p[0] / r]
                }
                _ => [0.0, 0.0],
            },
            BoundaryData::Custom(g) => g(p, marker, t),
        }
    }

    /// Full velocity vector carrying the boundary values on Dirichlet nodes
    /// and zero on free nodes.
    pub fn dirichlet_vector(&self, space: &MixedSpace, t: f64) -> Vec<f64> {
        let n = space.n_nodes();
        let mut g = vec![0.0; 2 * n];
        for i in space.dirichlet_nodes() {
            let v = match space.node_marker(i) {
                Some(m) => self.value(space.node_coords()[i], m, t),
                None => [0.0, 0.0],
            };
            g[i] = v[0];
            g[n + i] = v[1];
        }
        g
    }
}

/// Velocity and pressure coefficients at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub u: Vec<f64>,
    /// Zero-mean pressure.
    pub p: Vec<f64>,
    pub t: f64,
}

impl FlowState {
    pub fn zero(space: &MixedSpace, t: f64) -> Self {
        FlowState { u: vec![0.0; space.n_vel()], p: vec![0.0; space.n_pres()], t }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.p).all(|v| v.is_finite())
    }
}

/// Maximum deviation from the boundary data over Dirichlet nodes.
pub fn dirichlet_defect(space: &MixedSpace, u: &[f64], bc: &BoundaryData, t: f64) -> f64 {
    let g = bc.dirichlet_vector(space, t);
    let n = space.n_nodes();
    (0..n)
        .filter(|&i| space.node_kind(i) == NodeKind::Dirichlet)
        .map(|i| (u[i] - g[i]).abs().max((u[n + i] - g[n + i]).abs()))
        .fold(0.0, f64::max)
}
