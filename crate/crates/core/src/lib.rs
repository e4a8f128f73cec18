//! Finite-element laboratory for time-averaged energy dissipation in
//! wall-driven shear flow.
//!
//! The crate solves the incompressible Navier–Stokes equations and the
//! Smagorinsky eddy-viscosity model with Taylor–Hood (P2/P1) elements and
//! backward-Euler time stepping, measures the dissipation rate
//! `ε(u) = |Ω|⁻¹ ∫ ν|∇u|² + (C_s δ)²|∇u|³` of computed states, and
//! evaluates the closed-form upper bounds on its time average together
//! with their term decomposition and parameter minimizers.

pub mod bounds;
pub mod error;
pub mod experiment;
pub mod fem;
pub mod mesh;
pub mod solver;
pub mod stats;
