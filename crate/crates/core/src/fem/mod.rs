//! Taylor–Hood (quadratic velocity, linear pressure) finite elements.

mod assembly;
pub mod quadrature;
mod space;
pub mod sparse;

pub use assembly::{
    apply_trilinear, assemble_advection, assemble_body_force, assemble_constant_forms, assemble_eddy_viscosity,
    block_apply, block_bilinear, block_quad, cell_gradient_norm, gradient_norm_integral, gradient_norm_per_cell,
    interpolate, l2_error, local_mass_stiffness, AssembledForms, QUADRATURE,
};
pub use space::{MixedSpace, NodeKind};
pub use sparse::CsrMatrix;
