//! Independent ground truth for the closed-form weights and derivatives:
//! quadrature of the defining integral, finite differences, and the
//! spherical-excess weight formulation.

mod fd;
mod ju;
mod quadrature;

pub use fd::{fd_gradient, fd_hessian, fd_hessian_from_gradient, fd_jacobian, FdEstimate, FdScheme, FdSpec};
pub use ju::ju_robust_weights;
pub use quadrature::{
    quadrature_coordinates, quadrature_triangle_weights, quadrature_weight, QuadratureResult, QuadratureSpec,
};
