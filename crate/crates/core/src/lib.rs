//! Mean value coordinates on closed triangular cages, with exact first and
//! second derivatives, cage deformation, and a linear variational solver.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`.
//!
//! ```
//! use mvc_core::{mvc_coordinates, shapes, Tolerances, Vec3};
//!
//! let tet = shapes::tetrahedron::<f64>();
//! let wv = mvc_coordinates(&tet, &Vec3::zero(), &Tolerances::default()).unwrap();
//! assert!(wv.lambda.iter().all(|l| (l - 0.25).abs() < 1e-14));
//! ```

pub mod cage;
pub mod deformation;
pub mod derivatives;
pub mod error;
pub mod hessian_terms;
pub mod kernels;
pub mod linalg;
pub mod oracles;
pub mod real;
pub mod shapes;
pub mod solver;
pub mod tolerances;
pub mod validation;
pub mod weights;

pub use cage::{build_triangle_frame, load_cage, CageMesh, FrameClass, QueryPoint, TriangleFrame};
pub use deformation::{
    deform_mesh, deform_point, deformation_sample, sample_from_derivatives, Binding, BoundPoint, DeformationSample,
    DeformedCage, PointDeformation,
};
pub use derivatives::{
    derivative_set, evaluate_frame, normal_derivative, normal_derivative_gradient, triangle_contribution,
    triangle_gradients, triangle_gradients_planar, triangle_hessians, triangle_hessians_planar, DerivativeSet,
    DerivativeSource, Order, TriangleContribution, TriangleDerivatives,
};
pub use error::{MvcError, Result};
pub use kernels::{KernelBase, KernelId, Kernels};
pub use linalg::{Mat3, Vec3};
pub use real::Real;
pub use solver::{
    assemble_system, solve, solve_constraints, Constraint, LinearSystem, RigidityTerm, RowKind, Solution, SolveOptions,
    SolveReport,
};
pub use tolerances::Tolerances;
pub use weights::{
    mvc_coordinates, surface_weights, triangle_weights, triangle_weights_planar, vertex_weights, SurfaceLocation,
    TriangleWeights, WeightSource, WeightVector,
};

pub type Cage = CageMesh<f64>;
pub type Frame = TriangleFrame<f64>;
pub type Point = Vec3<f64>;
pub type Matrix3 = Mat3<f64>;
pub type Weights = WeightVector<f64>;
pub type Derivatives = DerivativeSet<f64>;
pub type Deformed = DeformedCage<f64>;
pub type Sample = DeformationSample<f64>;
pub type DefaultTolerances = Tolerances<f64>;
