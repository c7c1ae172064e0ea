use thiserror::Error;

use crate::cage::FrameClass;

/// Every failure the coordinate, derivative and solver routines can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MvcError {
    #[error("cage is not closed: edge ({0}, {1}) has a single incident triangle")]
    NotClosed(usize, usize),
    #[error("non-manifold edge ({a}, {b}) shared by {count} triangles")]
    NonManifoldEdge { a: usize, b: usize, count: usize },
    #[error("triangle {0} is degenerate")]
    DegenerateTriangle(usize),
    #[error("inconsistent triangle winding across edge ({0}, {1})")]
    InconsistentOrientation(usize, usize),
    #[error("invalid mesh data: {0}")]
    InvalidMesh(String),
    #[error("query point coincides with vertex {0}")]
    VertexCoincidence(usize),
    #[error("kernel argument {0} outside [0, pi - eps)")]
    DomainError(f64),
    #[error("formula requires a {expected:?} frame, got {found:?}")]
    WrongClassification { expected: FrameClass, found: FrameClass },
    #[error("query point lies on the cage surface (triangle {triangle})")]
    OnSurface { triangle: usize },
    #[error("sum of weights is numerically zero")]
    NormalizationSingular,
    #[error("deformed cage has {found} vertices, reference has {expected}")]
    VertexCountMismatch { expected: usize, found: usize },
    #[error("least-squares system has no rows")]
    EmptySystem,
    #[error("constraints determine only {rank} of {unknowns} cage degrees of freedom")]
    RankDeficientUnconstrained { rank: usize, unknowns: usize },
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error("field evaluation failed at stencil point {index}: {source}")]
    EvaluatorFailed { index: usize, source: Box<MvcError> },
    #[error("vertex {index}: {source}")]
    AtVertex { index: usize, source: Box<MvcError> },
}

pub type Result<T, E = MvcError> = std::result::Result<T, E>;
