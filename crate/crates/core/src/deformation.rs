//! Space deformation induced by moving the cage vertices.
//!
//! `f(η) = Σ λ_i(η) p̄_i`, `Jf = Σ p̄_i ∇λ_iᵗ`, `H(f_c) = Σ p̄_{i,c} Hλ_i`.
//! Coordinates depend only on the reference cage, so a [`Binding`] computes
//! them once per embedded point and replays them against any deformed cage.

use rayon::prelude::*;

use crate::cage::CageMesh;
use crate::derivatives::{derivative_set, DerivativeSet, Order};
use crate::error::{MvcError, Result};
use crate::linalg::{Mat3, Vec3};
use crate::real::Real;
use crate::shapes::IndexedMesh;
use crate::tolerances::Tolerances;
use crate::weights::{mvc_coordinates, WeightVector};

/// Target positions `p̄_i`, indexed like the reference cage.
#[derive(Clone, Debug, PartialEq)]
pub struct DeformedCage<T> {
    positions: Vec<Vec3<T>>,
}

impl<T: Real> DeformedCage<T> {
    pub fn new(reference: &CageMesh<T>, positions: Vec<Vec3<T>>) -> Result<Self> {
        if positions.len() != reference.num_vertices() {
            return Err(MvcError::VertexCountMismatch {
                expected: reference.num_vertices(),
                found: positions.len(),
            });
        }
        if let Some(i) = positions.iter().position(|p| !p.is_finite()) {
            return Err(MvcError::InvalidMesh(format!("deformed vertex {i} is not finite")));
        }
        Ok(DeformedCage { positions })
    }

    pub fn identity(reference: &CageMesh<T>) -> Self {
        DeformedCage {
            positions: reference.vertices().to_vec(),
        }
    }

    /// Applies `f` to every reference vertex.
    pub fn from_map(reference: &CageMesh<T>, f: impl Fn(&Vec3<T>) -> Vec3<T>) -> Self {
        DeformedCage {
            positions: reference.vertices().iter().map(f).collect(),
        }
    }

    pub(crate) fn from_positions(positions: Vec<Vec3<T>>) -> Self {
        DeformedCage { positions }
    }

    pub fn positions(&self) -> &[Vec3<T>] {
        &self.positions
    }

    pub fn into_positions(self) -> Vec<Vec3<T>> {
        self.positions
    }
}

/// Value, Jacobian and component Hessians of the deformation at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeformationSample<T> {
    pub value: Vec3<T>,
    pub jacobian: Mat3<T>,
    /// `H(f_x)`, `H(f_y)`, `H(f_z)`.
    pub hessians: [Mat3<T>; 3],
}

impl<T: Real> DeformationSample<T> {
    pub fn hess_x(&self) -> &Mat3<T> {
        &self.hessians[0]
    }

    pub fn hess_y(&self) -> &Mat3<T> {
        &self.hessians[1]
    }

    pub fn hess_z(&self) -> &Mat3<T> {
        &self.hessians[2]
    }

    /// `Σ_c ‖H(f_c)‖²_F`
    pub fn hessian_energy(&self) -> T {
        self.hessians
            .iter()
            .map(|h| {
                let n = h.frobenius_norm();
                n * n
            })
            .fold(T::zero(), |a, b| a + b)
    }
}

fn combine_values<T: Real>(lambda: &[T], deformed: &DeformedCage<T>) -> Vec3<T> {
    lambda
        .iter()
        .zip(&deformed.positions)
        .fold(Vec3::zero(), |acc, (&l, p)| acc + *p * l)
}

/// Linear sums of a derivative set against deformed positions.
pub fn sample_from_derivatives<T: Real>(ds: &DerivativeSet<T>, deformed: &DeformedCage<T>) -> DeformationSample<T> {
    let mut jacobian = Mat3::zero();
    let mut hessians = [Mat3::zero(); 3];
    for (i, p) in deformed.positions.iter().enumerate() {
        jacobian += Mat3::outer(p, &ds.grad_lambda[i]);
        if let Some(hl) = &ds.hess_lambda {
            for (c, h) in hessians.iter_mut().enumerate() {
                *h += hl[i] * p[c];
            }
        }
    }
    DeformationSample {
        value: combine_values(&ds.weights.lambda, deformed),
        jacobian,
        hessians,
    }
}

/// `f(η)`. Defined on the cage surface too, by interpolation.
pub fn deform_point<T: Real>(
    cage: &CageMesh<T>,
    deformed: &DeformedCage<T>,
    eta: &Vec3<T>,
    tol: &Tolerances<T>,
) -> Result<Vec3<T>> {
    check_count(cage, deformed)?;
    let wv = mvc_coordinates(cage, eta, tol)?;
    Ok(combine_values(&wv.lambda, deformed))
}

/// Value, Jacobian and Hessians of the deformation; refused on the surface.
pub fn deformation_sample<T: Real>(
    cage: &CageMesh<T>,
    deformed: &DeformedCage<T>,
    eta: &Vec3<T>,
    tol: &Tolerances<T>,
) -> Result<DeformationSample<T>> {
    check_count(cage, deformed)?;
    let ds = derivative_set(cage, eta, tol, Order::Hessian)?;
    Ok(sample_from_derivatives(&ds, deformed))
}

fn check_count<T: Real>(cage: &CageMesh<T>, deformed: &DeformedCage<T>) -> Result<()> {
    if deformed.positions.len() != cage.num_vertices() {
        return Err(MvcError::VertexCountMismatch {
            expected: cage.num_vertices(),
            found: deformed.positions.len(),
        });
    }
    Ok(())
}

/// Coordinates of one embedded point, computed against the reference cage.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundPoint<T> {
    pub weights: Result<WeightVector<T>>,
    /// Present when the binding was built with a derivative order; holds
    /// `OnSurface` for points on the cage.
    pub derivatives: Option<Result<DerivativeSet<T>>>,
}

/// What a bound point yields under one deformed cage.
#[derive(Clone, Debug, PartialEq)]
pub struct PointDeformation<T> {
    pub value: Result<Vec3<T>>,
    pub sample: Option<Result<DeformationSample<T>>>,
}

/// Precomputed coordinates for a batch of points, reusable across any
/// number of deformed cages. Points are processed in parallel; results are
/// kept in input order and each point's sums run in vertex order, so the
/// output does not depend on the thread count.
#[derive(Clone, Debug)]
pub struct Binding<T> {
    num_cage_vertices: usize,
    points: Vec<BoundPoint<T>>,
}

impl<T: Real> Binding<T> {
    /// `order = Value` binds coordinates only; higher orders also bind the
    /// derivative sets needed for Jacobians (and Hessians).
    pub fn new(cage: &CageMesh<T>, points: &[Vec3<T>], tol: &Tolerances<T>, order: Order) -> Self {
        let points = points
            .par_iter()
            .map(|eta| {
                if order == Order::Value {
                    return BoundPoint {
                        weights: mvc_coordinates(cage, eta, tol),
                        derivatives: None,
                    };
                }
                let weights = mvc_coordinates(cage, eta, tol);
                let derivatives = match &weights {
                    Ok(wv) if !wv.on_surface => Some(derivative_set(cage, eta, tol, order)),
                    Ok(wv) => Some(Err(MvcError::OnSurface {
                        triangle: wv.surface_location.map_or(0, |s| s.triangle),
                    })),
                    Err(e) => Some(Err(e.clone())),
                };
                BoundPoint { weights, derivatives }
            })
            .collect();
        Binding {
            num_cage_vertices: cage.num_vertices(),
            points,
        }
    }

    pub fn points(&self) -> &[BoundPoint<T>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn apply(&self, deformed: &DeformedCage<T>) -> Result<Vec<PointDeformation<T>>> {
        if deformed.positions.len() != self.num_cage_vertices {
            return Err(MvcError::VertexCountMismatch {
                expected: self.num_cage_vertices,
                found: deformed.positions.len(),
            });
        }
        Ok(self
            .points
            .par_iter()
            .map(|bp| PointDeformation {
                value: bp
                    .weights
                    .as_ref()
                    .map(|wv| combine_values(&wv.lambda, deformed))
                    .map_err(Clone::clone),
                sample: bp.derivatives.as_ref().map(|d| {
                    d.as_ref()
                        .map(|ds| sample_from_derivatives(ds, deformed))
                        .map_err(Clone::clone)
                }),
            })
            .collect())
    }

    /// Deformed positions only; the first failing point aborts with its index.
    pub fn deform_points(&self, deformed: &DeformedCage<T>) -> Result<Vec<Vec3<T>>> {
        self.apply(deformed)?
            .into_iter()
            .enumerate()
            .map(|(index, p)| {
                p.value.map_err(|e| MvcError::AtVertex {
                    index,
                    source: Box::new(e),
                })
            })
            .collect()
    }
}

/// Deforms every vertex of an embedded mesh, keeping its connectivity.
pub fn deform_mesh<T: Real>(
    cage: &CageMesh<T>,
    deformed: &DeformedCage<T>,
    mesh: &IndexedMesh<T>,
    tol: &Tolerances<T>,
) -> Result<IndexedMesh<T>> {
    check_count(cage, deformed)?;
    let binding = Binding::new(cage, &mesh.vertices, tol, Order::Value);
    Ok(IndexedMesh {
        vertices: binding.deform_points(deformed)?,
        triangles: mesh.triangles.clone(),
    })
}
