//! Per-triangle and per-vertex mean value weights.

use crate::cage::{build_triangle_frame, CageMesh, FrameClass, TriangleFrame};
use crate::derivatives::{evaluate_frame, Order};
use crate::error::{MvcError, Result};
use crate::linalg::Vec3;
use crate::real::Real;
use crate::tolerances::Tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightSource {
    GeneralFormula,
    PlanarFormula,
    SurfaceFallback,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriangleWeights<T> {
    pub w: [T; 3],
    pub source: WeightSource,
}

/// `w_j = N_j · m / det A` for a frame off the support plane.
pub fn triangle_weights<T: Real>(frame: &TriangleFrame<T>) -> Result<TriangleWeights<T>> {
    expect_class(frame, FrameClass::Generic)?;
    Ok(TriangleWeights {
        w: general_weights(frame),
        source: WeightSource::GeneralFormula,
    })
}

pub(crate) fn general_weights<T: Real>(frame: &TriangleFrame<T>) -> [T; 3] {
    frame.n_vec.map(|n| n.dot(&frame.m) / frame.det_a)
}

/// Weights of a triangle whose support plane contains `η` (outside the
/// triangle). The spherical image collapses onto a great-circle arc, so
/// `m` and every weight vanish; this is the `det A → 0` limit of the general
/// quotient, which goes to zero linearly in the plane distance.
pub fn triangle_weights_planar<T: Real>(frame: &TriangleFrame<T>) -> Result<TriangleWeights<T>> {
    expect_class(frame, FrameClass::OnSupportPlaneOutsideT)?;
    Ok(TriangleWeights {
        w: [T::zero(); 3],
        source: WeightSource::PlanarFormula,
    })
}

pub(crate) fn expect_class<T>(frame: &TriangleFrame<T>, expected: FrameClass) -> Result<()> {
    if frame.classification != expected {
        return Err(MvcError::WrongClassification {
            expected,
            found: frame.classification,
        });
    }
    Ok(())
}

/// Where on the cage an on-surface query landed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceLocation<T> {
    pub triangle: usize,
    pub barycentric: [T; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector<T> {
    /// Unnormalized weights; for on-surface points these equal `lambda`.
    pub w: Vec<T>,
    pub lambda: Vec<T>,
    pub on_surface: bool,
    pub surface_location: Option<SurfaceLocation<T>>,
}

/// Linear interpolation on triangle `t` at the projection of `η`.
pub fn surface_weights<T: Real>(cage: &CageMesh<T>, t: usize, eta: &Vec3<T>) -> WeightVector<T> {
    let [a, b, c] = cage.triangle_positions(t);
    let n = (b - a).cross(&(c - a));
    let nn = n.norm_squared();
    let q = *eta - n * ((*eta - a).dot(&n) / nn);
    let mut bary = [
        (c - b).cross(&(q - b)).dot(&n) / nn,
        (a - c).cross(&(q - c)).dot(&n) / nn,
        T::zero(),
    ];
    bary[2] = T::one() - bary[0] - bary[1];
    let mut lambda = vec![T::zero(); cage.num_vertices()];
    for (k, &v) in cage.triangles()[t].iter().enumerate() {
        lambda[v] = lambda[v] + bary[k];
    }
    WeightVector {
        w: lambda.clone(),
        lambda,
        on_surface: true,
        surface_location: Some(SurfaceLocation {
            triangle: t,
            barycentric: bary,
        }),
    }
}

/// Indicator weights at cage vertex `k`.
pub fn vertex_weights<T: Real>(cage: &CageMesh<T>, k: usize) -> WeightVector<T> {
    let mut lambda = vec![T::zero(); cage.num_vertices()];
    lambda[k] = T::one();
    let location = cage.vertex_triangle_adjacency()[k].first().map(|&t| {
        let local = cage.triangles()[t].iter().position(|&v| v == k).unwrap_or(0);
        let mut barycentric = [T::zero(); 3];
        barycentric[local] = T::one();
        SurfaceLocation {
            triangle: t,
            barycentric,
        }
    });
    WeightVector {
        w: lambda.clone(),
        lambda,
        on_surface: true,
        surface_location: location,
    }
}

/// Mean value coordinates of `η` with respect to `cage`.
pub fn mvc_coordinates<T: Real>(cage: &CageMesh<T>, eta: &Vec3<T>, tol: &Tolerances<T>) -> Result<WeightVector<T>> {
    if !eta.is_finite() {
        return Err(MvcError::InvalidMesh("query point is not finite".into()));
    }
    let mut w = vec![T::zero(); cage.num_vertices()];
    for t in 0..cage.num_triangles() {
        let frame = match build_triangle_frame(cage, t, eta, tol) {
            Ok(f) => f,
            Err(MvcError::VertexCoincidence(k)) => return Ok(vertex_weights(cage, k)),
            Err(e) => return Err(e),
        };
        if frame.classification.is_on_triangle() {
            return Ok(surface_weights(cage, t, eta));
        }
        let c = evaluate_frame(cage, &frame, tol, Order::Value)?;
        for (k, &v) in frame.vertex_ids.iter().enumerate() {
            w[v] = w[v] + c.w[k];
        }
    }
    let lambda = normalize(&w)?;
    Ok(WeightVector {
        w,
        lambda,
        on_surface: false,
        surface_location: None,
    })
}

pub(crate) fn normalize<T: Real>(w: &[T]) -> Result<Vec<T>> {
    let total = w.iter().fold(T::zero(), |s, &x| s + x);
    let max = w.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    if !(total.abs() >= T::lit(1e-14) * max) || max == T::zero() {
        return Err(MvcError::NormalizationSingular);
    }
    Ok(w.iter().map(|&x| x / total).collect())
}
