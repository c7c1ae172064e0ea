//! Exact gradients and Hessians of the mean value weights.
//!
//! Per triangle there are two regimes. Off the support plane the weight is
//! `w_i = N_i·m / det A` and its derivatives follow from the Jacobian of `m`.
//! On the support plane (outside the triangle) every weight vanishes and the
//! weight behaves like `α_i · s` in the signed plane distance `s`, so the
//! gradient is `α_i n` and the Hessian is `g_i nᵗ + n g_iᵗ` with `g_i = ∇α_i`.
//! In a thin wedge around the plane the general quotient loses digits like
//! `ε/s³`, so the odd expansion in `s` about the projected point is used
//! there instead.

use crate::cage::{build_triangle_frame, closest_point_on_triangle, CageMesh, FrameClass, TriangleFrame};
use crate::error::{MvcError, Result};
use crate::hessian_terms::{mean_vector_jacobian, mean_vector_jacobian_derivative, EdgeTerms};
use crate::kernels::{KernelValues, Kernels};
use crate::linalg::{Mat3, Vec3};
use crate::real::Real;
use crate::tolerances::Tolerances;
use crate::weights::{expect_class, general_weights, normalize, TriangleWeights, WeightVector};

/// Highest derivative order to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Order {
    Value,
    Gradient,
    Hessian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeSource {
    GeneralFormula,
    PlanarFormula,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriangleDerivatives<T> {
    pub grad: [Vec3<T>; 3],
    pub hess: [Mat3<T>; 3],
    pub source: DerivativeSource,
}

fn edge_terms<T: Real>(frame: &TriangleFrame<T>, kernels: &Kernels<T>) -> Result<[EdgeTerms<T>; 3]> {
    Ok([
        EdgeTerms::new(frame, 0, kernels)?,
        EdgeTerms::new(frame, 1, kernels)?,
        EdgeTerms::new(frame, 2, kernels)?,
    ])
}

fn general_gradients<T: Real>(frame: &TriangleFrame<T>, w: &[T; 3], edges: &[EdgeTerms<T>; 3]) -> [Vec3<T>; 3] {
    let b = mean_vector_jacobian(edges) + Mat3::diagonal(w[0] + w[1] + w[2]);
    frame.n_vec.map(|n| b.tr_mul(&n) / frame.det_a)
}

fn general_hessians<T: Real>(
    frame: &TriangleFrame<T>,
    grads: &[Vec3<T>; 3],
    edges: &[EdgeTerms<T>; 3],
) -> [Mat3<T>; 3] {
    let sg = grads[0] + grads[1] + grads[2];
    let djm: [Mat3<T>; 3] = std::array::from_fn(|c| mean_vector_jacobian_derivative(edges, c));
    frame.n_vec.map(|n| {
        let rows = Mat3::from_rows([djm[0].tr_mul(&n), djm[1].tr_mul(&n), djm[2].tr_mul(&n)]);
        (rows + Mat3::outer(&n, &sg) + Mat3::outer(&sg, &n)) / frame.det_a
    })
}

/// `∇w_i = Bᵗ N_i / det A` with `B = Jm + (Σ_j w_j) I`.
pub fn triangle_gradients<T: Real>(
    frame: &TriangleFrame<T>,
    weights: &TriangleWeights<T>,
    kernels: &Kernels<T>,
) -> Result<[Vec3<T>; 3]> {
    expect_class(frame, FrameClass::Generic)?;
    let edges = edge_terms(frame, kernels)?;
    Ok(general_gradients(frame, &weights.w, &edges))
}

/// Rows `N_iᵗ ∂_c(Jm)` plus `N_i Gᵗ + G N_iᵗ`, all over `det A`, where `G`
/// is the sum of the three weight gradients.
pub fn triangle_hessians<T: Real>(
    frame: &TriangleFrame<T>,
    grads: &[Vec3<T>; 3],
    kernels: &Kernels<T>,
) -> Result<[Mat3<T>; 3]> {
    expect_class(frame, FrameClass::Generic)?;
    let edges = edge_terms(frame, kernels)?;
    Ok(general_hessians(frame, grads, &edges))
}

fn kernel_values<T: Real>(frame: &TriangleFrame<T>, kernels: &Kernels<T>) -> Result<[KernelValues<T>; 3]> {
    Ok([
        kernels.values(frame.theta[0])?,
        kernels.values(frame.theta[1])?,
        kernels.values(frame.theta[2])?,
    ])
}

fn planar_alpha<T: Real>(frame: &TriangleFrame<T>, kv: &[KernelValues<T>; 3]) -> [T; 3] {
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let scale = -two * frame.area;
    std::array::from_fn(|i| {
        let mut s = T::zero();
        for j in 0..3 {
            let a = frame.edge_distance_product(j);
            let kj2 = frame.edge[j].norm_squared();
            let ninj = frame.n_vec[i].dot(&frame.n_vec[j]);
            s = s
                + kv[j].eq2 * frame.edge[i].dot(&frame.edge[j]) / (two * a)
                + kv[j].eq1 * kj2 * ninj / (four * a * a * a)
                - ninj / (two * a * a);
        }
        s / scale
    })
}

fn planar_alpha_gradient<T: Real>(frame: &TriangleFrame<T>, kv: &[KernelValues<T>; 3]) -> [Vec3<T>; 3] {
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let scale = -two * frame.area;
    std::array::from_fn(|i| {
        let mut s = Vec3::zero();
        for j in 0..3 {
            let k = &kv[j];
            let a = frame.edge_distance_product(j);
            let (a2, a3) = (a * a, a * a * a);
            let v = frame.edge_midpoint_offset(j);
            let kk = frame.edge[i].dot(&frame.edge[j]);
            let kj2 = frame.edge[j].norm_squared();
            let ninj = frame.n_vec[i].dot(&frame.n_vec[j]);
            let jtn = frame.jn[j].tr_mul(&frame.n_vec[j]);
            let sym = frame.jn[i].tr_mul(&frame.n_vec[j]) + frame.jn[j].tr_mul(&frame.n_vec[i]);
            s += jtn * (k.eq1 * kk / (two * a3)) - v * (kk / (two * a2));
            s += jtn * (-k.eq4 * kj2 * ninj / (four * a3 * a2)) + v * (kj2 * ninj / (two * a2 * a2));
            s += sym * (k.eq1 * kj2 / (four * a3));
            s += v * (k.cos * ninj / a3) + jtn * (ninj / (a2 * a2));
            s -= sym / (two * a2);
        }
        s / scale
    })
}

/// Normal derivatives `α_i = ∂w_i/∂n` on the support plane, outside the
/// triangle. Equivalently `α_i = −∫_T φ_i / |p − η|⁴ dA`.
pub fn normal_derivative<T: Real>(frame: &TriangleFrame<T>, kernels: &Kernels<T>) -> Result<[T; 3]> {
    expect_class(frame, FrameClass::OnSupportPlaneOutsideT)?;
    Ok(planar_alpha(frame, &kernel_values(frame, kernels)?))
}

/// In-plane gradients `∇α_i` of the normal derivatives.
pub fn normal_derivative_gradient<T: Real>(frame: &TriangleFrame<T>, kernels: &Kernels<T>) -> Result<[Vec3<T>; 3]> {
    expect_class(frame, FrameClass::OnSupportPlaneOutsideT)?;
    Ok(planar_alpha_gradient(frame, &kernel_values(frame, kernels)?))
}

/// `∇w_i = α_i n_T`.
pub fn triangle_gradients_planar<T: Real>(frame: &TriangleFrame<T>, kernels: &Kernels<T>) -> Result<[Vec3<T>; 3]> {
    Ok(normal_derivative(frame, kernels)?.map(|a| frame.normal * a))
}

/// `Hw_i = g_i n_Tᵗ + n_T g_iᵗ` with `g_i = ∇α_i`: symmetric, rank two,
/// and zero in the normal-normal direction.
pub fn triangle_hessians_planar<T: Real>(frame: &TriangleFrame<T>, kernels: &Kernels<T>) -> Result<[Mat3<T>; 3]> {
    let g = normal_derivative_gradient(frame, kernels)?;
    Ok(g.map(|g| planar_hessian(&g, &frame.normal)))
}

fn planar_hessian<T: Real>(g: &Vec3<T>, n: &Vec3<T>) -> Mat3<T> {
    Mat3::outer(g, n) + Mat3::outer(n, g)
}

/// Weights and derivatives of one triangle up to the requested order.
/// Orders above the request are left at zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriangleContribution<T> {
    pub triangle: usize,
    pub vertex_ids: [usize; 3],
    pub w: [T; 3],
    pub grad: [Vec3<T>; 3],
    pub hess: [Mat3<T>; 3],
    pub source: DerivativeSource,
}

/// Whether the frame falls in the thin wedge around the support plane,
/// outside the triangle, where the plane expansion replaces the general
/// quotient: `|s| ≤ eps_switch · r`, with `r` the distance from the
/// projected point to the triangle.
pub fn uses_planar_expansion<T: Real>(frame: &TriangleFrame<T>, tol: &Tolerances<T>) -> bool {
    match frame.classification {
        FrameClass::OnSupportPlaneOutsideT => true,
        FrameClass::Generic => {
            let min_b = frame.barycentric.iter().copied().fold(T::infinity(), T::min);
            min_b < -tol.eps_plane && {
                let q = frame.eta - frame.normal * frame.signed_distance;
                frame.signed_distance.abs() <= tol.eps_switch * distance_to_triangle(frame, &q)
            }
        }
        _ => false,
    }
}

fn distance_to_triangle<T: Real>(frame: &TriangleFrame<T>, x: &Vec3<T>) -> T {
    let [a, b, c] = &frame.p;
    (closest_point_on_triangle(x, a, b, c) - *x).norm()
}

fn tangent_basis<T: Real>(n: &Vec3<T>) -> [Vec3<T>; 2] {
    let c = (0..3)
        .min_by(|&i, &j| n[i].abs().partial_cmp(&n[j].abs()).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    let t1 = n.cross(&Vec3::axis(c)).normalized();
    [t1, n.cross(&t1)]
}

/// Odd expansion `w = α s + β s³` about the projection `q` of `η`, with
/// `β = −Δα / 8` (from `w = −s ∫ φ / (r² + s²)²`). The in-plane Hessian of
/// `α` comes from central differences of the exact in-plane gradient.
fn plane_expansion<T: Real>(
    cage: &CageMesh<T>,
    frame: &TriangleFrame<T>,
    tol: &Tolerances<T>,
    out: &mut TriangleContribution<T>,
) -> Result<()> {
    let s = frame.signed_distance;
    let n = frame.normal;
    let q = frame.eta - n * s;
    let alpha_at = |x: &Vec3<T>| -> Result<([T; 3], [Vec3<T>; 3])> {
        let f = build_triangle_frame(cage, frame.triangle, x, tol)?;
        let kv = kernel_values(&f, &tol.kernels)?;
        Ok((planar_alpha(&f, &kv), planar_alpha_gradient(&f, &kv)))
    };
    let (alpha, g) = alpha_at(&q)?;
    let h = T::lit(1e-3) * distance_to_triangle(frame, &q);
    let basis = tangent_basis(&n);
    let mut tangential = [Mat3::zero(); 3];
    for t in &basis {
        let (_, gp) = alpha_at(&(q + *t * h))?;
        let (_, gm) = alpha_at(&(q - *t * h))?;
        for i in 0..3 {
            tangential[i] += Mat3::outer(&((gp[i] - gm[i]) / (h + h)), t);
        }
    }
    let three = T::lit(3.0);
    for i in 0..3 {
        let m = (tangential[i] + tangential[i].transpose()) * T::lit(0.5);
        let beta = -m.trace() / T::lit(8.0);
        out.w[i] = alpha[i] * s + beta * s * s * s;
        out.grad[i] = n * (alpha[i] + three * beta * s * s) + g[i] * s;
        out.hess[i] = planar_hessian(&g[i], &n) + (m + Mat3::outer(&n, &n) * (T::lit(6.0) * beta)) * s;
    }
    Ok(())
}

/// Contribution of one triangle, dispatching on the frame's position.
pub fn evaluate_frame<T: Real>(
    cage: &CageMesh<T>,
    frame: &TriangleFrame<T>,
    tol: &Tolerances<T>,
    order: Order,
) -> Result<TriangleContribution<T>> {
    if frame.classification.is_on_triangle() {
        return Err(MvcError::OnSurface {
            triangle: frame.triangle,
        });
    }
    let mut out = TriangleContribution {
        triangle: frame.triangle,
        vertex_ids: frame.vertex_ids,
        w: [T::zero(); 3],
        grad: [Vec3::zero(); 3],
        hess: [Mat3::zero(); 3],
        source: DerivativeSource::GeneralFormula,
    };
    if uses_planar_expansion(frame, tol) {
        out.source = DerivativeSource::PlanarFormula;
        plane_expansion(cage, frame, tol, &mut out)?;
        if order < Order::Hessian {
            out.hess = [Mat3::zero(); 3];
        }
        if order < Order::Gradient {
            out.grad = [Vec3::zero(); 3];
        }
        return Ok(out);
    }
    out.w = general_weights(frame);
    if order >= Order::Gradient {
        let edges = edge_terms(frame, &tol.kernels)?;
        out.grad = general_gradients(frame, &out.w, &edges);
        if order >= Order::Hessian {
            out.hess = general_hessians(frame, &out.grad, &edges);
        }
    }
    Ok(out)
}

/// Contribution of triangle `t` at `η`.
pub fn triangle_contribution<T: Real>(
    cage: &CageMesh<T>,
    t: usize,
    eta: &Vec3<T>,
    tol: &Tolerances<T>,
    order: Order,
) -> Result<TriangleContribution<T>> {
    let frame = build_triangle_frame(cage, t, eta, tol)?;
    evaluate_frame(cage, &frame, tol, order)
}

/// Per-vertex weights, their derivatives, and the normalized coordinates'
/// derivatives at one point off the cage surface.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeSet<T> {
    pub weights: WeightVector<T>,
    pub grad_w: Vec<Vec3<T>>,
    pub hess_w: Option<Vec<Mat3<T>>>,
    pub grad_lambda: Vec<Vec3<T>>,
    pub hess_lambda: Option<Vec<Mat3<T>>>,
    /// Number of triangles evaluated with the planar expansion.
    pub planar_triangles: usize,
}

/// Gradients (and Hessians for [`Order::Hessian`]) of every coordinate.
pub fn derivative_set<T: Real>(
    cage: &CageMesh<T>,
    eta: &Vec3<T>,
    tol: &Tolerances<T>,
    order: Order,
) -> Result<DerivativeSet<T>> {
    if !eta.is_finite() {
        return Err(MvcError::InvalidMesh("query point is not finite".into()));
    }
    let order = order.max(Order::Gradient);
    let nv = cage.num_vertices();
    let mut w = vec![T::zero(); nv];
    let mut gw = vec![Vec3::zero(); nv];
    let mut hw = vec![Mat3::zero(); nv];
    let mut planar_triangles = 0;
    for t in 0..cage.num_triangles() {
        let frame = match build_triangle_frame(cage, t, eta, tol) {
            Ok(f) => f,
            Err(MvcError::VertexCoincidence(_)) => return Err(MvcError::OnSurface { triangle: t }),
            Err(e) => return Err(e),
        };
        let c = evaluate_frame(cage, &frame, tol, order)?;
        if c.source == DerivativeSource::PlanarFormula {
            planar_triangles += 1;
        }
        for (k, &v) in c.vertex_ids.iter().enumerate() {
            w[v] = w[v] + c.w[k];
            gw[v] += c.grad[k];
            hw[v] += c.hess[k];
        }
    }
    let lambda = normalize(&w)?;
    let total = w.iter().fold(T::zero(), |s, &x| s + x);
    let g: Vec3<T> = gw.iter().copied().sum();
    let grad_lambda = (0..nv).map(|i| gw[i] / total - g * (w[i] / (total * total))).collect();

    let hessians = (order == Order::Hessian).then(|| {
        let hs: Mat3<T> = hw.iter().copied().sum();
        let gg = Mat3::outer(&g, &g);
        let t2 = total * total;
        let t3 = t2 * total;
        let hl = (0..nv)
            .map(|i| {
                hw[i] / total - hs * (w[i] / t2) - (Mat3::outer(&gw[i], &g) + Mat3::outer(&g, &gw[i])) / t2
                    + gg * (T::lit(2.0) * w[i] / t3)
            })
            .collect();
        (hw, hl)
    });
    let (hess_w, hess_lambda) = match hessians {
        Some((a, b)) => (Some(a), Some(b)),
        None => (None, None),
    };
    Ok(DerivativeSet {
        weights: WeightVector {
            w,
            lambda,
            on_surface: false,
            surface_location: None,
        },
        grad_w: gw,
        hess_w,
        grad_lambda,
        hess_lambda,
        planar_triangles,
    })
}
