//! Linear least-squares solve for deformed cage positions from value and
//! Jacobian targets plus a sampled Hessian-energy rigidity term.
//!
//! Unknowns are the deformed positions `p̄_i`, one matrix column per cage
//! vertex; the three coordinates share the matrix and differ only in the
//! right-hand side. The system is solved for the displacement `p̄ − p`, so
//! directions the rows leave free stay at the reference positions.

use nalgebra::{DMatrix, RealField};
use num_traits::Float;
use rayon::prelude::*;

use crate::cage::CageMesh;
use crate::deformation::DeformedCage;
use crate::derivatives::{derivative_set, Order};
use crate::error::{MvcError, Result};
use crate::linalg::{Mat3, Vec3};
use crate::real::Real;
use crate::tolerances::Tolerances;
use crate::weights::mvc_coordinates;

/// Prescribed value and/or Jacobian of the deformation at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint<T> {
    pub point: Vec3<T>,
    pub target_value: Option<Vec3<T>>,
    pub target_jacobian: Option<Mat3<T>>,
    pub weight: T,
}

impl<T: Real> Constraint<T> {
    pub fn value(point: Vec3<T>, target: Vec3<T>, weight: T) -> Self {
        Constraint {
            point,
            target_value: Some(target),
            target_jacobian: None,
            weight,
        }
    }

    pub fn jacobian(point: Vec3<T>, target: Mat3<T>, weight: T) -> Self {
        Constraint {
            point,
            target_value: None,
            target_jacobian: Some(target),
            weight,
        }
    }

    fn validate(&self, index: usize) -> Result<()> {
        if self.target_value.is_none() && self.target_jacobian.is_none() {
            return Err(MvcError::InvalidConstraint(format!("constraint {index} has no target")));
        }
        if !(self.weight >= T::zero()) || !self.weight.is_finite() {
            return Err(MvcError::InvalidConstraint(format!(
                "constraint {index} has an invalid weight"
            )));
        }
        let finite = self.point.is_finite()
            && self.target_value.is_none_or(|v| v.is_finite())
            && self.target_jacobian.is_none_or(|m| m.is_finite());
        if !finite {
            return Err(MvcError::InvalidConstraint(format!("constraint {index} is not finite")));
        }
        Ok(())
    }
}

/// Sampled Hessian energy `Σ_points Σ_c ‖H(f_c)‖²_F`.
#[derive(Clone, Debug, PartialEq)]
pub struct RigidityTerm<T> {
    pub sample_points: Vec<Vec3<T>>,
    pub weight: T,
}

impl<T: Real> RigidityTerm<T> {
    pub fn none() -> Self {
        RigidityTerm {
            sample_points: Vec::new(),
            weight: T::zero(),
        }
    }

    /// `n³` lattice over the cage bounding box, keeping points inside the
    /// cage and at least `margin · diag` away from its surface.
    pub fn lattice(cage: &CageMesh<T>, n: usize, margin: f64, weight: T) -> Self {
        let (lo, hi) = cage.bbox();
        let min_dist = T::lit(margin) * cage.bbox_diagonal();
        let mut pts = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let f = |c: usize| T::lit((c as f64 + 0.5) / n as f64);
                    let p = Vec3::new(
                        lo[0] + (hi[0] - lo[0]) * f(i),
                        lo[1] + (hi[1] - lo[1]) * f(j),
                        lo[2] + (hi[2] - lo[2]) * f(k),
                    );
                    if cage.distance_to_surface(&p) >= min_dist && is_inside(cage, &p) {
                        pts.push(p);
                    }
                }
            }
        }
        RigidityTerm {
            sample_points: pts,
            weight,
        }
    }
}

/// Winding-number inside test: the solid angle subtended by the cage is
/// `4π` inside and `0` outside.
pub fn is_inside<T: Real>(cage: &CageMesh<T>, p: &Vec3<T>) -> bool {
    let mut omega = T::zero();
    for t in 0..cage.num_triangles() {
        let [a, b, c] = cage.triangle_positions(t).map(|v| v - *p);
        let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
        let num = a.dot(&b.cross(&c));
        let den = la * lb * lc + a.dot(&b) * lc + b.dot(&c) * la + c.dot(&a) * lb;
        omega = omega + T::lit(2.0) * num.atan2(den);
    }
    omega > T::lit(2.0) * T::PI()
}

/// One system row: its source, coefficients over the cage vertices, and
/// the right-hand side per coordinate.
type Row<T> = (RowKind, Vec<T>, [T; 3]);

/// What produced a row of the system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    Value {
        constraint: usize,
    },
    /// Column `d` of the Jacobian target.
    Jacobian {
        constraint: usize,
        column: usize,
    },
    /// Entry `(a, b)`, `a ≤ b`, of the Hessian at a rigidity sample.
    Rigidity {
        sample: usize,
        a: usize,
        b: usize,
    },
    /// Keeps the centroid of the cage fixed when no value is prescribed.
    Gauge,
}

/// `A p̄ ≈ B`: `A` is rows × cage vertices, `B` is rows × 3.
#[derive(Clone, Debug)]
pub struct LinearSystem<T: RealField> {
    pub matrix: DMatrix<T>,
    pub rhs: DMatrix<T>,
    pub rows: Vec<RowKind>,
    pub reference: Vec<Vec3<T>>,
}

/// Assembles value, Jacobian, rigidity and gauge rows.
pub fn assemble_system<T: Real + RealField>(
    cage: &CageMesh<T>,
    constraints: &[Constraint<T>],
    rigidity: &RigidityTerm<T>,
    tol: &Tolerances<T>,
) -> Result<LinearSystem<T>> {
    for (i, c) in constraints.iter().enumerate() {
        c.validate(i)?;
    }
    if !(rigidity.weight >= T::zero()) || !rigidity.weight.is_finite() {
        return Err(MvcError::InvalidConstraint(
            "rigidity weight must be nonnegative".into(),
        ));
    }
    let n = cage.num_vertices();

    // per-constraint coordinates, in parallel; rows are filled in order below
    let constraint_rows: Vec<Result<Vec<Row<T>>>> = constraints
        .par_iter()
        .enumerate()
        .map(|(ci, c)| {
            let s = Float::sqrt(c.weight);
            let mut rows = Vec::new();
            if let Some(target) = c.target_value {
                let wv = mvc_coordinates(cage, &c.point, tol)?;
                rows.push((
                    RowKind::Value { constraint: ci },
                    wv.lambda.iter().map(|&l| s * l).collect(),
                    [s * target[0], s * target[1], s * target[2]],
                ));
            }
            if let Some(target) = c.target_jacobian {
                let ds = derivative_set(cage, &c.point, tol, Order::Gradient)?;
                for d in 0..3 {
                    rows.push((
                        RowKind::Jacobian {
                            constraint: ci,
                            column: d,
                        },
                        ds.grad_lambda.iter().map(|g| s * g[d]).collect(),
                        [s * target[(0, d)], s * target[(1, d)], s * target[(2, d)]],
                    ));
                }
            }
            Ok(rows)
        })
        .collect();

    let rigid_rows: Vec<Result<Vec<Row<T>>>> = if rigidity.weight > T::zero() {
        let s = Float::sqrt(rigidity.weight);
        let sqrt2 = Float::sqrt(T::lit(2.0));
        rigidity
            .sample_points
            .par_iter()
            .enumerate()
            .map(|(k, p)| {
                let ds = derivative_set(cage, p, tol, Order::Hessian)?;
                let hl = ds.hess_lambda.expect("hessians requested");
                let mut rows = Vec::with_capacity(6);
                for a in 0..3 {
                    for b in a..3 {
                        let f = if a == b { s } else { s * sqrt2 };
                        rows.push((
                            RowKind::Rigidity { sample: k, a, b },
                            hl.iter().map(|h| f * h[(a, b)]).collect(),
                            [T::zero(); 3],
                        ));
                    }
                }
                Ok(rows)
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut all = Vec::new();
    for r in constraint_rows.into_iter().chain(rigid_rows) {
        all.extend(r?);
    }
    let has_value = constraints
        .iter()
        .any(|c| c.target_value.is_some() && c.weight > T::zero());
    if !has_value {
        let inv = T::one() / T::lit(n as f64);
        let c = cage.centroid();
        all.push((RowKind::Gauge, vec![inv; n], [c[0], c[1], c[2]]));
    }
    if all.is_empty() || constraints.is_empty() && rigidity.sample_points.is_empty() {
        return Err(MvcError::EmptySystem);
    }

    let m = all.len();
    let mut matrix = DMatrix::<T>::zeros(m, n);
    let mut rhs = DMatrix::<T>::zeros(m, 3);
    let mut kinds = Vec::with_capacity(m);
    for (r, (kind, coeffs, b)) in all.into_iter().enumerate() {
        for (i, v) in coeffs.into_iter().enumerate() {
            matrix[(r, i)] = v;
        }
        for c in 0..3 {
            rhs[(r, c)] = b[c];
        }
        kinds.push(kind);
    }
    Ok(LinearSystem {
        matrix,
        rhs,
        rows: kinds,
        reference: cage.vertices().to_vec(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    /// Singular values below `rank_tolerance · σ_max` count as zero.
    pub rank_tolerance: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { rank_tolerance: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    /// `‖A p̄ − B‖_F`
    pub residual: f64,
    pub rank: usize,
    pub unknowns: usize,
    pub rows: usize,
    pub largest_singular_value: f64,
    pub smallest_kept_singular_value: f64,
    /// The rows leave some non-gauge direction free; the returned positions
    /// are the minimum-norm displacement from the reference cage.
    pub rank_deficient: bool,
}

impl SolveReport {
    /// `Err(RankDeficientUnconstrained)` if the solution is not unique.
    pub fn check(&self) -> Result<()> {
        if self.rank_deficient {
            return Err(MvcError::RankDeficientUnconstrained {
                rank: self.rank,
                unknowns: self.unknowns,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Solution<T> {
    pub deformed: DeformedCage<T>,
    pub report: SolveReport,
}

/// Minimum-norm least-squares solve through a singular value decomposition.
pub fn solve<T: Real + RealField>(system: &LinearSystem<T>, options: &SolveOptions) -> Result<Solution<T>> {
    let (m, n) = system.matrix.shape();
    if m == 0 {
        return Err(MvcError::EmptySystem);
    }
    let mut p = DMatrix::<T>::zeros(n, 3);
    for (i, v) in system.reference.iter().enumerate() {
        for c in 0..3 {
            p[(i, c)] = v[c];
        }
    }
    let shifted = &system.rhs - &system.matrix * &p;
    let svd = system.matrix.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().copied().fold(T::zero(), Float::max);
    let cutoff = sigma_max * T::lit(options.rank_tolerance);
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    let smallest = svd
        .singular_values
        .iter()
        .copied()
        .filter(|&s| s > cutoff)
        .fold(T::infinity(), Float::min);
    let delta = svd
        .solve(&shifted, cutoff)
        .map_err(|e| MvcError::InvalidConstraint(format!("least-squares solve failed: {e}")))?;
    let solution = p + delta;
    let residual = (&system.matrix * &solution - &system.rhs).norm();
    let positions = (0..n)
        .map(|i| Vec3::new(solution[(i, 0)], solution[(i, 1)], solution[(i, 2)]))
        .collect();
    Ok(Solution {
        deformed: DeformedCage::from_positions(positions),
        report: SolveReport {
            residual: residual.to_f64_lossy(),
            rank,
            unknowns: n,
            rows: m,
            largest_singular_value: sigma_max.to_f64_lossy(),
            smallest_kept_singular_value: smallest.to_f64_lossy(),
            rank_deficient: rank < n,
        },
    })
}

/// Assemble and solve in one call.
pub fn solve_constraints<T: Real + RealField>(
    cage: &CageMesh<T>,
    constraints: &[Constraint<T>],
    rigidity: &RigidityTerm<T>,
    tol: &Tolerances<T>,
    options: &SolveOptions,
) -> Result<Solution<T>> {
    solve(&assemble_system(cage, constraints, rigidity, tol)?, options)
}
