//! Seeded validation suites comparing the closed forms against the oracles.
//!
//! Every suite draws its points from a ChaCha stream keyed by the seed and
//! the suite name, evaluates them in parallel, and reduces the per-point
//! errors in input order, so a report depends only on the cage, the
//! configuration and the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cage::{build_triangle_frame, CageMesh, FrameClass};
use crate::deformation::{deform_point, deformation_sample, DeformedCage};
use crate::derivatives::{derivative_set, normal_derivative, normal_derivative_gradient, triangle_gradients, Order};
use crate::error::Result;
use crate::kernels::{derivative_closed_form, derivative_series, KernelBase, KernelId};
use crate::linalg::{Mat3, Vec3};
use crate::oracles::{
    fd_hessian_from_gradient, fd_jacobian, ju_robust_weights, quadrature_coordinates, FdSpec, QuadratureSpec,
};
use crate::solver::{solve_constraints, Constraint, RigidityTerm, SolveOptions};
use crate::tolerances::Tolerances;
use crate::weights::{mvc_coordinates, triangle_weights};

/// Reference kernel values: `kernel,theta,value` rows evaluated offline at
/// 80 significant digits and rounded to 25.
pub const KERNEL_ORACLE: &str = include_str!("../data/kernel_oracle.csv");

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationConfig {
    pub samples: usize,
    pub seed: u64,
    pub tolerances: Tolerances<f64>,
    /// Gradient FD step, relative to the cage diagonal.
    pub fd_h_gradient: f64,
    /// Hessian FD step (differences of the analytic gradient).
    pub fd_h_hessian: f64,
    pub quadrature_points: usize,
    pub quadrature: QuadratureSpec,
    pub planar_configurations: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            samples: 1000,
            seed: 42,
            tolerances: Tolerances::default(),
            fd_h_gradient: 1e-5,
            fd_h_hessian: 1e-4,
            quadrature_points: 50,
            quadrature: QuadratureSpec::default(),
            planar_configurations: 20,
        }
    }
}

/// One measured quantity: the worst value over the suite's samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Metric {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
}

impl Metric {
    fn new(name: &'static str, value: f64, tolerance: f64) -> Self {
        Metric { name, value, tolerance }
    }

    /// NaN never passes.
    pub fn passed(&self) -> bool {
        self.value <= self.tolerance
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub samples: usize,
    /// Samples that could not be evaluated; any failure fails the suite.
    pub failures: usize,
    pub metrics: Vec<Metric>,
    /// Measurements reported without a pass/fail threshold.
    pub observations: Vec<(&'static str, f64)>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.samples > 0 && self.metrics.iter().all(Metric::passed)
    }

    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub samples: usize,
    pub seed: u64,
    pub suites: Vec<SuiteReport>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteReport::passed)
    }
}

/// Runs every suite in a fixed order.
pub fn run_all(cage: &CageMesh<f64>, cfg: &ValidationConfig) -> ValidationReport {
    ValidationReport {
        samples: cfg.samples,
        seed: cfg.seed,
        suites: vec![
            kernel_suite(&cfg.tolerances),
            partition_of_unity_suite(cage, cfg),
            dual_formula_suite(cage, cfg),
            quadrature_suite(cage, cfg),
            gradient_suite(cage, cfg),
            hessian_suite(cage, cfg),
            identity_sum_suite(cage, cfg),
            affine_suite(cage, cfg),
            planar_suite(cage, cfg),
            solver_suite(cage, cfg),
        ],
    }
}

fn suite_rng(seed: u64, suite: &str) -> ChaCha8Rng {
    // FNV-1a of the suite name keeps the streams of different suites apart
    let tag = suite.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x100_0000_01b3)
    });
    ChaCha8Rng::seed_from_u64(seed ^ tag)
}

/// Points drawn uniformly from the cage bounding box grown by a quarter of
/// its extent on every side (so inside and outside points both occur),
/// rejecting those closer than `band · diag` to the surface.
pub fn sample_points(cage: &CageMesh<f64>, n: usize, rng: &mut ChaCha8Rng, band: f64) -> Vec<Vec3<f64>> {
    let (lo, hi) = cage.bbox();
    let pad = (hi - lo) * 0.25;
    let (lo, hi) = (lo - pad, hi + pad);
    let min_dist = band * cage.bbox_diagonal();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p = Vec3::new(
            rng.random_range(lo[0]..hi[0]),
            rng.random_range(lo[1]..hi[1]),
            rng.random_range(lo[2]..hi[2]),
        );
        if cage.distance_to_surface(&p) >= min_dist {
            out.push(p);
        }
    }
    out
}

/// Smallest distance from `p` to the support plane of any triangle,
/// relative to the diagonal.
fn plane_clearance(cage: &CageMesh<f64>, p: &Vec3<f64>) -> f64 {
    (0..cage.num_triangles())
        .map(|t| {
            let [a, b, c] = cage.triangle_positions(t);
            let n = (b - a).cross(&(c - a)).normalized();
            (*p - a).dot(&n).abs()
        })
        .fold(f64::INFINITY, f64::min)
        / cage.bbox_diagonal()
}

/// Per-point worst errors in input order, plus the count of failed points.
fn collect<F>(points: &[Vec3<f64>], width: usize, f: F) -> (Vec<f64>, usize)
where
    F: Fn(&Vec3<f64>) -> Result<Vec<f64>> + Sync + Send,
{
    let rows: Vec<Result<Vec<f64>>> = points.par_iter().map(f).collect();
    let mut worst = vec![0.0f64; width];
    let mut failures = 0;
    for r in rows {
        match r {
            Ok(v) => {
                for (w, x) in worst.iter_mut().zip(v) {
                    // NaN poisons the maximum on purpose
                    *w = if x.is_nan() || w.is_nan() { f64::NAN } else { w.max(x) };
                }
            }
            Err(_) => failures += 1,
        }
    }
    (worst, failures)
}

fn max_norm(v: &[Vec3<f64>]) -> f64 {
    v.iter().map(|g| g.norm()).fold(0.0, f64::max)
}

fn max_frobenius(v: &[Mat3<f64>]) -> f64 {
    v.iter().map(|h| h.frobenius_norm()).fold(0.0, f64::max)
}

/// Reference size for Hessian errors. Coordinates can be exactly linear (a
/// tetrahedral cage), so the Hessians are floored at `max‖∇λ‖ / diag`.
fn hessian_scale(hl: &[Mat3<f64>], grads: &[Vec3<f64>], diag: f64) -> f64 {
    max_frobenius(hl).max(max_norm(grads) / diag)
}

/// Kernel values against the frozen high-precision table, and the jump
/// across the switch between series and closed form.
pub fn kernel_suite(tol: &Tolerances<f64>) -> SuiteReport {
    let kernels = tol.kernels;
    let eps = kernels.eps_theta;
    let (mut above, mut below) = (0.0f64, 0.0f64);
    let mut samples = 0;
    let mut failures = 0;
    for line in KERNEL_ORACLE
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
    {
        let mut it = line.split(',');
        let (Some(name), Some(theta), Some(value)) = (it.next(), it.next(), it.next()) else {
            failures += 1;
            continue;
        };
        let (Ok(theta), Ok(reference)) = (theta.parse::<f64>(), value.parse::<f64>()) else {
            failures += 1;
            continue;
        };
        let got = match name {
            "d1" => kernels.eval_derivative(KernelBase::Eq1, theta),
            "d2" => kernels.eval_derivative(KernelBase::Eq2, theta),
            other => match KernelId::from_name(other) {
                Some(k) => kernels.eval(k, theta),
                None => {
                    failures += 1;
                    continue;
                }
            },
        };
        let Ok(got) = got else {
            failures += 1;
            continue;
        };
        samples += 1;
        let err = (got - reference).abs() / reference.abs().max(f64::MIN_POSITIVE);
        if theta >= eps {
            above = above.max(err);
        } else {
            below = below.max(err);
        }
    }

    let (lo, hi) = (eps * (1.0 - 1e-9), eps * (1.0 + 1e-9));
    let mut seam = 0.0f64;
    for k in KernelId::ALL {
        let (a, b) = (crate::kernels::series(k, lo), crate::kernels::closed_form(k, hi));
        seam = seam.max((a - b).abs() / a.abs().max(1.0));
    }
    for k in [KernelBase::Eq1, KernelBase::Eq2] {
        let (a, b) = (derivative_series(k, lo), derivative_closed_form(k, hi));
        seam = seam.max((a - b).abs() / a.abs().max(1.0));
    }

    SuiteReport {
        name: "kernels",
        samples,
        failures,
        metrics: vec![
            Metric::new("relative_error_closed_form", above, 1e-12),
            Metric::new("relative_error_series", below, 1e-9),
            Metric::new("seam_jump", seam, 1e-9),
        ],
        observations: Vec::new(),
    }
}

/// `Σλ = 1` and `Σλ_i p_i = η`.
pub fn partition_of_unity_suite(cage: &CageMesh<f64>, cfg: &ValidationConfig) -> SuiteReport {
    let pts = sample_points(cage, cfg.samples, &mut suite_rng(cfg.seed, "partition"), 0.02);
    let diag = cage.bbox_diagonal();
    let (worst, failures) = collect(&pts, 2, |eta| {
        let wv = mvc_coordinates(cage, eta, &cfg.tolerances)?;
        let sum: f64 = wv.lambda.iter().sum();
        let rec: Vec3<f64> = cage.vertices().iter().zip(&wv.lambda).map(|(p, &l)| *p * l).sum();
        Ok(vec![(sum - 1.0).abs(), (rec - *eta).norm() / diag])
    });
    SuiteReport {
        name: "partition_of_unity",
        samples: pts.len(),
        failures,
        metrics: vec![
            Metric::new("sum_defect", worst[0], 1e-10),
            Metric::new("linear_precision", worst[1], 1e-8),
        ],
        observations: Vec::new(),
    }
}

/// Closed-form coordinates against the spherical-excess formulation. Points
/// within `1e-3 · diag` of a support plane are redrawn: there the excess
/// formula itself loses digits.
pub fn dual_formula_suite(cage: &CageMesh<f64>, cfg: &ValidationConfig) -> SuiteReport {
    let mut rng = suite_rng(cfg.seed, "dual_formula");
    let mut pts = Vec::with_capacity(cfg.samples);
    while pts.len() < cfg.samples {
        pts.extend(
            sample_points(cage, cfg.samples - pts.len(), &mut rng, 0.02)
                .into_iter()
                .filter(|p| plane_clearance(cage, p) >= 1e-3),
        );
    }
    let (worst, failures) = collect(&pts, 1, |eta| {
        let a = mvc_coordinates(cage, eta, &cfg.tolerances)?;
        let b = ju_robust_weights(cage, eta, 1e-12)?;
        let scale = a.lambda.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        let err = a
            .lambda
            .iter()
            .zip(&b.lambda)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        Ok(vec![err / scale])
    });
    SuiteReport {
        name: "dual_formula",
        samples: pts.len(),
        failures,
        metrics: vec![Metric::new("relative_error", worst[0], 1e-10)],
        observations: Vec::new(),
    }
}

/// Coordinates against adaptive quadrature of the defining integral, away
/// from every support plane.
pub fn quadrature_suite(cage: &CageMesh<f64>, cfg: &ValidationConfig) -> SuiteReport {
    let mut rng = suite_rng(cfg.seed, "quadrature");
    let n = cfg.quadrature_points.min(cfg.samples.max(1));
    let mut pts = Vec::with_capacity(n);
    while pts.len() < n {
        pts.extend(
            sample_points(cage, n - pts.len(), &mut rng, 0.05)
                .into_iter()
                .filter(|p| plane_clearance(cage, p) >= 0.02),
        );
    }
    let rows: Vec<Result<(f64, f64, bool)>> = pts
        .par_iter()
        .map(|eta| {
            let a = mvc_coordinates(cage, eta, &cfg.tolerances)?;
            let q = quadrature_coordinates(cage, eta, &cfg.quadrature);
            let scale = a.lambda.iter().fold(0.0f64, |m, l| m.max(l.abs()));
            let err = a
                .lambda
                .iter()
                .zip(&q.value)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            Ok((err / scale, q.error_estimate, q.converged))
        })
        .collect();
    let mut worst = 0.0f64;
    let mut estimate = 0.0f64;
    let mut failures = 0;
    for r in rows {
        match r {
            Ok((e, est, converged)) => {
                worst = if e.is_nan() { f64::NAN } else { worst.max(e) };
                estimate = estimate.max(est);
                failures += usize::from(!converged);
            }
            Err(_) => failures += 1,
        }
    }
    SuiteReport {
        name: "quadrature",
        samples: pts.len(),
        failures,
        metrics: vec![Metric::new("relative_error", worst, 1e-5)],
        observations: vec![("quadrature_error_estimate", estimate)],
    }
}

fn derivative_points(cage: &CageMesh<f64>, cfg: &ValidationConfig, suite: &str, n: usize) -> Vec<Vec3<f64>> {
    sample_points(cage, n, &mut suite_rng(cfg.seed, suite), 0.05)
}

/// Derivative suites use at most 200 points, the rest of the batch adds
/// nothing a smaller sample does not already cover.
fn derivative_count(cfg: &ValidationConfig) -> usize {
    cfg.samples.min(200)
}

/// Analytic `∇λ_i` against central differences of `λ`.
pub fn gradient_suite(cage: &CageMesh<f64>, cfg: &ValidationConfig) -> SuiteReport {
    let pts = derivative_points(cage, cfg, "gradient", derivative_count(cfg));
    let step = FdSpec::relative(cfg.fd_h_gradient, cage.bbox_diagonal());
    let tol = &cfg.tolerances;
    let (worst, failures) = collect(&pts, 2, |eta| {
        let ds = derivative_set(cage, eta, tol, Order::Gradient)?;
        let fd = fd_jacobian(|x| Ok(mvc_coordinates(cage, x, tol)?.lambda), eta, &step)?;
        let scale = max_norm(&ds.grad_lambda);
        let err = ds
            .grad_lambda
            .iter()
            .zip(&fd.value)
            .map(|(a, b)| (*a - *b).norm())
            .fold(0.0, f64::max);
        Ok(vec![err / scale, fd.error_indicator / scale])
    });
    SuiteReport {
        name: "gradient",
        samples: pts.len(),
        failures,
        metrics: vec![Metric::new("relative_error", worst[0], 1e-5)],
        observations: vec![("fd_step_halving_indicator", worst[1])],
    }
}

/// Analytic `Hλ_i` against central differences of the analytic gradient,
/// and its symmetry.
pub fn hessian_suite(cage: &CageMesh<f64>, cfg: &ValidationConfig) -> SuiteReport {
    let pts = derivative_points(cage, cfg, "hessian", derivative_count(cfg));
    let step = FdSpec::relative(cfg.fd_h_hessian, cage.bbox_diagonal());
    let tol = &cfg.tolerances;
    let (worst, failures) = collect(&pts, 3, |eta| {
        let ds = derivative_set(cage, eta, tol, Order::Hessian)?;
        let hl = ds.hess_lambda.as_deref().unwrap_or_default();
        let fd = fd_hessian_from_gradient(
            |x| Ok(derivative_set(cage, x, tol, Order::Gradient)?.grad_lambda),
            eta,
            &step,
        )?;
        let scale = hessian_scale(hl, &ds.grad_lambda, cage.bbox_diagonal());
        let err = hl
            .iter()
            .zip(&fd.value)
            .map(|(a, b)| (*a - *b).frobenius_norm())
            .fold(0.0, f64::max);
        let asym = hl.iter().map(|h| h.asymmetry()).fold(0.0, f64::max);
        Ok(vec![err / scale, asym / scale, fd.error_indicator / scale])
    });
    SuiteReport {
        name: "hessian",
        samples: pts.len(),
        failures,
        metrics: vec![
            Metric::new("relative_error", worst[0], 1e-4),
            Metric::new("symmetry_defect", worst[1], 1e-8),
        ],
        observations: vec![("fd_step_halving_indicator", worst[2])],
    }
}

/// `Σ∇λ_i = 0` and `ΣHλ_i = 0`, scaled by the largest term.
pub fn identity_sum_suite(cage: &CageMesh<f64>, cfg: &ValidationConfig) -> SuiteReport {
    let diag = cage.bbox_diagonal();
    let pts = sample_points(cage, cfg.samples, &mut suite_rng(cfg.seed, "identity_sums"), 0.02);
    let (worst, failures) = collect(&pts, 2, |eta| {
        let ds = derivative_set(cage, eta, &cfg.tolerances, Order::Hessian)?;
        let hl = ds.hess_lambda.as_deref().unwrap_or_default();
        let g: Vec3<f64> = ds.grad_lambda.iter().copied().sum();
        let h: Mat3<f64> = hl.iter().copied().sum();
        Ok(vec![
            g.norm() / max_norm(&ds.grad_lambda),
            h.frobenius_norm() / hessian_scale(hl, &ds.grad_lambda, diag),
        ])
    });
    SuiteReport {
        name: "identity_sums",
        samples: pts.len(),
        failures,
        metrics: vec![
            Metric::new("gradient_sum", worst[0], 1e-10),
            Metric::new("hessian_sum", worst[1], 1e-10),
        ],
        observations: Vec::new(),
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, spread: f64) -> Mat3<f64> {
    let mut m = Mat3::identity();
    for r in 0..3 {
        for c in 0..3 {
            m[(r, c)] += rng.random_range(-spread..spread);
        }
    }
    m
}

/// A random affine map of the cage is reproduced exactly, with zero
/// curvature. `scale` is the diagonal of the deformed cage.
pub fn affine_suite(cage: &CageMesh<f64>, cfg: &ValidationConfig) -> SuiteReport {
    let mut rng = suite_rng(cfg.seed, "affine");
    let a = random_matrix(&mut rng, 0.5);
    let diag = cage.bbox_diagonal();
    let b = Vec3::new(
        rng.random_range(-diag..diag),
        rng.random_range(-diag..diag),
        rng.random_range(-diag..diag),
    );
    let map = |p: &Vec3<f64>| a * *p + b;
    let deformed = DeformedCage::from_map(cage, map);
    let scale = {
        let (lo, hi) = deformed
            .positions()
            .iter()
            .fold((deformed.positions()[0], deformed.positions()[0]), |(lo, hi), p| {
                (lo.component_min(p), hi.component_max(p))
            });
        (hi - lo).norm()
    };
    let pts = sample_points(cage, cfg.samples.min(200), &mut rng, 0.05);
    let (worst, failures) = collect(&pts, 3, |eta| {
        let s = deformation_sample(cage, &deformed, eta, &cfg.tolerances)?;
        let hmax = s.hessians.iter().map(|h| h.frobenius_norm()).fold(0.0, f64::max);
        Ok(vec![
            (s.value - map(eta)).norm() / scale,
            (s.jacobian - a).frobenius_norm(),
            hmax / scale,
        ])
    });
    SuiteReport {
        name: "affine",
        samples: pts.len(),
        failures,
        metrics: vec![
            Metric::new("value_error", worst[0], 1e-8),
            Metric::new("jacobian_error", worst[1], 1e-8),
            Metric::new("hessian_norm", worst[2], 1e-6),
        ],
        observations: Vec::new(),
    }
}

/// A point on the support plane of triangle `t`, outside it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanarConfiguration {
    pub triangle: usize,
    pub point: Vec3<f64>,
}

/// Draws configurations at least `0.05 · diag` from the surface whose
/// point is at least `0.01 · diag` away from every support plane that does
/// not contain it.
pub fn planar_configurations(cage: &CageMesh<f64>, count: usize, seed: u64) -> Vec<PlanarConfiguration> {
    let mut rng = suite_rng(seed, "planar");
    let diag = cage.bbox_diagonal();
    let tol = Tolerances::default();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < 100_000 {
        attempts += 1;
        let t = rng.random_range(0..cage.num_triangles());
        let [a, b, c] = cage.triangle_positions(t);
        let n = (b - a).cross(&(c - a)).normalized();
        let t1 = (b - a).normalized();
        let t2 = n.cross(&t1);
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let r = rng.random_range(0.3..1.2) * diag;
        let centroid = (a + b + c) / 3.0;
        let q = centroid + (t1 * phi.cos() + t2 * phi.sin()) * r;
        if cage.distance_to_surface(&q) < 0.05 * diag {
            continue;
        }
        let clean = (0..cage.num_triangles()).all(|s| match build_triangle_frame(cage, s, &q, &tol) {
            Ok(f) => f.classification == FrameClass::OnSupportPlaneOutsideT || f.signed_distance.abs() >= 0.01 * diag,
            Err(_) => false,
        });
        if clean {
            out.push(PlanarConfiguration { triangle: t, point: q });
        }
    }
    out
}

/// Worst relative errors at one planar configuration: extrapolated
/// gradient, normal FD gradient, normal second derivative, full Hessian,
/// extrapolated in-plane gradient of the normal derivative.
pub fn planar_errors(cage: &CageMesh<f64>, cfg: &PlanarConfiguration, tol: &Tolerances<f64>) -> Result<[f64; 5]> {
    let q = cfg.point;
    let frame = build_triangle_frame(cage, cfg.triangle, &q, tol)?;
    let n = frame.normal;
    let alpha = normal_derivative(&frame, &tol.kernels)?;
    let grad_planar = alpha.map(|a| n * a);
    let g = normal_derivative_gradient(&frame, &tol.kernels)?;
    let r = (q - crate::cage::closest_point_on_triangle(&q, &frame.p[0], &frame.p[1], &frame.p[2])).norm();

    // general formula only, on both sides of the plane
    let general = |s: f64| -> Result<[Vec3<f64>; 3]> {
        let f = build_triangle_frame(cage, cfg.triangle, &(q + n * s), tol)?;
        let w = triangle_weights(&f)?;
        triangle_gradients(&f, &w, &tol.kernels)
    };
    let even = |s: f64| -> Result<[Vec3<f64>; 3]> {
        let (p, m) = (general(s)?, general(-s)?);
        Ok(std::array::from_fn(|i| (p[i] + m[i]) * 0.5))
    };
    let odd = |s: f64| -> Result<[Vec3<f64>; 3]> {
        let (p, m) = (general(s)?, general(-s)?);
        Ok(std::array::from_fn(|i| (p[i] - m[i]) / (2.0 * s)))
    };
    let delta = 1e-3 * r;
    let (e1, e2) = (even(delta)?, even(0.5 * delta)?);
    let (o1, o2) = (odd(delta)?, odd(0.5 * delta)?);
    let extrapolate = |a: &[Vec3<f64>; 3], b: &[Vec3<f64>; 3]| -> [Vec3<f64>; 3] {
        std::array::from_fn(|i| (b[i] * 4.0 - a[i]) / 3.0)
    };
    let limit = extrapolate(&e1, &e2);
    let slope = extrapolate(&o1, &o2);
    let gscale = max_norm(&grad_planar);
    let extrapolation_error = (0..3).map(|i| (grad_planar[i] - limit[i]).norm()).fold(0.0, f64::max) / gscale;
    // the odd part of ∇w along n is the in-plane gradient of α, plus the
    // normal-normal term that vanishes on the plane
    let slope_scale = max_norm(&g);
    let slope_error = (0..3)
        .map(|i| {
            let tangential = slope[i] - n * slope[i].dot(&n);
            (g[i] - tangential).norm()
        })
        .fold(0.0, f64::max)
        / slope_scale;

    // coordinate-level checks, with differences taken through the general
    // formula alone (no plane expansion at the stencil points). That formula
    // loses digits fast near the plane (the second difference like
    // offset⁻⁴), so the steps are 1e-3 · diag for the first difference and
    // 8e-3 · diag for the second, each with one Richardson step.
    let raw = Tolerances {
        eps_switch: 0.0,
        ..*tol
    };
    let ds = derivative_set(cage, &q, tol, Order::Hessian)?;
    let hl = ds.hess_lambda.as_deref().unwrap_or_default();
    let diag = cage.bbox_diagonal();
    let nv = cage.num_vertices();
    let lambda_at = |s: f64| mvc_coordinates(cage, &(q + n * s), &raw).map(|w| w.lambda);
    let l0 = &ds.weights.lambda;
    let first = |h: f64| -> Result<Vec<f64>> {
        let (p, m) = (lambda_at(h)?, lambda_at(-h)?);
        Ok((0..nv).map(|i| (p[i] - m[i]) / (2.0 * h)).collect())
    };
    let second = |h: f64| -> Result<Vec<f64>> {
        let (p, m) = (lambda_at(h)?, lambda_at(-h)?);
        Ok((0..nv).map(|i| (p[i] - 2.0 * l0[i] + m[i]) / (h * h)).collect())
    };
    let (d1, d2) = (first(1e-3 * diag)?, first(5e-4 * diag)?);
    let (s1, s2) = (second(8e-3 * diag)?, second(4e-3 * diag)?);
    let richardson = |a: f64, b: f64| (4.0 * b - a) / 3.0;

    let gl_scale = max_norm(&ds.grad_lambda);
    let normal_fd_error = (0..nv)
        .map(|i| (ds.grad_lambda[i].dot(&n) - richardson(d1[i], d2[i])).abs())
        .fold(0.0, f64::max)
        / gl_scale;
    let hscale = hessian_scale(hl, &ds.grad_lambda, diag);
    let nn_error = (0..nv)
        .map(|i| (n.dot(&(hl[i] * n)) - richardson(s1[i], s2[i])).abs())
        .fold(0.0, f64::max)
        / hscale;

    let step = FdSpec::relative(1e-4, diag);
    let fd = fd_hessian_from_gradient(
        |x| Ok(derivative_set(cage, x, tol, Order::Gradient)?.grad_lambda),
        &q,
        &step,
    )?;
    let full_error = hl
        .iter()
        .zip(&fd.value)
        .map(|(a, b)| (*a - *b).frobenius_norm())
        .fold(0.0, f64::max)
        / hscale;

    Ok([extrapolation_error, normal_fd_error, nn_error, full_error, slope_error])
}

pub fn planar_suite(cage: &CageMesh<f64>, cfg: &ValidationConfig) -> SuiteReport {
    let configs = planar_configurations(cage, cfg.planar_configurations, cfg.seed);
    let rows: Vec<Result<[f64; 5]>> = configs
        .par_iter()
        .map(|c| planar_errors(cage, c, &cfg.tolerances))
        .collect();
    let mut worst = [0.0f64; 5];
    let mut failures = configs.len().abs_diff(cfg.planar_configurations);
    for r in rows {
        match r {
            Ok(v) => {
                for (w, x) in worst.iter_mut().zip(v) {
                    *w = if x.is_nan() { f64::NAN } else { w.max(x) };
                }
            }
            Err(_) => failures += 1,
        }
    }
    SuiteReport {
        name: "planar",
        samples: configs.len(),
        failures,
        metrics: vec![
            Metric::new("gradient_vs_extrapolation", worst[0], 1e-4),
            Metric::new("gradient_vs_normal_fd", worst[1], 1e-5),
            Metric::new("normal_curvature_vs_fd", worst[2], 1e-4),
            Metric::new("hessian_vs_fd", worst[3], 1e-3),
        ],
        observations: vec![("in_plane_slope_vs_extrapolation", worst[4])],
    }
}

/// The coarsest lattice (from 4³ up to 16³) giving at least two rigidity
/// rows per cage vertex.
pub fn rigidity_lattice(cage: &CageMesh<f64>) -> RigidityTerm<f64> {
    let mut n = 4;
    loop {
        let r = RigidityTerm::lattice(cage, n, 0.05, 1.0);
        if 6 * r.sample_points.len() >= 2 * cage.num_vertices() || n >= 16 {
            return r;
        }
        n += 2;
    }
}

/// Solver recovery: an affine map from value constraints, plus identity,
/// translation and rotation cases solved to zero residual.
pub fn solver_suite(cage: &CageMesh<f64>, cfg: &ValidationConfig) -> SuiteReport {
    let mut rng = suite_rng(cfg.seed, "solver");
    let tol = &cfg.tolerances;
    let options = SolveOptions::default();
    let rigidity = rigidity_lattice(cage);
    let diag = cage.bbox_diagonal();
    let mut failures = 0;

    let a = random_matrix(&mut rng, 0.3);
    let b = Vec3::new(0.2, -0.1, 0.3) * diag;
    let affine = |p: &Vec3<f64>| a * *p + b;
    let anchors = sample_points(cage, 8, &mut rng, 0.05);
    let constraints: Vec<_> = anchors.iter().map(|p| Constraint::value(*p, affine(p), 1.0)).collect();
    let held_out = sample_points(cage, 50, &mut rng, 0.05);
    let mut recovery = f64::NAN;
    let mut rank = 0;
    if let Ok(sol) = solve_constraints(cage, &constraints, &rigidity, tol, &options) {
        rank = sol.report.rank;
        if sol.report.rank_deficient {
            failures += 1;
        }
        let deformed = sol.deformed;
        let scale = diag * a.frobenius_norm().max(1.0);
        recovery = held_out
            .iter()
            .map(|p| deform_point(cage, &deformed, p, tol).map(|v| (v - affine(p)).norm() / scale))
            .try_fold(0.0f64, |m, e| e.map(|e| m.max(e)))
            .unwrap_or(f64::NAN);
    } else {
        failures += 1;
    }

    let angle = 0.7f64;
    let (s, c) = angle.sin_cos();
    let rot = Mat3::from_f64([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]);
    let shift = Vec3::new(0.1, 0.2, -0.3) * diag;
    let center = cage.centroid();
    let maps: [(&str, Box<dyn Fn(&Vec3<f64>) -> Vec3<f64>>); 3] = [
        ("identity", Box::new(|p: &Vec3<f64>| *p)),
        ("translation", Box::new(move |p: &Vec3<f64>| *p + shift)),
        ("rotation", Box::new(move |p: &Vec3<f64>| rot * (*p - center) + center)),
    ];
    let tet = sample_points(cage, 4, &mut rng, 0.05);
    let mut exact = 0.0f64;
    for (_, map) in &maps {
        let cs: Vec<_> = tet.iter().map(|p| Constraint::value(*p, map(p), 1.0)).collect();
        match solve_constraints(cage, &cs, &rigidity, tol, &options) {
            Ok(sol) if !sol.report.rank_deficient => {
                let cage_error = sol
                    .deformed
                    .positions()
                    .iter()
                    .zip(cage.vertices())
                    .map(|(x, p)| (*x - map(p)).norm() / diag)
                    .fold(0.0, f64::max);
                exact = exact.max(sol.report.residual).max(cage_error);
            }
            _ => failures += 1,
        }
    }

    SuiteReport {
        name: "solver",
        samples: held_out.len() + maps.len(),
        failures,
        metrics: vec![
            Metric::new("affine_recovery", recovery, 1e-7),
            Metric::new("exact_cases_residual", exact, 1e-8),
        ],
        observations: vec![
            ("rigidity_samples", rigidity.sample_points.len() as f64),
            ("affine_system_rank", rank as f64),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn sampling_is_reproducible() {
        let cage = shapes::l_cage::<f64>();
        let a = sample_points(&cage, 20, &mut suite_rng(7, "x"), 0.02);
        let b = sample_points(&cage, 20, &mut suite_rng(7, "x"), 0.02);
        let c = sample_points(&cage, 20, &mut suite_rng(7, "y"), 0.02);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn kernel_table_passes() {
        let r = kernel_suite(&Tolerances::default());
        assert!(r.samples > 800);
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn nan_never_passes() {
        assert!(!Metric::new("x", f64::NAN, 1.0).passed());
    }
}
