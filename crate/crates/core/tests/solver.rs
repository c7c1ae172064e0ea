use mvc_core::{
    assemble_system, deform_mesh, deform_point, deformation_sample, shapes, solve, solve_constraints, Binding, Cage,
    Constraint, DeformedCage, Mat3, MvcError, Order, Point, RigidityTerm, RowKind, SolveOptions, Tolerances, Vec3,
};

fn rotation_z(angle: f64) -> Mat3<f64> {
    let (s, c) = angle.sin_cos();
    Mat3::from_f64([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
}

fn anchors() -> [Point; 4] {
    [
        Vec3::new(-0.5, -0.5, -0.5),
        Vec3::new(0.5, -0.4, -0.3),
        Vec3::new(-0.2, 0.6, -0.4),
        Vec3::new(0.1, 0.1, 0.5),
    ]
}

#[test]
fn rotation_is_recovered_from_values() {
    let cage: Cage = shapes::cube(1.0);
    let tol = Tolerances::default();
    let r = rotation_z(0.9);
    let cs: Vec<_> = anchors().iter().map(|p| Constraint::value(*p, r * *p, 1.0)).collect();
    let rig = RigidityTerm::lattice(&cage, 4, 0.05, 1.0);
    let sol = solve_constraints(&cage, &cs, &rig, &tol, &SolveOptions::default()).unwrap();
    sol.report.check().unwrap();
    assert!(sol.report.residual < 1e-8);
    for (x, p) in sol.deformed.positions().iter().zip(cage.vertices()) {
        assert!((*x - r * *p).norm() < 1e-10);
    }
}

#[test]
fn value_and_jacobian_at_one_point_fix_an_affine_map() {
    let cage: Cage = shapes::l_cage();
    let tol = Tolerances::default();
    let r = rotation_z(0.4) * 1.5;
    let eta = Vec3::new(0.5, 0.5, 0.5);
    let target = Vec3::new(2.0, -1.0, 0.5);
    let c = Constraint {
        point: eta,
        target_value: Some(target),
        target_jacobian: Some(r),
        weight: 1.0,
    };
    let rig = RigidityTerm::lattice(&cage, 5, 0.05, 1.0);
    let sol = solve_constraints(&cage, &[c], &rig, &tol, &SolveOptions::default()).unwrap();
    sol.report.check().unwrap();
    let s = deformation_sample(&cage, &sol.deformed, &eta, &tol).unwrap();
    assert!((s.value - target).norm() < 1e-8);
    assert!((s.jacobian - r).max_abs() < 1e-8);
    let far = Vec3::new(1.5, 0.3, 0.2);
    let expect = r * (far - eta) + target;
    assert!((deform_point(&cage, &sol.deformed, &far, &tol).unwrap() - expect).norm() < 1e-8);
}

#[test]
fn jacobian_only_constraints_get_a_gauge_row() {
    let cage: Cage = shapes::cube(1.0);
    let tol = Tolerances::default();
    let rig = RigidityTerm::lattice(&cage, 4, 0.05, 1.0);
    let c = Constraint::jacobian(Vec3::new(0.1, 0.0, 0.2), Mat3::identity() * 2.0, 1.0);
    let sys = assemble_system(&cage, &[c], &rig, &tol).unwrap();
    assert_eq!(sys.rows.last(), Some(&RowKind::Gauge));
    let sol = solve(&sys, &SolveOptions::default()).unwrap();
    sol.report.check().unwrap();
    // scaled by two about the fixed centroid
    for (x, p) in sol.deformed.positions().iter().zip(cage.vertices()) {
        assert!((*x - *p * 2.0).norm() < 1e-9);
    }
}

#[test]
fn inconsistent_targets_leave_a_residual() {
    let cage: Cage = shapes::cube(1.0);
    let tol = Tolerances::default();
    let p = Vec3::new(0.1, 0.2, 0.3);
    let cs = [
        Constraint::value(p, p, 1.0),
        Constraint::value(p, p + Vec3::new(0.5, 0.0, 0.0), 1.0),
    ];
    let rig = RigidityTerm::lattice(&cage, 4, 0.05, 1.0);
    let sol = solve_constraints(&cage, &cs, &rig, &tol, &SolveOptions::default()).unwrap();
    // the best fit splits the difference
    assert!((sol.report.residual - 0.5 / 2f64.sqrt()).abs() < 1e-9);
    let got = deform_point(&cage, &sol.deformed, &p, &tol).unwrap();
    assert!((got - (p + Vec3::new(0.25, 0.0, 0.0))).norm() < 1e-9);
}

#[test]
fn a_single_point_without_rigidity_is_rank_deficient() {
    let cage: Cage = shapes::cube(1.0);
    let tol = Tolerances::default();
    let p = Vec3::new(0.1, 0.2, 0.3);
    let sol = solve_constraints(
        &cage,
        &[Constraint::value(p, p + Vec3::new(1.0, 0.0, 0.0), 1.0)],
        &RigidityTerm::none(),
        &tol,
        &SolveOptions::default(),
    )
    .unwrap();
    assert!(sol.report.rank_deficient);
    assert_eq!(sol.report.rank, 1);
    assert_eq!(
        sol.report.check(),
        Err(MvcError::RankDeficientUnconstrained { rank: 1, unknowns: 8 })
    );
    // the minimum-norm answer still meets the constraint
    assert!(sol.report.residual < 1e-12);
}

#[test]
fn scaling_every_weight_leaves_the_solution_unchanged() {
    let cage: Cage = shapes::l_cage();
    let tol = Tolerances::default();
    let cs = |w: f64| -> Vec<Constraint<f64>> {
        vec![
            Constraint::value(Vec3::new(0.5, 0.5, 0.5), Vec3::new(0.7, 0.4, 0.5), w),
            Constraint::value(Vec3::new(1.5, 0.5, 0.5), Vec3::new(1.4, 0.9, 0.5), w),
            Constraint::value(Vec3::new(0.5, 1.5, 0.5), Vec3::new(0.3, 1.5, 0.6), 2.0 * w),
        ]
    };
    let rig = |w: f64| RigidityTerm::lattice(&cage, 5, 0.05, w);
    let a = solve_constraints(&cage, &cs(1.0), &rig(0.1), &tol, &SolveOptions::default()).unwrap();
    let b = solve_constraints(&cage, &cs(50.0), &rig(5.0), &tol, &SolveOptions::default()).unwrap();
    for (x, y) in a.deformed.positions().iter().zip(b.deformed.positions()) {
        assert!((*x - *y).norm() < 1e-9);
    }
}

#[test]
fn more_rigidity_trades_fit_for_smoothness() {
    let cage: Cage = shapes::l_cage();
    let tol = Tolerances::default();
    let cs = [
        Constraint::value(Vec3::new(0.5, 0.5, 0.5), Vec3::new(0.5, 0.5, 0.5), 1.0),
        Constraint::value(Vec3::new(1.6, 0.5, 0.5), Vec3::new(1.6, 0.5, 1.2), 1.0),
        Constraint::value(Vec3::new(0.5, 1.6, 0.5), Vec3::new(0.5, 1.6, -0.2), 1.0),
        Constraint::value(Vec3::new(0.3, 0.3, 0.2), Vec3::new(0.3, 0.3, 0.2), 1.0),
        Constraint::value(Vec3::new(0.6, 0.2, 0.8), Vec3::new(0.6, 0.2, 0.8), 1.0),
    ];
    let probes: Vec<Point> = RigidityTerm::lattice(&cage, 5, 0.05, 1.0).sample_points;
    let energy = |d: &DeformedCage<f64>| -> f64 {
        probes
            .iter()
            .map(|p| deformation_sample(&cage, d, p, &tol).unwrap().hessian_energy())
            .sum()
    };
    let mut last: Option<(f64, f64)> = None;
    for w in [1e-4, 1e-2, 1.0, 1e2] {
        let rig = RigidityTerm::lattice(&cage, 5, 0.05, w);
        let sol = solve_constraints(&cage, &cs, &rig, &tol, &SolveOptions::default()).unwrap();
        let fit: f64 = cs
            .iter()
            .map(|c| {
                (deform_point(&cage, &sol.deformed, &c.point, &tol).unwrap() - c.target_value.unwrap()).norm_squared()
            })
            .sum();
        let e = energy(&sol.deformed);
        if let Some((f0, e0)) = last {
            assert!(fit >= f0 * (1.0 - 1e-9), "fit {fit} < {f0}");
            assert!(e <= e0 * (1.0 + 1e-9), "energy {e} > {e0}");
        }
        last = Some((fit, e));
    }
}

#[test]
fn deformation_is_linear_in_the_cage_positions() {
    let cage: Cage = shapes::icosphere(1);
    let tol = Tolerances::default();
    let a = DeformedCage::from_map(&cage, |p| Vec3::new(p[0] * p[0], p[1], p[2] * 2.0));
    let b = DeformedCage::from_map(&cage, |p| Vec3::new(p[2], -p[0], p[1] * p[1]));
    let (s, t) = (0.3, -1.7);
    let mix = DeformedCage::new(
        &cage,
        a.positions()
            .iter()
            .zip(b.positions())
            .map(|(x, y)| *x * s + *y * t)
            .collect(),
    )
    .unwrap();
    let pts = [Vec3::new(0.1, 0.2, -0.3), Vec3::new(1.5, 0.0, 0.2)];
    let binding = Binding::new(&cage, &pts, &tol, Order::Hessian);
    let (ra, rb, rm) = (
        binding.apply(&a).unwrap(),
        binding.apply(&b).unwrap(),
        binding.apply(&mix).unwrap(),
    );
    for k in 0..pts.len() {
        let (sa, sb, sm) = (
            ra[k].sample.clone().unwrap().unwrap(),
            rb[k].sample.clone().unwrap().unwrap(),
            rm[k].sample.clone().unwrap().unwrap(),
        );
        assert!((sa.value * s + sb.value * t - sm.value).norm() < 1e-12);
        assert!((sa.jacobian * s + sb.jacobian * t - sm.jacobian).max_abs() < 1e-11);
        for c in 0..3 {
            assert!((sa.hessians[c] * s + sb.hessians[c] * t - sm.hessians[c]).max_abs() < 1e-10);
        }
    }
}

#[test]
fn translated_cage_translates_an_embedded_sphere() {
    let cage: Cage = shapes::cube(1.0);
    let tol = Tolerances::default();
    let v = Vec3::new(0.5, -2.0, 3.0);
    let moved = DeformedCage::from_map(&cage, |p| *p + v);
    let sphere = shapes::uv_sphere(0.6, Vec3::zero(), 8, 12);
    let out = deform_mesh(&cage, &moved, &sphere, &tol).unwrap();
    assert_eq!(out.triangles, sphere.triangles);
    for (x, p) in out.vertices.iter().zip(&sphere.vertices) {
        assert!((*x - (*p + v)).norm() < 1e-12);
    }
}

#[test]
fn bindings_do_not_depend_on_the_thread_count() {
    let cage: Cage = shapes::icosphere(1);
    let tol = Tolerances::default();
    let pts: Vec<Point> = (0..64)
        .map(|i| Vec3::new(0.03 * i as f64 - 0.9, 0.2, 0.1 - 0.01 * i as f64))
        .collect();
    let d = DeformedCage::from_map(&cage, |p| Vec3::new(p[0] + p[1] * p[1], p[1], p[2] - p[0]));
    let run = |n: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
        pool.install(|| Binding::new(&cage, &pts, &tol, Order::Hessian).apply(&d).unwrap())
    };
    assert_eq!(run(1), run(3));
}
