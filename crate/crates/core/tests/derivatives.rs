use mvc_core::oracles::{fd_gradient, quadrature_triangle_weights, FdSpec, QuadratureSpec};
use mvc_core::{
    build_triangle_frame, derivative_set, mvc_coordinates, normal_derivative, shapes, triangle_contribution,
    triangle_gradients, triangle_gradients_planar, triangle_hessians_planar, triangle_weights, Cage, DerivativeSource,
    FrameClass, MvcError, Order, Tolerances, Vec3,
};

/// Point `(3, 0.35, 1)` lies on the plane `z = 1` of the top face of the
/// cube, outside both of its triangles.
fn top_plane_point() -> Vec3<f64> {
    Vec3::new(3.0, 0.35, 1.0)
}

fn top_triangles(cage: &Cage) -> Vec<usize> {
    (0..cage.num_triangles())
        .filter(|&t| cage.triangle_positions(t).iter().all(|p| p[2] == 1.0))
        .collect()
}

#[test]
fn planar_formulas_require_a_coplanar_frame() {
    let cage: Cage = shapes::cube(1.0);
    let tol = Tolerances::default();
    let t = top_triangles(&cage)[0];
    let generic = build_triangle_frame(&cage, t, &Vec3::new(3.0, 0.35, 1.5), &tol).unwrap();
    assert!(matches!(
        triangle_gradients_planar(&generic, &tol.kernels),
        Err(MvcError::WrongClassification { .. })
    ));
    let planar = build_triangle_frame(&cage, t, &top_plane_point(), &tol).unwrap();
    assert_eq!(planar.classification, FrameClass::OnSupportPlaneOutsideT);
    assert!(matches!(
        triangle_weights(&planar),
        Err(MvcError::WrongClassification { .. })
    ));
    let h = triangle_hessians_planar(&planar, &tol.kernels).unwrap();
    for m in h {
        assert!(m.asymmetry() < 1e-15);
        assert!(planar.normal.dot(&(m * planar.normal)).abs() < 1e-15);
    }
}

#[test]
fn normal_derivative_is_the_limit_of_the_weights() {
    // w(s) / s → α as the point leaves the plane along the normal; the
    // general quotient itself loses digits like (r / s)², so s stays at
    // the switch distance
    let cage: Cage = shapes::cube(1.0);
    let tol = Tolerances::default();
    let q = top_plane_point();
    for t in top_triangles(&cage) {
        let alpha = normal_derivative(&build_triangle_frame(&cage, t, &q, &tol).unwrap(), &tol.kernels).unwrap();
        let s = 1e-3;
        let up =
            triangle_weights(&build_triangle_frame(&cage, t, &(q + Vec3::new(0.0, 0.0, s)), &tol).unwrap()).unwrap();
        for i in 0..3 {
            assert!(
                (up.w[i] / s - alpha[i]).abs() < 1e-6 * alpha[i].abs(),
                "{} {}",
                up.w[i] / s,
                alpha[i]
            );
        }
    }
}

#[test]
fn normal_derivative_matches_quadrature_off_the_plane() {
    // α = −∫ φ / |p − η|⁴, and w(s) = s · that integrand at first order
    let cage: Cage = shapes::cube(1.0);
    let tol = Tolerances::default();
    let q = top_plane_point();
    let s = 1e-3;
    for t in top_triangles(&cage) {
        let alpha = normal_derivative(&build_triangle_frame(&cage, t, &q, &tol).unwrap(), &tol.kernels).unwrap();
        let quad = quadrature_triangle_weights(&cage, t, &(q + Vec3::new(0.0, 0.0, s)), &QuadratureSpec::default());
        for i in 0..3 {
            assert!((quad.value[i] / s - alpha[i]).abs() < 1e-5 * alpha[i].abs());
        }
    }
}

#[test]
fn derivatives_are_continuous_across_the_expansion_switch() {
    // one point at ratio s / r = 1e-3, evaluated just inside and just outside
    // the expansion wedge
    let cage: Cage = shapes::cube(1.0);
    let base = Tolerances::default();
    let q = top_plane_point();
    let t = top_triangles(&cage)[0];
    let f = build_triangle_frame(&cage, t, &q, &base).unwrap();
    let r = (q - mvc_core::cage::closest_point_on_triangle(&q, &f.p[0], &f.p[1], &f.p[2])).norm();
    let eta = q + Vec3::new(0.0, 0.0, 1e-3 * r);
    let expanded = Tolerances {
        eps_switch: 1.01e-3,
        ..base
    };
    let general = Tolerances {
        eps_switch: 0.99e-3,
        ..base
    };
    let a = derivative_set(&cage, &eta, &expanded, Order::Hessian).unwrap();
    let b = derivative_set(&cage, &eta, &general, Order::Hessian).unwrap();
    assert!(a.planar_triangles > b.planar_triangles);
    let (ha, hb) = (a.hess_lambda.unwrap(), b.hess_lambda.unwrap());
    let gs = a.grad_lambda.iter().map(|g| g.norm()).fold(0.0, f64::max);
    let hs = ha.iter().map(|h| h.frobenius_norm()).fold(0.0, f64::max);
    for i in 0..8 {
        assert!((a.weights.lambda[i] - b.weights.lambda[i]).abs() < 1e-10);
        assert!((a.grad_lambda[i] - b.grad_lambda[i]).norm() < 1e-7 * gs);
        assert!((ha[i] - hb[i]).frobenius_norm() < 1e-4 * hs);
    }
}

#[test]
fn contribution_sources_follow_the_geometry() {
    let cage: Cage = shapes::cube(1.0);
    let tol = Tolerances::default();
    let t = top_triangles(&cage)[0];
    let planar = triangle_contribution(&cage, t, &top_plane_point(), &tol, Order::Hessian).unwrap();
    assert_eq!(planar.source, DerivativeSource::PlanarFormula);
    assert_eq!(planar.w, [0.0; 3]);
    let generic = triangle_contribution(&cage, t, &Vec3::new(0.1, 0.2, 0.3), &tol, Order::Gradient).unwrap();
    assert_eq!(generic.source, DerivativeSource::GeneralFormula);
    assert!(generic.hess.iter().all(|h| h.max_abs() == 0.0));
    let [a, b, c] = cage.triangle_positions(t);
    let on = triangle_contribution(&cage, t, &((a + b + c) / 3.0), &tol, Order::Value);
    assert!(matches!(on, Err(MvcError::OnSurface { .. })));
}

#[test]
fn derivative_sets_refuse_surface_points() {
    let cage: Cage = shapes::cube(1.0);
    let tol = Tolerances::default();
    for p in [
        Vec3::new(0.2, 0.1, 1.0),
        Vec3::new(1.0, 1.0, 1.0),
        Vec3::new(1.0, 0.0, -1.0),
    ] {
        assert!(matches!(
            derivative_set(&cage, &p, &tol, Order::Gradient),
            Err(MvcError::OnSurface { .. })
        ));
        assert!(mvc_coordinates(&cage, &p, &tol).unwrap().on_surface);
    }
}

#[test]
fn triangle_gradients_match_differences_of_triangle_weights() {
    let cage: Cage = shapes::l_cage();
    let tol = Tolerances::default();
    let eta = Vec3::new(0.6, 0.4, 0.5);
    let step = FdSpec::relative(1e-5, cage.bbox_diagonal());
    for t in 0..cage.num_triangles() {
        let f = build_triangle_frame(&cage, t, &eta, &tol).unwrap();
        let g = triangle_gradients(&f, &triangle_weights(&f).unwrap(), &tol.kernels).unwrap();
        for i in 0..3 {
            let fd = fd_gradient(
                |x| Ok(triangle_weights(&build_triangle_frame(&cage, t, x, &tol)?)?.w[i]),
                &eta,
                &step,
            )
            .unwrap();
            assert!(
                (g[i] - fd.value).norm() < 1e-7 * g[i].norm().max(1e-3),
                "triangle {t} vertex {i}"
            );
        }
    }
}

#[test]
fn single_precision_derivatives_agree_with_double() {
    let c32 = shapes::l_cage::<f32>();
    let c64: Cage = shapes::l_cage();
    let eta = Vec3::new(0.5f32, 0.7, 0.4);
    let a = derivative_set(&c32, &eta, &Tolerances::default(), Order::Hessian).unwrap();
    let b = derivative_set(
        &c64,
        &Vec3::from_f64(eta.to_f64()),
        &Tolerances::default(),
        Order::Hessian,
    )
    .unwrap();
    for i in 0..c64.num_vertices() {
        assert!((a.weights.lambda[i] as f64 - b.weights.lambda[i]).abs() < 1e-5);
        let g = Vec3::from_f64(a.grad_lambda[i].to_f64());
        assert!((g - b.grad_lambda[i]).norm() < 1e-4);
    }
}
