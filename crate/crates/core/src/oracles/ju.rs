use crate::cage::{next, prev, CageMesh};
use crate::error::Result;
use crate::linalg::Vec3;
use crate::real::Real;
use crate::weights::{normalize, SurfaceLocation, WeightVector};

/// Mean value coordinates through the spherical-excess formulation: per
/// triangle, half-angles of the spherical triangle, cosines of its dihedral
/// angles via the half-perimeter, and one trigonometric weight per vertex.
/// Triangles whose support plane contains `η` are skipped; a point on a
/// triangle returns its barycentric interpolation.
pub fn ju_robust_weights<T: Real>(cage: &CageMesh<T>, eta: &Vec3<T>, eps: T) -> Result<WeightVector<T>> {
    let nv = cage.num_vertices();
    let mut d = vec![T::zero(); nv];
    let mut u = vec![Vec3::zero(); nv];
    for (i, p) in cage.vertices().iter().enumerate() {
        let r = *p - *eta;
        d[i] = r.norm();
        if d[i] < eps {
            let mut lambda = vec![T::zero(); nv];
            lambda[i] = T::one();
            return Ok(WeightVector {
                w: lambda.clone(),
                lambda,
                on_surface: true,
                surface_location: None,
            });
        }
        u[i] = r / d[i];
    }

    let two = T::lit(2.0);
    let mut w = vec![T::zero(); nv];
    for (t, tri) in cage.triangles().iter().enumerate() {
        let theta: [T; 3] = std::array::from_fn(|k| {
            let l = (u[tri[next(k)]] - u[tri[prev(k)]]).norm();
            two * (l / two).min(T::one()).asin()
        });
        let h = (theta[0] + theta[1] + theta[2]) / two;
        if T::PI() - h < eps {
            // η lies on the triangle: 2D barycentric coordinates
            let b: [T; 3] = std::array::from_fn(|k| theta[k].sin() * d[tri[prev(k)]] * d[tri[next(k)]]);
            let sum = b[0] + b[1] + b[2];
            let mut lambda = vec![T::zero(); nv];
            for k in 0..3 {
                lambda[tri[k]] = lambda[tri[k]] + b[k] / sum;
            }
            return Ok(WeightVector {
                w: lambda.clone(),
                lambda,
                on_surface: true,
                surface_location: Some(SurfaceLocation {
                    triangle: t,
                    barycentric: b.map(|x| x / sum),
                }),
            });
        }
        let c: [T; 3] = std::array::from_fn(|k| {
            two * h.sin() * (h - theta[k]).sin() / (theta[next(k)].sin() * theta[prev(k)].sin()) - T::one()
        });
        let det = u[tri[0]].dot(&u[tri[1]].cross(&u[tri[2]]));
        let sign = if det < T::zero() { -T::one() } else { T::one() };
        let s: [T; 3] = c.map(|ck| sign * (T::one() - ck * ck).max(T::zero()).sqrt());
        if s.iter().any(|sk| sk.abs() <= eps) {
            continue;
        }
        for k in 0..3 {
            let (kn, kp) = (next(k), prev(k));
            let num = theta[k] - c[kn] * theta[kp] - c[kp] * theta[kn];
            w[tri[k]] = w[tri[k]] + num / (d[tri[k]] * theta[kn].sin() * s[kp]);
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use crate::tolerances::Tolerances;
    use crate::weights::mvc_coordinates;

    #[test]
    fn agrees_with_the_determinant_formula() {
        let cage = shapes::l_cage::<f64>();
        let tol = Tolerances::default();
        for eta in [
            Vec3::new(0.5, 0.5, 0.5),
            Vec3::new(1.4, 0.3, 0.7),
            Vec3::new(3.0, -1.0, 2.0),
        ] {
            let a = mvc_coordinates(&cage, &eta, &tol).unwrap();
            let b = ju_robust_weights(&cage, &eta, 1e-12).unwrap();
            for (x, y) in a.lambda.iter().zip(&b.lambda) {
                assert!((x - y).abs() < 1e-12, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn face_point_interpolates() {
        let cage = shapes::cube::<f64>(1.0);
        let eta = Vec3::new(0.2, 0.3, 1.0);
        let a = ju_robust_weights(&cage, &eta, 1e-12).unwrap();
        assert!(a.on_surface);
        let rec: Vec3<f64> = cage.vertices().iter().zip(&a.lambda).map(|(p, &l)| *p * l).sum();
        assert!((rec - eta).norm() < 1e-12);
    }
}
