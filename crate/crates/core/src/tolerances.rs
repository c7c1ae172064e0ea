use crate::kernels::Kernels;
use crate::real::Real;

/// Geometric thresholds shared by frame classification and evaluation.
///
/// `eps_plane` is relative to the mean edge length of the triangle being
/// classified, `eps_switch` to the distance between the triangle and the
/// projection of the query point onto its plane, `eps_vertex` to the cage
/// bounding-box diagonal, `eps_area` to the squared diagonal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances<T> {
    pub eps_plane: T,
    pub eps_vertex: T,
    pub eps_switch: T,
    pub eps_area: T,
    pub kernels: Kernels<T>,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Tolerances {
            eps_plane: T::lit(1e-9),
            eps_vertex: T::lit(1e-12),
            eps_switch: T::lit(1e-3),
            eps_area: T::lit(1e-12),
            kernels: Kernels::default(),
        }
    }
}

impl<T: Real> Tolerances<T> {
    pub fn with_eps_theta(mut self, eps_theta: T) -> Self {
        self.kernels.eps_theta = eps_theta;
        self
    }
}
