//! The fourteen per-edge terms of `∂_c(Jm)`, the derivative of the Jacobian of
//! the spherical mean vector `m` with respect to the query coordinate `c`.
//!
//! Each term is its own function so a finite-difference failure can be
//! traced to a single term. Notation for edge `j` of a frame:
//! `N = n_vec[j]`, `JN = jn[j]`, `JtN = JNᵗ N`, `v = 2η − p[j+1] − p[j+2]`,
//! `a = d[j+1] d[j+2]`, `e1 = η − p[j+1]`, `e2 = η − p[j+2]`.

use crate::cage::{next, prev, TriangleFrame};
use crate::error::Result;
use crate::kernels::{KernelValues, Kernels};
use crate::linalg::{Mat3, Vec3};
use crate::real::Real;

/// Per-edge quantities shared by all terms.
#[derive(Clone, Copy, Debug)]
pub struct EdgeTerms<T> {
    pub n: Vec3<T>,
    pub jn: Mat3<T>,
    pub jtn: Vec3<T>,
    /// `N (JNᵗ N)ᵗ = N Nᵗ JN`
    pub nnj: Mat3<T>,
    pub v: Vec3<T>,
    pub e1: Vec3<T>,
    pub e2: Vec3<T>,
    pub d1: T,
    pub d2: T,
    pub a: T,
    pub k: KernelValues<T>,
}

impl<T: Real> EdgeTerms<T> {
    pub fn new(frame: &TriangleFrame<T>, j: usize, kernels: &Kernels<T>) -> Result<Self> {
        let n = frame.n_vec[j];
        let jn = frame.jn[j];
        let jtn = jn.tr_mul(&n);
        let d1 = frame.d[next(j)];
        let d2 = frame.d[prev(j)];
        Ok(EdgeTerms {
            n,
            jn,
            jtn,
            nnj: Mat3::outer(&n, &jtn),
            v: frame.edge_midpoint_offset(j),
            e1: -frame.u[next(j)],
            e2: -frame.u[prev(j)],
            d1,
            d2,
            a: d1 * d2,
            k: kernels.values(frame.theta[j])?,
        })
    }

    /// `∂_c N`, column `c` of `JN`.
    #[inline]
    fn dn(&self, c: usize) -> Vec3<T> {
        self.jn.col(c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HessianTerm {
    Eq6Normal,
    Eq7Normal,
    Eq1LeftDn,
    Eq1RightDn,
    Eq1NearDistance,
    Eq1FarDistance,
    DnOffset,
    NearDistanceOffset,
    FarDistanceOffset,
    Eq8Skew,
    Eq9Skew,
    Eq2NearSkew,
    Eq2FarSkew,
    NormalDelta,
}

impl HessianTerm {
    pub const ALL: [HessianTerm; 14] = [
        HessianTerm::Eq6Normal,
        HessianTerm::Eq7Normal,
        HessianTerm::Eq1LeftDn,
        HessianTerm::Eq1RightDn,
        HessianTerm::Eq1NearDistance,
        HessianTerm::Eq1FarDistance,
        HessianTerm::DnOffset,
        HessianTerm::NearDistanceOffset,
        HessianTerm::FarDistanceOffset,
        HessianTerm::Eq8Skew,
        HessianTerm::Eq9Skew,
        HessianTerm::Eq2NearSkew,
        HessianTerm::Eq2FarSkew,
        HessianTerm::NormalDelta,
    ];

    pub fn eval<T: Real>(self, e: &EdgeTerms<T>, c: usize) -> Mat3<T> {
        match self {
            HessianTerm::Eq6Normal => eq6_normal(e, c),
            HessianTerm::Eq7Normal => eq7_normal(e, c),
            HessianTerm::Eq1LeftDn => eq1_left_dn(e, c),
            HessianTerm::Eq1RightDn => eq1_right_dn(e, c),
            HessianTerm::Eq1NearDistance => eq1_near_distance(e, c),
            HessianTerm::Eq1FarDistance => eq1_far_distance(e, c),
            HessianTerm::DnOffset => dn_offset(e, c),
            HessianTerm::NearDistanceOffset => near_distance_offset(e, c),
            HessianTerm::FarDistanceOffset => far_distance_offset(e, c),
            HessianTerm::Eq8Skew => eq8_skew(e, c),
            HessianTerm::Eq9Skew => eq9_skew(e, c),
            HessianTerm::Eq2NearSkew => eq2_near_skew(e, c),
            HessianTerm::Eq2FarSkew => eq2_far_skew(e, c),
            HessianTerm::NormalDelta => normal_delta(e, c),
        }
    }
}

fn two<T: Real>() -> T {
    T::lit(2.0)
}

/// `eq6 (JNᵗN)_c N Nᵗ JN / 2a⁵`
pub fn eq6_normal<T: Real>(e: &EdgeTerms<T>, c: usize) -> Mat3<T> {
    let a2 = e.a * e.a;
    e.nnj * (e.k.eq6 * e.jtn[c] / (two::<T>() * a2 * a2 * e.a))
}

/// `−eq7 v_c N Nᵗ JN / 2a⁴`
pub fn eq7_normal<T: Real>(e: &EdgeTerms<T>, c: usize) -> Mat3<T> {
    let a2 = e.a * e.a;
    e.nnj * (-e.k.eq7 * e.v[c] / (two::<T>() * a2 * a2))
}

/// `eq1 ∂_cN Nᵗ JN / 2a³`
pub fn eq1_left_dn<T: Real>(e: &EdgeTerms<T>, c: usize) -> Mat3<T> {
    Mat3::outer(&e.dn(c), &e.jtn) * (e.k.eq1 / (two::<T>() * e.a * e.a * e.a))
}

/// `eq1 N ∂_cNᵗ JN / 2a³`
pub fn eq1_right_dn<T: Real>(e: &EdgeTerms<T>, c: usize) -> Mat3<T> {
    Mat3::outer(&e.n, &e.jn.tr_mul(&e.dn(c))) * (e.k.eq1 / (two::<T>() * e.a * e.a * e.a))
}

/// `−3 eq1 (e1)_c N Nᵗ JN / 2 d2³ d1⁵`
pub fn eq1_near_distance<T: Real>(e: &EdgeTerms<T>, c: usize) -> Mat3<T> {
    let d1_2 = e.d1 * e.d1;
    let denom = two::<T>() * e.d2 * e.d2 * e.d2 * d1_2 * d1_2 * e.d1;
    e.nnj * (-T::lit(3.0) * e.k.eq1 * e.e1[c] / denom)
}

/// `−3 eq1 (e2)_c N Nᵗ JN / 2 d2⁵ d1³`
pub fn eq1_far_distance<T: Real>(e: &EdgeTerms<T>, c: usize) -> Mat3<T> {
    let d2_2 = e.d2 * e.d2;
    let denom = two::<T>() * d2_2 * d2_2 * e.d2 * e.d1 * e.d1 * e.d1;
    e.nnj * (-T::lit(3.0) * e.k.eq1 * e.e2[c] / denom)
}

/// `−∂_cN vᵗ / 2a²`
pub fn dn_offset<T: Real>(e: &EdgeTerms<T>, c: usize) -> Mat3<T> {
    Mat3::outer(&e.dn(c), &e.v) * (-T::one() / (two::<T>() * e.a * e.a))
}

/// `(e1)_c N vᵗ / d2² d1⁴`
pub fn near_distance_offset<T: Real>(e: &EdgeTerms<T>, c: usize) -> Mat3<T> {
    let d1_2 = e.d1 * e.d1;
    Mat3::outer(&e.n, &e.v) * (e.e1[c] / (e.d2 * e.d2 * d1_2 * d1_2))
}

/// `(e2)_c N vᵗ / d2⁴ d1²`
pub fn far_distance_offset<T: Real>(e: &EdgeTerms<T>, c: usize) -> Mat3<T> {
    let d2_2 = e.d2 * e.d2;
    Mat3::outer(&e.n, &e.v) * (e.e2[c] / (d2_2 * d2_2 * e.d1 * e.d1))
}

/// `eq8 (JNᵗN)_c JN / 2a³`
pub fn eq8_skew<T: Real>(e: &EdgeTerms<T>, c: usize) -> Mat3<T> {
    e.jn * (e.k.eq8 * e.jtn[c] / (two::<T>() * e.a * e.a * e.a))
}

/// `−eq9 v_c JN / 2a²`
pub fn eq9_skew<T: Real>(e: &EdgeTerms<T>, c: usize) -> Mat3<T> {
    e.jn * (-e.k.eq9 * e.v[c] / (two::<T>() * e.a * e.a))
}

/// `−(e1)_c eq2 JN / 2 d2 d1³`
pub fn eq2_near_skew<T: Real>(e: &EdgeTerms<T>, c: usize) -> Mat3<T> {
    e.jn * (-e.e1[c] * e.k.eq2 / (two::<T>() * e.d2 * e.d1 * e.d1 * e.d1))
}

/// `−(e2)_c eq2 JN / 2 d2³ d1`
pub fn eq2_far_skew<T: Real>(e: &EdgeTerms<T>, c: usize) -> Mat3<T> {
    e.jn * (-e.e2[c] * e.k.eq2 / (two::<T>() * e.d2 * e.d2 * e.d2 * e.d1))
}

/// `−N δ_cᵗ / d2² d1²`
pub fn normal_delta<T: Real>(e: &EdgeTerms<T>, c: usize) -> Mat3<T> {
    Mat3::outer(&e.n, &Vec3::axis(c)) * (-T::one() / (e.a * e.a))
}

/// `Jm`: the three first-order sums (without the `Σ w I` shift).
pub fn mean_vector_jacobian<T: Real>(edges: &[EdgeTerms<T>; 3]) -> Mat3<T> {
    let two = two::<T>();
    edges
        .iter()
        .map(|e| {
            let a2 = e.a * e.a;
            e.nnj * (e.k.eq1 / (two * a2 * e.a)) - Mat3::outer(&e.n, &e.v) / (two * a2) + e.jn * (e.k.eq2 / (two * e.a))
        })
        .sum()
}

/// `∂_c(Jm)` summed over all edges and all fourteen terms.
pub fn mean_vector_jacobian_derivative<T: Real>(edges: &[EdgeTerms<T>; 3], c: usize) -> Mat3<T> {
    edges
        .iter()
        .flat_map(|e| HessianTerm::ALL.iter().map(move |t| t.eval(e, c)))
        .sum()
}
