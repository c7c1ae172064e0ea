//! Scalar angle kernels `eq1 … eq9` with a Taylor guard near zero.
//!
//! All kernels have removable singularities at `θ = 0`. Below `eps_theta`
//! the even (or odd, for the derivatives) Taylor polynomial through `θ^10`
//! is used. Above it the closed form is evaluated, with every numerator that
//! cancels to high order in `θ` rewritten through remainder functions such as
//! `sin y − y`, so that the closed branch keeps full precision all the way
//! down to the seam.
//!
//! Series coefficients (exact rationals):
//!
//! | kernel | θ⁰ | θ² | θ⁴ | θ⁶ |
//! |---|---|---|---|---|
//! | eq1 | −2/3 | −1/5 | −17/420 | −29/4200 |
//! | eq2 | 1 | 1/6 | 7/360 | 31/15120 |
//! | eq3 | −1/2 | −1/8 | −1/48 | −17/5760 |
//! | eq4 | −8/5 | −4/7 | −1/7 | −211/6930 |
//! | eq5 | 5/4 | −1/4 | −11/192 | −1/90 |
//! | eq6 | −2/5 | −1/35 | 3/140 | 1349/138600 |
//! | eq7 | 0 | −2/5 | −2/21 | −4/225 |
//! | eq8 | 1/3 | −1/30 | −53/2520 | −367/75600 |
//! | eq9 | 0 | 1/3 | 1/45 | 2/945 |
//!
//! `eq1′ = θ(−2/5 − 17/105 θ² − …)` and `eq2′ = θ(1/3 + 7/90 θ² + …)`.

use crate::error::{MvcError, Result};
use crate::real::Real;

/// Identifier of one of the nine angle kernels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelId {
    /// `(cos x sin x − x) / sin³x`
    Eq1,
    /// `x / sin x`
    Eq2,
    /// `(cos x − 1) / sin²x`
    Eq3,
    /// `(2 cos x sin³x + 3(sin x cos x − x)) / sin⁵x`
    Eq4,
    /// `(cos x sin²x (1 − 2 cos x) − 2 cos²x + 2 cos x) / sin⁴x`
    Eq5,
    /// `eq1′(x) cos x / sin x`
    Eq6,
    /// `eq1′(x) sin x`
    Eq7,
    /// `eq2′(x) cos x / sin x`
    Eq8,
    /// `eq2′(x) sin x`
    Eq9,
}

impl KernelId {
    pub const ALL: [KernelId; 9] = [
        KernelId::Eq1,
        KernelId::Eq2,
        KernelId::Eq3,
        KernelId::Eq4,
        KernelId::Eq5,
        KernelId::Eq6,
        KernelId::Eq7,
        KernelId::Eq8,
        KernelId::Eq9,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelId::Eq1 => "eq1",
            KernelId::Eq2 => "eq2",
            KernelId::Eq3 => "eq3",
            KernelId::Eq4 => "eq4",
            KernelId::Eq5 => "eq5",
            KernelId::Eq6 => "eq6",
            KernelId::Eq7 => "eq7",
            KernelId::Eq8 => "eq8",
            KernelId::Eq9 => "eq9",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Even-polynomial coefficients in `θ²`, through `θ^10`.
    fn series_coefficients(self) -> [f64; 6] {
        match self {
            KernelId::Eq1 => [
                -2.0 / 3.0,
                -1.0 / 5.0,
                -17.0 / 420.0,
                -29.0 / 4200.0,
                -1181.0 / 1108800.0,
                -1393481.0 / 9081072000.0,
            ],
            KernelId::Eq2 => [
                1.0,
                1.0 / 6.0,
                7.0 / 360.0,
                31.0 / 15120.0,
                127.0 / 604800.0,
                73.0 / 3421440.0,
            ],
            KernelId::Eq3 => [
                -1.0 / 2.0,
                -1.0 / 8.0,
                -1.0 / 48.0,
                -17.0 / 5760.0,
                -31.0 / 80640.0,
                -691.0 / 14515200.0,
            ],
            KernelId::Eq4 => [
                -8.0 / 5.0,
                -4.0 / 7.0,
                -1.0 / 7.0,
                -211.0 / 6930.0,
                -29509.0 / 5045040.0,
                -157301.0 / 151351200.0,
            ],
            KernelId::Eq5 => [
                5.0 / 4.0,
                -1.0 / 4.0,
                -11.0 / 192.0,
                -1.0 / 90.0,
                -313.0 / 161280.0,
                -2281.0 / 7257600.0,
            ],
            KernelId::Eq6 => [
                -2.0 / 5.0,
                -1.0 / 35.0,
                3.0 / 140.0,
                1349.0 / 138600.0,
                267767.0 / 100900800.0,
                1752539.0 / 3027024000.0,
            ],
            KernelId::Eq7 => [
                0.0,
                -2.0 / 5.0,
                -2.0 / 21.0,
                -4.0 / 225.0,
                -2.0 / 693.0,
                -2764.0 / 6449625.0,
            ],
            KernelId::Eq8 => [
                1.0 / 3.0,
                -1.0 / 30.0,
                -53.0 / 2520.0,
                -367.0 / 75600.0,
                -5689.0 / 6652800.0,
                -7198361.0 / 54486432000.0,
            ],
            KernelId::Eq9 => [0.0, 1.0 / 3.0, 1.0 / 45.0, 2.0 / 945.0, 1.0 / 4725.0, 2.0 / 93555.0],
        }
    }
}

/// The two kernels whose first derivative is needed by `eq6 … eq9`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelBase {
    Eq1,
    Eq2,
}

impl KernelBase {
    /// Odd-polynomial coefficients: `θ · Σ c_k θ^{2k}`.
    fn derivative_series_coefficients(self) -> [f64; 6] {
        match self {
            KernelBase::Eq1 => [
                -2.0 / 5.0,
                -17.0 / 105.0,
                -29.0 / 700.0,
                -1181.0 / 138600.0,
                -1393481.0 / 908107200.0,
                -763967.0 / 3027024000.0,
            ],
            KernelBase::Eq2 => [
                1.0 / 3.0,
                7.0 / 90.0,
                31.0 / 2520.0,
                127.0 / 75600.0,
                73.0 / 342144.0,
                1414477.0 / 54486432000.0,
            ],
        }
    }
}

fn even_poly<T: Real>(coeffs: &[f64; 6], x: T) -> T {
    let x2 = x * x;
    coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * x2 + T::lit(c))
}

/// `sin y − y`
fn sin_minus_id<T: Real>(y: T) -> T {
    if y.abs() >= T::one() {
        return y.sin() - y;
    }
    // Σ_{k≥1} (−1)^k y^{2k+1} / (2k+1)!
    let y2 = y * y;
    let mut term = -y * y2 / T::lit(6.0);
    let mut sum = term;
    for k in 2..12 {
        let n = 2.0 * k as f64;
        term = -term * y2 / T::lit(n * (n + 1.0));
        sum = sum + term;
    }
    sum
}

/// `sin y − y + y³/6`
fn sin_minus_cubic<T: Real>(y: T) -> T {
    if y.abs() >= T::lit(2.0) {
        return y.sin() - y + y * y * y / T::lit(6.0);
    }
    // Σ_{k≥2} (−1)^k y^{2k+1} / (2k+1)!
    let y2 = y * y;
    let mut term = y * y2 * y2 / T::lit(120.0);
    let mut sum = term;
    for k in 3..17 {
        let n = 2.0 * k as f64;
        term = -term * y2 / T::lit(n * (n + 1.0));
        sum = sum + term;
    }
    sum
}

/// `sin x − x cos x − x³/3`
fn sin_minus_x_cos_remainder<T: Real>(x: T) -> T {
    if x.abs() >= T::one() {
        return x.sin() - x * x.cos() - x * x * x / T::lit(3.0);
    }
    // Σ_{k≥2} (−1)^{k+1} 2k x^{2k+1} / (2k+1)!
    let x2 = x * x;
    let mut fact_term = x * x2 * x2 / T::lit(120.0); // x^5/5!
    let mut sum = -T::lit(4.0) * fact_term;
    for k in 3..13 {
        let n = 2.0 * k as f64;
        fact_term = -fact_term * x2 / T::lit(n * (n + 1.0));
        sum = sum - T::lit(n) * fact_term;
    }
    sum
}

/// `eq1′` closed form: `(sin³x − 3(sin x − x cos x)) / sin⁴x`.
fn eq1_prime_closed<T: Real>(x: T, s: T) -> T {
    let sx = sin_minus_id(x);
    let three = T::lit(3.0);
    let num = sx * (s * s + s * x + x * x) - three * sin_minus_x_cos_remainder(x);
    let s2 = s * s;
    num / (s2 * s2)
}

/// `eq2′` closed form: `(sin x − x cos x) / sin²x`.
fn eq2_prime_closed<T: Real>(x: T, s: T) -> T {
    let h = (x / T::lit(2.0)).sin();
    (sin_minus_id(x) + T::lit(2.0) * x * h * h) / (s * s)
}

/// Closed-form branch of a kernel. Accurate for `θ` in `(0, π)`.
pub fn closed_form<T: Real>(k: KernelId, x: T) -> T {
    let (s, c) = x.sin_cos();
    let two = T::lit(2.0);
    match k {
        KernelId::Eq1 => sin_minus_id(two * x) / (two * s * s * s),
        KernelId::Eq2 => x / s,
        KernelId::Eq3 => {
            // (cos x − 1)/sin²x = −1/(1 + cos x) = −1/(2 cos²(x/2))
            let h = (x / two).cos();
            -T::one() / (two * h * h)
        }
        KernelId::Eq4 => {
            let num = T::lit(8.0) * sin_minus_cubic(two * x) - sin_minus_cubic(T::lit(4.0) * x);
            let s2 = s * s;
            num / (T::lit(4.0) * s2 * s2 * s)
        }
        KernelId::Eq5 => {
            // numerator factors as cos x (1 − cos x)² (3 + 2 cos x)
            let h = (x / two).cos();
            let h2 = h * h;
            c * (T::lit(3.0) + two * c) / (T::lit(4.0) * h2 * h2)
        }
        KernelId::Eq6 => eq1_prime_closed(x, s) * c / s,
        KernelId::Eq7 => eq1_prime_closed(x, s) * s,
        KernelId::Eq8 => eq2_prime_closed(x, s) * c / s,
        KernelId::Eq9 => eq2_prime_closed(x, s) * s,
    }
}

/// Taylor branch of a kernel, through `θ^10`.
pub fn series<T: Real>(k: KernelId, x: T) -> T {
    even_poly(&k.series_coefficients(), x)
}

pub fn derivative_closed_form<T: Real>(k: KernelBase, x: T) -> T {
    let s = x.sin();
    match k {
        KernelBase::Eq1 => eq1_prime_closed(x, s),
        KernelBase::Eq2 => eq2_prime_closed(x, s),
    }
}

pub fn derivative_series<T: Real>(k: KernelBase, x: T) -> T {
    x * even_poly(&k.derivative_series_coefficients(), x)
}

/// Kernel evaluator with the Taylor seam and the forbidden neighbourhood of `π`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kernels<T> {
    /// Below this angle the series branch is used.
    pub eps_theta: T,
    /// Angles at or above `π − eps_pi` are rejected.
    pub eps_pi: T,
}

impl<T: Real> Default for Kernels<T> {
    fn default() -> Self {
        Kernels {
            eps_theta: T::lit(1e-3),
            eps_pi: T::lit(1e-9),
        }
    }
}

impl<T: Real> Kernels<T> {
    pub fn new(eps_theta: T, eps_pi: T) -> Self {
        Kernels { eps_theta, eps_pi }
    }

    fn check_domain(&self, theta: T) -> Result<()> {
        if !(theta >= T::zero() && theta < T::PI() - self.eps_pi) {
            return Err(MvcError::DomainError(theta.to_f64_lossy()));
        }
        Ok(())
    }

    pub fn eval(&self, k: KernelId, theta: T) -> Result<T> {
        self.check_domain(theta)?;
        Ok(if theta < self.eps_theta {
            series(k, theta)
        } else {
            closed_form(k, theta)
        })
    }

    pub fn eval_derivative(&self, k: KernelBase, theta: T) -> Result<T> {
        self.check_domain(theta)?;
        Ok(if theta < self.eps_theta {
            derivative_series(k, theta)
        } else {
            derivative_closed_form(k, theta)
        })
    }

    /// Every kernel value the derivative formulas need at one angle.
    pub fn values(&self, theta: T) -> Result<KernelValues<T>> {
        self.check_domain(theta)?;
        let (s, c) = theta.sin_cos();
        if theta < self.eps_theta {
            return Ok(KernelValues {
                cos: c,
                eq1: series(KernelId::Eq1, theta),
                eq2: series(KernelId::Eq2, theta),
                eq4: series(KernelId::Eq4, theta),
                eq6: series(KernelId::Eq6, theta),
                eq7: series(KernelId::Eq7, theta),
                eq8: series(KernelId::Eq8, theta),
                eq9: series(KernelId::Eq9, theta),
            });
        }
        let d1 = eq1_prime_closed(theta, s);
        let d2 = eq2_prime_closed(theta, s);
        Ok(KernelValues {
            cos: c,
            eq1: closed_form(KernelId::Eq1, theta),
            eq2: theta / s,
            eq4: closed_form(KernelId::Eq4, theta),
            eq6: d1 * c / s,
            eq7: d1 * s,
            eq8: d2 * c / s,
            eq9: d2 * s,
        })
    }
}

/// Kernel values at a single angle, shared by all terms of one edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelValues<T> {
    pub cos: T,
    pub eq1: T,
    pub eq2: T,
    pub eq4: T,
    pub eq6: T,
    pub eq7: T,
    pub eq8: T,
    pub eq9: T,
}
