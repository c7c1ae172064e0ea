use crate::error::{MvcError, Result};
use crate::linalg::{Mat3, Vec3};
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FdScheme {
    /// Second-order central differences.
    Central2,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdSpec<T> {
    /// Absolute step.
    pub h: T,
    pub scheme: FdScheme,
    /// Combine steps `h` and `h/2` as `(4 D(h/2) − D(h)) / 3`.
    pub richardson: bool,
}

impl<T: Real> FdSpec<T> {
    /// Step given as a fraction of a length scale (usually the cage diagonal).
    pub fn relative(h: f64, scale: T) -> Self {
        assert!(h > 0.0 && h < 1e-2, "relative FD step must lie in (0, 1e-2)");
        FdSpec {
            h: T::lit(h) * scale,
            scheme: FdScheme::Central2,
            richardson: false,
        }
    }

    pub fn with_richardson(mut self, on: bool) -> Self {
        self.richardson = on;
        self
    }
}

/// A finite-difference estimate with the step-halving indicator
/// `max |D(h) − D(h/2)|`, which shrinks about 4× per halving for a
/// second-order scheme in the truncation-dominated regime.
#[derive(Clone, Debug, PartialEq)]
pub struct FdEstimate<V> {
    pub value: V,
    pub error_indicator: f64,
}

fn eval_at<T, V, F>(f: &F, x: Vec3<T>, index: usize) -> Result<V>
where
    T: Real,
    F: Fn(&Vec3<T>) -> Result<V>,
{
    f(&x).map_err(|e| MvcError::EvaluatorFailed {
        index,
        source: Box::new(e),
    })
}

/// Central-difference Jacobian of a vector field: element `k` of the result
/// is the gradient of component `k`.
fn central_jacobian<T, F>(f: &F, eta: &Vec3<T>, h: T) -> Result<Vec<Vec3<T>>>
where
    T: Real,
    F: Fn(&Vec3<T>) -> Result<Vec<T>>,
{
    let mut out: Vec<Vec3<T>> = Vec::new();
    for c in 0..3 {
        let e = Vec3::axis(c) * h;
        let plus = eval_at(f, *eta + e, 2 * c)?;
        let minus = eval_at(f, *eta - e, 2 * c + 1)?;
        if out.is_empty() {
            out = vec![Vec3::zero(); plus.len()];
        }
        for (k, g) in out.iter_mut().enumerate() {
            g[c] = (plus[k] - minus[k]) / (h + h);
        }
    }
    Ok(out)
}

fn combine<T: Real>(coarse: Vec<Vec3<T>>, fine: Vec<Vec3<T>>, richardson: bool) -> FdEstimate<Vec<Vec3<T>>> {
    let indicator = coarse
        .iter()
        .zip(&fine)
        .map(|(a, b)| (*a - *b).max_abs().to_f64_lossy())
        .fold(0.0, f64::max);
    let value = if richardson {
        let third = T::lit(1.0 / 3.0);
        fine.iter()
            .zip(&coarse)
            .map(|(f, c)| (*f * T::lit(4.0) - *c) * third)
            .collect()
    } else {
        coarse
    };
    FdEstimate {
        value,
        error_indicator: indicator,
    }
}

/// Gradients of every component of a vector field.
pub fn fd_jacobian<T, F>(f: F, eta: &Vec3<T>, step: &FdSpec<T>) -> Result<FdEstimate<Vec<Vec3<T>>>>
where
    T: Real,
    F: Fn(&Vec3<T>) -> Result<Vec<T>>,
{
    let coarse = central_jacobian(&f, eta, step.h)?;
    let fine = central_jacobian(&f, eta, step.h * T::lit(0.5))?;
    Ok(combine(coarse, fine, step.richardson))
}

/// Gradient of a scalar field.
pub fn fd_gradient<T, F>(f: F, eta: &Vec3<T>, step: &FdSpec<T>) -> Result<FdEstimate<Vec3<T>>>
where
    T: Real,
    F: Fn(&Vec3<T>) -> Result<T>,
{
    let est = fd_jacobian(|x: &Vec3<T>| f(x).map(|v| vec![v]), eta, step)?;
    Ok(FdEstimate {
        value: est.value[0],
        error_indicator: est.error_indicator,
    })
}

/// Hessians from central differences of an analytic gradient field. Row `a`
/// of matrix `k` is the FD gradient of component `a` of gradient `k`;
/// no symmetrization is applied.
pub fn fd_hessian_from_gradient<T, F>(grad: F, eta: &Vec3<T>, step: &FdSpec<T>) -> Result<FdEstimate<Vec<Mat3<T>>>>
where
    T: Real,
    F: Fn(&Vec3<T>) -> Result<Vec<Vec3<T>>>,
{
    let flat = |x: &Vec3<T>| -> Result<Vec<T>> { Ok(grad(x)?.iter().flat_map(|g| g.0).collect()) };
    let est = fd_jacobian(flat, eta, step)?;
    let value = est
        .value
        .chunks(3)
        .map(|rows| Mat3::from_rows([rows[0], rows[1], rows[2]]))
        .collect();
    Ok(FdEstimate {
        value,
        error_indicator: est.error_indicator,
    })
}

fn second_differences<T, F>(f: &F, eta: &Vec3<T>, h: T) -> Result<Mat3<T>>
where
    T: Real,
    F: Fn(&Vec3<T>) -> Result<T>,
{
    let f0 = eval_at(f, *eta, 0)?;
    let mut m = Mat3::zero();
    let mut index = 1;
    for a in 0..3 {
        let ea = Vec3::axis(a) * h;
        let p = eval_at(f, *eta + ea, index)?;
        let q = eval_at(f, *eta - ea, index + 1)?;
        index += 2;
        m[(a, a)] = (p - f0 - f0 + q) / (h * h);
        for b in a + 1..3 {
            let eb = Vec3::axis(b) * h;
            let pp = eval_at(f, *eta + ea + eb, index)?;
            let pm = eval_at(f, *eta + ea - eb, index + 1)?;
            let mp = eval_at(f, *eta - ea + eb, index + 2)?;
            let mm = eval_at(f, *eta - ea - eb, index + 3)?;
            index += 4;
            let v = (pp - pm - mp + mm) / (T::lit(4.0) * h * h);
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
    Ok(m)
}

/// Hessian of a scalar field from second differences of values.
pub fn fd_hessian<T, F>(f: F, eta: &Vec3<T>, step: &FdSpec<T>) -> Result<FdEstimate<Mat3<T>>>
where
    T: Real,
    F: Fn(&Vec3<T>) -> Result<T>,
{
    let coarse = second_differences(&f, eta, step.h)?;
    let fine = second_differences(&f, eta, step.h * T::lit(0.5))?;
    let indicator = (coarse - fine).max_abs().to_f64_lossy();
    let value = if step.richardson {
        (fine * T::lit(4.0) - coarse) * T::lit(1.0 / 3.0)
    } else {
        coarse
    };
    Ok(FdEstimate {
        value,
        error_indicator: indicator,
    })
}
