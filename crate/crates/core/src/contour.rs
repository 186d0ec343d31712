//! Sampling of complex functions on circles `|t| = rho`.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::laurent::LaurentSeries;
use crate::scalars::FieldTag;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContourError {
    #[error("function cannot be evaluated at complex points")]
    NotEvaluable,
    #[error("function (nearly) vanishes on |t| = {rho}: min sampled modulus {min_abs:e}")]
    ZeroOnContour { rho: f64, min_abs: f64 },
    #[error("argument jump at sample {index} of {samples}")]
    BranchJump { index: usize, samples: usize },
}

/// Anything that yields a value and a derivative at complex points.
pub trait Evaluable {
    /// `(f(z), f'(z))`, or `None` when `f` has no complex values.
    fn eval_d(&self, z: Complex64) -> Option<(Complex64, Complex64)>;
}

impl Evaluable for LaurentSeries {
    fn eval_d(&self, z: Complex64) -> Option<(Complex64, Complex64)> {
        if matches!(self.field(), FieldTag::PAdic { .. }) {
            return None;
        }
        self.eval_with_derivative(z)
    }
}

/// Wraps a closure returning `(f, f')`.
pub struct FnEval<F>(pub F);

impl<F: Fn(Complex64) -> (Complex64, Complex64)> Evaluable for FnEval<F> {
    fn eval_d(&self, z: Complex64) -> Option<(Complex64, Complex64)> {
        Some((self.0)(z))
    }
}

impl<T: Evaluable + ?Sized> Evaluable for &T {
    fn eval_d(&self, z: Complex64) -> Option<(Complex64, Complex64)> {
        (**self).eval_d(z)
    }
}

pub fn circle_point(rho: f64, j: usize, samples: usize) -> Complex64 {
    Complex64::from_polar(rho, 2.0 * PI * j as f64 / samples as f64)
}

/// Pairwise summation; deterministic order independent of chunking.
pub fn pairwise_sum(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Values of `f` and `f'` at `K` equally spaced points of `|t| = rho`,
/// starting at `t = rho`.
#[derive(Clone, Debug)]
pub struct ContourSamples {
    pub rho: f64,
    pub t: Vec<Complex64>,
    pub f: Vec<Complex64>,
    pub df: Vec<Complex64>,
}

/// A zero at distance `d` from the contour makes `|f'/f| rho` about
/// `rho / d`; beyond this bound the sample counts as a zero. A bound on the
/// modulus itself would reject exponential factors with a wide range.
const LOG_DERIVATIVE_CEILING: f64 = 1e12;

pub fn sample(f: &dyn Evaluable, rho: f64, samples: usize) -> Result<ContourSamples, ContourError> {
    let mut t = Vec::with_capacity(samples);
    let mut fv = Vec::with_capacity(samples);
    let mut dv = Vec::with_capacity(samples);
    for j in 0..samples {
        let z = circle_point(rho, j, samples);
        let (v, d) = f.eval_d(z).ok_or(ContourError::NotEvaluable)?;
        t.push(z);
        fv.push(v);
        dv.push(d);
    }
    let min = fv.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
    let max = fv.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let steep = fv
        .iter()
        .zip(&dv)
        .any(|(v, d)| !(d.norm() * rho <= LOG_DERIVATIVE_CEILING * v.norm()));
    if !(min > 0.0) || !max.is_finite() || steep {
        return Err(ContourError::ZeroOnContour { rho, min_abs: min });
    }
    Ok(ContourSamples {
        rho,
        t,
        f: fv,
        df: dv,
    })
}

/// Continuous logarithm along the samples, starting from the principal
/// branch. Successive argument steps must stay below `max_step`.
pub fn unwrap_log(values: &[Complex64], max_step: f64) -> Result<Vec<Complex64>, ContourError> {
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    let mut current = values[0].ln();
    out.push(current);
    for j in 1..=n {
        let next = values[j % n];
        let step = (next / values[j - 1]).ln();
        if step.im.abs() > max_step {
            return Err(ContourError::BranchJump {
                index: j - 1,
                samples: n,
            });
        }
        if j < n {
            current = Complex64::new(next.norm().ln(), current.im + step.im);
            out.push(current);
        }
    }
    Ok(out)
}
