//! Factorizations `f = c t^n g(t) h(1/t)` with `g(0) = h(infinity) = 1`,
//! winding numbers and p-adic dominant indices.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::contour::{pairwise_sum, sample, unwrap_log, ContourError, Evaluable};
use crate::laurent::{
    contraction_norm, mul_truncated, plus_minus_split, series_exp, series_log, series_mul, series_sub,
    LaurentSeries, SeriesError, DEFAULT_THETA,
};
use crate::scalars::{FieldTag, Scalar, ScalarError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FactorError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Contour(#[from] ContourError),
    #[error("winding residual {residual} is too large (raise K or move rho)")]
    ResidualTooLarge { residual: f64 },
    #[error("at least 64 contour samples are required, got {0}")]
    TooFewSamples(usize),
    #[error("dominant index is ambiguous at rho = {rho}")]
    AmbiguousDominantIndex { rho: f64 },
    #[error("dominant index differs between radii: {first} vs {second}")]
    IndexMismatch { first: i64, second: i64 },
    #[error("dominant index {0} sits on an open window edge")]
    DominantAtWindowEdge(i64),
    #[error("not a principal unit: contraction norm {norm} exceeds theta {theta}")]
    NotPrincipalUnit { norm: f64, theta: f64 },
    #[error("the zero series is not a unit")]
    NotAUnit,
    #[error("coefficient at the index exponent {0} is unknown or zero")]
    MissingIndexCoefficient(i64),
    #[error("{0}")]
    Unsupported(String),
}

/// `c t^n g(t) h(1/t)`; `g` has support `>= 0`, `h` support `<= 0`, both
/// with constant term exactly one.
#[derive(Clone, Debug, PartialEq)]
pub struct BirkhoffFactorization {
    pub c: Scalar,
    pub n: i64,
    pub g: LaurentSeries,
    pub h: LaurentSeries,
    /// Estimated absolute error of `c` (zero on exact paths).
    pub c_err: f64,
}

/// How the input is read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Locality {
    /// Germ semantics for series with an exact edge, annulus otherwise;
    /// p-adic input always uses annulus semantics.
    #[default]
    Auto,
    /// Meromorphic germ at `t = 0` (or at infinity for an exact upper edge).
    Germ,
    /// Unit on an annulus through the working radius.
    Annulus,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FactorOpts {
    pub window: i64,
    pub theta: f64,
    /// Working radius for complex annulus input (default 1).
    pub rho: Option<f64>,
    pub samples: usize,
    pub locality: Locality,
    /// p-adic probe radii (default `1 - 1/p`, `1 - 1/(2p)`).
    pub radii: Option<(f64, f64)>,
    /// Tail size accepted when truncating complex windows.
    pub tail_tol: f64,
}

impl Default for FactorOpts {
    fn default() -> Self {
        FactorOpts {
            window: 64,
            theta: DEFAULT_THETA,
            rho: None,
            samples: 2048,
            locality: Locality::Auto,
            radii: None,
            tail_tol: 1e-13,
        }
    }
}

impl FactorOpts {
    pub fn with_window(window: i64) -> Self {
        FactorOpts {
            window,
            ..Default::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Winding {
    pub value: i64,
    /// Distance of the quadrature value from the nearest integer.
    pub residual: f64,
}

const MAX_RESIDUAL: f64 = 0.1;

/// `(1/2 pi i) \oint f'/f dt` by the trapezoidal rule on `K` samples.
pub fn winding_number_contour(f: &dyn Evaluable, rho: f64, samples: usize) -> Result<Winding, FactorError> {
    if samples < 64 {
        return Err(FactorError::TooFewSamples(samples));
    }
    let s = sample(f, rho, samples)?;
    let terms: Vec<Complex64> = (0..samples).map(|j| s.df[j] / s.f[j] * s.t[j]).collect();
    let value = pairwise_sum(&terms) / samples as f64;
    let rounded = value.re.round();
    let residual = Complex64::new(value.re - rounded, value.im).norm();
    if residual >= MAX_RESIDUAL {
        return Err(FactorError::ResidualTooLarge { residual });
    }
    Ok(Winding {
        value: rounded as i64,
        residual,
    })
}

fn dominant_at(f: &LaurentSeries, rho: f64) -> Result<i64, FactorError> {
    let mut best: Option<(i64, f64)> = None;
    let mut tie = false;
    for (k, a) in f.coeffs().iter().enumerate() {
        let e = f.lo() + k as i64;
        let v = a.abs_at() * rho.powi(e as i32);
        match best {
            None => best = Some((e, v)),
            Some((_, b)) if (v - b).abs() <= 1e-12 * v.max(b) && v > 0.0 => tie = true,
            Some((_, b)) if v > b => {
                best = Some((e, v));
                tie = false;
            }
            _ => {}
        }
    }
    let (e, v) = best.ok_or(FactorError::NotAUnit)?;
    if v == 0.0 {
        return Err(FactorError::NotAUnit);
    }
    if tie {
        return Err(FactorError::AmbiguousDominantIndex { rho });
    }
    if (e == f.lo() && !f.lo_exact()) || (e == f.hi() && !f.hi_exact()) {
        return Err(FactorError::DominantAtWindowEdge(e));
    }
    Ok(e)
}

/// Index maximizing `|a_i| rho^i`, required unique and equal at both radii.
pub fn dominant_index(f: &LaurentSeries, rho1: f64, rho2: f64) -> Result<i64, FactorError> {
    if !matches!(f.field(), FieldTag::PAdic { .. }) {
        return Err(FactorError::Unsupported("dominant index needs a p-adic field".into()));
    }
    if f.is_zero() {
        return Err(FactorError::NotAUnit);
    }
    let first = dominant_at(f, rho1)?;
    let second = dominant_at(f, rho2)?;
    if first != second {
        return Err(FactorError::IndexMismatch { first, second });
    }
    Ok(first)
}

pub fn default_padic_radii(prime: u64) -> (f64, f64) {
    let p = prime as f64;
    (1.0 - 1.0 / p, 1.0 - 1.0 / (2.0 * p))
}

/// Normalized unit `f / (c t^n)`.
fn normalize(f: &LaurentSeries, n: i64) -> Result<(Scalar, LaurentSeries), FactorError> {
    let c = f
        .coeff(n)
        .filter(|c| !c.is_zero())
        .ok_or(FactorError::MissingIndexCoefficient(n))?;
    let u = f.scale(&c.inv()?)?.shift(-n)?;
    Ok((c, u))
}

fn germ(f: &LaurentSeries) -> Result<BirkhoffFactorization, FactorError> {
    let field = f.field();
    if f.lo_exact() {
        let n = f.lo();
        let (c, g) = normalize(f, n)?;
        return Ok(BirkhoffFactorization {
            c,
            n,
            g,
            h: LaurentSeries::one(field),
            c_err: 0.0,
        });
    }
    if f.hi_exact() {
        let n = f.hi();
        let (c, h) = normalize(f, n)?;
        return Ok(BirkhoffFactorization {
            c,
            n,
            g: LaurentSeries::one(field),
            h,
            c_err: 0.0,
        });
    }
    Err(FactorError::Unsupported(
        "germ semantics needs an exact window edge".into(),
    ))
}

/// Factors a unit-like series.
pub fn birkhoff_factor(f: &LaurentSeries, opts: &FactorOpts) -> Result<BirkhoffFactorization, FactorError> {
    if f.is_zero() {
        return Err(FactorError::NotAUnit);
    }
    let field = f.field();
    let has_exact_edge = f.lo_exact() || f.hi_exact();
    match (field, opts.locality) {
        (FieldTag::PAdic { .. }, Locality::Germ) => germ(f),
        (FieldTag::PAdic { prime, .. }, _) => {
            let (r1, r2) = opts.radii.unwrap_or_else(|| default_padic_radii(prime));
            let n = dominant_index(f, r1, r2)?;
            annulus_from_index(f, n, opts, 1.0)
        }
        (_, Locality::Germ) => germ(f),
        (_, Locality::Auto) if has_exact_edge => germ(f),
        (FieldTag::ExactRational, _) => {
            if has_exact_edge && (f.lo_exact() && f.lo() >= 0 || f.hi_exact() && f.hi() <= 0) {
                return germ(f);
            }
            Err(FactorError::Unsupported(
                "two-sided factorization over exact rationals needs transcendental constants".into(),
            ))
        }
        (FieldTag::ComplexFloat, _) => {
            let rho = opts.rho.unwrap_or(1.0);
            let w = winding_number_contour(f, rho, opts.samples)?;
            annulus_from_index(f, w.value, opts, rho)
        }
    }
}

/// Algorithm B once `n` is known; one-sided normalized units skip the log.
fn annulus_from_index(
    f: &LaurentSeries,
    n: i64,
    opts: &FactorOpts,
    rho: f64,
) -> Result<BirkhoffFactorization, FactorError> {
    let field = f.field();
    let (c0, u) = normalize(f, n)?;
    let one = LaurentSeries::one(field);
    let s = series_sub(&u, &one)?;
    if s.is_zero() || (s.lo_exact() && s.lo() > 0) {
        return Ok(BirkhoffFactorization {
            c: c0,
            n,
            g: u,
            h: one,
            c_err: 0.0,
        });
    }
    if s.hi_exact() && s.hi() < 0 {
        return Ok(BirkhoffFactorization {
            c: c0,
            n,
            g: one,
            h: u,
            c_err: 0.0,
        });
    }
    let norm = contraction_norm(&s, rho);
    let (l, l_err) = match field {
        FieldTag::PAdic { .. } => {
            if norm >= 1.0 {
                return Err(FactorError::NotPrincipalUnit { norm, theta: 1.0 });
            }
            let u_poly = if u.is_polynomial() {
                u.clone()
            } else {
                return Err(FactorError::Unsupported(
                    "two-sided p-adic factorization needs a Laurent polynomial".into(),
                ));
            };
            (series_log(&u_poly, opts.window)?, 0.0)
        }
        _ => {
            let truncated = u.truncate_tails(opts.tail_tol);
            match truncated {
                Ok(poly) if rho == 1.0 && norm <= opts.theta => (series_log(&poly, opts.window)?, 0.0),
                _ => contour_log(f, n, rho, opts)?,
            }
        }
    };
    let split = plus_minus_split(&l)?;
    let l0 = split.plus.coeff(0).ok_or(SeriesError::ExponentOutsideWindow(0))?;
    let l_plus = series_sub(&split.plus, &LaurentSeries::monomial(l0.clone(), 0))?;
    let g = series_exp(&l_plus, opts.window)?;
    let h = series_exp(&split.minus, opts.window)?;
    let c = c0.try_mul(&l0.exp()?)?;
    let c_err = c.abs_at() * l_err;
    Ok(BirkhoffFactorization { c, n, g, h, c_err })
}

/// Fourier coefficients of the unwrapped `log f - n log t` on `|t| = rho`;
/// the constant term absorbs `log c`. Returns the log series with
/// inexact edges and an error proxy from the outermost coefficients.
fn contour_log(
    f: &LaurentSeries,
    n: i64,
    rho: f64,
    opts: &FactorOpts,
) -> Result<(LaurentSeries, f64), FactorError> {
    let w = opts.window.max(1);
    let samples = opts.samples.max(8 * w as usize).next_power_of_two();
    let s = sample(f, rho, samples)?;
    let logs = unwrap_log(&s.f, 0.5 * PI)?;
    let theta = |j: usize| 2.0 * PI * j as f64 / samples as f64;
    // periodic part: log f(t) - n log t, with log t = ln rho + i theta
    let periodic: Vec<Complex64> = (0..samples)
        .map(|j| logs[j] - Complex64::new(n as f64 * rho.ln(), n as f64 * theta(j)))
        .collect();
    let mut coeffs = Vec::with_capacity(2 * w as usize + 1);
    for k in -w..=w {
        let terms: Vec<Complex64> = (0..samples)
            .map(|j| periodic[j] * Complex64::from_polar(1.0, -(k as f64) * theta(j)))
            .collect();
        let a = pairwise_sum(&terms) / samples as f64 * rho.powi(-(k as i32));
        coeffs.push(a);
    }
    // the constant term carries log c0 too; remove it so exp(l0) stays a correction
    let c0 = f.coeff(n).and_then(|c| c.to_complex()).ok_or(FactorError::MissingIndexCoefficient(n))?;
    let mut ell0 = coeffs[w as usize] - c0.ln();
    // choose the branch nearest zero
    ell0.im -= 2.0 * PI * (ell0.im / (2.0 * PI)).round();
    coeffs[w as usize] = ell0;
    let edge = coeffs[0].norm() * rho.powi(-w as i32) + coeffs[2 * w as usize].norm() * rho.powi(w as i32);
    let series = LaurentSeries::from_complex(-w, &coeffs, false, false);
    Ok((series, edge))
}

/// `c t^n g h`, restricted to `|e| <= window`; tails below `tol` are
/// treated as zero when `g` and `h` both carry open tails.
pub fn recompose(fact: &BirkhoffFactorization, window: i64, tol: f64) -> Result<LaurentSeries, FactorError> {
    let gh = match series_mul(&fact.g, &fact.h) {
        Ok(p) => p,
        Err(SeriesError::EmptyReliableWindow) => mul_truncated(&fact.g, &fact.h, tol)?,
        Err(e) => return Err(e.into()),
    };
    let full = gh.scale(&fact.c)?.shift(fact.n)?;
    if full.is_polynomial() && full.lo() >= -window && full.hi() <= window {
        return Ok(full);
    }
    Ok(full.restrict(-window, window)?)
}
