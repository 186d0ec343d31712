//! Truncated two-sided Laurent series with per-edge exactness flags.
//!
//! A series stores coefficients for exponents `lo..=hi`. `lo_exact` means
//! every coefficient below `lo` is exactly zero, `hi_exact` the same above
//! `hi`. An edge whose flag is false hides an unknown tail, and every
//! operation only emits coefficients that the hidden tails cannot affect.

use std::fmt;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::scalars::{FieldTag, Scalar, ScalarError};

/// Largest exponent magnitude a window may reach.
pub const MAX_EXPONENT: i64 = 1_000_000;

/// Default contraction bound for two-sided log, exp and inversion.
pub const DEFAULT_THETA: f64 = 0.5;

/// Default stopping tolerance for two-sided complex log/exp.
pub const COMPLEX_SERIES_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("field mismatch: {0} vs {1}")]
    FieldMismatch(FieldTag, FieldTag),
    #[error("no coefficient survives truncation")]
    EmptyReliableWindow,
    #[error("series is not invertible on the requested window")]
    NotInvertibleOnWindow,
    #[error("contraction bound violated: norm {norm} exceeds theta {theta}")]
    ContractionBoundViolated { norm: f64, theta: f64 },
    #[error("convergence guard failed: {0}")]
    ConvergenceGuardFailed(String),
    #[error("series is not normalized: {0}")]
    NotNormalized(String),
    #[error("exponent {0} lies outside the reliable window")]
    ExponentOutsideWindow(i64),
    #[error("support violation: {0}")]
    SupportViolation(String),
    #[error("exponent {0} exceeds the window cap")]
    WindowCap(i64),
    #[error("tail at exponent {exponent} is not negligible (|a| = {abs})")]
    TailNotNegligible { exponent: i64, abs: f64 },
    #[error("{0} is not available over exact rationals")]
    ExactField(&'static str),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LaurentSeries {
    field: FieldTag,
    lo: i64,
    coeffs: Vec<Scalar>,
    lo_exact: bool,
    hi_exact: bool,
}

/// Plus part (exponents >= 0) and minus part (exponents < 0).
#[derive(Clone, Debug, PartialEq)]
pub struct SplitPair {
    pub plus: LaurentSeries,
    pub minus: LaurentSeries,
}

/// Windowed rho-norm; `attained_inside` is false when the maximum sits on
/// an edge whose tail is unknown.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RhoNorm {
    pub value: f64,
    pub attained_inside: bool,
}

/// Expansion direction for one-sided inversion, log and exp.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Power series in `t`.
    Positive,
    /// Power series in `t^-1`.
    Negative,
}

/// Options for log and exp.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogExpOpts {
    /// Output covers exponents up to this magnitude.
    pub window: i64,
    pub theta: f64,
    /// Stopping tolerance for complex two-sided sums.
    pub tol: f64,
}

impl LogExpOpts {
    pub fn with_window(window: i64) -> Self {
        LogExpOpts {
            window,
            theta: DEFAULT_THETA,
            tol: COMPLEX_SERIES_TOL,
        }
    }
}

fn check_exponent(e: i64) -> Result<(), SeriesError> {
    if e.abs() > MAX_EXPONENT {
        Err(SeriesError::WindowCap(e))
    } else {
        Ok(())
    }
}

impl LaurentSeries {
    /// Builds a series, stripping zeros at exact edges.
    pub fn new(
        field: FieldTag,
        lo: i64,
        coeffs: Vec<Scalar>,
        lo_exact: bool,
        hi_exact: bool,
    ) -> Result<Self, SeriesError> {
        for c in &coeffs {
            if c.field() != field {
                return Err(SeriesError::FieldMismatch(field, c.field()));
            }
        }
        if coeffs.is_empty() {
            if lo_exact && hi_exact {
                return Ok(Self::zero(field));
            }
            return Err(SeriesError::EmptyReliableWindow);
        }
        let mut start = 0;
        let mut end = coeffs.len();
        if lo_exact {
            while start < end && coeffs[start].is_zero() {
                start += 1;
            }
        }
        if hi_exact {
            while end > start && coeffs[end - 1].is_zero() {
                end -= 1;
            }
        }
        if start == end {
            if lo_exact && hi_exact {
                return Ok(Self::zero(field));
            }
            // keep one known coefficient next to the unknown tail
            if lo_exact {
                start = coeffs.len() - 1;
                end = coeffs.len();
            } else {
                start = 0;
                end = 1;
            }
        }
        let lo = lo + start as i64;
        let hi = lo + (end - start) as i64 - 1;
        check_exponent(lo)?;
        check_exponent(hi)?;
        let mut coeffs = coeffs;
        coeffs.truncate(end);
        coeffs.drain(..start);
        Ok(LaurentSeries {
            field,
            lo,
            coeffs,
            lo_exact,
            hi_exact,
        })
    }

    pub fn zero(field: FieldTag) -> Self {
        LaurentSeries {
            field,
            lo: 0,
            coeffs: Vec::new(),
            lo_exact: true,
            hi_exact: true,
        }
    }

    pub fn one(field: FieldTag) -> Self {
        Self::monomial(Scalar::one(field), 0)
    }

    pub fn monomial(c: Scalar, n: i64) -> Self {
        let field = c.field();
        Self::new(field, n, vec![c], true, true).expect("monomial within cap")
    }

    /// Laurent polynomial with both edges exact.
    pub fn polynomial(field: FieldTag, lo: i64, coeffs: Vec<Scalar>) -> Result<Self, SeriesError> {
        Self::new(field, lo, coeffs, true, true)
    }

    /// Polynomial from small rational coefficients `(num, den)`.
    pub fn from_ratios(field: FieldTag, lo: i64, coeffs: &[(i64, i64)]) -> Self {
        let cs = coeffs
            .iter()
            .map(|&(n, d)| Scalar::from_rational(&crate::scalars::rational(n, d), field))
            .collect();
        Self::polynomial(field, lo, cs).expect("small polynomial")
    }

    /// Polynomial from integer coefficients.
    pub fn from_ints(field: FieldTag, lo: i64, coeffs: &[i64]) -> Self {
        let cs = coeffs.iter().map(|&n| Scalar::from_i64(n, field)).collect();
        Self::polynomial(field, lo, cs).expect("small polynomial")
    }

    /// Polynomial from complex coefficients.
    pub fn from_complex(lo: i64, coeffs: &[Complex64], lo_exact: bool, hi_exact: bool) -> Self {
        let cs = coeffs.iter().map(|z| Scalar::Complex(*z)).collect();
        Self::new(FieldTag::ComplexFloat, lo, cs, lo_exact, hi_exact).expect("within cap")
    }

    pub fn field(&self) -> FieldTag {
        self.field
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    /// Top exponent of the window; `lo - 1` for the zero series.
    pub fn hi(&self) -> i64 {
        self.lo + self.coeffs.len() as i64 - 1
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn lo_exact(&self) -> bool {
        self.lo_exact
    }

    pub fn hi_exact(&self) -> bool {
        self.hi_exact
    }

    /// Canonical zero.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_polynomial(&self) -> bool {
        self.lo_exact && self.hi_exact
    }

    /// Coefficient at `e` when it is known.
    pub fn coeff(&self, e: i64) -> Option<Scalar> {
        if e < self.lo || e > self.hi() {
            let known = self.is_zero() || (e < self.lo && self.lo_exact) || (e > self.hi() && self.hi_exact);
            return known.then(|| Scalar::zero(self.field));
        }
        Some(self.coeffs[(e - self.lo) as usize].clone())
    }

    fn term(&self, e: i64) -> Option<&Scalar> {
        if e < self.lo || e > self.hi() {
            None
        } else {
            Some(&self.coeffs[(e - self.lo) as usize])
        }
    }

    pub fn is_known(&self, e: i64) -> bool {
        self.is_zero()
            || ((e >= self.lo || self.lo_exact) && (e <= self.hi() || self.hi_exact))
    }

    /// Known coefficients on `lo..=hi` as complex numbers, if the field embeds.
    pub fn complex_coeffs(&self) -> Option<Vec<Complex64>> {
        self.coeffs.iter().map(Scalar::to_complex).collect()
    }

    /// Multiplication by `t^n`.
    pub fn shift(&self, n: i64) -> Result<Self, SeriesError> {
        if self.is_zero() {
            return Ok(self.clone());
        }
        check_exponent(self.lo + n)?;
        check_exponent(self.hi() + n)?;
        Ok(LaurentSeries {
            lo: self.lo + n,
            ..self.clone()
        })
    }

    pub fn scale(&self, c: &Scalar) -> Result<Self, SeriesError> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|a| a.try_mul(c))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(self.field, self.lo, coeffs, self.lo_exact, self.hi_exact)
    }

    pub fn neg(&self) -> Self {
        LaurentSeries {
            coeffs: self.coeffs.iter().map(|a| -a).collect(),
            ..self.clone()
        }
    }

    /// Substitutes `t -> t^-1`.
    pub fn reflect(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.reverse();
        LaurentSeries {
            field: self.field,
            lo: -self.hi(),
            coeffs,
            lo_exact: self.hi_exact,
            hi_exact: self.lo_exact,
        }
    }

    /// Restricts to `lo..=hi`; edges that cut nonzero data become inexact.
    pub fn restrict(&self, lo: i64, hi: i64) -> Result<Self, SeriesError> {
        if self.is_zero() {
            return Ok(self.clone());
        }
        let new_lo = lo.max(self.lo);
        let new_hi = hi.min(self.hi());
        if new_lo > new_hi {
            return Err(SeriesError::EmptyReliableWindow);
        }
        let lo_exact = self.lo_exact && new_lo == self.lo;
        let hi_exact = self.hi_exact && new_hi == self.hi();
        let coeffs = self.coeffs[(new_lo - self.lo) as usize..=(new_hi - self.lo) as usize].to_vec();
        Self::new(self.field, new_lo, coeffs, lo_exact, hi_exact)
    }

    /// Marks both edges inexact without changing coefficients.
    pub fn forget_exactness(&self) -> Self {
        if self.is_zero() {
            return LaurentSeries {
                coeffs: vec![Scalar::zero(self.field)],
                lo_exact: false,
                hi_exact: false,
                ..self.clone()
            };
        }
        LaurentSeries {
            lo_exact: false,
            hi_exact: false,
            ..self.clone()
        }
    }

    /// Index of the lowest nonzero coefficient when the lower edge is exact.
    pub fn valuation(&self) -> Option<i64> {
        (self.lo_exact && !self.is_zero()).then_some(self.lo)
    }

    /// Formal derivative in `t`.
    pub fn derivative(&self) -> Result<Self, SeriesError> {
        if self.is_zero() {
            return Ok(self.clone());
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, a)| a.scale_ratio(self.lo + k as i64, 1))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(self.field, self.lo - 1, coeffs, self.lo_exact, self.hi_exact)
    }

    /// Evaluates the windowed coefficients at a complex point.
    pub fn eval_complex(&self, z: Complex64) -> Option<Complex64> {
        let cs = self.complex_coeffs()?;
        let mut acc = Complex64::new(0.0, 0.0);
        for c in cs.iter().rev() {
            acc = acc * z + c;
        }
        Some(acc * z.powi(self.lo as i32))
    }

    /// Windowed value and derivative at a complex point.
    pub fn eval_with_derivative(&self, z: Complex64) -> Option<(Complex64, Complex64)> {
        let cs = self.complex_coeffs()?;
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for c in cs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        // f = z^lo p(z), f' = lo z^(lo-1) p + z^lo p'
        let zl = z.powi(self.lo as i32);
        let f = zl * p;
        let df = zl * (dp + p * (self.lo as f64) / z);
        Some((f, df))
    }

    /// Coefficientwise comparison on the common known window.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.field != other.field {
            return false;
        }
        let lo = if self.is_zero() { other.lo } else if other.is_zero() { self.lo } else { self.lo.min(other.lo) };
        let hi = self.hi().max(other.hi());
        for e in lo..=hi {
            if let (Some(a), Some(b)) = (self.coeff(e), other.coeff(e)) {
                if !a.approx_eq(&b, tol) {
                    return false;
                }
            }
        }
        true
    }

    /// Largest coefficient modulus (sup-norm at rho = 1).
    pub fn sup_abs(&self) -> f64 {
        self.coeffs.iter().map(Scalar::abs_at).fold(0.0, f64::max)
    }

    /// Declares negligible unknown tails to be zero.
    ///
    /// Every inexact edge must carry coefficients of modulus at most `tol`;
    /// those edge runs are dropped and the edge becomes exact.
    pub fn truncate_tails(&self, tol: f64) -> Result<Self, SeriesError> {
        if self.field == FieldTag::ExactRational {
            return Err(SeriesError::ExactField("tail truncation"));
        }
        if self.is_polynomial() {
            return Ok(self.clone());
        }
        let n = self.coeffs.len();
        if !self.lo_exact && self.coeffs[0].abs_at() > tol {
            return Err(SeriesError::TailNotNegligible {
                exponent: self.lo,
                abs: self.coeffs[0].abs_at(),
            });
        }
        if !self.hi_exact && self.coeffs[n - 1].abs_at() > tol {
            return Err(SeriesError::TailNotNegligible {
                exponent: self.hi(),
                abs: self.coeffs[n - 1].abs_at(),
            });
        }
        let mut start = 0;
        let mut end = n;
        if !self.lo_exact {
            while start < end && self.coeffs[start].abs_at() <= tol {
                start += 1;
            }
        }
        if !self.hi_exact {
            while end > start && self.coeffs[end - 1].abs_at() <= tol {
                end -= 1;
            }
        }
        Self::new(
            self.field,
            self.lo + start as i64,
            self.coeffs[start..end].to_vec(),
            true,
            true,
        )
    }
}

fn same_field(a: &LaurentSeries, b: &LaurentSeries) -> Result<FieldTag, SeriesError> {
    if a.field != b.field {
        Err(SeriesError::FieldMismatch(a.field, b.field))
    } else {
        Ok(a.field)
    }
}

pub fn series_add(a: &LaurentSeries, b: &LaurentSeries) -> Result<LaurentSeries, SeriesError> {
    let field = same_field(a, b)?;
    if a.is_zero() {
        return Ok(b.clone());
    }
    if b.is_zero() {
        return Ok(a.clone());
    }
    let lo = match (a.lo_exact, b.lo_exact) {
        (true, true) => a.lo.min(b.lo),
        (true, false) => b.lo,
        (false, true) => a.lo,
        (false, false) => a.lo.max(b.lo),
    };
    let hi = match (a.hi_exact, b.hi_exact) {
        (true, true) => a.hi().max(b.hi()),
        (true, false) => b.hi(),
        (false, true) => a.hi(),
        (false, false) => a.hi().min(b.hi()),
    };
    if lo > hi {
        return Err(SeriesError::EmptyReliableWindow);
    }
    let zero = Scalar::zero(field);
    let coeffs = (lo..=hi)
        .map(|e| {
            let x = a.term(e).unwrap_or(&zero);
            let y = b.term(e).unwrap_or(&zero);
            x.try_add(y)
        })
        .collect::<Result<Vec<_>, _>>()?;
    LaurentSeries::new(field, lo, coeffs, a.lo_exact && b.lo_exact, a.hi_exact && b.hi_exact)
}

pub fn series_sub(a: &LaurentSeries, b: &LaurentSeries) -> Result<LaurentSeries, SeriesError> {
    series_add(a, &b.neg())
}

/// Exponent range of a product that no hidden tail can reach.
fn product_window(a: &LaurentSeries, b: &LaurentSeries) -> Result<(i64, i64), SeriesError> {
    let mut lo = a.lo + b.lo;
    let mut hi = a.hi() + b.hi();
    if !a.hi_exact {
        if !b.lo_exact {
            return Err(SeriesError::EmptyReliableWindow);
        }
        hi = hi.min(a.hi() + b.lo);
    }
    if !b.hi_exact {
        if !a.lo_exact {
            return Err(SeriesError::EmptyReliableWindow);
        }
        hi = hi.min(b.hi() + a.lo);
    }
    if !a.lo_exact {
        if !b.hi_exact {
            return Err(SeriesError::EmptyReliableWindow);
        }
        lo = lo.max(a.lo + b.hi());
    }
    if !b.lo_exact {
        if !a.hi_exact {
            return Err(SeriesError::EmptyReliableWindow);
        }
        lo = lo.max(b.lo + a.hi());
    }
    if lo > hi {
        return Err(SeriesError::EmptyReliableWindow);
    }
    Ok((lo, hi))
}

/// Cauchy product of the stored windows, restricted to `lo..=hi`.
fn convolve(a: &LaurentSeries, b: &LaurentSeries, lo: i64, hi: i64) -> Result<Vec<Scalar>, SeriesError> {
    if let (Some(ca), Some(cb)) = (
        (a.field == FieldTag::ComplexFloat).then(|| a.complex_coeffs()).flatten(),
        (b.field == FieldTag::ComplexFloat).then(|| b.complex_coeffs()).flatten(),
    ) {
        let out = (lo..=hi)
            .map(|e| {
                let i0 = a.lo.max(e - b.hi());
                let i1 = a.hi().min(e - b.lo);
                let mut acc = Complex64::new(0.0, 0.0);
                for i in i0..=i1 {
                    acc += ca[(i - a.lo) as usize] * cb[(e - i - b.lo) as usize];
                }
                Scalar::Complex(acc)
            })
            .collect();
        return Ok(out);
    }
    let mut out = Vec::with_capacity((hi - lo + 1).max(0) as usize);
    for e in lo..=hi {
        let i0 = a.lo.max(e - b.hi());
        let i1 = a.hi().min(e - b.lo);
        let mut acc = Scalar::zero(a.field);
        for i in i0..=i1 {
            let x = &a.coeffs[(i - a.lo) as usize];
            let y = &b.coeffs[(e - i - b.lo) as usize];
            acc = acc.try_add(&x.try_mul(y)?)?;
        }
        out.push(acc);
    }
    Ok(out)
}

pub fn series_mul(a: &LaurentSeries, b: &LaurentSeries) -> Result<LaurentSeries, SeriesError> {
    let field = same_field(a, b)?;
    if a.is_zero() || b.is_zero() {
        return Ok(LaurentSeries::zero(field));
    }
    let (lo, hi) = product_window(a, b)?;
    check_exponent(lo)?;
    check_exponent(hi)?;
    let coeffs = convolve(a, b, lo, hi)?;
    LaurentSeries::new(field, lo, coeffs, a.lo_exact && b.lo_exact, a.hi_exact && b.hi_exact)
}

/// Product that treats hidden tails as zero once they are negligible.
///
/// Falls back to [`series_mul`] when the strict window is nonempty. Every
/// inexact edge coefficient must have modulus at most `tol`.
pub fn mul_truncated(a: &LaurentSeries, b: &LaurentSeries, tol: f64) -> Result<LaurentSeries, SeriesError> {
    match series_mul(a, b) {
        Err(SeriesError::EmptyReliableWindow) => {}
        other => return other,
    }
    let field = same_field(a, b)?;
    if field == FieldTag::ExactRational {
        return Err(SeriesError::ExactField("truncated multiplication"));
    }
    for s in [a, b] {
        let n = s.coeffs.len();
        if !s.lo_exact && s.coeffs[0].abs_at() > tol {
            return Err(SeriesError::TailNotNegligible {
                exponent: s.lo,
                abs: s.coeffs[0].abs_at(),
            });
        }
        if !s.hi_exact && s.coeffs[n - 1].abs_at() > tol {
            return Err(SeriesError::TailNotNegligible {
                exponent: s.hi(),
                abs: s.coeffs[n - 1].abs_at(),
            });
        }
    }
    let lo = a.lo + b.lo;
    let hi = a.hi() + b.hi();
    check_exponent(lo)?;
    check_exponent(hi)?;
    let coeffs = convolve(a, b, lo, hi)?;
    LaurentSeries::new(field, lo, coeffs, a.lo_exact && b.lo_exact, a.hi_exact && b.hi_exact)
}

/// Product of two Laurent polynomials, clipped to `|e| <= window`.
/// Returns whether a nonzero coefficient was dropped.
fn clipped_mul(a: &LaurentSeries, b: &LaurentSeries, window: i64) -> Result<(LaurentSeries, bool), SeriesError> {
    if a.is_zero() || b.is_zero() {
        return Ok((LaurentSeries::zero(a.field), false));
    }
    let full_lo = a.lo + b.lo;
    let full_hi = a.hi() + b.hi();
    let lo = full_lo.max(-window);
    let hi = full_hi.min(window);
    if lo > hi {
        return Ok((LaurentSeries::zero(a.field), true));
    }
    let mut dropped = false;
    if full_lo < lo || full_hi > hi {
        let outside: Vec<i64> = (full_lo..lo).chain(hi + 1..=full_hi).collect();
        let probe = convolve_points(a, b, &outside)?;
        dropped = probe.iter().any(|c| !c.is_zero());
    }
    let coeffs = convolve(a, b, lo, hi)?;
    Ok((LaurentSeries::new(a.field, lo, coeffs, true, true)?, dropped))
}

fn convolve_points(a: &LaurentSeries, b: &LaurentSeries, points: &[i64]) -> Result<Vec<Scalar>, SeriesError> {
    points
        .iter()
        .map(|&e| convolve(a, b, e, e).map(|mut v| v.pop().expect("one point")))
        .collect()
}

fn choose_inverse_direction(u: &LaurentSeries) -> Option<Direction> {
    match (u.lo_exact, u.hi_exact) {
        (true, false) => Some(Direction::Positive),
        (false, true) => Some(Direction::Negative),
        (true, true) => Some(if u.hi() <= 0 && u.lo < 0 {
            Direction::Negative
        } else {
            Direction::Positive
        }),
        (false, false) => None,
    }
}

/// Formal inverse: a power series in `t` when the lower edge is exact, in
/// `t^-1` when only the upper edge is. Laurent polynomials supported in
/// exponents `<= 0` (and not a monomial) expand in `t^-1`.
///
/// The output carries `window + 1` coefficients beyond its leading term.
pub fn series_inverse(u: &LaurentSeries, window: i64) -> Result<LaurentSeries, SeriesError> {
    let dir = choose_inverse_direction(u).ok_or(SeriesError::NotInvertibleOnWindow)?;
    series_inverse_directed(u, window, dir)
}

pub fn series_inverse_directed(
    u: &LaurentSeries,
    window: i64,
    dir: Direction,
) -> Result<LaurentSeries, SeriesError> {
    match dir {
        Direction::Positive => inverse_positive(u, window),
        Direction::Negative => Ok(inverse_positive(&u.reflect(), window)?.reflect()),
    }
}

fn inverse_positive(u: &LaurentSeries, window: i64) -> Result<LaurentSeries, SeriesError> {
    if u.is_zero() || !u.lo_exact {
        return Err(SeriesError::NotInvertibleOnWindow);
    }
    let field = u.field;
    let n = u.lo;
    let c = u.coeffs[0].clone();
    let c_inv = c.inv().map_err(|_| SeriesError::NotInvertibleOnWindow)?;
    if u.coeffs.len() == 1 && u.hi_exact {
        return Ok(LaurentSeries::monomial(c_inv, -n));
    }
    // known relative length of u
    let mut len = window.max(0);
    if !u.hi_exact {
        len = len.min(u.hi() - n);
    }
    let w: Vec<Scalar> = (0..=len)
        .map(|j| u.coeff(n + j).expect("known").try_mul(&c_inv))
        .collect::<Result<_, _>>()?;
    let mut y: Vec<Scalar> = Vec::with_capacity(len as usize + 1);
    y.push(Scalar::one(field));
    for k in 1..=len as usize {
        let mut acc = Scalar::zero(field);
        for j in 1..=k {
            if !w[j].is_zero() {
                acc = acc.try_add(&w[j].try_mul(&y[k - j])?)?;
            }
        }
        y.push(-&acc);
    }
    let y: Vec<Scalar> = y.iter().map(|v| v.try_mul(&c_inv)).collect::<Result<_, _>>()?;
    LaurentSeries::new(field, -n, y, true, false)
}

/// Contraction norm of a principal-unit perturbation: the l1 norm at
/// `rho` over archimedean fields, the Gauss norm p-adically.
pub fn contraction_norm(s: &LaurentSeries, rho: f64) -> f64 {
    if s.field.is_archimedean() {
        l1_norm(s, rho)
    } else {
        rho_norm(s, rho).value
    }
}

/// `sum |a_i| rho^i` over the window.
pub fn l1_norm(f: &LaurentSeries, rho: f64) -> f64 {
    f.coeffs
        .iter()
        .enumerate()
        .map(|(k, a)| a.abs_at() * rho.powi((f.lo + k as i64) as i32))
        .sum()
}

/// Inverse on an annulus through the dominant monomial and a geometric
/// series. Requires the normalized perturbation to have contraction norm
/// below `theta` at `rho`; the result is clipped to `|e| <= window`.
pub fn series_inverse_on_annulus(
    u: &LaurentSeries,
    window: i64,
    rho: f64,
    theta: f64,
) -> Result<LaurentSeries, SeriesError> {
    let field = u.field;
    if field == FieldTag::ExactRational {
        return Err(SeriesError::ExactField("annulus inversion"));
    }
    if u.is_zero() {
        return Err(SeriesError::NotInvertibleOnWindow);
    }
    let (n, _) = u
        .coeffs
        .iter()
        .enumerate()
        .map(|(k, a)| (u.lo + k as i64, a.abs_at() * rho.powi((u.lo + k as i64) as i32)))
        .fold((u.lo, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    let c = u.coeff(n).expect("inside window");
    let c_inv = c.inv().map_err(|_| SeriesError::NotInvertibleOnWindow)?;
    let normalized = LaurentSeries::new(field, u.lo, u.coeffs.clone(), true, true)?
        .scale(&c_inv)?
        .shift(-n)?;
    let s = series_sub(&normalized, &LaurentSeries::one(field))?;
    let norm = contraction_norm(&s, rho);
    if norm >= theta {
        return Err(SeriesError::ContractionBoundViolated { norm, theta });
    }
    let minus_s = s.neg();
    let tol_abs = stop_tolerance(field, norm, COMPLEX_SERIES_TOL);
    let mut sum = LaurentSeries::one(field);
    let mut term = LaurentSeries::one(field);
    let mut clipped = !u.is_polynomial();
    let mut k = 0;
    while norm.powi(k) > tol_abs {
        k += 1;
        if k > 10_000 {
            return Err(SeriesError::ConvergenceGuardFailed("geometric series".into()));
        }
        let (next, dropped) = clipped_mul(&term, &minus_s, window)?;
        clipped |= dropped;
        term = next;
        sum = series_add(&sum, &term)?;
    }
    let out = sum.scale(&c_inv)?.shift(-n)?;
    Ok(if clipped { out.forget_exactness() } else { out })
}

fn stop_tolerance(field: FieldTag, norm: f64, tol: f64) -> f64 {
    match field {
        FieldTag::PAdic { prime, precision } => {
            norm.min(1.0) * (prime as f64).powi(-(precision as i32 + 1))
        }
        _ => tol,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    One(Direction),
    Two,
}

/// Side of a perturbation `s` (constant term zero).
fn perturbation_side(s: &LaurentSeries) -> Side {
    if s.is_zero() || (s.lo_exact && s.lo >= 0) {
        Side::One(Direction::Positive)
    } else if s.hi_exact && s.hi() <= 0 {
        Side::One(Direction::Negative)
    } else {
        Side::Two
    }
}

fn constant_is_one(u: &LaurentSeries) -> Result<(), SeriesError> {
    let c0 = u.coeff(0).ok_or(SeriesError::ExponentOutsideWindow(0))?;
    let one = Scalar::one(u.field);
    if !c0.approx_eq(&one, 1e-12) {
        return Err(SeriesError::NotNormalized(format!("constant term {c0} is not 1")));
    }
    Ok(())
}

/// Logarithm of a principal unit `1 + s`.
pub fn series_log(u: &LaurentSeries, window: i64) -> Result<LaurentSeries, SeriesError> {
    series_log_with(u, &LogExpOpts::with_window(window))
}

/// Exponential of a series with zero constant term.
pub fn series_exp(s: &LaurentSeries, window: i64) -> Result<LaurentSeries, SeriesError> {
    series_exp_with(s, &LogExpOpts::with_window(window))
}

pub fn series_log_with(u: &LaurentSeries, opts: &LogExpOpts) -> Result<LaurentSeries, SeriesError> {
    constant_is_one(u)?;
    let one = LaurentSeries::one(u.field);
    let s = series_sub(u, &one)?;
    match perturbation_side(&s) {
        Side::One(Direction::Positive) => log_positive(u, opts.window),
        Side::One(Direction::Negative) => Ok(log_positive(&u.reflect(), opts.window)?.reflect()),
        Side::Two => two_sided(&s, opts, SumKind::Log),
    }
}

pub fn series_exp_with(s: &LaurentSeries, opts: &LogExpOpts) -> Result<LaurentSeries, SeriesError> {
    let c0 = s.coeff(0).ok_or(SeriesError::ExponentOutsideWindow(0))?;
    if !c0.is_zero() {
        // exp(s) = exp(s_0) exp(s - s_0)
        let scale = c0
            .exp()
            .map_err(|e| SeriesError::ConvergenceGuardFailed(format!("exp of constant term: {e}")))?;
        let rest = series_sub(s, &LaurentSeries::monomial(c0, 0))?;
        return series_exp_with(&rest, opts)?.scale(&scale);
    }
    match perturbation_side(s) {
        Side::One(Direction::Positive) => exp_positive(s, opts.window),
        Side::One(Direction::Negative) => Ok(exp_positive(&s.reflect(), opts.window)?.reflect()),
        Side::Two => two_sided(s, opts, SumKind::Exp),
    }
}

/// Output length for a one-sided expansion of `f` starting at exponent 0.
fn one_sided_len(f: &LaurentSeries, window: i64) -> i64 {
    if f.hi_exact {
        window
    } else {
        window.min(f.hi())
    }
}

fn log_positive(u: &LaurentSeries, window: i64) -> Result<LaurentSeries, SeriesError> {
    let field = u.field;
    let len = one_sided_len(u, window);
    if u.is_polynomial() && u.lo == 0 && u.coeffs.len() == 1 {
        return Ok(LaurentSeries::zero(field));
    }
    let uc: Vec<Scalar> = (0..=len).map(|k| u.coeff(k).expect("known")).collect();
    let u0 = uc[0].clone();
    // u l' = u'  =>  k l_k u_0 = k u_k - sum_{j<k} j l_j u_{k-j}
    let mut l: Vec<Scalar> = vec![Scalar::zero(field)];
    for k in 1..=len as usize {
        let mut acc = uc[k].scale_ratio(k as i64, 1)?;
        for j in 1..k {
            if !l[j].is_zero() && !uc[k - j].is_zero() {
                acc = acc.try_sub(&l[j].scale_ratio(j as i64, 1)?.try_mul(&uc[k - j])?)?;
            }
        }
        l.push(acc.try_div(&u0.scale_ratio(k as i64, 1)?)?);
    }
    LaurentSeries::new(field, 0, l, true, false)
}

fn exp_positive(s: &LaurentSeries, window: i64) -> Result<LaurentSeries, SeriesError> {
    let field = s.field;
    if s.is_zero() {
        return Ok(LaurentSeries::one(field));
    }
    let len = one_sided_len(s, window);
    let sc: Vec<Scalar> = (0..=len).map(|k| s.coeff(k).expect("known")).collect();
    // e' = s' e  =>  k e_k = sum_{j=1..k} j s_j e_{k-j}
    let mut e: Vec<Scalar> = vec![Scalar::one(field)];
    for k in 1..=len as usize {
        let mut acc = Scalar::zero(field);
        for j in 1..=k {
            if !sc[j].is_zero() {
                acc = acc.try_add(&sc[j].scale_ratio(j as i64, 1)?.try_mul(&e[k - j])?)?;
            }
        }
        e.push(acc.scale_ratio(1, k as i64)?);
    }
    LaurentSeries::new(field, 0, e, true, false)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum SumKind {
    Log,
    Exp,
}

/// Two-sided log(1 + s) or exp(s) for a Laurent polynomial `s`.
fn two_sided(s: &LaurentSeries, opts: &LogExpOpts, kind: SumKind) -> Result<LaurentSeries, SeriesError> {
    let field = s.field;
    let name = match kind {
        SumKind::Log => "two-sided log",
        SumKind::Exp => "two-sided exp",
    };
    if field == FieldTag::ExactRational {
        return Err(SeriesError::ExactField(name));
    }
    if !s.is_polynomial() {
        return Err(SeriesError::ConvergenceGuardFailed(format!(
            "{name} needs exact edges; truncate negligible tails first"
        )));
    }
    let norm = contraction_norm(s, 1.0);
    // growth ratio of the k-th term bound
    let ratio = match (field, kind) {
        (FieldTag::PAdic { .. }, SumKind::Log) => {
            if norm >= 1.0 {
                return Err(SeriesError::ConvergenceGuardFailed(format!(
                    "{name}: Gauss norm {norm} is not below 1"
                )));
            }
            norm
        }
        (FieldTag::PAdic { prime, .. }, SumKind::Exp) => {
            let r = norm * (prime as f64).powf(1.0 / (prime as f64 - 1.0));
            if r >= 1.0 {
                return Err(SeriesError::ConvergenceGuardFailed(format!(
                    "{name}: Gauss norm {norm} is outside the convergence disc"
                )));
            }
            r
        }
        _ => {
            if norm > opts.theta {
                return Err(SeriesError::ContractionBoundViolated {
                    norm,
                    theta: opts.theta,
                });
            }
            norm
        }
    };
    let tol_abs = stop_tolerance(field, norm, opts.tol);
    let mut sum = match kind {
        SumKind::Log => LaurentSeries::zero(field),
        SumKind::Exp => LaurentSeries::one(field),
    };
    let mut power = LaurentSeries::one(field);
    let mut clipped = false;
    let mut k: i64 = 0;
    let mut factorial_bound = 1.0f64;
    loop {
        k += 1;
        if k > 10_000 {
            return Err(SeriesError::ConvergenceGuardFailed(format!("{name}: no convergence")));
        }
        let (next, dropped) = clipped_mul(&power, s, opts.window)?;
        clipped |= dropped;
        power = next;
        let term = match kind {
            SumKind::Log => {
                let sign = if k % 2 == 1 { 1 } else { -1 };
                power.scale(&Scalar::from_rational(&crate::scalars::rational(sign, k), field))?
            }
            SumKind::Exp => {
                factorial_bound *= k as f64;
                power.scale(&Scalar::from_rational(&factorial_inv(k), field))?
            }
        };
        sum = series_add(&sum, &term)?;
        // a priori bound on every later term
        let bound = match (field, kind) {
            (FieldTag::PAdic { .. }, SumKind::Log) => ratio.powi(k as i32 + 1) * (k + 1) as f64,
            (FieldTag::PAdic { .. }, SumKind::Exp) => ratio.powi(k as i32 + 1),
            (_, SumKind::Log) => ratio.powi(k as i32 + 1) / (1.0 - ratio).max(1e-300),
            (_, SumKind::Exp) => ratio.powi(k as i32 + 1) / (factorial_bound * (k + 1) as f64) * 2.0,
        };
        if bound < tol_abs || power.is_zero() {
            break;
        }
    }
    Ok(if clipped { sum.forget_exactness() } else { sum })
}

fn factorial_inv(k: i64) -> BigRational {
    let mut f = num_bigint::BigInt::one();
    for j in 2..=k {
        f *= j;
    }
    BigRational::new(num_bigint::BigInt::one(), f)
}

pub fn residue(f: &LaurentSeries) -> Result<Scalar, SeriesError> {
    f.coeff(-1).ok_or(SeriesError::ExponentOutsideWindow(-1))
}

/// `<a, b> = sum_{i>=0} a_i b_{-i-1}` for `a` supported in exponents `>= 0`
/// and `b` in exponents `<= -1`.
pub fn residue_pairing(a: &LaurentSeries, b: &LaurentSeries) -> Result<Scalar, SeriesError> {
    let field = same_field(a, b)?;
    if a.is_zero() || b.is_zero() {
        return Ok(Scalar::zero(field));
    }
    if !(a.lo_exact && a.lo >= 0) {
        return Err(SeriesError::SupportViolation(
            "left argument must be supported in exponents >= 0".into(),
        ));
    }
    if !(b.hi_exact && b.hi() <= -1) {
        return Err(SeriesError::SupportViolation(
            "right argument must be supported in exponents <= -1".into(),
        ));
    }
    // i ranges over exponents of a; partner exponent is -i-1
    let mut top = i64::MAX;
    if a.hi_exact {
        top = top.min(a.hi());
    }
    if b.lo_exact {
        top = top.min(-b.lo - 1);
    }
    if top == i64::MAX {
        return Err(SeriesError::EmptyReliableWindow);
    }
    if (!a.hi_exact && top > a.hi()) || (!b.lo_exact && -top - 1 < b.lo) {
        return Err(SeriesError::EmptyReliableWindow);
    }
    let mut acc = Scalar::zero(field);
    for i in a.lo..=top {
        if let (Some(x), Some(y)) = (a.term(i), b.term(-i - 1)) {
            acc = acc.try_add(&x.try_mul(y)?)?;
        }
    }
    Ok(acc)
}

/// `max |a_i| rho^i` over the window.
pub fn rho_norm(f: &LaurentSeries, rho: f64) -> RhoNorm {
    if f.is_zero() {
        return RhoNorm {
            value: 0.0,
            attained_inside: true,
        };
    }
    let mut best = (0.0f64, f.lo);
    for (k, a) in f.coeffs.iter().enumerate() {
        let e = f.lo + k as i64;
        let v = a.abs_at() * rho.powi(e as i32);
        if v > best.0 {
            best = (v, e);
        }
    }
    let at_open_edge = (best.1 == f.lo && !f.lo_exact) || (best.1 == f.hi() && !f.hi_exact);
    RhoNorm {
        value: best.0,
        attained_inside: !at_open_edge,
    }
}

/// Exact rho-norm for fields whose absolute values are rational.
pub fn rho_norm_exact(f: &LaurentSeries, rho: &BigRational) -> Option<BigRational> {
    let mut best = BigRational::zero();
    for (k, a) in f.coeffs.iter().enumerate() {
        let e = f.lo + k as i64;
        let v = a.abs_exact()? * pow_rational(rho, e);
        if v > best {
            best = v;
        }
    }
    Some(best)
}

pub fn pow_rational(x: &BigRational, e: i64) -> BigRational {
    if e >= 0 {
        num_traits::pow(x.clone(), e as usize)
    } else {
        num_traits::pow(x.recip(), (-e) as usize)
    }
}

pub fn plus_minus_split(f: &LaurentSeries) -> Result<SplitPair, SeriesError> {
    let field = f.field;
    if f.is_zero() {
        return Ok(SplitPair {
            plus: f.clone(),
            minus: f.clone(),
        });
    }
    let plus = if f.hi() >= 0 {
        let lo = f.lo.max(0);
        let coeffs = f.coeffs[(lo - f.lo) as usize..].to_vec();
        LaurentSeries::new(field, lo, coeffs, f.lo_exact || f.lo <= 0, f.hi_exact)?
    } else if f.hi_exact {
        LaurentSeries::zero(field)
    } else {
        return Err(SeriesError::EmptyReliableWindow);
    };
    let minus = if f.lo < 0 {
        let hi = f.hi().min(-1);
        let coeffs = f.coeffs[..=(hi - f.lo) as usize].to_vec();
        LaurentSeries::new(field, f.lo, coeffs, f.lo_exact, f.hi_exact || f.hi() >= -1)?
    } else if f.lo_exact {
        LaurentSeries::zero(field)
    } else {
        return Err(SeriesError::EmptyReliableWindow);
    };
    Ok(SplitPair { plus, minus })
}

fn fmt_monomial(f: &mut fmt::Formatter<'_>, c: &Scalar, e: i64) -> fmt::Result {
    match e {
        0 => write!(f, "({c})"),
        1 => write!(f, "({c})*t"),
        _ => write!(f, "({c})*t^{e}"),
    }
}

impl fmt::Display for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        let mut sep = |f: &mut fmt::Formatter<'_>| -> fmt::Result {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            Ok(())
        };
        if !self.lo_exact {
            sep(f)?;
            write!(f, "O(t^{})", self.lo - 1)?;
        }
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            sep(f)?;
            fmt_monomial(f, c, self.lo + k as i64)?;
        }
        if !self.hi_exact {
            sep(f)?;
            write!(f, "O(t^{})", self.hi() + 1)?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::rational;
    use proptest::prelude::*;

    const Q: FieldTag = FieldTag::ExactRational;

    fn padic5() -> FieldTag {
        FieldTag::padic(5, 6).unwrap()
    }

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::Rational(rational(n, d))
    }

    #[test]
    fn products() {
        let a = LaurentSeries::from_ints(Q, 0, &[1, 1]);
        let b = LaurentSeries::from_ints(Q, 0, &[1, -1]);
        assert_eq!(series_mul(&a, &b).unwrap(), LaurentSeries::from_ints(Q, 0, &[1, 0, -1]));
        let t = LaurentSeries::from_ints(Q, 1, &[1]);
        let tinv = LaurentSeries::from_ints(Q, -1, &[1]);
        assert_eq!(series_mul(&t, &tinv).unwrap(), LaurentSeries::one(Q));

        let geo = LaurentSeries::new(Q, 0, vec![q(1, 1); 6], true, false).unwrap();
        let shifted = series_mul(&geo, &t).unwrap();
        assert_eq!((shifted.lo(), shifted.hi()), (1, 6));
        assert!(shifted.lo_exact() && !shifted.hi_exact());
    }

    #[test]
    fn product_windows_respect_tails() {
        let up = LaurentSeries::new(Q, 0, vec![q(1, 1); 4], true, false).unwrap();
        let down = up.reflect();
        assert_eq!(series_mul(&up, &down), Err(SeriesError::EmptyReliableWindow));
        // a polynomial cuts the reliable range by its width
        let p = LaurentSeries::from_ints(Q, -2, &[1, 0, 0, 0, 1]);
        let r = series_mul(&up, &p).unwrap();
        assert_eq!((r.lo(), r.hi()), (-2, 1));
    }

    #[test]
    fn inverse_examples() {
        let u = LaurentSeries::from_ints(Q, 0, &[1, -1]);
        let v = series_inverse(&u, 4).unwrap();
        assert_eq!(v.coeffs(), &[q(1, 1), q(1, 1), q(1, 1), q(1, 1), q(1, 1)]);
        assert_eq!(v.lo(), 0);

        let m = LaurentSeries::from_ints(Q, 3, &[2]);
        assert_eq!(series_inverse(&m, 4).unwrap(), LaurentSeries::monomial(q(1, 2), -3));

        let f = padic5();
        let u = LaurentSeries::from_ratios(f, -1, &[(1, 5), (1, 1)]);
        let v = series_inverse(&u, 10).unwrap();
        assert_eq!(v.hi(), 0);
        assert!(v.coeff(-1).unwrap().approx_eq(&Scalar::from_rational(&rational(-1, 5), f), 0.0));
        assert!(v.coeff(-2).unwrap().approx_eq(&Scalar::from_rational(&rational(1, 25), f), 0.0));
        let prod = series_mul(&u, &v).unwrap();
        assert!(prod.approx_eq(&LaurentSeries::one(f), 0.0));
        assert_eq!(prod.hi(), 0);
    }

    #[test]
    fn annulus_inverse() {
        let u = LaurentSeries::from_complex(
            -1,
            &[Complex64::new(0.2, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.1, 0.0)],
            true,
            true,
        );
        let v = series_inverse_on_annulus(&u, 40, 1.0, 0.5).unwrap();
        let w = mul_truncated(&u, &v, 1e-12).unwrap();
        for e in -30..=30 {
            let expect = if e == 0 { 1.0 } else { 0.0 };
            assert!((w.coeff(e).unwrap().to_complex().unwrap() - expect).norm() < 1e-12, "e={e}");
        }
        let big = LaurentSeries::from_complex(
            -1,
            &[Complex64::new(0.4, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.4, 0.0)],
            true,
            true,
        );
        assert!(matches!(
            series_inverse_on_annulus(&big, 40, 1.0, 0.5),
            Err(SeriesError::ContractionBoundViolated { .. })
        ));
    }

    #[test]
    fn log_exp_examples() {
        let u = LaurentSeries::from_ints(Q, 0, &[1, 1]);
        let l = series_log(&u, 4).unwrap();
        assert_eq!(l.coeffs(), &[q(1, 1), q(-1, 2), q(1, 3), q(-1, 4)]);

        let c = FieldTag::ComplexFloat;
        let u = LaurentSeries::from_complex(0, &[Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)], true, true);
        let back = series_exp(&series_log(&u, 40).unwrap(), 40).unwrap();
        assert_eq!(back.field(), c);
        assert!(back.approx_eq(&u, 1e-14));

        let f = padic5();
        let u = LaurentSeries::from_ints(f, -1, &[5, 1, 5]);
        let l = series_log(&u, 64).unwrap();
        assert!(l.is_polynomial());
        let back = series_exp(&l, 64).unwrap();
        let diff = series_sub(&back, &u).unwrap();
        for c in diff.coeffs() {
            match c {
                Scalar::PAdic(x) => assert!(x.is_zero() || x.valuation().unwrap() >= 6),
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn log_guards() {
        let u = LaurentSeries::from_ints(Q, 0, &[2, 1]);
        assert!(matches!(series_log(&u, 4), Err(SeriesError::NotNormalized(_))));
        let f = padic5();
        let u = LaurentSeries::from_ints(f, -1, &[1, 1, 5]);
        assert!(matches!(series_log(&u, 8), Err(SeriesError::ConvergenceGuardFailed(_))));
        let c = LaurentSeries::from_complex(
            -1,
            &[Complex64::new(0.4, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.4, 0.0)],
            true,
            true,
        );
        assert!(matches!(series_log(&c, 8), Err(SeriesError::ContractionBoundViolated { .. })));
        let r = LaurentSeries::from_ratios(Q, -1, &[(1, 10), (1, 1), (1, 10)]);
        assert!(matches!(series_log(&r, 8), Err(SeriesError::ExactField(_))));
    }

    #[test]
    fn residues() {
        assert_eq!(residue(&LaurentSeries::from_ints(Q, -1, &[1])).unwrap(), q(1, 1));
        assert_eq!(residue(&LaurentSeries::from_ints(Q, -2, &[3, 2, 5])).unwrap(), q(2, 1));
        let p = series_mul(
            &LaurentSeries::from_ints(Q, 0, &[1, 1]),
            &LaurentSeries::from_ints(Q, -2, &[1, 1]),
        )
        .unwrap();
        assert_eq!(residue(&p).unwrap(), q(2, 1));
        let inexact = LaurentSeries::new(Q, 0, vec![q(1, 1)], false, true).unwrap();
        assert_eq!(residue(&inexact), Err(SeriesError::ExponentOutsideWindow(-1)));
    }

    #[test]
    fn pairing_examples() {
        let a = LaurentSeries::from_ints(Q, 0, &[1, 2]);
        let b = LaurentSeries::from_ints(Q, -2, &[4, 3]);
        assert_eq!(residue_pairing(&a, &b).unwrap(), q(11, 1));
        assert_eq!(residue_pairing(&a, &LaurentSeries::zero(Q)).unwrap(), q(0, 1));
        for i in 0..5 {
            for j in 0..5 {
                let ti = LaurentSeries::monomial(q(1, 1), i);
                let tj = LaurentSeries::monomial(q(1, 1), -j - 1);
                let expect = if i == j { 1 } else { 0 };
                assert_eq!(residue_pairing(&ti, &tj).unwrap(), q(expect, 1));
            }
        }
        assert!(matches!(
            residue_pairing(&b, &a),
            Err(SeriesError::SupportViolation(_))
        ));
        let a_open = LaurentSeries::new(Q, 0, vec![q(1, 1); 3], true, false).unwrap();
        let b_open = LaurentSeries::new(Q, -3, vec![q(1, 1); 3], false, true).unwrap();
        assert_eq!(residue_pairing(&a_open, &b_open), Err(SeriesError::EmptyReliableWindow));
    }

    #[test]
    fn norms() {
        let t2 = LaurentSeries::from_ints(Q, 2, &[1]);
        assert!((rho_norm(&t2, 0.3).value - 0.09).abs() < 1e-15);
        let f = LaurentSeries::from_ints(padic5(), 0, &[5, 1]);
        assert_eq!(rho_norm(&f, 1.0).value, 1.0);
        assert_eq!(rho_norm(&f, 0.5).value, 0.5);
        assert_eq!(rho_norm(&LaurentSeries::zero(Q), 0.5).value, 0.0);
        let open = LaurentSeries::new(Q, 0, vec![q(1, 1), q(2, 1)], true, false).unwrap();
        assert!(!rho_norm(&open, 1.0).attained_inside);
    }

    #[test]
    fn split_examples() {
        let f = LaurentSeries::from_ints(Q, -1, &[1, 1, 1]);
        let s = plus_minus_split(&f).unwrap();
        assert_eq!(s.plus, LaurentSeries::from_ints(Q, 0, &[1, 1]));
        assert_eq!(s.minus, LaurentSeries::from_ints(Q, -1, &[1]));
        let g = LaurentSeries::from_ints(Q, 0, &[1, 2, 3]);
        assert!(plus_minus_split(&g).unwrap().minus.is_zero());
    }

    #[test]
    fn window_cap() {
        let m = LaurentSeries::monomial(q(1, 1), 999_999);
        assert_eq!(m.shift(2), Err(SeriesError::WindowCap(1_000_001)));
    }

    #[test]
    fn truncation() {
        let c = |x: f64| Complex64::new(x, 0.0);
        let g = LaurentSeries::from_complex(0, &[c(1.0), c(0.5), c(1e-20)], true, false);
        let h = LaurentSeries::from_complex(-2, &[c(1e-20), c(0.5), c(1.0)], false, true);
        assert_eq!(series_mul(&g, &h), Err(SeriesError::EmptyReliableWindow));
        let p = mul_truncated(&g, &h, 1e-15).unwrap();
        assert!((p.coeff(0).unwrap().to_complex().unwrap() - c(1.25)).norm() < 1e-15);
        assert!(mul_truncated(&g, &h, 1e-25).is_err());
        let tr = g.truncate_tails(1e-15).unwrap();
        assert!(tr.is_polynomial());
        assert_eq!(tr.hi(), 1);
    }

    fn rational_poly() -> impl Strategy<Value = LaurentSeries> {
        (-3i64..3, prop::collection::vec((-5i64..6, 1i64..4), 1..5))
            .prop_map(|(lo, cs)| LaurentSeries::from_ratios(Q, lo, &cs))
    }

    fn power_series() -> impl Strategy<Value = LaurentSeries> {
        (0i64..3, prop::collection::vec(-5i64..6, 1..8), any::<bool>()).prop_map(|(lo, cs, exact)| {
            let coeffs = cs.iter().map(|&n| Scalar::from_i64(n, Q)).collect();
            LaurentSeries::new(Q, lo, coeffs, true, exact).unwrap()
        })
    }

    proptest! {
        #[test]
        fn ring_axioms(a in rational_poly(), b in rational_poly(), c in rational_poly()) {
            let ab_c = series_mul(&series_mul(&a, &b).unwrap(), &c).unwrap();
            let a_bc = series_mul(&a, &series_mul(&b, &c).unwrap()).unwrap();
            prop_assert_eq!(ab_c, a_bc);
            let lhs = series_mul(&a, &series_add(&b, &c).unwrap()).unwrap();
            let rhs = series_add(&series_mul(&a, &b).unwrap(), &series_mul(&a, &c).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
            prop_assert_eq!(series_mul(&a, &b).unwrap(), series_mul(&b, &a).unwrap());
        }

        #[test]
        fn associativity_with_tails(a in power_series(), b in power_series(), c in power_series()) {
            let ab_c = series_mul(&series_mul(&a, &b).unwrap(), &c).unwrap();
            let a_bc = series_mul(&a, &series_mul(&b, &c).unwrap()).unwrap();
            prop_assert_eq!(ab_c, a_bc);
        }

        #[test]
        fn residue_two_ways(a in rational_poly(), b in rational_poly()) {
            let direct = residue(&series_mul(&a, &b).unwrap()).unwrap();
            let mut conv = Scalar::zero(Q);
            for i in (a.lo() - 1)..=(a.hi() + 1) {
                conv = &conv + &(&a.coeff(i).unwrap() * &b.coeff(-1 - i).unwrap());
            }
            prop_assert_eq!(direct, conv);
        }

        #[test]
        fn inverse_is_inverse(u in power_series(), w in 1i64..12) {
            prop_assume!(!u.is_zero() && !u.coeffs()[0].is_zero());
            let v = series_inverse(&u, w).unwrap();
            let p = series_mul(&u, &v).unwrap();
            prop_assert!(p.approx_eq(&LaurentSeries::one(Q), 0.0));
            prop_assert!(p.hi() >= 0);
        }

        #[test]
        fn split_recombines(f in rational_poly()) {
            let s = plus_minus_split(&f).unwrap();
            prop_assert_eq!(series_add(&s.plus, &s.minus).unwrap(), f);
        }

        #[test]
        fn exp_log_roundtrip(cs in prop::collection::vec(-5i64..6, 1..6)) {
            let mut coeffs = vec![0i64];
            coeffs.extend(cs);
            let s = LaurentSeries::from_ints(Q, 0, &coeffs);
            let e = series_exp(&s, 10).unwrap();
            let l = series_log(&e, 10).unwrap();
            prop_assert!(l.approx_eq(&s, 0.0));
        }
    }
}
