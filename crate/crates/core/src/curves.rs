//! Units on the projective line minus a finite set, their local
//! expansions, and the reciprocity check over all support points.
//!
//! A unit is `c * prod (x - a_i)^{m_i} * exp(q(x))` with `q` a rational
//! function with rational coefficients. The exponential factor is only
//! available over the complex numbers.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::contour::FnEval;
use crate::detline::{oracle_commutator, OracleError, OracleOpts};
use crate::factorization::{recompose, BirkhoffFactorization, FactorError};
use crate::laurent::{series_exp, series_inverse, series_mul, LaurentSeries, SeriesError};
use crate::scalars::{rational_to_f64, FieldTag, Scalar, ScalarError};
use crate::symbols::{
    deligne_symbol, plus_symbol_from_factors, symbol_inv, tame_symbol, SymbolError, SymbolValue,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Factor(#[from] FactorError),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("unit constant is zero")]
    ZeroConstant,
    #[error("root {0} is listed twice")]
    DuplicateRoot(String),
    #[error("root {0} has multiplicity zero")]
    ZeroMultiplicity(String),
    #[error("exponent denominator is zero")]
    ZeroDenominator,
    #[error("polynomial does not split into rational linear factors")]
    DoesNotSplit,
    #[error("polynomial coefficients too large for rational root search")]
    CoefficientsTooLarge,
    #[error("exponential factors need the complex field, not {0}")]
    ExpPartUnsupported(FieldTag),
    #[error("units live over different fields: {0} and {1}")]
    FieldMismatch(FieldTag, FieldTag),
    #[error("method {method} is not available over {field}")]
    MethodUnsupported { method: Method, field: FieldTag },
    #[error("unknown method {0:?}")]
    UnknownMethod(String),
    #[error("symbol at {point} failed: {message}")]
    PointFailed { point: String, message: String },
    #[error("window must be at least 1, got {0}")]
    BadWindow(i64),
}

/// A point of the projective line.
#[derive(Clone, Debug, PartialEq)]
pub enum PointOnLine {
    Finite(Scalar),
    Infinity,
}

impl fmt::Display for PointOnLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointOnLine::Finite(a) => write!(f, "{a}"),
            PointOnLine::Infinity => write!(f, "inf"),
        }
    }
}

impl PointOnLine {
    /// `inf` or a scalar literal in `field`.
    pub fn parse(text: &str, field: FieldTag) -> Result<Self, ScalarError> {
        match text.trim() {
            "inf" | "infinity" | "oo" => Ok(PointOnLine::Infinity),
            other => Ok(PointOnLine::Finite(Scalar::parse(other, field)?)),
        }
    }
}

fn same_scalar(a: &Scalar, b: &Scalar) -> bool {
    match (a, b) {
        (Scalar::Complex(x), Scalar::Complex(y)) => (x - y).norm() <= 1e-12 * (1.0 + x.norm().max(y.norm())),
        _ => a == b,
    }
}

// ---- rational polynomials, ascending coefficients ----

fn trim(p: &mut Vec<BigRational>) {
    while p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
}

fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(&mut out);
    out
}

fn poly_add(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] += y;
    }
    trim(&mut out);
    out
}

/// Synthetic division by `x - r`: quotient and remainder.
fn divide_linear(p: &[BigRational], r: &BigRational) -> (Vec<BigRational>, BigRational) {
    if p.is_empty() {
        return (Vec::new(), BigRational::zero());
    }
    let n = p.len() - 1;
    let mut q = vec![BigRational::zero(); n];
    let mut acc = p[n].clone();
    for k in (0..n).rev() {
        q[k] = acc.clone();
        acc = &acc * r + &p[k];
    }
    (q, acc)
}

/// Positive divisors of `n`, by trial division.
fn divisors(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            small.push(d);
            if d != n / d {
                large.push(n / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

/// Largest coefficient allowed in the rational root search.
const ROOT_SEARCH_LIMIT: u64 = 1 << 40;

/// Splits `p` as `lead * prod (x - r)^k` over the rationals.
pub fn split_rational_polynomial(p: &[BigRational]) -> Result<(BigRational, Vec<(BigRational, u32)>), CurveError> {
    let mut p = p.to_vec();
    trim(&mut p);
    if p.is_empty() {
        return Err(CurveError::ZeroDenominator);
    }
    let lead = p.last().expect("nonempty").clone();
    let mut roots: Vec<(BigRational, u32)> = Vec::new();
    let push = |r: BigRational, roots: &mut Vec<(BigRational, u32)>| match roots.iter_mut().find(|(x, _)| *x == r) {
        Some(e) => e.1 += 1,
        None => roots.push((r, 1)),
    };
    while p.len() > 1 && p[0].is_zero() {
        p.remove(0);
        push(BigRational::zero(), &mut roots);
    }
    while p.len() > 1 {
        // integer coefficients with the same roots
        let l = p.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<BigInt> = p.iter().map(|c| (c * BigRational::from_integer(l.clone())).to_integer()).collect();
        let a0 = ints[0].abs().to_u64().filter(|&v| v <= ROOT_SEARCH_LIMIT);
        let an = ints[ints.len() - 1].abs().to_u64().filter(|&v| v <= ROOT_SEARCH_LIMIT);
        let (Some(a0), Some(an)) = (a0, an) else {
            return Err(CurveError::CoefficientsTooLarge);
        };
        let mut found = None;
        'search: for d in divisors(a0) {
            for e in divisors(an) {
                for sign in [1i64, -1] {
                    let r = BigRational::new(BigInt::from(sign) * BigInt::from(d), BigInt::from(e));
                    let (q, rem) = divide_linear(&p, &r);
                    if rem.is_zero() {
                        found = Some((r, q));
                        break 'search;
                    }
                }
            }
        }
        let Some((r, q)) = found else {
            return Err(CurveError::DoesNotSplit);
        };
        push(r, &mut roots);
        p = q;
    }
    roots.sort_by(|a, b| a.0.cmp(&b.0));
    Ok((lead, roots))
}

// ---- scalar polynomials ----

/// Coefficients of `p(a + lam t)`.
fn poly_substitute(p: &[Scalar], a: &Scalar, lam: &Scalar) -> Result<Vec<Scalar>, ScalarError> {
    let field = a.field();
    let mut out: Vec<Scalar> = Vec::new();
    for c in p.iter().rev() {
        // out <- out * (a + lam t) + c
        let mut next = vec![Scalar::zero(field); out.len() + 1];
        for (k, o) in out.iter().enumerate() {
            next[k] = next[k].try_add(&o.try_mul(a)?)?;
            next[k + 1] = next[k + 1].try_add(&o.try_mul(lam)?)?;
        }
        next[0] = next[0].try_add(c)?;
        out = next;
    }
    Ok(out)
}

fn eval_rational_poly(p: &[BigRational], x: Complex64) -> (Complex64, Complex64) {
    let mut v = Complex64::new(0.0, 0.0);
    let mut d = Complex64::new(0.0, 0.0);
    for c in p.iter().rev() {
        d = d * x + v;
        v = v * x + rational_to_f64(c);
    }
    (v, d)
}

/// `(1 + w t)^m` up to `t^window`; exact when `m >= 0`.
fn binomial_series(w: &Scalar, m: i64, window: i64) -> Result<LaurentSeries, CurveError> {
    let field = w.field();
    let len = if m >= 0 { m.min(window) } else { window };
    let mut coeffs = vec![Scalar::one(field)];
    for k in 1..=len {
        let prev = &coeffs[k as usize - 1];
        coeffs.push(prev.try_mul(w)?.scale_ratio(m - k + 1, k)?);
    }
    let hi_exact = m >= 0 && m <= window;
    Ok(LaurentSeries::new(field, 0, coeffs, true, hi_exact)?)
}

/// `c * prod (x - a_i)^{m_i} * exp(num(x) / den(x))`.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticUnit {
    constant: Scalar,
    factors: Vec<(Scalar, i64)>,
    exp_num: Vec<BigRational>,
    exp_den: Vec<BigRational>,
    exp_poles: Vec<(BigRational, u32)>,
}

impl AnalyticUnit {
    /// Validates the data; the exponent's denominator must split over the
    /// rationals and `q` must vanish unless the field is complex.
    pub fn new(
        constant: Scalar,
        factors: Vec<(Scalar, i64)>,
        exp_num: Vec<BigRational>,
        exp_den: Vec<BigRational>,
    ) -> Result<Self, CurveError> {
        let field = constant.field();
        if constant.is_zero() {
            return Err(CurveError::ZeroConstant);
        }
        let mut factors = factors;
        for (i, (r, m)) in factors.iter().enumerate() {
            if r.field() != field {
                return Err(CurveError::FieldMismatch(field, r.field()));
            }
            if *m == 0 {
                return Err(CurveError::ZeroMultiplicity(r.to_string()));
            }
            if factors[..i].iter().any(|(s, _)| same_scalar(r, s)) {
                return Err(CurveError::DuplicateRoot(r.to_string()));
            }
        }
        factors.sort_by(|a, b| a.0.cmp_canonical(&b.0));
        let mut exp_num = exp_num;
        trim(&mut exp_num);
        let mut exp_den = if exp_num.is_empty() {
            vec![BigRational::one()]
        } else {
            exp_den
        };
        trim(&mut exp_den);
        if exp_den.is_empty() {
            return Err(CurveError::ZeroDenominator);
        }
        if !exp_num.is_empty() && field != FieldTag::ComplexFloat {
            return Err(CurveError::ExpPartUnsupported(field));
        }
        let (_, exp_poles) = split_rational_polynomial(&exp_den)?;
        Ok(AnalyticUnit {
            constant,
            factors,
            exp_num,
            exp_den,
            exp_poles,
        })
    }

    pub fn constant_unit(c: Scalar) -> Result<Self, CurveError> {
        Self::new(c, Vec::new(), Vec::new(), Vec::new())
    }

    /// `c * prod (x - a)^m` without exponential part.
    pub fn from_factors(c: Scalar, factors: Vec<(Scalar, i64)>) -> Result<Self, CurveError> {
        Self::new(c, factors, Vec::new(), Vec::new())
    }

    pub fn field(&self) -> FieldTag {
        self.constant.field()
    }

    pub fn constant(&self) -> &Scalar {
        &self.constant
    }

    pub fn factors(&self) -> &[(Scalar, i64)] {
        &self.factors
    }

    pub fn exp_num(&self) -> &[BigRational] {
        &self.exp_num
    }

    pub fn exp_den(&self) -> &[BigRational] {
        &self.exp_den
    }

    pub fn exp_poles(&self) -> &[(BigRational, u32)] {
        &self.exp_poles
    }

    pub fn has_exp(&self) -> bool {
        !self.exp_num.is_empty()
    }

    pub fn mul(&self, other: &AnalyticUnit) -> Result<AnalyticUnit, CurveError> {
        let field = self.field();
        if other.field() != field {
            return Err(CurveError::FieldMismatch(field, other.field()));
        }
        let mut factors = self.factors.clone();
        for (r, m) in &other.factors {
            match factors.iter_mut().find(|(s, _)| same_scalar(r, s)) {
                Some(e) => e.1 += m,
                None => factors.push((r.clone(), *m)),
            }
        }
        factors.retain(|(_, m)| *m != 0);
        let num = poly_add(
            &poly_mul(&self.exp_num, &other.exp_den),
            &poly_mul(&other.exp_num, &self.exp_den),
        );
        let den = poly_mul(&self.exp_den, &other.exp_den);
        Self::new(self.constant.try_mul(&other.constant)?, factors, num, den)
    }

    pub fn inv(&self) -> Result<AnalyticUnit, CurveError> {
        let factors = self.factors.iter().map(|(r, m)| (r.clone(), -m)).collect();
        let num = self.exp_num.iter().map(|c| -c).collect();
        Self::new(self.constant.inv()?, factors, num, self.exp_den.clone())
    }

    /// The unit `x -> u(x + a)`.
    pub fn translate(&self, a: &BigRational) -> Result<AnalyticUnit, CurveError> {
        let field = self.field();
        let shift = Scalar::from_rational(a, field);
        let factors = self
            .factors
            .iter()
            .map(|(r, m)| Ok((r.try_sub(&shift)?, *m)))
            .collect::<Result<Vec<_>, ScalarError>>()?;
        let subst = |p: &[BigRational]| -> Vec<BigRational> {
            let mut out: Vec<BigRational> = Vec::new();
            for c in p.iter().rev() {
                out = poly_add(&poly_mul(&out, &[a.clone(), BigRational::one()]), std::slice::from_ref(c));
            }
            out
        };
        Self::new(self.constant.clone(), factors, subst(&self.exp_num), subst(&self.exp_den))
    }

    /// Order of vanishing at `s` (negative for poles), ignoring `exp(q)`.
    pub fn valuation_at(&self, s: &PointOnLine) -> i64 {
        match s {
            PointOnLine::Finite(a) => self
                .factors
                .iter()
                .filter(|(r, _)| same_scalar(r, a))
                .map(|(_, m)| *m)
                .sum(),
            PointOnLine::Infinity => -self.factors.iter().map(|(_, m)| *m).sum::<i64>(),
        }
    }

    /// `(u(x), u'(x))` at a complex point.
    pub fn eval_d(&self, x: Complex64) -> Option<(Complex64, Complex64)> {
        let c = self.constant.to_complex()?;
        let mut value = c;
        let mut log_d = Complex64::new(0.0, 0.0);
        for (r, m) in &self.factors {
            let d = x - r.to_complex()?;
            value *= d.powi(*m as i32);
            log_d += *m as f64 / d;
        }
        if self.has_exp() {
            let (n, dn) = eval_rational_poly(&self.exp_num, x);
            let (d, dd) = eval_rational_poly(&self.exp_den, x);
            value *= (n / d).exp();
            log_d += (dn * d - n * dd) / (d * d);
        }
        Some((value, value * log_d))
    }

    fn pole_order(&self, a: &Scalar) -> u32 {
        self.exp_poles
            .iter()
            .find(|(b, _)| same_scalar(&Scalar::from_rational(b, a.field()), a))
            .map_or(0, |(_, k)| *k)
    }

    /// `q` in the local parameter at `s` (`x = a + lam t` or `x = 1 / (lam t)`).
    fn exp_local(&self, s: &PointOnLine, lam: &Scalar, window: i64) -> Result<LaurentSeries, CurveError> {
        let field = self.field();
        let lift = |p: &[BigRational]| -> Vec<Scalar> { p.iter().map(|c| Scalar::from_rational(c, field)).collect() };
        let (num, den, num_lo) = match s {
            PointOnLine::Finite(a) => {
                let num = poly_substitute(&lift(&self.exp_num), a, lam)?;
                let mut den = poly_substitute(&lift(&self.exp_den), a, lam)?;
                // the pole order is known exactly; drop the rounding residue
                let k = self.pole_order(a) as usize;
                den.drain(..k.min(den.len()));
                (num, den, -(k as i64))
            }
            PointOnLine::Infinity => {
                let lam_inv = lam.inv()?;
                let dn = self.exp_num.len() as i64 - 1;
                let dd = self.exp_den.len() as i64 - 1;
                // num(1/(lam t)) t^dd and den(1/(lam t)) t^dd, written in ascending t
                let rev = |p: &[BigRational]| -> Result<Vec<Scalar>, ScalarError> {
                    p.iter()
                        .enumerate()
                        .rev()
                        .map(|(j, c)| Scalar::from_rational(c, field).try_mul(&lam_inv.pow_i64(j as i64)?))
                        .collect()
                };
                (rev(&self.exp_num)?, rev(&self.exp_den)?, dd - dn)
            }
        };
        let num = LaurentSeries::polynomial(field, num_lo, num)?;
        let den = LaurentSeries::polynomial(field, 0, den)?;
        // num_lo <= e - i keeps every term of coefficient e inside the inverse
        let span = window - num.lo().min(0) + 1;
        let q = series_mul(&num, &series_inverse(&den, span)?)?;
        if q.is_polynomial() {
            return Ok(q);
        }
        Ok(q.restrict(q.lo(), window.max(q.lo()))?)
    }
}

/// Minimal support: roots, exponent poles, then infinity.
pub fn support(f: &AnalyticUnit, g: &AnalyticUnit) -> Vec<PointOnLine> {
    let field = f.field();
    let mut pts: Vec<Scalar> = Vec::new();
    let candidates = f
        .factors
        .iter()
        .chain(g.factors.iter())
        .map(|(r, _)| r.clone())
        .chain(
            f.exp_poles
                .iter()
                .chain(g.exp_poles.iter())
                .map(|(b, _)| Scalar::from_rational(b, field)),
        );
    for c in candidates {
        if !pts.iter().any(|p| same_scalar(p, &c)) {
            pts.push(c);
        }
    }
    pts.sort_by(|a, b| a.cmp_canonical(b));
    pts.into_iter()
        .map(PointOnLine::Finite)
        .chain(std::iter::once(PointOnLine::Infinity))
        .collect()
}

/// `c t^n g h` of `u` in the local parameter at `s`, read off the factored
/// form: factors vanishing at `s` give `t^n`, the others and the positive
/// part of `q` give `g`, the principal part of `q` gives `h`.
pub fn local_factorization(
    u: &AnalyticUnit,
    s: &PointOnLine,
    window: i64,
    lam: &Scalar,
) -> Result<BirkhoffFactorization, CurveError> {
    if window < 1 {
        return Err(CurveError::BadWindow(window));
    }
    let field = u.field();
    let mut c = u.constant.clone();
    let mut n = 0i64;
    let mut g = LaurentSeries::one(field);
    for (b, m) in &u.factors {
        match s {
            PointOnLine::Finite(a) if same_scalar(a, b) => {
                n += m;
                c = c.try_mul(&lam.pow_i64(*m)?)?;
            }
            PointOnLine::Finite(a) => {
                let d = a.try_sub(b)?;
                c = c.try_mul(&d.pow_i64(*m)?)?;
                g = series_mul(&g, &binomial_series(&lam.try_div(&d)?, *m, window)?)?;
            }
            PointOnLine::Infinity => {
                // (1/(lam t) - b)^m = (lam t)^{-m} (1 - b lam t)^m
                n -= m;
                c = c.try_mul(&lam.pow_i64(-m)?)?;
                g = series_mul(&g, &binomial_series(&(-&b.try_mul(lam)?), *m, window)?)?;
            }
        }
    }
    let mut h = LaurentSeries::one(field);
    if u.has_exp() {
        let q = u.exp_local(s, lam, window)?;
        let at = |e: i64| q.coeff(e).ok_or(SeriesError::ExponentOutsideWindow(e));
        let principal: Vec<Scalar> = (q.lo()..0).map(at).collect::<Result<_, _>>()?;
        if !principal.is_empty() {
            let p = LaurentSeries::polynomial(field, q.lo(), principal)?;
            h = series_exp(&p, window)?;
        }
        if let Some(q0) = q.coeff(0) {
            c = c.try_mul(&q0.exp()?)?;
        }
        if q.hi() >= 1 {
            let positive: Vec<Scalar> = (1.max(q.lo())..=q.hi()).map(at).collect::<Result<_, _>>()?;
            let p = LaurentSeries::new(field, 1.max(q.lo()), positive, true, q.hi_exact())?;
            g = series_mul(&g, &series_exp(&p, window)?)?;
        } else if !q.hi_exact() {
            return Err(SeriesError::ExponentOutsideWindow(1).into());
        }
    }
    if !g.is_polynomial() || g.hi() > window {
        g = g.restrict(0, window.min(g.hi()))?;
    }
    let c_err = if field.is_exact() || matches!(field, FieldTag::PAdic { .. }) {
        0.0
    } else {
        4.0 * f64::EPSILON * c.abs_at() * (1 + u.factors.len()) as f64
    };
    Ok(BirkhoffFactorization { c, n, g, h, c_err })
}

/// Laurent expansion of `u` at `s` in `t`, where `x = a + t` or `x = 1/t`.
pub fn local_expansion(u: &AnalyticUnit, s: &PointOnLine, window: i64) -> Result<LaurentSeries, CurveError> {
    let one = Scalar::one(u.field());
    scaled_expansion(u, s, window, &one)
}

/// Expansion in `t` with `x = a + lam t` (or `x = 1/(lam t)`). When both
/// factors carry open tails they are computed on a wider window first so
/// the product is reliable on `|e| <= window`.
fn scaled_expansion(u: &AnalyticUnit, s: &PointOnLine, window: i64, lam: &Scalar) -> Result<LaurentSeries, CurveError> {
    let fact = local_factorization(u, s, window, lam)?;
    if fact.g.is_polynomial() || fact.h.is_polynomial() {
        return Ok(recompose(&fact, window + fact.n.abs(), 1e-12)?);
    }
    let wide = 2 * window + 32;
    let fact = local_factorization(u, s, wide, lam)?;
    let full = recompose(&fact, wide + fact.n.abs(), 1e-12)?;
    Ok(full.restrict(-window + fact.n, window + fact.n)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Tame,
    Plus,
    Minus,
    Contour,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Tame, Method::Plus, Method::Minus, Method::Contour, Method::Oracle];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Tame => "tame",
            Method::Plus => "plus",
            Method::Minus => "minus",
            Method::Contour => "contour",
            Method::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = CurveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| CurveError::UnknownMethod(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalOpts {
    /// Series window for local expansions.
    pub window: i64,
    /// Contour samples.
    pub samples: usize,
    /// Compression window of the oracle.
    pub oracle_window: usize,
    /// Multiply the plus/minus closed form by `(-1)^{n1 n2}`.
    pub graded_sign: bool,
    /// Complex pass tolerance for the reciprocity product.
    pub tol: f64,
}

impl Default for LocalOpts {
    fn default() -> Self {
        LocalOpts {
            window: 64,
            samples: 2048,
            oracle_window: 32,
            graded_sign: false,
            tol: 1e-8,
        }
    }
}

/// Dyadic local scale: `x = a + lam t` keeps the other support points
/// outside `|t| = 2`, and `x = 1/(lam t)` keeps all finite points inside
/// `|x| = 1/(2 lam)`.
fn local_scale(f: &AnalyticUnit, g: &AnalyticUnit, s: &PointOnLine) -> Scalar {
    let finite: Vec<Complex64> = support(f, g)
        .into_iter()
        .filter_map(|p| match p {
            PointOnLine::Finite(a) => a.to_complex(),
            PointOnLine::Infinity => None,
        })
        .collect();
    let target = match s {
        PointOnLine::Finite(a) => {
            let a = a.to_complex().unwrap_or_default();
            let d = finite
                .iter()
                .map(|b| (b - a).norm())
                .filter(|&d| d > 1e-12)
                .fold(f64::INFINITY, f64::min);
            (d / 2.0).min(1.0)
        }
        PointOnLine::Infinity => {
            let r = finite.iter().map(|b| b.norm()).fold(0.0, f64::max);
            (1.0 / (2.0 * r)).min(1.0)
        }
    };
    let mut k = 0;
    while 0.5f64.powi(k) > target && k < 60 {
        k += 1;
    }
    Scalar::from_rational(&BigRational::new(BigInt::one(), BigInt::one() << k), f.field())
}

fn local_function<'a>(u: &'a AnalyticUnit, s: &PointOnLine, lam: f64) -> impl Fn(Complex64) -> (Complex64, Complex64) + 'a {
    let at = s.clone();
    move |t: Complex64| match &at {
        PointOnLine::Finite(a) => {
            let a = a.to_complex().unwrap_or_default();
            let (v, d) = u.eval_d(a + lam * t).unwrap_or_default();
            (v, lam * d)
        }
        PointOnLine::Infinity => {
            let x = 1.0 / (lam * t);
            let (v, d) = u.eval_d(x).unwrap_or_default();
            (v, -d / (lam * t * t))
        }
    }
}

/// Local symbol of `(f, g)` at `s`.
pub fn local_symbol(
    f: &AnalyticUnit,
    g: &AnalyticUnit,
    s: &PointOnLine,
    method: Method,
    opts: &LocalOpts,
) -> Result<SymbolValue, CurveError> {
    let field = f.field();
    if g.field() != field {
        return Err(CurveError::FieldMismatch(field, g.field()));
    }
    let one = Scalar::one(field);
    match method {
        // the closed forms read only leading data, so short windows suffice
        Method::Tame => {
            let w = f.valuation_at(s).abs().max(g.valuation_at(s).abs()) + 1;
            let fe = local_expansion(f, s, w)?;
            let ge = local_expansion(g, s, w)?;
            Ok(tame_symbol(&fe, &ge)?)
        }
        Method::Plus | Method::Minus => {
            let ff = local_factorization(f, s, 1, &one)?;
            let gf = local_factorization(g, s, 1, &one)?;
            let plus = plus_symbol_from_factors(&ff, &gf, opts.graded_sign)?;
            if method == Method::Plus {
                Ok(plus)
            } else {
                Ok(symbol_inv(&plus)?)
            }
        }
        Method::Contour => {
            if field != FieldTag::ComplexFloat {
                return Err(CurveError::MethodUnsupported { method, field });
            }
            let lam = local_scale(f, g, s).abs_at();
            let fl = FnEval(local_function(f, s, lam));
            let gl = FnEval(local_function(g, s, lam));
            Ok(deligne_symbol(&fl, &gl, 1.0, opts.samples)?)
        }
        Method::Oracle => {
            if matches!(field, FieldTag::PAdic { .. }) {
                return Err(CurveError::MethodUnsupported { method, field });
            }
            let lam = local_scale(f, g, s);
            let w = opts.window.max(opts.oracle_window as i64 + 16);
            let fe = scaled_expansion(f, s, w, &lam)?;
            let ge = scaled_expansion(g, s, w, &lam)?;
            let oo = OracleOpts {
                graded: opts.graded_sign,
                ..OracleOpts::default()
            };
            Ok(oracle_commutator(&fe, &ge, opts.oracle_window, &oo)?)
        }
    }
}

/// One support point of a reciprocity report.
#[derive(Clone, Debug, PartialEq)]
pub struct PointReport {
    pub point: PointOnLine,
    pub v_f: i64,
    pub v_g: i64,
    pub symbol: SymbolValue,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReciprocityReport {
    pub points: Vec<PointReport>,
    pub product: Scalar,
    pub pass: bool,
    pub method: Method,
}

impl ReciprocityReport {
    /// Ordered product of the listed symbols.
    pub fn recompute_product(&self) -> Result<Scalar, ScalarError> {
        let field = self.product.field();
        self.points
            .iter()
            .try_fold(Scalar::one(field), |acc, p| acc.try_mul(&p.symbol.value))
    }

    /// Sum of the per-point error estimates, relative to the product.
    pub fn err(&self) -> f64 {
        let rel: f64 = self
            .points
            .iter()
            .map(|p| p.symbol.err / p.symbol.value.abs_at().max(f64::MIN_POSITIVE))
            .sum();
        rel * self.product.abs_at()
    }
}

fn is_trivial(product: &Scalar, tol: f64) -> Result<bool, ScalarError> {
    Ok(match product {
        Scalar::Rational(_) => product.is_one(),
        Scalar::PAdic(_) => product.try_sub(&Scalar::one(product.field()))?.is_zero(),
        Scalar::Complex(z) => (z - 1.0).norm() <= tol,
    })
}

/// Product of local symbols over the minimal support.
pub fn verify_reciprocity(
    f: &AnalyticUnit,
    g: &AnalyticUnit,
    method: Method,
    opts: &LocalOpts,
) -> Result<ReciprocityReport, CurveError> {
    verify_reciprocity_at(f, g, &support(f, g), method, opts)
}

/// Product of local symbols over `points`, which must contain the support.
/// Any failing point fails the whole report.
pub fn verify_reciprocity_at(
    f: &AnalyticUnit,
    g: &AnalyticUnit,
    points: &[PointOnLine],
    method: Method,
    opts: &LocalOpts,
) -> Result<ReciprocityReport, CurveError> {
    let field = f.field();
    if g.field() != field {
        return Err(CurveError::FieldMismatch(field, g.field()));
    }
    let mut out = Vec::with_capacity(points.len());
    let mut product = Scalar::one(field);
    for s in points {
        let symbol = local_symbol(f, g, s, method, opts).map_err(|e| CurveError::PointFailed {
            point: s.to_string(),
            message: e.to_string(),
        })?;
        product = product.try_mul(&symbol.value)?;
        out.push(PointReport {
            point: s.clone(),
            v_f: f.valuation_at(s),
            v_g: g.valuation_at(s),
            symbol,
        });
    }
    let pass = is_trivial(&product, opts.tol)?;
    Ok(ReciprocityReport {
        points: out,
        product,
        pass,
        method,
    })
}

/// Canonical order on points: finite points by scalar order, infinity last.
pub fn cmp_points(a: &PointOnLine, b: &PointOnLine) -> Ordering {
    match (a, b) {
        (PointOnLine::Finite(x), PointOnLine::Finite(y)) => x.cmp_canonical(y),
        (PointOnLine::Finite(_), PointOnLine::Infinity) => Ordering::Less,
        (PointOnLine::Infinity, PointOnLine::Finite(_)) => Ordering::Greater,
        (PointOnLine::Infinity, PointOnLine::Infinity) => Ordering::Equal,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::rational;

    const Q: FieldTag = FieldTag::ExactRational;
    const C: FieldTag = FieldTag::ComplexFloat;

    fn s(n: i64, field: FieldTag) -> Scalar {
        Scalar::from_i64(n, field)
    }

    fn r(n: i64) -> BigRational {
        rational(n, 1)
    }

    /// `x`, `1 - x`, `x e^x`, `2x` and friends.
    fn x(field: FieldTag) -> AnalyticUnit {
        AnalyticUnit::from_factors(s(1, field), vec![(s(0, field), 1)]).unwrap()
    }

    fn one_minus_x(field: FieldTag) -> AnalyticUnit {
        AnalyticUnit::from_factors(s(-1, field), vec![(s(1, field), 1)]).unwrap()
    }

    fn fin(n: i64, field: FieldTag) -> PointOnLine {
        PointOnLine::Finite(s(n, field))
    }

    #[test]
    fn split_examples() {
        // 2x^3 - 2x = 2 x (x - 1)(x + 1)
        let (lead, roots) = split_rational_polynomial(&[r(0), r(-2), r(0), r(2)]).unwrap();
        assert_eq!(lead, r(2));
        assert_eq!(roots, vec![(r(-1), 1), (r(0), 1), (r(1), 1)]);
        let (_, roots) = split_rational_polynomial(&[rational(1, 4), r(-1), r(1)]).unwrap();
        assert_eq!(roots, vec![(rational(1, 2), 2)]);
        assert_eq!(split_rational_polynomial(&[r(1), r(0), r(1)]), Err(CurveError::DoesNotSplit));
    }

    #[test]
    fn expansion_examples() {
        let t = LaurentSeries::from_ints(Q, 1, &[1]);
        assert_eq!(local_expansion(&x(Q), &fin(0, Q), 8).unwrap(), t);
        let tinv = LaurentSeries::from_ints(Q, -1, &[1]);
        assert_eq!(local_expansion(&x(Q), &PointOnLine::Infinity, 8).unwrap(), tinv);
        // exp(1/x) at infinity is exp(t)
        let e = AnalyticUnit::new(s(1, C), vec![], vec![r(1)], vec![r(0), r(1)]).unwrap();
        let loc = local_expansion(&e, &PointOnLine::Infinity, 12).unwrap();
        let mut fact = 1.0;
        for k in 0..10 {
            if k > 0 {
                fact *= k as f64;
            }
            let c = loc.coeff(k).unwrap().to_complex().unwrap();
            assert!((c.re - 1.0 / fact).abs() < 1e-14, "{k}: {c}");
        }
        // 1/(x - 2) at 0 is -1/2 (1 + t/2 + t^2/4 + ...)
        let u = AnalyticUnit::from_factors(s(1, Q), vec![(s(2, Q), -1)]).unwrap();
        let loc = local_expansion(&u, &fin(0, Q), 6).unwrap();
        assert_eq!(loc.coeff(3).unwrap(), Scalar::Rational(rational(-1, 16)));
    }

    #[test]
    fn support_examples() {
        assert_eq!(support(&x(Q), &one_minus_x(Q)), vec![fin(0, Q), fin(1, Q), PointOnLine::Infinity]);
        assert_eq!(support(&x(Q), &x(Q)), vec![fin(0, Q), PointOnLine::Infinity]);
        let f = AnalyticUnit::new(s(1, C), vec![(s(0, C), 1)], vec![r(1)], vec![r(0), r(1)]).unwrap();
        let g = AnalyticUnit::from_factors(s(2, C), vec![(s(0, C), 1)]).unwrap();
        assert_eq!(support(&f, &g), vec![fin(0, C), PointOnLine::Infinity]);
    }

    #[test]
    fn local_symbol_examples() {
        let opts = LocalOpts::default();
        let v = local_symbol(&x(Q), &one_minus_x(Q), &fin(0, Q), Method::Tame, &opts).unwrap();
        assert_eq!(v.value, s(1, Q));
        // x e^x and 2x at 0 under the closed form
        let f = AnalyticUnit::new(s(1, C), vec![(s(0, C), 1)], vec![r(0), r(1)], vec![r(1)]).unwrap();
        let g = AnalyticUnit::from_factors(s(2, C), vec![(s(0, C), 1)]).unwrap();
        let v = local_symbol(&f, &g, &fin(0, C), Method::Plus, &opts).unwrap();
        assert!(v.value.approx_eq(&Scalar::complex(2.0, 0.0), 1e-12));
        let p = FieldTag::padic(5, 8).unwrap();
        let f = x(p);
        let g = AnalyticUnit::from_factors(s(1, p), vec![(s(5, p), 1)]).unwrap();
        let v = local_symbol(&f, &g, &PointOnLine::Infinity, Method::Tame, &opts).unwrap();
        assert_eq!(v.value, s(-1, p));
    }

    #[test]
    fn reciprocity_examples() {
        let opts = LocalOpts::default();
        let rep = verify_reciprocity(&x(Q), &one_minus_x(Q), Method::Tame, &opts).unwrap();
        assert!(rep.pass);
        assert!(rep.points.iter().all(|p| p.symbol.value == s(1, Q)));
        assert_eq!(rep.recompute_product().unwrap(), rep.product);

        let f = AnalyticUnit::new(s(1, C), vec![(s(0, C), 1)], vec![r(0), r(1)], vec![r(1)]).unwrap();
        let g = AnalyticUnit::from_factors(s(2, C), vec![(s(0, C), 1)]).unwrap();
        let rep = verify_reciprocity(&f, &g, Method::Plus, &opts).unwrap();
        assert!(rep.pass);
        assert!(rep.points[1].symbol.value.approx_eq(&Scalar::complex(0.5, 0.0), 1e-12));

        let p = FieldTag::padic(5, 8).unwrap();
        let g = AnalyticUnit::from_factors(s(1, p), vec![(s(5, p), 1)]).unwrap();
        let rep = verify_reciprocity(&x(p), &g, Method::Tame, &opts).unwrap();
        let values: Vec<Scalar> = rep.points.iter().map(|p| p.symbol.value.clone()).collect();
        let fifth = Scalar::from_rational(&rational(1, 5), p);
        assert_eq!(values, vec![s(-5, p), fifth, s(-1, p)]);
        assert!(rep.pass);
    }

    #[test]
    fn plus_symbol_of_x_and_one_minus_x_is_minus_one() {
        let rep = verify_reciprocity(&x(Q), &one_minus_x(Q), Method::Plus, &LocalOpts::default()).unwrap();
        assert_eq!(rep.product, s(-1, Q));
        assert!(!rep.pass);
        let graded = LocalOpts {
            graded_sign: true,
            ..LocalOpts::default()
        };
        assert!(verify_reciprocity(&x(Q), &one_minus_x(Q), Method::Plus, &graded).unwrap().pass);
    }

    #[test]
    fn contour_and_oracle_agree_with_tame() {
        // f = 2 (x - 1/2)(x + 3)^-1, g = (x - 2)^2 / 3
        let f = AnalyticUnit::from_factors(s(2, C), vec![(Scalar::complex(0.5, 0.0), 1), (s(-3, C), -1)]).unwrap();
        let g = AnalyticUnit::from_factors(Scalar::complex(1.0 / 3.0, 0.0), vec![(s(2, C), 2)]).unwrap();
        let opts = LocalOpts::default();
        for pt in support(&f, &g) {
            let tame = local_symbol(&f, &g, &pt, Method::Tame, &opts).unwrap();
            let contour = local_symbol(&f, &g, &pt, Method::Contour, &opts).unwrap();
            assert!(contour.value.approx_eq(&tame.value, 1e-8), "{pt}: {} vs {}", contour.value, tame.value);
            let oracle = local_symbol(&f, &g, &pt, Method::Oracle, &opts).unwrap();
            assert!(
                (oracle.value.abs_at() - tame.value.abs_at()).abs() < 1e-8,
                "{pt}: {} vs {}",
                oracle.value,
                tame.value
            );
        }
    }

    #[test]
    fn regular_points_are_trivial() {
        let opts = LocalOpts::default();
        let mut pts = support(&x(Q), &one_minus_x(Q));
        pts.insert(1, fin(7, Q));
        let rep = verify_reciprocity_at(&x(Q), &one_minus_x(Q), &pts, Method::Tame, &opts).unwrap();
        assert_eq!(rep.points[1].symbol.value, s(1, Q));
        assert!(rep.pass);
    }

    #[test]
    fn translation_matches_expansion_at_shifted_point() {
        let u = AnalyticUnit::new(
            s(3, C),
            vec![(s(1, C), 2), (s(-2, C), -1)],
            vec![r(1), r(1)],
            vec![r(-1), r(1)],
        )
        .unwrap();
        let a = rational(1, 1);
        let shifted = u.translate(&a).unwrap();
        let e1 = local_expansion(&u, &fin(1, C), 16).unwrap();
        let e0 = local_expansion(&shifted, &fin(0, C), 16).unwrap();
        assert!(e1.approx_eq(&e0, 1e-10));
    }

    #[test]
    fn rejects_bad_units() {
        assert_eq!(AnalyticUnit::constant_unit(s(0, Q)), Err(CurveError::ZeroConstant));
        assert!(matches!(
            AnalyticUnit::from_factors(s(1, Q), vec![(s(1, Q), 1), (s(1, Q), 2)]),
            Err(CurveError::DuplicateRoot(_))
        ));
        assert!(matches!(
            AnalyticUnit::new(s(1, Q), vec![], vec![r(1)], vec![r(0), r(1)]),
            Err(CurveError::ExpPartUnsupported(_))
        ));
        assert_eq!(
            AnalyticUnit::new(s(1, C), vec![], vec![r(1)], vec![r(1), r(0), r(1)]),
            Err(CurveError::DoesNotSplit)
        );
    }

    #[test]
    fn bare_double_pole_in_exponent() {
        // exp(2/x^2) at 0: principal part 2 t^{-2}, nothing at t^{-1}
        let u = AnalyticUnit::new(s(1, C), vec![], vec![r(2)], vec![r(0), r(0), r(1)]).unwrap();
        let fact = local_factorization(&u, &fin(0, C), 8, &s(1, C)).unwrap();
        assert_eq!(fact.n, 0);
        assert!(fact.c.approx_eq(&s(1, C), 1e-15));
        assert!(fact.h.coeff(-2).unwrap().approx_eq(&s(2, C), 1e-15));
        assert!(fact.h.coeff(-1).unwrap().approx_eq(&s(0, C), 1e-15));
    }
}
