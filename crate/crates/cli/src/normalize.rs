//! Turns parsed expressions into units on the line or Laurent series.
//!
//! Unit expressions are evaluated over the Gaussian rationals in factored
//! form, so literals stay exact until the target field is chosen. Sums
//! force an expansion, after which the polynomials are split again.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;
use weilsym_core::curves::split_rational_polynomial;
use weilsym_core::laurent::{series_add, series_exp, series_inverse, series_mul, series_sub};
use weilsym_core::scalars::parse_rational;
use weilsym_core::{AnalyticUnit, CurveError, FieldTag, LaurentSeries, Scalar, ScalarError, SeriesError};

use crate::parser::Expr;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormalizeError {
    #[error("`{0}` is not allowed here")]
    Unexpected(&'static str),
    #[error("expression mixes `x` and `t`")]
    MixedVariables,
    #[error("the imaginary unit needs the complex field")]
    ImaginaryOutsideComplex,
    #[error("exponent arguments must be rational functions of x with rational coefficients")]
    BadExponent,
    #[error("sums of exponential terms are not units of this family")]
    ExponentialSum,
    #[error("expression is identically zero")]
    Zero,
    #[error("division by zero")]
    DivideByZero,
    #[error("polynomial {0} does not split over the field")]
    DoesNotSplit(String),
    #[error("exponent {0} is too large")]
    PowerTooLarge(i64),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Largest exponent accepted in `^`.
const MAX_POWER: i64 = 4096;

/// `re + im i` with rational parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gauss {
    pub re: BigRational,
    pub im: BigRational,
}

impl Gauss {
    pub fn real(re: BigRational) -> Self {
        Gauss {
            re,
            im: BigRational::zero(),
        }
    }

    fn zero() -> Self {
        Self::real(BigRational::zero())
    }

    fn one() -> Self {
        Self::real(BigRational::one())
    }

    fn i() -> Self {
        Gauss {
            re: BigRational::zero(),
            im: BigRational::one(),
        }
    }

    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    fn inv(&self) -> Result<Self, NormalizeError> {
        let n = &self.re * &self.re + &self.im * &self.im;
        if n.is_zero() {
            return Err(NormalizeError::DivideByZero);
        }
        Ok(Gauss {
            re: &self.re / &n,
            im: -&self.im / &n,
        })
    }

    fn pow(&self, n: i64) -> Result<Self, NormalizeError> {
        let base = if n < 0 { self.inv()? } else { self.clone() };
        let mut out = Gauss::one();
        for _ in 0..n.unsigned_abs() {
            out = &out * &base;
        }
        Ok(out)
    }

    pub fn to_scalar(&self, field: FieldTag) -> Result<Scalar, NormalizeError> {
        match field {
            FieldTag::ComplexFloat => Ok(Scalar::complex(
                weilsym_core::scalars::rational_to_f64(&self.re),
                weilsym_core::scalars::rational_to_f64(&self.im),
            )),
            _ if !self.is_real() => Err(NormalizeError::ImaginaryOutsideComplex),
            _ => Ok(Scalar::from_rational(&self.re, field)),
        }
    }
}

impl Add for &Gauss {
    type Output = Gauss;
    fn add(self, o: &Gauss) -> Gauss {
        Gauss {
            re: &self.re + &o.re,
            im: &self.im + &o.im,
        }
    }
}

impl Sub for &Gauss {
    type Output = Gauss;
    fn sub(self, o: &Gauss) -> Gauss {
        Gauss {
            re: &self.re - &o.re,
            im: &self.im - &o.im,
        }
    }
}

impl Mul for &Gauss {
    type Output = Gauss;
    fn mul(self, o: &Gauss) -> Gauss {
        Gauss {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }
}

impl Div for &Gauss {
    type Output = Result<Gauss, NormalizeError>;
    fn div(self, o: &Gauss) -> Result<Gauss, NormalizeError> {
        Ok(self * &o.inv()?)
    }
}

impl Neg for &Gauss {
    type Output = Gauss;
    fn neg(self) -> Gauss {
        Gauss {
            re: -&self.re,
            im: -&self.im,
        }
    }
}

// ---- polynomials over Gauss, ascending ----

type Poly = Vec<Gauss>;

fn ptrim(mut p: Poly) -> Poly {
    while p.last().is_some_and(Gauss::is_zero) {
        p.pop();
    }
    p
}

fn padd(a: &[Gauss], b: &[Gauss], sign: bool) -> Poly {
    let mut out = vec![Gauss::zero(); a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] = &out[i] + x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] = if sign { &out[i] - y } else { &out[i] + y };
    }
    ptrim(out)
}

fn pmul(a: &[Gauss], b: &[Gauss]) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Gauss::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = &out[i + j] + &(x * y);
        }
    }
    ptrim(out)
}

/// Division by `x - r` when exact.
fn pdiv_linear(p: &[Gauss], r: &Gauss) -> Option<Poly> {
    let n = p.len().checked_sub(1)?;
    let mut q = vec![Gauss::zero(); n];
    let mut acc = p[n].clone();
    for k in (0..n).rev() {
        q[k] = acc.clone();
        acc = &(&acc * r) + &p[k];
    }
    acc.is_zero().then_some(q)
}

fn format_poly(p: &[Gauss]) -> String {
    let terms: Vec<String> = p
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(k, c)| {
            let c = if c.is_real() {
                c.re.to_string()
            } else {
                format!("({}+{}i)", c.re, c.im)
            };
            match k {
                0 => c,
                1 => format!("{c}*x"),
                _ => format!("{c}*x^{k}"),
            }
        })
        .collect();
    terms.join(" + ")
}

/// `c * prod (x - r)^m` in factored form.
#[derive(Clone, Debug, PartialEq)]
pub struct Factored {
    pub constant: Gauss,
    pub factors: Vec<(Gauss, i64)>,
}

impl Factored {
    fn constant(c: Gauss) -> Self {
        Factored {
            constant: c,
            factors: Vec::new(),
        }
    }

    fn mul(&self, o: &Factored) -> Factored {
        let mut factors = self.factors.clone();
        for (r, m) in &o.factors {
            match factors.iter_mut().find(|(s, _)| s == r) {
                Some(e) => e.1 += m,
                None => factors.push((r.clone(), *m)),
            }
        }
        factors.retain(|(_, m)| *m != 0);
        Factored {
            constant: &self.constant * &o.constant,
            factors,
        }
    }

    fn pow(&self, n: i64) -> Result<Factored, NormalizeError> {
        Ok(Factored {
            constant: self.constant.pow(n)?,
            factors: self
                .factors
                .iter()
                .filter(|_| n != 0)
                .map(|(r, m)| (r.clone(), m * n))
                .collect(),
        })
    }

    /// `(numerator, denominator)` polynomials.
    fn expand(&self) -> (Poly, Poly) {
        let mut num = vec![self.constant.clone()];
        let mut den = vec![Gauss::one()];
        for (r, m) in &self.factors {
            let lin = vec![-r, Gauss::one()];
            for _ in 0..m.unsigned_abs() {
                if *m > 0 {
                    num = pmul(&num, &lin);
                } else {
                    den = pmul(&den, &lin);
                }
            }
        }
        (num, den)
    }

    /// Splits `p` using the known roots `hints` first, then a rational
    /// root search on real polynomials.
    fn split(p: &[Gauss], hints: &[Gauss]) -> Result<Factored, NormalizeError> {
        let mut p = ptrim(p.to_vec());
        if p.is_empty() {
            return Err(NormalizeError::Zero);
        }
        let mut out = Factored::constant(Gauss::one());
        for r in hints {
            while let Some(q) = pdiv_linear(&p, r) {
                if p.len() < 2 {
                    break;
                }
                p = q;
                out = out.mul(&Factored {
                    constant: Gauss::one(),
                    factors: vec![(r.clone(), 1)],
                });
            }
        }
        let rest = if p.len() <= 1 {
            Factored::constant(p[0].clone())
        } else if p.len() == 2 {
            let root = (&(-&p[0]) / &p[1])?;
            Factored {
                constant: p[1].clone(),
                factors: vec![(root, 1)],
            }
        } else if p.iter().all(Gauss::is_real) {
            let real: Vec<BigRational> = p.iter().map(|c| c.re.clone()).collect();
            let (lead, roots) = split_rational_polynomial(&real).map_err(|_| NormalizeError::DoesNotSplit(format_poly(&p)))?;
            Factored {
                constant: Gauss::real(lead),
                factors: roots.into_iter().map(|(r, k)| (Gauss::real(r), k as i64)).collect(),
            }
        } else {
            return Err(NormalizeError::DoesNotSplit(format_poly(&p)));
        };
        Ok(out.mul(&rest))
    }

    fn add(&self, o: &Factored, subtract: bool) -> Result<Factored, NormalizeError> {
        let (a, b) = self.expand();
        let (c, d) = o.expand();
        let num = padd(&pmul(&a, &d), &pmul(&c, &b), subtract);
        let den = pmul(&b, &d);
        let hints: Vec<Gauss> = self.factors.iter().chain(o.factors.iter()).map(|(r, _)| r.clone()).collect();
        let top = Self::split(&num, &hints)?;
        let bottom = Self::split(&den, &hints)?;
        Ok(top.mul(&bottom.pow(-1)?))
    }
}

/// A unit in factored form with an exponential part over the rationals.
#[derive(Clone, Debug, PartialEq)]
struct UnitVal {
    base: Factored,
    /// `exp(num / den)`, `None` when absent.
    exp: Option<(Vec<BigRational>, Vec<BigRational>)>,
}

fn rat_poly(p: &[Gauss]) -> Option<Vec<BigRational>> {
    p.iter().map(|c| c.is_real().then(|| c.re.clone())).collect()
}

fn rat_add(a: &(Vec<BigRational>, Vec<BigRational>), b: &(Vec<BigRational>, Vec<BigRational>), sign: i64) -> (Vec<BigRational>, Vec<BigRational>) {
    let g = |p: &[BigRational]| p.iter().map(|c| Gauss::real(c.clone())).collect::<Poly>();
    let s = Gauss::real(BigRational::from_integer(sign.into()));
    let num = padd(&pmul(&g(&a.0), &g(&b.1)), &pmul(&[s], &pmul(&g(&b.0), &g(&a.1))), false);
    let den = pmul(&g(&a.1), &g(&b.1));
    (rat_poly(&num).expect("real"), rat_poly(&den).expect("real"))
}

fn literal(s: &str) -> Result<Gauss, NormalizeError> {
    parse_rational(s)
        .map(Gauss::real)
        .ok_or_else(|| ScalarError::Parse(s.to_string()).into())
}

/// An exponent as `num / den` without splitting either side.
fn ratfun(e: &Expr) -> Result<(Poly, Poly), NormalizeError> {
    let one = || vec![Gauss::one()];
    Ok(match e {
        Expr::Num(s) => (ptrim(vec![literal(s)?]), one()),
        Expr::I => (vec![Gauss::i()], one()),
        Expr::X => (vec![Gauss::zero(), Gauss::one()], one()),
        Expr::T | Expr::Exp(_) => return Err(NormalizeError::BadExponent),
        Expr::Neg(a) => {
            let (n, d) = ratfun(a)?;
            (pmul(&[-&Gauss::one()], &n), d)
        }
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            let (n1, d1) = ratfun(a)?;
            let (n2, d2) = ratfun(b)?;
            (padd(&pmul(&n1, &d2), &pmul(&n2, &d1), matches!(e, Expr::Sub(..))), pmul(&d1, &d2))
        }
        Expr::Mul(a, b) => {
            let (n1, d1) = ratfun(a)?;
            let (n2, d2) = ratfun(b)?;
            (pmul(&n1, &n2), pmul(&d1, &d2))
        }
        Expr::Div(a, b) => {
            let (n1, d1) = ratfun(a)?;
            let (n2, d2) = ratfun(b)?;
            if n2.is_empty() {
                return Err(NormalizeError::DivideByZero);
            }
            (pmul(&n1, &d2), pmul(&d1, &n2))
        }
        Expr::Pow(a, n) => {
            if n.abs() > MAX_POWER {
                return Err(NormalizeError::PowerTooLarge(*n));
            }
            let (mut num, mut den) = ratfun(a)?;
            if *n < 0 {
                if num.is_empty() {
                    return Err(NormalizeError::DivideByZero);
                }
                std::mem::swap(&mut num, &mut den);
            }
            let (mut pn, mut pd) = (one(), one());
            for _ in 0..n.unsigned_abs() {
                pn = pmul(&pn, &num);
                pd = pmul(&pd, &den);
            }
            (pn, pd)
        }
    })
}

fn unit_val(e: &Expr) -> Result<UnitVal, NormalizeError> {
    let plain = |f: Factored| UnitVal { base: f, exp: None };
    Ok(match e {
        Expr::Num(s) => plain(Factored::constant(literal(s)?)),
        Expr::I => plain(Factored::constant(Gauss::i())),
        Expr::X => plain(Factored {
            constant: Gauss::one(),
            factors: vec![(Gauss::zero(), 1)],
        }),
        Expr::T => return Err(NormalizeError::MixedVariables),
        Expr::Neg(a) => {
            let v = unit_val(a)?;
            UnitVal {
                base: Factored::constant(-&Gauss::one()).mul(&v.base),
                ..v
            }
        }
        Expr::Mul(a, b) | Expr::Div(a, b) => {
            let x = unit_val(a)?;
            let mut y = unit_val(b)?;
            if matches!(e, Expr::Div(..)) {
                if y.base.constant.is_zero() {
                    return Err(NormalizeError::DivideByZero);
                }
                y.base = y.base.pow(-1)?;
                y.exp = y.exp.map(|(n, d)| (n.iter().map(|c| -c).collect(), d));
            }
            let exp = match (&x.exp, &y.exp) {
                (None, None) => None,
                (Some(p), None) | (None, Some(p)) => Some(p.clone()),
                (Some(p), Some(q)) => Some(rat_add(p, q, 1)),
            };
            UnitVal {
                base: x.base.mul(&y.base),
                exp,
            }
        }
        Expr::Pow(a, n) => {
            if n.abs() > MAX_POWER {
                return Err(NormalizeError::PowerTooLarge(*n));
            }
            let v = unit_val(a)?;
            if v.base.constant.is_zero() && *n < 0 {
                return Err(NormalizeError::DivideByZero);
            }
            let scale = BigRational::from_integer((*n).into());
            UnitVal {
                base: v.base.pow(*n)?,
                exp: v.exp.map(|(num, d)| (num.iter().map(|c| c * &scale).collect(), d)),
            }
        }
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            let x = unit_val(a)?;
            let y = unit_val(b)?;
            if x.exp.is_some() || y.exp.is_some() {
                return Err(NormalizeError::ExponentialSum);
            }
            plain(x.base.add(&y.base, matches!(e, Expr::Sub(..)))?)
        }
        Expr::Exp(arg) => {
            let (num, den) = ratfun(arg)?;
            let (Some(num), Some(den)) = (rat_poly(&num), rat_poly(&den)) else {
                return Err(NormalizeError::BadExponent);
            };
            UnitVal {
                base: Factored::constant(Gauss::one()),
                exp: Some((num, den)),
            }
        }
    })
}

/// Evaluates an `x`-expression to a unit over `field`.
pub fn to_unit(e: &Expr, field: FieldTag) -> Result<AnalyticUnit, NormalizeError> {
    let v = unit_val(e)?;
    if v.base.constant.is_zero() {
        return Err(NormalizeError::Zero);
    }
    let factors = v
        .base
        .factors
        .iter()
        .map(|(r, m)| Ok((r.to_scalar(field)?, *m)))
        .collect::<Result<Vec<_>, NormalizeError>>()?;
    let (num, den) = v.exp.unwrap_or_default();
    Ok(AnalyticUnit::new(v.base.constant.to_scalar(field)?, factors, num, den)?)
}

/// Evaluates a `t`-expression to a Laurent series over `field`; negative
/// powers and quotients expand on `window`.
pub fn to_series(e: &Expr, field: FieldTag, window: i64) -> Result<LaurentSeries, NormalizeError> {
    let rec = |a: &Expr| to_series(a, field, window);
    Ok(match e {
        Expr::Num(s) => LaurentSeries::monomial(literal(s)?.to_scalar(field)?, 0),
        Expr::I => LaurentSeries::monomial(Gauss::i().to_scalar(field)?, 0),
        Expr::T => LaurentSeries::monomial(Scalar::one(field), 1),
        Expr::X => return Err(NormalizeError::MixedVariables),
        Expr::Neg(a) => rec(a)?.neg(),
        Expr::Add(a, b) => series_add(&rec(a)?, &rec(b)?)?,
        Expr::Sub(a, b) => series_sub(&rec(a)?, &rec(b)?)?,
        Expr::Mul(a, b) => series_mul(&rec(a)?, &rec(b)?)?,
        Expr::Div(a, b) => {
            let d = rec(b)?;
            if d.is_zero() {
                return Err(NormalizeError::DivideByZero);
            }
            series_mul(&rec(a)?, &series_inverse(&d, window)?)?
        }
        Expr::Pow(a, n) => {
            if n.abs() > MAX_POWER {
                return Err(NormalizeError::PowerTooLarge(*n));
            }
            let base = rec(a)?;
            if base.is_zero() && *n < 0 {
                return Err(NormalizeError::DivideByZero);
            }
            let base = if *n < 0 { series_inverse(&base, window)? } else { base };
            let mut out = LaurentSeries::one(field);
            let mut sq = base;
            let mut k = n.unsigned_abs();
            while k > 0 {
                if k & 1 == 1 {
                    out = series_mul(&out, &sq)?;
                }
                k >>= 1;
                if k > 0 {
                    sq = series_mul(&sq, &sq)?;
                }
            }
            out
        }
        Expr::Exp(a) => series_exp(&rec(a)?, window)?,
    })
}

/// True when the expression is a series in `t` rather than a unit in `x`.
pub fn is_series(e: &Expr) -> bool {
    e.mentions(&Expr::T)
}

/// Integer-valued rational, for tests and fixtures.
pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;
    use weilsym_core::scalars::rational;

    const Q: FieldTag = FieldTag::ExactRational;

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::Rational(rational(n, d))
    }

    #[test]
    fn factored_forms() {
        let u = to_unit(&parse("2*x^3*(x-1)^-2").unwrap(), Q).unwrap();
        assert_eq!(u.constant(), &q(2, 1));
        assert_eq!(u.factors(), &[(q(0, 1), 3), (q(1, 1), -2)]);
        let u = to_unit(&parse("x").unwrap(), Q).unwrap();
        assert_eq!(u.factors(), &[(q(0, 1), 1)]);
        let u = to_unit(&parse("1-x").unwrap(), Q).unwrap();
        assert_eq!((u.constant(), u.factors()), (&q(-1, 1), &[(q(1, 1), 1)][..]));
        let u = to_unit(&parse("x^2-1/4").unwrap(), Q).unwrap();
        assert_eq!(u.factors(), &[(q(-1, 2), 1), (q(1, 2), 1)]);
        // x/x cancels completely
        let u = to_unit(&parse("(x+1)/(x+1)*3").unwrap(), Q).unwrap();
        assert!(u.factors().is_empty());
    }

    #[test]
    fn exponential_parts() {
        let u = to_unit(&parse("exp((x^2+1)/x)").unwrap(), FieldTag::ComplexFloat).unwrap();
        assert_eq!(u.exp_poles(), &[(int(0), 1)]);
        assert_eq!(u.exp_num(), &[int(1), int(0), int(1)]);
        assert_eq!(u.exp_den(), &[int(0), int(1)]);
        assert_eq!(
            to_unit(&parse("exp(x)+1").unwrap(), FieldTag::ComplexFloat),
            Err(NormalizeError::ExponentialSum)
        );
        assert_eq!(to_unit(&parse("exp(i*x)").unwrap(), FieldTag::ComplexFloat), Err(NormalizeError::BadExponent));
        assert!(matches!(
            to_unit(&parse("exp(x)").unwrap(), Q),
            Err(NormalizeError::Curve(CurveError::ExpPartUnsupported(_)))
        ));
    }

    #[test]
    fn complex_roots() {
        let u = to_unit(&parse("(x-i)*(x+i)").unwrap(), FieldTag::ComplexFloat).unwrap();
        assert_eq!(u.factors().len(), 2);
        assert!(matches!(to_unit(&parse("x^2+1").unwrap(), Q), Err(NormalizeError::DoesNotSplit(_))));
        assert_eq!(to_unit(&parse("i").unwrap(), Q), Err(NormalizeError::ImaginaryOutsideComplex));
    }

    #[test]
    fn series_forms() {
        let s = to_series(&parse("5+t").unwrap(), Q, 8).unwrap();
        assert_eq!(s, LaurentSeries::from_ints(Q, 0, &[5, 1]));
        let s = to_series(&parse("1/(1-t/2)").unwrap(), Q, 4).unwrap();
        assert_eq!(s.coeff(3).unwrap(), q(1, 8));
        let s = to_series(&parse("t^-2*(1+t)").unwrap(), Q, 4).unwrap();
        assert_eq!(s, LaurentSeries::from_ints(Q, -2, &[1, 1]));
        assert_eq!(to_series(&parse("x+t").unwrap(), Q, 4), Err(NormalizeError::MixedVariables));
    }
}
