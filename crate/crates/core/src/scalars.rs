//! Coefficient fields: exact rationals, complex floats and p-adic numbers
//! with capped relative precision, behind one `Scalar` type.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Default absolute tolerance for complex comparisons.
pub const COMPLEX_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalarError {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("p-adic precision must be at least 1")]
    ZeroPrecision,
    #[error("{prime}^{precision} exceeds the supported p-adic modulus (2^62)")]
    ModulusTooLarge { prime: u64, precision: u32 },
    #[error("field mismatch: {0} vs {1}")]
    FieldMismatch(FieldTag, FieldTag),
    #[error("division by zero")]
    DivideByZero,
    #[error("p-adic result has no significant digits left")]
    PrecisionExhausted,
    #[error("{value} is not {prime}-integral, reduction mod {prime}^{precision} is undefined")]
    DivisionByP {
        value: BigRational,
        prime: u64,
        precision: u32,
    },
    #[error("cannot parse scalar `{0}`")]
    Parse(String),
    #[error("{op} is not available over {field}")]
    Unsupported { op: &'static str, field: FieldTag },
    #[error("{0} does not converge for this argument")]
    ConvergenceGuard(&'static str),
}

/// Which coefficient field a scalar or series lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldTag {
    ExactRational,
    ComplexFloat,
    PAdic { prime: u64, precision: u32 },
}

impl FieldTag {
    /// Checked constructor for the p-adic tag.
    pub fn padic(prime: u64, precision: u32) -> Result<Self, ScalarError> {
        if !is_prime(prime) {
            return Err(ScalarError::NotPrime(prime));
        }
        if precision == 0 {
            return Err(ScalarError::ZeroPrecision);
        }
        match prime.checked_pow(precision) {
            Some(m) if m < (1u64 << 62) => Ok(FieldTag::PAdic { prime, precision }),
            _ => Err(ScalarError::ModulusTooLarge { prime, precision }),
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, FieldTag::ComplexFloat)
    }

    pub fn is_archimedean(&self) -> bool {
        !matches!(self, FieldTag::PAdic { .. })
    }

    pub fn prime(&self) -> Option<u64> {
        match self {
            FieldTag::PAdic { prime, .. } => Some(*prime),
            _ => None,
        }
    }

    /// Parses `rational`, `complex` or `padic:<p>:<M>`.
    pub fn parse(text: &str) -> Result<Self, ScalarError> {
        let t = text.trim();
        match t {
            "rational" | "q" | "Q" => Ok(FieldTag::ExactRational),
            "complex" | "c" | "C" => Ok(FieldTag::ComplexFloat),
            _ => {
                let parts: Vec<&str> = t.split(':').collect();
                if parts.len() == 3 && parts[0] == "padic" {
                    let p = parts[1]
                        .parse()
                        .map_err(|_| ScalarError::Parse(text.to_string()))?;
                    let m = parts[2]
                        .parse()
                        .map_err(|_| ScalarError::Parse(text.to_string()))?;
                    FieldTag::padic(p, m)
                } else {
                    Err(ScalarError::Parse(text.to_string()))
                }
            }
        }
    }
}

impl fmt::Display for FieldTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldTag::ExactRational => write!(f, "rational"),
            FieldTag::ComplexFloat => write!(f, "complex"),
            FieldTag::PAdic { prime, precision } => write!(f, "padic:{prime}:{precision}"),
        }
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum PAdicRepr {
    ExactZero,
    /// `p^valuation * unit + O(p^(valuation + digits))`; `digits == 0` is an
    /// inexact zero known only to absolute precision `valuation`.
    Value { valuation: i64, unit: u64, digits: u32 },
}

/// A p-adic number with at most `cap` significant digits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PAdic {
    prime: u64,
    cap: u32,
    repr: PAdicRepr,
}

fn pow_u64(p: u64, k: u32) -> u64 {
    p.pow(k)
}

fn mod_inverse(a: u64, m: u64) -> u64 {
    let (mut old_r, mut r) = (a as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    debug_assert_eq!(old_r, 1, "not invertible");
    old_s.rem_euclid(m as i128) as u64
}

fn strip_p(mut x: u128, p: u64) -> (u128, u32) {
    let mut e = 0;
    let p = p as u128;
    while x % p == 0 {
        x /= p;
        e += 1;
    }
    (x, e)
}

fn bigint_valuation(n: &BigInt, p: u64) -> (BigInt, i64) {
    let pb = BigInt::from(p);
    let mut m = n.clone();
    let mut v = 0;
    while (&m % &pb).is_zero() {
        m /= &pb;
        v += 1;
    }
    (m, v)
}

fn bigint_mod(n: &BigInt, m: u64) -> u64 {
    n.mod_floor(&BigInt::from(m)).to_u64().expect("residue fits")
}

impl PAdic {
    pub fn zero(prime: u64, cap: u32) -> Self {
        PAdic {
            prime,
            cap,
            repr: PAdicRepr::ExactZero,
        }
    }

    /// Embeds a rational number with `cap` significant digits.
    pub fn from_rational(q: &BigRational, prime: u64, cap: u32) -> Self {
        if q.is_zero() {
            return Self::zero(prime, cap);
        }
        let (num, vn) = bigint_valuation(q.numer(), prime);
        let (den, vd) = bigint_valuation(q.denom(), prime);
        let modulus = pow_u64(prime, cap);
        let n = bigint_mod(&num, modulus);
        let d = bigint_mod(&den, modulus);
        let unit = ((n as u128 * mod_inverse(d, modulus) as u128) % modulus as u128) as u64;
        PAdic {
            prime,
            cap,
            repr: PAdicRepr::Value {
                valuation: vn - vd,
                unit,
                digits: cap,
            },
        }
    }

    fn inexact_zero(prime: u64, cap: u32, abs_precision: i64) -> Self {
        PAdic {
            prime,
            cap,
            repr: PAdicRepr::Value {
                valuation: abs_precision,
                unit: 0,
                digits: 0,
            },
        }
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    /// `None` for zero (exact or to precision).
    pub fn valuation(&self) -> Option<i64> {
        match self.repr {
            PAdicRepr::Value {
                valuation, digits, ..
            } if digits > 0 => Some(valuation),
            _ => None,
        }
    }

    /// Unit part modulo `p^digits` (zero for zeros).
    pub fn unit(&self) -> u64 {
        match self.repr {
            PAdicRepr::Value { unit, .. } => unit,
            PAdicRepr::ExactZero => 0,
        }
    }

    /// Number of significant digits; 0 for zeros.
    pub fn digits(&self) -> u32 {
        match self.repr {
            PAdicRepr::Value { digits, .. } => digits,
            PAdicRepr::ExactZero => 0,
        }
    }

    /// Absolute precision `N` such that the value is known modulo `p^N`.
    pub fn absolute_precision(&self) -> Option<i64> {
        match self.repr {
            PAdicRepr::ExactZero => None,
            PAdicRepr::Value {
                valuation, digits, ..
            } => Some(valuation + digits as i64),
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        self.repr == PAdicRepr::ExactZero
    }

    pub fn is_zero(&self) -> bool {
        self.valuation().is_none()
    }

    pub fn abs(&self) -> f64 {
        match self.valuation() {
            Some(v) => (self.prime as f64).powi(-(v as i32)),
            None => 0.0,
        }
    }

    pub fn add(&self, other: &PAdic) -> PAdic {
        let (p, cap) = (self.prime, self.cap.min(other.cap));
        let (v1, u1, d1, v2, u2, d2) = match (self.repr, other.repr) {
            (PAdicRepr::ExactZero, _) => return *other,
            (_, PAdicRepr::ExactZero) => return *self,
            (
                PAdicRepr::Value {
                    valuation: v1,
                    unit: u1,
                    digits: d1,
                },
                PAdicRepr::Value {
                    valuation: v2,
                    unit: u2,
                    digits: d2,
                },
            ) => (v1, u1, d1, v2, u2, d2),
        };
        let abs = (v1 + d1 as i64).min(v2 + d2 as i64);
        let w = v1.min(v2);
        let span = abs - w;
        if span <= 0 {
            return PAdic::inexact_zero(p, cap, abs);
        }
        let span = span as u32;
        let modulus = pow_u64(p, span) as u128;
        let shifted = |u: u64, v: i64| -> u128 {
            let shift = (v - w) as u32;
            if shift >= span {
                0
            } else {
                (u as u128 % modulus) * pow_u64(p, shift) as u128 % modulus
            }
        };
        let s = (shifted(u1, v1) + shifted(u2, v2)) % modulus;
        if s == 0 {
            return PAdic::inexact_zero(p, cap, abs);
        }
        let (unit, e) = strip_p(s, p);
        let digits = (span - e).min(cap);
        PAdic {
            prime: p,
            cap,
            repr: PAdicRepr::Value {
                valuation: w + e as i64,
                unit: (unit % pow_u64(p, digits) as u128) as u64,
                digits,
            },
        }
    }

    pub fn neg(&self) -> PAdic {
        match self.repr {
            PAdicRepr::Value {
                valuation,
                unit,
                digits,
            } if digits > 0 => {
                let m = pow_u64(self.prime, digits);
                PAdic {
                    repr: PAdicRepr::Value {
                        valuation,
                        unit: (m - unit) % m,
                        digits,
                    },
                    ..*self
                }
            }
            _ => *self,
        }
    }

    pub fn mul(&self, other: &PAdic) -> PAdic {
        let cap = self.cap.min(other.cap);
        match (self.repr, other.repr) {
            (PAdicRepr::ExactZero, _) | (_, PAdicRepr::ExactZero) => PAdic::zero(self.prime, cap),
            (
                PAdicRepr::Value {
                    valuation: v1,
                    unit: u1,
                    digits: d1,
                },
                PAdicRepr::Value {
                    valuation: v2,
                    unit: u2,
                    digits: d2,
                },
            ) => {
                let digits = d1.min(d2);
                if digits == 0 {
                    // O(p^a) * p^b u is O(p^(a+b))
                    let abs = match (d1, d2) {
                        (0, 0) => v1 + v2,
                        (0, _) => v1 + v2,
                        _ => v1 + v2,
                    };
                    return PAdic::inexact_zero(self.prime, cap, abs);
                }
                let m = pow_u64(self.prime, digits) as u128;
                PAdic {
                    prime: self.prime,
                    cap,
                    repr: PAdicRepr::Value {
                        valuation: v1 + v2,
                        unit: ((u1 as u128 % m) * (u2 as u128 % m) % m) as u64,
                        digits,
                    },
                }
            }
        }
    }

    pub fn inv(&self) -> Result<PAdic, ScalarError> {
        match self.repr {
            PAdicRepr::ExactZero => Err(ScalarError::DivideByZero),
            PAdicRepr::Value { digits: 0, .. } => Err(ScalarError::PrecisionExhausted),
            PAdicRepr::Value {
                valuation,
                unit,
                digits,
            } => Ok(PAdic {
                repr: PAdicRepr::Value {
                    valuation: -valuation,
                    unit: mod_inverse(unit, pow_u64(self.prime, digits)),
                    digits,
                },
                ..*self
            }),
        }
    }

    /// Rebuilds a value from its serialized parts. `valuation = None` is the
    /// exact zero; `digits = 0` is a zero known to absolute precision
    /// `valuation`.
    pub fn from_parts(prime: u64, cap: u32, valuation: Option<i64>, unit: u64, digits: u32) -> Result<PAdic, ScalarError> {
        FieldTag::padic(prime, cap)?;
        let Some(valuation) = valuation else {
            return Ok(Self::zero(prime, cap));
        };
        if digits == 0 {
            return Ok(Self::inexact_zero(prime, cap, valuation));
        }
        if digits > cap || unit % prime == 0 || unit >= pow_u64(prime, digits) {
            return Err(ScalarError::Parse(format!("p-adic parts ({valuation}, {unit}, {digits})")));
        }
        Ok(PAdic {
            prime,
            cap,
            repr: PAdicRepr::Value {
                valuation,
                unit,
                digits,
            },
        })
    }

    /// Equality to the precision tracked by both operands.
    pub fn eq_to_precision(&self, other: &PAdic) -> bool {
        self.add(&other.neg()).is_zero()
    }

    fn canonical_key(&self) -> (i64, u64) {
        match self.valuation() {
            Some(v) => (v, self.unit()),
            None => (i64::MIN, 0),
        }
    }
}

impl fmt::Display for PAdic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.prime;
        match self.repr {
            PAdicRepr::ExactZero => write!(f, "0"),
            PAdicRepr::Value {
                valuation,
                digits: 0,
                ..
            } => write!(f, "O({p}^{valuation})"),
            PAdicRepr::Value {
                valuation,
                unit,
                digits,
            } => write!(
                f,
                "{unit}*{p}^{valuation} + O({p}^{})",
                valuation + digits as i64
            ),
        }
    }
}

/// Reduces a p-integral rational modulo `p^precision`.
pub fn padic_reduce(q: &BigRational, prime: u64, precision: u32) -> Result<u64, ScalarError> {
    let modulus = pow_u64(prime, precision);
    let d = bigint_mod(q.denom(), prime);
    if d == 0 {
        return Err(ScalarError::DivisionByP {
            value: q.clone(),
            prime,
            precision,
        });
    }
    let n = bigint_mod(q.numer(), modulus);
    let d = bigint_mod(q.denom(), modulus);
    Ok(((n as u128 * mod_inverse(d, modulus) as u128) % modulus as u128) as u64)
}

/// Lifts a rational into the p-adic field with `precision` significant digits.
pub fn padic_lift(q: &BigRational, prime: u64, precision: u32) -> Result<Scalar, ScalarError> {
    FieldTag::padic(prime, precision)?;
    Ok(Scalar::PAdic(PAdic::from_rational(q, prime, precision)))
}

/// An element of one of the supported coefficient fields.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Rational(BigRational),
    Complex(Complex64),
    PAdic(PAdic),
}

pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

impl Scalar {
    pub fn field(&self) -> FieldTag {
        match self {
            Scalar::Rational(_) => FieldTag::ExactRational,
            Scalar::Complex(_) => FieldTag::ComplexFloat,
            Scalar::PAdic(x) => FieldTag::PAdic {
                prime: x.prime,
                precision: x.cap,
            },
        }
    }

    pub fn from_rational(q: &BigRational, field: FieldTag) -> Scalar {
        match field {
            FieldTag::ExactRational => Scalar::Rational(q.clone()),
            FieldTag::ComplexFloat => Scalar::Complex(Complex64::new(rational_to_f64(q), 0.0)),
            FieldTag::PAdic { prime, precision } => {
                Scalar::PAdic(PAdic::from_rational(q, prime, precision))
            }
        }
    }

    pub fn from_i64(n: i64, field: FieldTag) -> Scalar {
        Scalar::from_rational(&BigRational::from_integer(BigInt::from(n)), field)
    }

    pub fn zero(field: FieldTag) -> Scalar {
        Scalar::from_i64(0, field)
    }

    pub fn one(field: FieldTag) -> Scalar {
        Scalar::from_i64(1, field)
    }

    pub fn complex(re: f64, im: f64) -> Scalar {
        Scalar::Complex(Complex64::new(re, im))
    }

    /// True for exact zeros, complex `0`, and p-adic zeros to tracked precision.
    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Rational(q) => q.is_zero(),
            Scalar::Complex(z) => *z == Complex64::new(0.0, 0.0),
            Scalar::PAdic(x) => x.is_zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Rational(q) => q.is_one(),
            Scalar::Complex(z) => *z == Complex64::new(1.0, 0.0),
            Scalar::PAdic(x) => x.eq_to_precision(&PAdic::from_rational(
                &BigRational::one(),
                x.prime,
                x.cap,
            )),
        }
    }

    /// The absolute value used by every norm: modulus, |q|, or p^(-v).
    pub fn abs_at(&self) -> f64 {
        match self {
            Scalar::Rational(q) => rational_to_f64(&q.abs()),
            Scalar::Complex(z) => z.norm(),
            Scalar::PAdic(x) => x.abs(),
        }
    }

    /// Exact absolute value where it is rational.
    pub fn abs_exact(&self) -> Option<BigRational> {
        match self {
            Scalar::Rational(q) => Some(q.abs()),
            Scalar::Complex(_) => None,
            Scalar::PAdic(x) => Some(match x.valuation() {
                None => BigRational::zero(),
                Some(v) => {
                    let p = BigInt::from(x.prime);
                    if v >= 0 {
                        BigRational::new(BigInt::one(), num_traits::pow(p, v as usize))
                    } else {
                        BigRational::from_integer(num_traits::pow(p, (-v) as usize))
                    }
                }
            }),
        }
    }

    pub fn to_complex(&self) -> Option<Complex64> {
        match self {
            Scalar::Rational(q) => Some(Complex64::new(rational_to_f64(q), 0.0)),
            Scalar::Complex(z) => Some(*z),
            Scalar::PAdic(_) => None,
        }
    }

    fn mismatch(&self, other: &Scalar) -> ScalarError {
        ScalarError::FieldMismatch(self.field(), other.field())
    }

    pub fn try_add(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Ok(Scalar::Rational(a + b)),
            (Scalar::Complex(a), Scalar::Complex(b)) => Ok(Scalar::Complex(a + b)),
            (Scalar::PAdic(a), Scalar::PAdic(b)) if a.prime == b.prime => {
                Ok(Scalar::PAdic(a.add(b)))
            }
            _ => Err(self.mismatch(other)),
        }
    }

    pub fn try_sub(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        self.try_add(&other.neg_ref())
    }

    pub fn try_mul(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Ok(Scalar::Rational(a * b)),
            (Scalar::Complex(a), Scalar::Complex(b)) => Ok(Scalar::Complex(a * b)),
            (Scalar::PAdic(a), Scalar::PAdic(b)) if a.prime == b.prime => {
                Ok(Scalar::PAdic(a.mul(b)))
            }
            _ => Err(self.mismatch(other)),
        }
    }

    pub fn inv(&self) -> Result<Scalar, ScalarError> {
        match self {
            Scalar::Rational(q) if q.is_zero() => Err(ScalarError::DivideByZero),
            Scalar::Rational(q) => Ok(Scalar::Rational(q.recip())),
            Scalar::Complex(z) if z.norm() == 0.0 => Err(ScalarError::DivideByZero),
            Scalar::Complex(z) => Ok(Scalar::Complex(z.inv())),
            Scalar::PAdic(x) => x.inv().map(Scalar::PAdic),
        }
    }

    pub fn try_div(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        if self.field() != other.field() {
            return Err(self.mismatch(other));
        }
        self.try_mul(&other.inv()?)
    }

    fn neg_ref(&self) -> Scalar {
        match self {
            Scalar::Rational(q) => Scalar::Rational(-q),
            Scalar::Complex(z) => Scalar::Complex(-z),
            Scalar::PAdic(x) => Scalar::PAdic(x.neg()),
        }
    }

    /// Integer power; negative exponents need an invertible base.
    pub fn pow_i64(&self, n: i64) -> Result<Scalar, ScalarError> {
        if n < 0 {
            return self.inv()?.pow_i64(-n);
        }
        let mut result = Scalar::one(self.field());
        let mut base = self.clone();
        let mut e = n as u64;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Ok(result)
    }

    /// Multiplies by the integer `k` and divides by `d` (helpers for series).
    pub fn scale_ratio(&self, k: i64, d: i64) -> Result<Scalar, ScalarError> {
        let r = Scalar::from_rational(&rational(k, d), self.field());
        self.try_mul(&r)
    }

    /// Exponential; complex always, p-adic where the series converges.
    pub fn exp(&self) -> Result<Scalar, ScalarError> {
        match self {
            Scalar::Complex(z) => Ok(Scalar::Complex(z.exp())),
            Scalar::Rational(q) if q.is_zero() => Ok(Scalar::one(FieldTag::ExactRational)),
            Scalar::Rational(_) => Err(ScalarError::Unsupported {
                op: "exp of a nonzero rational",
                field: FieldTag::ExactRational,
            }),
            Scalar::PAdic(x) => {
                let field = self.field();
                let Some(v) = x.valuation() else {
                    return Ok(Scalar::one(field));
                };
                let p = x.prime as f64;
                if (v as f64) <= 1.0 / (p - 1.0) {
                    return Err(ScalarError::ConvergenceGuard("p-adic exp"));
                }
                let target = x.cap as i64 + 2;
                let mut sum = Scalar::one(field);
                let mut term = Scalar::one(field);
                for k in 1..10_000i64 {
                    term = term.try_mul(self)?.scale_ratio(1, k)?;
                    if term.is_zero() {
                        break;
                    }
                    sum = sum.try_add(&term)?;
                    if let Scalar::PAdic(t) = &term {
                        // v(x^k/k!) >= k(v - 1/(p-1)) grows without bound
                        let lower = (k as f64) * (v as f64 - 1.0 / (p - 1.0));
                        if t.valuation().unwrap_or(i64::MAX) > target && lower > target as f64 {
                            break;
                        }
                    }
                }
                Ok(sum)
            }
        }
    }

    /// Equality up to `tol` for complex values, exact for rationals and to
    /// tracked precision for p-adics.
    pub fn approx_eq(&self, other: &Scalar, tol: f64) -> bool {
        match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => a == b,
            (Scalar::Complex(a), Scalar::Complex(b)) => (a - b).norm() <= tol,
            (Scalar::PAdic(a), Scalar::PAdic(b)) => a.prime == b.prime && a.eq_to_precision(b),
            _ => false,
        }
    }

    /// Deterministic total order used to list points; not a field order.
    pub fn cmp_canonical(&self, other: &Scalar) -> Ordering {
        match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => a.cmp(b),
            (Scalar::Complex(a), Scalar::Complex(b)) => a
                .re
                .total_cmp(&b.re)
                .then_with(|| a.im.total_cmp(&b.im)),
            (Scalar::PAdic(a), Scalar::PAdic(b)) => a.canonical_key().cmp(&b.canonical_key()),
            _ => self.field().to_string().cmp(&other.field().to_string()),
        }
    }

    /// Parses textual scalar syntax: `p/q`, decimals, `a+bi`; p-adic values
    /// are entered as rationals and lifted.
    pub fn parse(text: &str, field: FieldTag) -> Result<Scalar, ScalarError> {
        let t = text.trim();
        match field {
            FieldTag::ComplexFloat => parse_complex(t)
                .map(Scalar::Complex)
                .ok_or_else(|| ScalarError::Parse(text.to_string())),
            _ => parse_rational(t)
                .map(|q| Scalar::from_rational(&q, field))
                .ok_or_else(|| ScalarError::Parse(text.to_string())),
        }
    }
}

/// Parses `n`, `p/q`, or a decimal like `-1.25e-3` exactly.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let t = text.trim();
    if t.is_empty() {
        return None;
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(pos) => (&t[..pos], t[pos + 1..].parse::<i32>().ok()?),
        None => (t, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{}{}", if int_part.is_empty() { "0" } else { int_part }, frac_part)
        .parse()
        .ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut q = if scale >= 0 {
        BigRational::from_integer(digits * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(digits, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        q = -q;
    }
    Some(q)
}

fn parse_real(text: &str) -> Option<f64> {
    let t = text.trim();
    if t.contains('/') {
        return parse_rational(t).map(|q| rational_to_f64(&q));
    }
    t.parse::<f64>().ok()
}

/// Parses `a`, `bi`, `i`, `-i`, `a+bi`, `a-bi`.
pub fn parse_complex(text: &str) -> Option<Complex64> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return None;
    }
    if let Some(body) = t.strip_suffix('i') {
        // find the split between real and imaginary parts
        let bytes = body.as_bytes();
        let mut split = None;
        for idx in (1..bytes.len()).rev() {
            let c = bytes[idx] as char;
            if (c == '+' || c == '-') && !matches!(bytes[idx - 1] as char, 'e' | 'E') {
                split = Some(idx);
                break;
            }
        }
        let (re_text, im_text) = match split {
            Some(idx) => (&body[..idx], &body[idx..]),
            None => ("0", body),
        };
        let im = match im_text {
            "" | "+" => 1.0,
            "-" => -1.0,
            s => parse_real(s)?,
        };
        return Some(Complex64::new(parse_real(re_text)?, im));
    }
    parse_real(&t).map(|re| Complex64::new(re, 0.0))
}

fn format_f64(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rational(q) => write!(f, "{q}"),
            Scalar::Complex(z) => {
                if z.im == 0.0 {
                    write!(f, "{}", format_f64(z.re))
                } else if z.im < 0.0 {
                    write!(f, "{}-{}i", format_f64(z.re), format_f64(-z.im))
                } else {
                    write!(f, "{}+{}i", format_f64(z.re), format_f64(z.im))
                }
            }
            Scalar::PAdic(x) => write!(f, "{x}"),
        }
    }
}

impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        self.try_add(rhs).expect("scalar field mismatch")
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        self.try_sub(rhs).expect("scalar field mismatch")
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        self.try_mul(rhs).expect("scalar field mismatch")
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        self.neg_ref()
    }
}

/// Arithmetic selector for [`scalar_arith`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Field arithmetic with error reporting; a p-adic result that has lost
/// all significant digits is an error here.
pub fn scalar_arith(a: &Scalar, b: &Scalar, op: ArithOp) -> Result<Scalar, ScalarError> {
    let r = match op {
        ArithOp::Add => a.try_add(b)?,
        ArithOp::Sub => a.try_sub(b)?,
        ArithOp::Mul => a.try_mul(b)?,
        ArithOp::Div => a.try_div(b)?,
    };
    if let Scalar::PAdic(x) = &r {
        if x.is_zero() && !x.is_exact_zero() {
            return Err(ScalarError::PrecisionExhausted);
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        rational(n, d)
    }

    fn padic(s: &Scalar) -> PAdic {
        match s {
            Scalar::PAdic(x) => *x,
            _ => panic!("not p-adic"),
        }
    }

    #[test]
    fn abs_examples() {
        let five = padic_lift(&q(5, 1), 5, 4).unwrap();
        assert_eq!(five.abs_at(), 0.2);
        assert_eq!(Scalar::complex(3.0, 4.0).abs_at(), 5.0);
        assert_eq!(Scalar::Rational(q(-3, 4)).abs_at(), 0.75);
        assert_eq!(Scalar::zero(FieldTag::ExactRational).abs_at(), 0.0);
    }

    #[test]
    fn lift_one_third() {
        let x = padic(&padic_lift(&q(1, 3), 5, 4).unwrap());
        // 3 * 417 = 1251 = 2 * 625 + 1
        assert_eq!(x.unit(), 417);
        assert_eq!(x.valuation(), Some(0));
        assert_eq!(417 % 5, 2);
        assert_eq!((417 / 5) % 5, 3);
        assert_eq!((417 / 25) % 5, 1);
        assert_eq!(417 / 125, 3);
    }

    #[test]
    fn lift_fifty_and_zero() {
        let x = padic(&padic_lift(&q(50, 1), 5, 3).unwrap());
        assert_eq!(x.valuation(), Some(2));
        assert_eq!(x.unit(), 2);
        let z = padic(&padic_lift(&q(0, 1), 7, 5).unwrap());
        assert!(z.is_exact_zero());
        assert_eq!(z.valuation(), None);
    }

    #[test]
    fn arith_examples() {
        let s = scalar_arith(
            &Scalar::Rational(q(1, 2)),
            &Scalar::Rational(q(1, 3)),
            ArithOp::Add,
        )
        .unwrap();
        assert_eq!(s, Scalar::Rational(q(5, 6)));

        let five = padic_lift(&q(5, 1), 5, 4).unwrap();
        let p = padic(&scalar_arith(&five, &five, ArithOp::Mul).unwrap());
        assert_eq!(p.valuation(), Some(2));
        assert_eq!(p.unit(), 1);

        let d = scalar_arith(
            &Scalar::complex(1.0, 0.0),
            &Scalar::complex(0.0, 1.0),
            ArithOp::Div,
        )
        .unwrap();
        assert!(d.approx_eq(&Scalar::complex(0.0, -1.0), 1e-15));
    }

    #[test]
    fn errors() {
        assert_eq!(FieldTag::padic(6, 3), Err(ScalarError::NotPrime(6)));
        assert_eq!(FieldTag::padic(5, 0), Err(ScalarError::ZeroPrecision));
        let zero = Scalar::zero(FieldTag::ExactRational);
        assert_eq!(
            scalar_arith(&Scalar::one(FieldTag::ExactRational), &zero, ArithOp::Div),
            Err(ScalarError::DivideByZero)
        );
        let a = padic_lift(&q(1, 1), 5, 3).unwrap();
        let b = padic_lift(&q(126, 1), 5, 3).unwrap();
        assert_eq!(
            scalar_arith(&a, &b, ArithOp::Sub),
            Err(ScalarError::PrecisionExhausted)
        );
        assert!(matches!(
            padic_reduce(&q(1, 5), 5, 3),
            Err(ScalarError::DivisionByP { .. })
        ));
    }

    #[test]
    fn subtraction_loses_digits() {
        // 1 - 6 = -5 keeps the digits that survive the cancellation
        let a = padic_lift(&q(1, 1), 5, 4).unwrap();
        let b = padic_lift(&q(6, 1), 5, 4).unwrap();
        let d = padic(&(&a - &b));
        assert_eq!(d.valuation(), Some(1));
        assert_eq!(d.digits(), 3);
        assert!(Scalar::PAdic(d).approx_eq(&padic_lift(&q(-5, 1), 5, 4).unwrap(), 0.0));
    }

    #[test]
    fn parse_scalars() {
        assert_eq!(
            Scalar::parse("-3/4", FieldTag::ExactRational).unwrap(),
            Scalar::Rational(q(-3, 4))
        );
        assert_eq!(
            Scalar::parse("0.125", FieldTag::ExactRational).unwrap(),
            Scalar::Rational(q(1, 8))
        );
        assert_eq!(
            Scalar::parse("1.5-2i", FieldTag::ComplexFloat).unwrap(),
            Scalar::complex(1.5, -2.0)
        );
        assert_eq!(
            Scalar::parse("-i", FieldTag::ComplexFloat).unwrap(),
            Scalar::complex(0.0, -1.0)
        );
        assert_eq!(
            Scalar::parse("1e-3+2e2i", FieldTag::ComplexFloat).unwrap(),
            Scalar::complex(1e-3, 200.0)
        );
        assert!(Scalar::parse("abc", FieldTag::ExactRational).is_err());
        assert_eq!(
            FieldTag::parse("padic:7:8").unwrap(),
            FieldTag::PAdic {
                prime: 7,
                precision: 8
            }
        );
    }

    #[test]
    fn padic_exp_guard() {
        let field = FieldTag::padic(5, 6).unwrap();
        let one = Scalar::one(field);
        assert!(matches!(one.exp(), Err(ScalarError::ConvergenceGuard(_))));
        let five = Scalar::from_i64(5, field);
        let e = five.exp().unwrap();
        let back = e.pow_i64(2).unwrap();
        let e10 = Scalar::from_i64(10, field).exp().unwrap();
        assert!(back.approx_eq(&e10, 0.0));
    }
}
