//! Finite-window determinant-line oracle for commutator symbols.
//!
//! Compressions of multiplication operators to `span{t^0..t^M}` stand in
//! for the Fredholm maps on the plus summand. Lifts of monomials are
//! tracked as graded lines, and every sign comes out of [`graded_mul`].

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::One;
use thiserror::Error;

use crate::laurent::{l1_norm, mul_truncated, series_mul, LaurentSeries, SeriesError};
use crate::linalg::{LinalgError, Matrix};
use crate::scalars::{FieldTag, Scalar, ScalarError};
use crate::symbols::{SymbolMethod, SymbolValue};

/// Largest supported window.
pub const MAX_WINDOW: usize = 256;

/// Window offset used by the stabilization certificate.
pub const STABILITY_STEP: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("compression is singular on window {0}")]
    SingularCompression(usize),
    #[error("value moved by {delta:e} between windows {m} and {m_next}")]
    NotStabilized { m: usize, m_next: usize, delta: f64 },
    #[error("the oracle supports exact rationals and complex floats, not {0}")]
    UnsupportedField(FieldTag),
    #[error("window {0} exceeds the cap of 256")]
    WindowTooLarge(usize),
    #[error("expected winding-zero units, compression index is {0}")]
    NonzeroIndex(i64),
    #[error("coefficient at the index exponent {0} is zero or unknown")]
    MissingIndexCoefficient(i64),
    #[error("no rescaling makes the germ contraction-bounded")]
    ScalingFailed,
}

impl From<LinalgError> for OracleError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::Scalar(s) => OracleError::Scalar(s),
            _ => OracleError::SingularCompression(0),
        }
    }
}

/// A line with a chosen basis coordinate and an integer grade.
#[derive(Clone, Debug, PartialEq)]
pub struct GradedLine {
    pub basis_scalar: Scalar,
    pub grade: i64,
}

/// Tensor product of graded lines; `swap` applies the sign
/// `(-1)^{grade_a grade_b}` of the commutativity constraint.
pub fn graded_mul(a: &GradedLine, b: &GradedLine, swap: bool) -> Result<GradedLine, OracleError> {
    let mut s = a.basis_scalar.try_mul(&b.basis_scalar)?;
    if swap && (a.grade * b.grade).rem_euclid(2) == 1 {
        s = -&s;
    }
    Ok(GradedLine {
        basis_scalar: s,
        grade: a.grade + b.grade,
    })
}

/// `p_+ (f . )` restricted to `span{t^0..t^M}`: entry `(i, j)` is `f_{i-j}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Compression {
    pub matrix: Matrix,
    pub window: usize,
}

pub fn plus_compression(f: &LaurentSeries, m: usize) -> Result<Compression, OracleError> {
    if m > MAX_WINDOW {
        return Err(OracleError::WindowTooLarge(m));
    }
    let field = f.field();
    if matches!(field, FieldTag::PAdic { .. }) {
        return Err(OracleError::UnsupportedField(field));
    }
    let mm = m as i64;
    let diag: Vec<Scalar> = (-mm..=mm)
        .map(|e| f.coeff(e).ok_or(SeriesError::ExponentOutsideWindow(e)))
        .collect::<Result<_, _>>()?;
    let matrix = Matrix::from_fn(m + 1, m + 1, |i, j| diag[(i as i64 - j as i64 + mm) as usize].clone());
    Ok(Compression { matrix, window: m })
}

fn to_complex_matrix(c: &Compression) -> DMatrix<Complex64> {
    let n = c.window + 1;
    DMatrix::from_fn(n, n, |i, j| c.matrix.get(i, j).to_complex().expect("complex embedding"))
}

/// Threshold (relative to the top singular value) for a numerical kernel.
const SINGULAR_REL: f64 = 1e-6;

/// Position of a vector's mass along the window, scaled to `[0, 1]`.
fn centroid<'a>(xs: impl Iterator<Item = &'a Complex64>, n: usize) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, x) in xs.enumerate() {
        let w = x.norm_sqr();
        num += w * i as f64;
        den += w;
    }
    if n <= 1 || den == 0.0 {
        0.0
    } else {
        num / (den * (n - 1) as f64)
    }
}

/// `dim coker - dim ker` of the compression, ignoring directions that only
/// come from cutting the window at `t^M`.
pub fn compression_index(c: &Compression) -> i64 {
    let a = to_complex_matrix(c);
    let n = a.nrows();
    let svd = a.svd(true, true);
    let u = svd.u.expect("left vectors");
    let v_t = svd.v_t.expect("right vectors");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mut index = 0;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > SINGULAR_REL * smax {
            continue;
        }
        let left = centroid(u.column(k).iter(), n);
        let right = centroid(v_t.row(k).iter(), n);
        if left < 0.5 {
            index += 1;
        }
        if right < 0.5 {
            index -= 1;
        }
    }
    index
}

/// Determinant with a certificate: the value at window `M + 8` and the
/// distance between the two windows.
#[derive(Clone, Debug, PartialEq)]
pub struct Certified {
    pub value: Scalar,
    pub delta: f64,
}

fn difference(a: &Scalar, b: &Scalar) -> f64 {
    a.try_sub(b).map(|d| d.abs_at()).unwrap_or(f64::INFINITY)
}

fn certify(
    m: usize,
    tol: f64,
    eval: impl Fn(usize) -> Result<Scalar, OracleError>,
) -> Result<Certified, OracleError> {
    let a = eval(m)?;
    let b = eval(m + STABILITY_STEP)?;
    let delta = difference(&a, &b);
    if delta > tol * b.abs_at().max(1.0) {
        return Err(OracleError::NotStabilized {
            m,
            m_next: m + STABILITY_STEP,
            delta,
        });
    }
    Ok(Certified { value: b, delta })
}

fn product(f: &LaurentSeries, g: &LaurentSeries) -> Result<LaurentSeries, OracleError> {
    match series_mul(f, g) {
        Err(SeriesError::EmptyReliableWindow) if f.field() == FieldTag::ComplexFloat => {
            Ok(mul_truncated(f, g, 1e-12)?)
        }
        other => Ok(other?),
    }
}

fn det_compression(f: &LaurentSeries, m: usize) -> Result<Scalar, OracleError> {
    Ok(plus_compression(f, m)?.matrix.det()?)
}

fn segal_at(f: &LaurentSeries, g: &LaurentSeries, fg: &LaurentSeries, m: usize) -> Result<Scalar, OracleError> {
    let cf = plus_compression(f, m)?.matrix;
    let cg = plus_compression(g, m)?.matrix;
    let cfg = plus_compression(fg, m)?.matrix;
    let inv = cfg.inverse().map_err(|_| OracleError::SingularCompression(m))?;
    Ok(cf.mul(&cg)?.mul(&inv)?.det()?)
}

/// `det(C(f) C(g) C(fg)^-1)` for winding-zero units, certified between
/// windows `M` and `M + 8`.
pub fn segal_cocycle(f: &LaurentSeries, g: &LaurentSeries, m: usize, tol: f64) -> Result<Certified, OracleError> {
    for u in [f, g] {
        let idx = compression_index(&plus_compression(u, m)?);
        if idx != 0 {
            return Err(OracleError::NonzeroIndex(idx));
        }
    }
    let fg = product(f, g)?;
    certify(m, tol, |w| segal_at(f, g, &fg, w))
}

/// Lift of a monomial `a t^m` with its determinant-line coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct MonomialLift {
    pub coeff: Scalar,
    pub shift: i64,
    pub line: GradedLine,
}

impl MonomialLift {
    /// Lift with unit line coordinate; the grade is the index of `t^m`.
    pub fn new(coeff: Scalar, shift: i64) -> Self {
        let field = coeff.field();
        MonomialLift {
            coeff,
            shift,
            line: GradedLine {
                basis_scalar: Scalar::one(field),
                grade: shift,
            },
        }
    }

    /// Group law: `(a t^m, x)(b t^n, y) = (ab t^{m+n}, x y a^{-n})`, the
    /// factor recording how `a` rescales the `n` basis vectors that `t^n`
    /// moves across the window edge. `swap` transports through the
    /// commutativity constraint.
    pub fn compose(&self, other: &MonomialLift, swap: bool) -> Result<MonomialLift, OracleError> {
        let mut line = graded_mul(&self.line, &other.line, swap)?;
        line.basis_scalar = line.basis_scalar.try_mul(&self.coeff.pow_i64(-other.shift)?)?;
        Ok(MonomialLift {
            coeff: self.coeff.try_mul(&other.coeff)?,
            shift: self.shift + other.shift,
            line,
        })
    }
}

/// Commutator scalar `x y x^-1 y^-1` of two monomial lifts.
pub fn monomial_commutator(x: &MonomialLift, y: &MonomialLift, graded: bool) -> Result<Scalar, OracleError> {
    let xy = x.compose(y, false)?;
    let yx = y.compose(x, graded)?;
    Ok(xy.line.basis_scalar.try_div(&yx.line.basis_scalar)?)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleOpts {
    /// Apply the Koszul sign of graded lines when reordering lifts.
    pub graded: bool,
    /// Stabilization tolerance between windows `M` and `M + 8`.
    pub tol: f64,
}

impl Default for OracleOpts {
    fn default() -> Self {
        OracleOpts { graded: false, tol: 1e-8 }
    }
}

fn check_field(f: &LaurentSeries) -> Result<(), OracleError> {
    match f.field() {
        FieldTag::PAdic { .. } => Err(OracleError::UnsupportedField(f.field())),
        _ => Ok(()),
    }
}

fn scaled(f: &LaurentSeries, lambda: &Scalar) -> Result<LaurentSeries, OracleError> {
    let coeffs = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(k, a)| a.try_mul(&lambda.pow_i64(f.lo() + k as i64)?))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LaurentSeries::new(f.field(), f.lo(), coeffs, f.lo_exact(), f.hi_exact())?)
}

/// Exponent `k` of the rescaling `t -> 2^{-k} t` (or `2^k t` for germs at
/// infinity) after which the normalized germ is contraction-bounded.
fn germ_scale_exponent(f: &LaurentSeries) -> Result<i32, OracleError> {
    let probe = if f.lo_exact() {
        f.clone()
    } else if f.hi_exact() {
        f.reflect()
    } else {
        return Ok(0);
    };
    let lead = probe.coeffs()[0].abs_at();
    for k in 0..60 {
        let lambda = 0.5f64.powi(k);
        let rest: f64 = probe
            .coeffs()
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, a)| a.abs_at() * lambda.powi(j as i32))
            .sum();
        if rest <= 0.5 * lead {
            return Ok(k);
        }
    }
    Err(OracleError::ScalingFailed)
}

fn scale_factor(field: FieldTag, k: i32, up: bool) -> Scalar {
    let two = num_bigint::BigInt::from(2);
    let p = BigRational::from_integer(num_traits::pow(two, k as usize));
    let q = if up { p } else { BigRational::one() / p };
    Scalar::from_rational(&q, field)
}

/// Decomposition `f = a t^n u` read off the compression index.
struct MonomialSplit {
    lift: MonomialLift,
    unit: LaurentSeries,
}

fn split_monomial(f: &LaurentSeries, m: usize) -> Result<MonomialSplit, OracleError> {
    let n = compression_index(&plus_compression(f, m)?);
    let a = f
        .coeff(n)
        .filter(|a| !a.is_zero())
        .ok_or(OracleError::MissingIndexCoefficient(n))?;
    let unit = f.scale(&a.inv()?)?.shift(-n)?;
    Ok(MonomialSplit {
        lift: MonomialLift::new(a, n),
        unit,
    })
}

/// Commutator of the lift of `t^n` with the lift of a winding-zero `u`:
/// the ratio `det C_M(u) / det C_{M-n}(u)` of compressions on `V_+` and on
/// `t^n V_+`.
fn shift_unit_pair(n: i64, u: &LaurentSeries, m: usize) -> Result<Scalar, OracleError> {
    if n == 0 {
        return Ok(Scalar::one(u.field()));
    }
    let small = m as i64 - n;
    if small < 0 || small as usize > MAX_WINDOW {
        return Err(OracleError::WindowTooLarge(m));
    }
    let top = det_compression(u, m)?;
    let bottom = det_compression(u, small as usize)?;
    if bottom.is_zero() {
        return Err(OracleError::SingularCompression(small as usize));
    }
    Ok(top.try_div(&bottom)?)
}

fn commutator_at(a: &MonomialSplit, b: &MonomialSplit, m: usize, graded: bool) -> Result<Scalar, OracleError> {
    let mono = monomial_commutator(&a.lift, &b.lift, graded)?;
    let ab = shift_unit_pair(a.lift.shift, &b.unit, m)?;
    let ba = shift_unit_pair(b.lift.shift, &a.unit, m)?;
    let uu = product(&a.unit, &b.unit)?;
    let c12 = segal_at(&a.unit, &b.unit, &uu, m)?;
    let c21 = segal_at(&b.unit, &a.unit, &uu, m)?;
    Ok(mono.try_mul(&ab)?.try_div(&ba)?.try_mul(&c12.try_div(&c21)?)?)
}

/// Commutator symbol of the lifts of `f` and `g` on window `M`, assembled
/// by bimultiplicativity from monomial lifts, shift/unit determinant
/// ratios and Segal cocycles. The result is certified against `M + 8`.
pub fn oracle_commutator(
    f: &LaurentSeries,
    g: &LaurentSeries,
    m: usize,
    opts: &OracleOpts,
) -> Result<SymbolValue, OracleError> {
    check_field(f)?;
    check_field(g)?;
    let field = f.field();
    if g.field() != field {
        return Err(SeriesError::FieldMismatch(field, g.field()).into());
    }
    if m + STABILITY_STEP > MAX_WINDOW {
        return Err(OracleError::WindowTooLarge(m + STABILITY_STEP));
    }
    // germs are rescaled into their disc of contraction; both series share the rescaling
    let up = !f.lo_exact() && f.hi_exact();
    let k = germ_scale_exponent(f)?.max(germ_scale_exponent(g)?);
    let lambda = scale_factor(field, k, up);
    let fs = scaled(f, &lambda)?;
    let gs = scaled(g, &lambda)?;
    let a = split_monomial(&fs, m)?;
    let b = split_monomial(&gs, m)?;
    let cert = certify(m, opts.tol, |w| commutator_at(&a, &b, w, opts.graded))?;
    let err = cert.delta;
    SymbolValue::new(cert.value, SymbolMethod::Oracle, err).map_err(|_| OracleError::SingularCompression(m))
}

/// Outcome of the block-sum comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSumReport {
    /// Commutator of the block-diagonal pair.
    pub block: Scalar,
    /// Product of the blockwise commutators.
    pub product: Scalar,
    pub holds: bool,
}

/// Compares the commutator of block-diagonal lifts on `V_0 + V_1` with the
/// product of the blockwise commutators.
///
/// Lifts of block-diagonal operators are tensor products of blockwise
/// lifts; composing them reorders the middle factors, which costs the
/// Koszul sign of graded lines when `graded` is set.
pub fn block_sum_check(
    f0: &LaurentSeries,
    g0: &LaurentSeries,
    f1: &LaurentSeries,
    g1: &LaurentSeries,
    m: usize,
    opts: &OracleOpts,
) -> Result<BlockSumReport, OracleError> {
    let c0 = oracle_commutator(f0, g0, m, opts)?;
    let c1 = oracle_commutator(f1, g1, m, opts)?;
    let field = f0.field();
    let idx = |u: &LaurentSeries| -> Result<i64, OracleError> {
        let k = germ_scale_exponent(u)?;
        let s = scaled(u, &scale_factor(field, k, !u.lo_exact() && u.hi_exact()))?;
        Ok(compression_index(&plus_compression(&s, m)?))
    };
    let line = |grade: i64| GradedLine {
        basis_scalar: Scalar::one(field),
        grade,
    };
    let (nf0, ng0, nf1, ng1) = (idx(f0)?, idx(g0)?, idx(f1)?, idx(g1)?);
    // (x0 (x) x1)(y0 (x) y1) moves y0 past x1
    let fg_order = graded_mul(&line(nf1), &line(ng0), opts.graded)?;
    let gf_order = graded_mul(&line(ng1), &line(nf0), opts.graded)?;
    let koszul = fg_order.basis_scalar.try_div(&gf_order.basis_scalar)?;
    let product = c0.value.try_mul(&c1.value)?;
    let block = product.try_mul(&koszul)?;
    let tol = (c0.err + c1.err).max(1e-12);
    let holds = block.approx_eq(&product, tol);
    Ok(BlockSumReport { block, product, holds })
}

/// Convenience: contraction norm of `f / (a t^n) - 1` at `|t| = 1`.
pub fn perturbation_norm(f: &LaurentSeries, n: i64) -> Option<f64> {
    let a = f.coeff(n)?;
    let u = f.scale(&a.inv().ok()?).ok()?.shift(-n).ok()?;
    let one = LaurentSeries::one(f.field());
    crate::laurent::series_sub(&u, &one).ok().map(|s| l1_norm(&s, 1.0))
}
