//! Local symbols: tame, plus/minus from factorization data, and the
//! contour-integral symbol.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contour::{pairwise_sum, sample, unwrap_log, ContourError, Evaluable};
use crate::factorization::{birkhoff_factor, winding_number_contour, BirkhoffFactorization, FactorError, FactorOpts};
use crate::laurent::LaurentSeries;
use crate::scalars::{FieldTag, Scalar, ScalarError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymbolError {
    #[error(transparent)]
    Factor(#[from] FactorError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("series has no exact lower edge (not meromorphic at 0)")]
    NotMeromorphic,
    #[error("contour symbols need complex-valued inputs")]
    NotComplex,
    #[error("function vanishes on the contour")]
    ZeroOnContour,
    #[error("branch tracking failed at {samples} samples")]
    BranchTrackingFailed { samples: usize },
    #[error("symbol values must be nonzero")]
    ZeroSymbol,
}

impl From<ContourError> for SymbolError {
    fn from(e: ContourError) -> Self {
        match e {
            ContourError::NotEvaluable => SymbolError::NotComplex,
            ContourError::ZeroOnContour { .. } => SymbolError::ZeroOnContour,
            ContourError::BranchJump { samples, .. } => SymbolError::BranchTrackingFailed { samples },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolMethod {
    ClosedForm,
    /// Read off the Birkhoff factors of both arguments.
    Factorized,
    Contour,
    Oracle,
}

impl SymbolMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SymbolMethod::ClosedForm => "closed_form",
            SymbolMethod::Factorized => "factorized",
            SymbolMethod::Contour => "contour",
            SymbolMethod::Oracle => "oracle",
        }
    }
}

/// A nonzero symbol value with provenance and an absolute error estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolValue {
    pub value: Scalar,
    pub method: SymbolMethod,
    pub err: f64,
}

impl SymbolValue {
    pub fn new(value: Scalar, method: SymbolMethod, err: f64) -> Result<Self, SymbolError> {
        if value.is_zero() {
            return Err(SymbolError::ZeroSymbol);
        }
        Ok(SymbolValue { value, method, err })
    }

    pub fn exact(value: Scalar, method: SymbolMethod) -> Result<Self, SymbolError> {
        let err = if value.field().is_exact() {
            0.0
        } else {
            4.0 * f64::EPSILON * value.abs_at()
        };
        Self::new(value, method, err)
    }

    fn relative_err(&self) -> f64 {
        let a = self.value.abs_at();
        if a > 0.0 {
            self.err / a
        } else {
            0.0
        }
    }
}

fn sign_power(e: i64, field: FieldTag) -> Scalar {
    Scalar::from_i64(if e.rem_euclid(2) == 0 { 1 } else { -1 }, field)
}

/// `(-1)^{mn} b^m / a^n` from leading terms `a t^m`, `b t^n`.
pub fn tame_symbol(f: &LaurentSeries, g: &LaurentSeries) -> Result<SymbolValue, SymbolError> {
    let (Some(m), Some(n)) = (f.valuation(), g.valuation()) else {
        return Err(SymbolError::NotMeromorphic);
    };
    let a = &f.coeffs()[0];
    let b = &g.coeffs()[0];
    let value = sign_power(m * n, f.field())
        .try_mul(&b.pow_i64(m)?)?
        .try_div(&a.pow_i64(n)?)?;
    SymbolValue::exact(value, SymbolMethod::ClosedForm)
}

/// `c1^{-n2} c2^{n1}`, times `(-1)^{n1 n2}` when `graded_sign` is set.
pub fn plus_symbol_from_factors(
    f: &BirkhoffFactorization,
    g: &BirkhoffFactorization,
    graded_sign: bool,
) -> Result<SymbolValue, SymbolError> {
    let field = f.c.field();
    let mut value = f.c.pow_i64(-g.n)?.try_mul(&g.c.pow_i64(f.n)?)?;
    if graded_sign {
        value = value.try_mul(&sign_power(f.n * g.n, field))?;
    }
    let rel = |c: &Scalar, e: f64| if e > 0.0 { e / c.abs_at() } else { 0.0 };
    let rel_err = g.n.unsigned_abs() as f64 * rel(&f.c, f.c_err) + f.n.unsigned_abs() as f64 * rel(&g.c, g.c_err);
    let sv = SymbolValue::exact(value, SymbolMethod::Factorized)?;
    let err = sv.err + rel_err * sv.value.abs_at();
    Ok(SymbolValue { err, ..sv })
}

pub fn plus_symbol(
    f: &LaurentSeries,
    g: &LaurentSeries,
    opts: &FactorOpts,
    graded_sign: bool,
) -> Result<SymbolValue, SymbolError> {
    let ff = birkhoff_factor(f, opts)?;
    let gf = birkhoff_factor(g, opts)?;
    plus_symbol_from_factors(&ff, &gf, graded_sign)
}

/// Reciprocal of [`plus_symbol`].
pub fn minus_symbol(
    f: &LaurentSeries,
    g: &LaurentSeries,
    opts: &FactorOpts,
    graded_sign: bool,
) -> Result<SymbolValue, SymbolError> {
    symbol_inv(&plus_symbol(f, g, opts, graded_sign)?)
}

pub fn symbol_mul(a: &SymbolValue, b: &SymbolValue) -> Result<SymbolValue, SymbolError> {
    let value = a.value.try_mul(&b.value)?;
    let err = (a.relative_err() + b.relative_err()) * value.abs_at();
    SymbolValue::new(value, a.method, err)
}

pub fn symbol_inv(a: &SymbolValue) -> Result<SymbolValue, SymbolError> {
    let value = a.value.inv()?;
    let err = a.relative_err() * value.abs_at();
    SymbolValue::new(value, a.method, err)
}

/// Largest sample count tried by branch refinement.
pub const MAX_SAMPLES: usize = 1 << 20;

/// Contour data shared by one evaluation of the symbol.
fn deligne_at(
    f: &dyn Evaluable,
    g: &dyn Evaluable,
    v_f: i64,
    v_g: i64,
    rho: f64,
    samples: usize,
) -> Result<Complex64, SymbolError> {
    let mut k = samples;
    loop {
        match deligne_once(f, g, v_f, v_g, rho, k) {
            Err(SymbolError::BranchTrackingFailed { .. }) if k < MAX_SAMPLES => k *= 2,
            other => return other,
        }
    }
}

fn deligne_once(
    f: &dyn Evaluable,
    g: &dyn Evaluable,
    v_f: i64,
    v_g: i64,
    rho: f64,
    k: usize,
) -> Result<Complex64, SymbolError> {
    let fs = sample(f, rho, k)?;
    let gs = sample(g, rho, k)?;
    let lf = unwrap_log(&fs.f, 0.5 * PI)?;
    let lg = unwrap_log(&gs.f, 0.5 * PI)?;
    let i = Complex64::i();
    let theta = |j: usize| 2.0 * PI * j as f64 / k as f64;
    // F = log f - i v_f theta and G = log g - i v_g theta are periodic
    let a_terms: Vec<Complex64> = (0..k)
        .map(|j| {
            let big_f = lf[j] - i * (v_f as f64 * theta(j));
            let dphi = gs.df[j] / gs.f[j] * i * gs.t[j];
            big_f * dphi
        })
        .collect();
    let b_terms: Vec<Complex64> = (0..k).map(|j| lg[j] - i * (v_g as f64 * theta(j))).collect();
    let h = 2.0 * PI / k as f64;
    let a = pairwise_sum(&a_terms) * h;
    let b = pairwise_sum(&b_terms) * h;
    let phi0 = lg[0];
    // integral of log f dlog g over theta in [0, 2 pi], by parts on the linear piece
    let integral = a + i * (v_f as f64) * (2.0 * PI * phi0 + 2.0 * PI * PI * i * (v_g as f64) - b);
    let gp = gs.f[0];
    Ok((-integral / (2.0 * PI * i)).exp() * gp.powi(v_f as i32))
}

/// Contour-integral symbol on `|t| = rho` with `K` samples, the value of
/// `g` at the contour base point `t = rho` playing the role of `g(0)`.
/// The error estimate compares `K` and `2K` samples.
pub fn deligne_symbol(
    f: &dyn Evaluable,
    g: &dyn Evaluable,
    rho: f64,
    samples: usize,
) -> Result<SymbolValue, SymbolError> {
    let v_f = winding_number_contour(f, rho, samples)
        .map_err(contour_err)?
        .value;
    let v_g = winding_number_contour(g, rho, samples)
        .map_err(contour_err)?
        .value;
    let coarse = deligne_at(f, g, v_f, v_g, rho, samples)?;
    let fine = deligne_at(f, g, v_f, v_g, rho, 2 * samples)?;
    let floor = 32.0 * f64::EPSILON * samples as f64 * coarse.norm();
    let err = (coarse - fine).norm() + floor;
    SymbolValue::new(Scalar::Complex(coarse), SymbolMethod::Contour, err)
}

fn contour_err(e: FactorError) -> SymbolError {
    match e {
        FactorError::Contour(c) => c.into(),
        other => SymbolError::Factor(other),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::series_mul;
    use crate::scalars::rational;
    use proptest::prelude::*;

    const Q: FieldTag = FieldTag::ExactRational;

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::Rational(rational(n, d))
    }

    fn cz(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn tame_examples() {
        let t = LaurentSeries::from_ints(Q, 1, &[1]);
        assert_eq!(tame_symbol(&t, &t).unwrap().value, q(-1, 1));
        assert_eq!(tame_symbol(&t, &LaurentSeries::from_ints(Q, 0, &[5])).unwrap().value, q(5, 1));
        let t2 = LaurentSeries::from_ints(Q, 2, &[1]);
        let t3 = LaurentSeries::from_ints(Q, 3, &[1]);
        assert_eq!(tame_symbol(&t2, &t3).unwrap().value, q(1, 1));
        let open = LaurentSeries::from_ints(Q, 0, &[1]).forget_exactness();
        assert_eq!(tame_symbol(&open, &t), Err(SymbolError::NotMeromorphic));
    }

    #[test]
    fn plus_examples() {
        let opts = FactorOpts::default();
        let f = LaurentSeries::from_ints(Q, 1, &[2]);
        let g = LaurentSeries::from_ints(Q, 1, &[3]);
        assert_eq!(plus_symbol(&f, &g, &opts, false).unwrap().value, q(3, 2));
        assert_eq!(minus_symbol(&f, &g, &opts, false).unwrap().value, q(2, 3));
        assert_eq!(plus_symbol(&f, &g, &opts, true).unwrap().value, q(-3, 2));

        let gu = LaurentSeries::from_ratios(Q, 0, &[(1, 1), (1, 2)]);
        let hu = LaurentSeries::from_ratios(Q, -1, &[(1, 3), (1, 1)]);
        assert_eq!(plus_symbol(&gu, &hu, &opts, false).unwrap().value, q(1, 1));
        let t = LaurentSeries::from_ints(Q, 1, &[1]);
        assert_eq!(plus_symbol(&t, &gu, &opts, false).unwrap().value, q(1, 1));
    }

    #[test]
    fn group_operations() {
        let a = SymbolValue::exact(q(3, 2), SymbolMethod::Factorized).unwrap();
        let b = SymbolValue::exact(q(2, 3), SymbolMethod::Factorized).unwrap();
        assert_eq!(symbol_mul(&a, &b).unwrap().value, q(1, 1));
        let m = SymbolValue::exact(q(-1, 1), SymbolMethod::ClosedForm).unwrap();
        assert_eq!(symbol_inv(&m).unwrap().value, q(-1, 1));
        assert_eq!(
            SymbolValue::exact(q(0, 1), SymbolMethod::Factorized),
            Err(SymbolError::ZeroSymbol)
        );
    }

    #[test]
    fn deligne_examples() {
        let t = LaurentSeries::from_complex(1, &[cz(1.0)], true, true);
        let five = LaurentSeries::from_complex(0, &[cz(5.0)], true, true);
        let d = deligne_symbol(&t, &five, 1.0, 256).unwrap();
        assert!(d.value.approx_eq(&Scalar::complex(5.0, 0.0), 1e-12));

        let f = LaurentSeries::from_complex(0, &[cz(1.0), cz(-1.0 / 3.0)], true, true);
        let seven = LaurentSeries::from_complex(0, &[cz(7.0)], true, true);
        let d = deligne_symbol(&f, &seven, 1.0, 256).unwrap();
        assert!(d.value.approx_eq(&Scalar::complex(1.0, 0.0), 1e-12));

        let g = LaurentSeries::from_complex(0, &[cz(2.0), cz(1.0)], true, true);
        let d = deligne_symbol(&t, &g, 0.5, 2048).unwrap();
        let tame = tame_symbol(&t, &g).unwrap();
        assert!((d.value.to_complex().unwrap() - tame.value.to_complex().unwrap()).norm() <= 1e-8);
        assert!(d.err < 1e-8);
    }

    #[test]
    fn deligne_rejects_padic() {
        let field = FieldTag::padic(5, 4).unwrap();
        let t = LaurentSeries::from_ints(field, 1, &[1]);
        assert_eq!(deligne_symbol(&t, &t, 1.0, 256), Err(SymbolError::NotComplex));
    }

    #[test]
    fn deligne_matches_tame_with_poles_and_zeros() {
        // f = 3 t^-2 (t - 2), g = t (t + 1.5): roots off the disc |t| <= 1 except 0
        let f = LaurentSeries::from_complex(-2, &[cz(-6.0), cz(3.0)], true, true);
        let g = LaurentSeries::from_complex(1, &[cz(1.5), cz(1.0)], true, true);
        let d = deligne_symbol(&f, &g, 1.0, 2048).unwrap();
        let tame = tame_symbol(&f, &g).unwrap();
        assert!((d.value.to_complex().unwrap() - tame.value.to_complex().unwrap()).norm() <= 1e-9);
    }

    fn small_rational() -> impl Strategy<Value = Scalar> {
        (1i64..7, 1i64..5, any::<bool>()).prop_map(|(n, d, neg)| q(if neg { -n } else { n }, d))
    }

    fn unit() -> impl Strategy<Value = LaurentSeries> {
        (small_rational(), -3i64..4, prop::collection::vec(-4i64..5, 0..4)).prop_map(|(c, n, tail)| {
            let mut cs = vec![1i64];
            cs.extend(tail);
            LaurentSeries::from_ints(Q, n, &cs).scale(&c).unwrap()
        })
    }

    proptest! {
        #[test]
        fn antisymmetry_and_inverse(f in unit(), g in unit()) {
            let opts = FactorOpts::default();
            let fg = plus_symbol(&f, &g, &opts, false).unwrap();
            let gf = plus_symbol(&g, &f, &opts, false).unwrap();
            prop_assert!(symbol_mul(&fg, &gf).unwrap().value.is_one());
            let m = minus_symbol(&f, &g, &opts, false).unwrap();
            prop_assert!(symbol_mul(&fg, &m).unwrap().value.is_one());
        }

        #[test]
        fn bimultiplicative(f1 in unit(), f2 in unit(), g in unit()) {
            let opts = FactorOpts::default();
            let f12 = series_mul(&f1, &f2).unwrap();
            let lhs = plus_symbol(&f12, &g, &opts, false).unwrap();
            let rhs = symbol_mul(
                &plus_symbol(&f1, &g, &opts, false).unwrap(),
                &plus_symbol(&f2, &g, &opts, false).unwrap(),
            ).unwrap();
            prop_assert_eq!(lhs.value, rhs.value);
            let lhs = plus_symbol(&g, &f12, &opts, true).unwrap();
            let rhs = symbol_mul(
                &plus_symbol(&g, &f1, &opts, true).unwrap(),
                &plus_symbol(&g, &f2, &opts, true).unwrap(),
            ).unwrap();
            prop_assert_eq!(lhs.value, rhs.value);
        }

        #[test]
        fn deligne_independent_of_rho(a in 0.05f64..0.3, b in 1.5f64..3.0, c in 0.8f64..2.0) {
            let f = LaurentSeries::from_complex(0, &[cz(-a), cz(1.0)], true, true);
            let g = LaurentSeries::from_complex(0, &[cz(c), cz(1.0 / b)], true, true);
            let r1 = deligne_symbol(&f, &g, 0.5, 512).unwrap();
            let r2 = deligne_symbol(&f, &g, 0.9, 512).unwrap();
            prop_assert!((r1.value.to_complex().unwrap() - r2.value.to_complex().unwrap()).norm() <= r1.err + r2.err + 1e-9);
        }
    }
}
