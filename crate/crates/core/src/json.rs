//! JSON interchange for scalars, series, factorizations, units, symbols
//! and reciprocity reports.
//!
//! Rationals are strings `"p/q"`, complex numbers `{"re", "im"}`, p-adic
//! numbers `{"prime", "valuation", "unit", "digits"}` with a `null`
//! valuation for the exact zero.

use num_complex::Complex64;
use num_rational::BigRational;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::curves::{AnalyticUnit, CurveError, PointOnLine, ReciprocityReport};
use crate::factorization::BirkhoffFactorization;
use crate::laurent::{LaurentSeries, RhoNorm, SeriesError};
use crate::scalars::{parse_rational, FieldTag, PAdic, Scalar, ScalarError};
use crate::symbols::SymbolValue;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JsonError {
    #[error("expected {expected} at `{path}`")]
    Shape { path: String, expected: &'static str },
    #[error("non-finite float in output")]
    NonFinite,
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

fn shape(path: &str, expected: &'static str) -> JsonError {
    JsonError::Shape {
        path: path.to_string(),
        expected,
    }
}

fn float(x: f64) -> Result<Value, JsonError> {
    serde_json::Number::from_f64(x).map(Value::Number).ok_or(JsonError::NonFinite)
}

pub fn rational_to_json(q: &BigRational) -> Value {
    Value::String(q.to_string())
}

pub fn rational_from_json(v: &Value, path: &str) -> Result<BigRational, JsonError> {
    match v {
        Value::String(s) => parse_rational(s).ok_or_else(|| shape(path, "a rational string")),
        Value::Number(n) => n
            .as_i64()
            .map(|k| BigRational::from_integer(k.into()))
            .ok_or_else(|| shape(path, "an integer or rational string")),
        _ => Err(shape(path, "a rational string")),
    }
}

pub fn scalar_to_json(s: &Scalar) -> Result<Value, JsonError> {
    Ok(match s {
        Scalar::Rational(q) => rational_to_json(q),
        Scalar::Complex(z) => json!({ "re": float(z.re)?, "im": float(z.im)? }),
        Scalar::PAdic(p) => {
            let valuation = if p.is_exact_zero() {
                Value::Null
            } else {
                // zeros to precision report their absolute precision
                json!(p.valuation().or(p.absolute_precision()))
            };
            json!({ "prime": p.prime(), "valuation": valuation, "unit": p.unit(), "digits": p.digits() })
        }
    })
}

fn get<'a>(v: &'a Value, key: &str, path: &str) -> Result<&'a Value, JsonError> {
    v.get(key).ok_or_else(|| JsonError::Shape {
        path: format!("{path}.{key}"),
        expected: "a field",
    })
}

fn get_u64(v: &Value, key: &str, path: &str) -> Result<u64, JsonError> {
    get(v, key, path)?.as_u64().ok_or_else(|| shape(path, "an unsigned integer"))
}

pub fn scalar_from_json(v: &Value, field: FieldTag, path: &str) -> Result<Scalar, JsonError> {
    match (field, v) {
        (FieldTag::ComplexFloat, Value::Object(_)) => {
            let re = get(v, "re", path)?.as_f64().ok_or_else(|| shape(path, "a number"))?;
            let im = get(v, "im", path)?.as_f64().ok_or_else(|| shape(path, "a number"))?;
            Ok(Scalar::Complex(Complex64::new(re, im)))
        }
        (FieldTag::ComplexFloat, Value::Number(n)) => Ok(Scalar::complex(n.as_f64().unwrap_or(f64::NAN), 0.0)),
        (FieldTag::ComplexFloat, Value::String(s)) => Ok(Scalar::parse(s, field)?),
        (FieldTag::PAdic { prime, precision }, Value::Object(_)) => {
            if get_u64(v, "prime", path)? != prime {
                return Err(shape(path, "a matching prime"));
            }
            let valuation = match get(v, "valuation", path)? {
                Value::Null => None,
                x => Some(x.as_i64().ok_or_else(|| shape(path, "an integer valuation"))?),
            };
            let unit = get_u64(v, "unit", path)?;
            let digits = get_u64(v, "digits", path)? as u32;
            Ok(Scalar::PAdic(PAdic::from_parts(prime, precision, valuation, unit, digits)?))
        }
        _ => Ok(Scalar::from_rational(&rational_from_json(v, path)?, field)),
    }
}

pub fn series_to_json(s: &LaurentSeries) -> Result<Value, JsonError> {
    let coeffs = s.coeffs().iter().map(scalar_to_json).collect::<Result<Vec<_>, _>>()?;
    Ok(json!({
        "field": s.field().to_string(),
        "lo": s.lo(),
        "coeffs": coeffs,
        "lo_exact": s.lo_exact(),
        "hi_exact": s.hi_exact(),
    }))
}

pub fn series_from_json(v: &Value) -> Result<LaurentSeries, JsonError> {
    let field = FieldTag::parse(get(v, "field", "series")?.as_str().ok_or_else(|| shape("series.field", "a string"))?)?;
    let lo = get(v, "lo", "series")?.as_i64().ok_or_else(|| shape("series.lo", "an integer"))?;
    let coeffs = get(v, "coeffs", "series")?
        .as_array()
        .ok_or_else(|| shape("series.coeffs", "an array"))?
        .iter()
        .enumerate()
        .map(|(i, c)| scalar_from_json(c, field, &format!("series.coeffs[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let flag = |k: &str| -> Result<bool, JsonError> {
        get(v, k, "series")?.as_bool().ok_or_else(|| shape("series", "a boolean flag"))
    };
    Ok(LaurentSeries::new(field, lo, coeffs, flag("lo_exact")?, flag("hi_exact")?)?)
}

pub fn factorization_to_json(f: &BirkhoffFactorization) -> Result<Value, JsonError> {
    Ok(json!({
        "c": scalar_to_json(&f.c)?,
        "n": f.n,
        "g": series_to_json(&f.g)?,
        "h": series_to_json(&f.h)?,
        "c_err": float(f.c_err)?,
    }))
}

pub fn symbol_to_json(s: &SymbolValue) -> Result<Value, JsonError> {
    Ok(json!({
        "value": scalar_to_json(&s.value)?,
        "method": s.method.as_str(),
        "err": float(s.err)?,
    }))
}

pub fn norm_to_json(n: &RhoNorm, exact: Option<&BigRational>) -> Result<Value, JsonError> {
    Ok(json!({
        "value": float(n.value)?,
        "exact": exact.map(rational_to_json),
        "attained_inside": n.attained_inside,
    }))
}

pub fn point_to_json(p: &PointOnLine) -> Result<Value, JsonError> {
    match p {
        PointOnLine::Finite(a) => scalar_to_json(a),
        PointOnLine::Infinity => Ok(Value::String("inf".into())),
    }
}

pub fn unit_to_json(u: &AnalyticUnit) -> Result<Value, JsonError> {
    let factors = u
        .factors()
        .iter()
        .map(|(r, m)| Ok(json!([scalar_to_json(r)?, m])))
        .collect::<Result<Vec<_>, JsonError>>()?;
    Ok(json!({
        "constant": scalar_to_json(u.constant())?,
        "factors": factors,
        "exp_num": u.exp_num().iter().map(rational_to_json).collect::<Vec<_>>(),
        "exp_den": u.exp_den().iter().map(rational_to_json).collect::<Vec<_>>(),
    }))
}

pub fn unit_from_json(v: &Value, field: FieldTag) -> Result<AnalyticUnit, JsonError> {
    let constant = scalar_from_json(get(v, "constant", "unit")?, field, "unit.constant")?;
    let mut factors = Vec::new();
    if let Some(list) = v.get("factors") {
        for (i, pair) in list.as_array().ok_or_else(|| shape("unit.factors", "an array"))?.iter().enumerate() {
            let path = format!("unit.factors[{i}]");
            let pair = pair.as_array().filter(|p| p.len() == 2).ok_or_else(|| shape(&path, "a [root, mult] pair"))?;
            let root = scalar_from_json(&pair[0], field, &path)?;
            let mult = pair[1].as_i64().ok_or_else(|| shape(&path, "an integer multiplicity"))?;
            factors.push((root, mult));
        }
    }
    let poly = |key: &str| -> Result<Vec<BigRational>, JsonError> {
        match v.get(key) {
            None => Ok(Vec::new()),
            Some(list) => list
                .as_array()
                .ok_or_else(|| shape(key, "an array"))?
                .iter()
                .map(|c| rational_from_json(c, key))
                .collect(),
        }
    };
    Ok(AnalyticUnit::new(constant, factors, poly("exp_num")?, poly("exp_den")?)?)
}

pub fn report_to_json(r: &ReciprocityReport) -> Result<Value, JsonError> {
    let points = r
        .points
        .iter()
        .map(|p| {
            let mut m = Map::new();
            m.insert("point".into(), point_to_json(&p.point)?);
            m.insert("v_f".into(), json!(p.v_f));
            m.insert("v_g".into(), json!(p.v_g));
            m.insert("symbol".into(), symbol_to_json(&p.symbol)?);
            Ok(Value::Object(m))
        })
        .collect::<Result<Vec<_>, JsonError>>()?;
    Ok(json!({
        "points": points,
        "product": scalar_to_json(&r.product)?,
        "pass": r.pass,
        "method": r.method.as_str(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::rational;
    use proptest::prelude::*;

    #[test]
    fn scalar_shapes() {
        let q = Scalar::Rational(rational(-3, 4));
        assert_eq!(scalar_to_json(&q).unwrap(), json!("-3/4"));
        let z = Scalar::complex(1.5, -2.0);
        assert_eq!(scalar_to_json(&z).unwrap(), json!({"re": 1.5, "im": -2.0}));
        let p = FieldTag::padic(5, 4).unwrap();
        let x = Scalar::from_rational(&rational(10, 1), p);
        assert_eq!(
            scalar_to_json(&x).unwrap(),
            json!({"prime": 5, "valuation": 1, "unit": 2, "digits": 4})
        );
        assert_eq!(scalar_from_json(&scalar_to_json(&x).unwrap(), p, "x").unwrap(), x);
        let zero = Scalar::zero(p);
        assert_eq!(scalar_to_json(&zero).unwrap()["valuation"], Value::Null);
        assert!(matches!(
            scalar_to_json(&Scalar::complex(f64::NAN, 0.0)),
            Err(JsonError::NonFinite)
        ));
    }

    #[test]
    fn unit_roundtrip() {
        let c = FieldTag::ComplexFloat;
        let u = AnalyticUnit::new(
            Scalar::complex(2.0, 1.0),
            vec![(Scalar::complex(0.0, 0.0), 1), (Scalar::complex(1.0, 0.0), -2)],
            vec![rational(1, 1)],
            vec![rational(0, 1), rational(1, 1)],
        )
        .unwrap();
        let v = unit_to_json(&u).unwrap();
        assert_eq!(unit_from_json(&v, c).unwrap(), u);
    }

    proptest! {
        #[test]
        fn series_roundtrip(lo in -5i64..5, cs in prop::collection::vec((-20i64..20, 1i64..9), 1..8),
                            lo_exact: bool, hi_exact: bool) {
            let field = FieldTag::ExactRational;
            let coeffs: Vec<Scalar> = cs.iter().map(|&(n, d)| Scalar::Rational(rational(n, d))).collect();
            prop_assume!(coeffs.iter().any(|c| !c.is_zero()));
            let s = LaurentSeries::new(field, lo, coeffs, lo_exact, hi_exact).unwrap();
            let back = series_from_json(&series_to_json(&s).unwrap()).unwrap();
            prop_assert_eq!(back, s);
        }

        #[test]
        fn padic_roundtrip(n in -10_000i64..10_000, d in 1i64..500) {
            let p = FieldTag::padic(7, 5).unwrap();
            let x = Scalar::from_rational(&rational(n, d), p);
            prop_assert_eq!(scalar_from_json(&scalar_to_json(&x).unwrap(), p, "x").unwrap(), x);
        }
    }
}
