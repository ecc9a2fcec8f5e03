//! JSON input decoding and output encoding.
//!
//! Complex numbers are `[re, im]` (a bare number is read as a real), matrices
//! are row-major nested arrays. Every argument that takes JSON accepts either
//! inline text or a file path.

use std::fs;

use serde_json::{json, Value};

use weylstar::gaussian::GaussianElement;
use weylstar::linalg::{self, CMatrix, C64};
use weylstar::{Error, OrderingK, PolyC, Result};

/// Inline JSON when the argument looks like JSON, otherwise a file.
pub fn load(arg: &str) -> Result<Value> {
    let trimmed = arg.trim_start();
    let text = if trimmed.starts_with(['[', '{', '"']) {
        arg.to_string()
    } else {
        fs::read_to_string(arg).map_err(|e| Error::Invalid(format!("cannot read {arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("bad JSON in {arg}: {e}")))
}

pub fn complex(v: &Value) -> Result<C64> {
    if let Some(x) = v.as_f64() {
        return Ok(C64::from(x));
    }
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => match (re.as_f64(), im.as_f64()) {
            (Some(re), Some(im)) => Ok(C64::new(re, im)),
            _ => Err(Error::Invalid(format!("expected [re, im], got {v}"))),
        },
        _ => Err(Error::Invalid(format!("expected a number or [re, im], got {v}"))),
    }
}

pub fn vector(v: &Value) -> Result<Vec<C64>> {
    v.as_array()
        .ok_or_else(|| Error::Invalid(format!("expected an array, got {v}")))?
        .iter()
        .map(complex)
        .collect()
}

pub fn matrix(v: &Value) -> Result<CMatrix> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Invalid(format!("expected a matrix, got {v}")))?
        .iter()
        .map(vector)
        .collect::<Result<Vec<_>>>()?;
    linalg::from_rows(&rows)
}

/// `weyl`, `standard`, `antistandard`, or `file:K.json` with `K` a matrix.
pub fn ordering(arg: &str, m: usize) -> Result<OrderingK> {
    if let Some(src) = arg.strip_prefix("file:") {
        return OrderingK::new(matrix(&load(src)?)?);
    }
    OrderingK::preset(arg, m).ok_or_else(|| {
        Error::Invalid(format!("unknown ordering {arg:?}; use weyl, standard, antistandard or file:K.json"))
    })
}

/// Ordering given inside a JSON document: a preset name or a matrix.
pub fn ordering_value(v: &Value, m: usize) -> Result<OrderingK> {
    match v.as_str() {
        Some(name) => ordering(name, m),
        None => OrderingK::new(matrix(v)?),
    }
}

/// A polynomial as `[{"exp": [...], "c": [re, im]}, ...]` or `{"terms": [...]}`.
pub fn poly_terms(v: &Value, nvars: Option<usize>) -> Result<PolyC> {
    let terms = match v.get("terms") {
        Some(t) => t,
        None => v,
    };
    let list = terms
        .as_array()
        .ok_or_else(|| Error::Invalid("polynomial must be a list of terms".into()))?;
    let mut parsed = Vec::with_capacity(list.len());
    for t in list {
        let exp = t
            .get("exp")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Invalid(format!("term without \"exp\": {t}")))?
            .iter()
            .map(|k| k.as_u64().and_then(|k| u32::try_from(k).ok()))
            .collect::<Option<Vec<u32>>>()
            .ok_or_else(|| Error::Invalid(format!("exponents must be non-negative integers: {t}")))?;
        let c = complex(t.get("c").ok_or_else(|| Error::Invalid(format!("term without \"c\": {t}")))?)?;
        parsed.push((exp, c));
    }
    let n = match (nvars, parsed.first()) {
        (Some(n), _) => n,
        (None, Some((e, _))) => e.len(),
        (None, None) => return Err(Error::Invalid("cannot infer dimension of an empty polynomial".into())),
    };
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::Invalid("exponent length must be 2m".into()));
    }
    PolyC::from_terms(n, parsed)
}

/// `{"g": [re, im], "Q": [[...]]}`.
pub fn gaussian(v: &Value) -> Result<GaussianElement> {
    let g = complex(v.get("g").ok_or_else(|| Error::Invalid("Gaussian without \"g\"".into()))?)?;
    let q = matrix(v.get("Q").ok_or_else(|| Error::Invalid("Gaussian without \"Q\"".into()))?)?;
    GaussianElement::new(g, q)
}

fn real(x: f64) -> Value {
    if x == 0.0 {
        json!(0.0)
    } else {
        json!(x)
    }
}

pub fn out_complex(c: C64) -> Value {
    json!([real(c.re), real(c.im)])
}

pub fn out_vector(v: &[C64]) -> Value {
    Value::Array(v.iter().map(|&c| out_complex(c)).collect())
}

pub fn out_matrix(a: &CMatrix) -> Value {
    Value::Array((0..a.nrows()).map(|i| out_vector(&a.row(i).iter().copied().collect::<Vec<_>>())).collect())
}

pub fn out_poly(f: &PolyC) -> Value {
    Value::Array(
        f.terms()
            .map(|(e, &c)| json!({ "exp": e, "c": out_complex(c) }))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_zero_is_normalized() {
        assert_eq!(out_complex(C64::new(-0.0, -0.0)).to_string(), "[0.0,0.0]");
    }

    #[test]
    fn numbers_and_pairs_are_complex() {
        assert_eq!(complex(&json!(2)).unwrap(), C64::from(2.0));
        assert_eq!(complex(&json!([1, -1.5])).unwrap(), C64::new(1.0, -1.5));
        assert!(complex(&json!([1, 2, 3])).is_err());
        assert!(complex(&json!("1")).is_err());
    }

    #[test]
    fn matrices_round_trip() {
        let a = matrix(&json!([[0, [1, 2]], [[1, 2], 3]])).unwrap();
        assert_eq!(matrix(&out_matrix(&a)).unwrap(), a);
    }

    #[test]
    fn polynomial_terms_parse() {
        let f = poly_terms(&json!({"terms": [{"exp": [1, 1], "c": [2, 0]}]}), None).unwrap();
        assert_eq!(f.coeff(&[1, 1]), C64::from(2.0));
        assert!(poly_terms(&json!([{"exp": [1], "c": 1}]), None).is_err());
    }
}
