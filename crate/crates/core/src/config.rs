//! Tower configuration files.
//!
//! Accepted shapes (all with a top-level `"p"`):
//! - `"steps": [step, ...]`, each step its own level;
//! - `"levels": [[step, ...], ...]`, several steps per level;
//! - `"unramified": [1, f_2, ...]` residue degrees of an unramified tower;
//! - `"cyclotomic": depth` for `Q_p(W_{n!})`.
//!
//! A step is `{"kind": "unramified", "f_factor": r}` (optional `"poly"`) or
//! `{"kind": "eisenstein", "poly": terms, "degree": r}`. Polynomials are sparse
//! `[coefficient, exponent]` terms; a coefficient is a decimal string or an array
//! of decimal strings giving coordinates over the previous level. The monic
//! leading term may be omitted.

use std::path::Path;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::padic::IntElem;
use crate::tower::{build_cyclotomic_tower, build_unramified_tower, StepSpec, Tower, TowerSpec};

fn field_err(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{path}: {msg}"))
}

fn parse_int(v: &Value, path: &str) -> Result<BigInt> {
    match v {
        Value::String(s) => s.trim().parse().map_err(|_| field_err(path, format!("not an integer: {s:?}"))),
        Value::Number(n) if n.is_i64() => Ok(BigInt::from(n.as_i64().unwrap())),
        _ => Err(field_err(path, "expected a decimal string")),
    }
}

fn parse_usize(v: Option<&Value>, path: &str) -> Result<usize> {
    v.and_then(Value::as_u64)
        .map(|x| x as usize)
        .ok_or_else(|| field_err(path, "expected a non-negative integer"))
}

fn parse_coef(v: &Value, path: &str) -> Result<IntElem> {
    match v {
        Value::Array(items) => items
            .iter()
            .enumerate()
            .map(|(i, x)| parse_int(x, &format!("{path}[{i}]")))
            .collect(),
        _ => Ok(vec![parse_int(v, path)?]),
    }
}

/// Sparse terms to the non-leading coefficients `g_0..g_{r-1}` of a monic
/// polynomial. Without an explicit degree, the highest exponent is taken.
fn parse_poly(v: &Value, degree: Option<usize>, path: &str) -> Result<Vec<IntElem>> {
    let terms = v.as_array().ok_or_else(|| field_err(path, "expected a list of [coefficient, exponent] terms"))?;
    let mut parsed = Vec::new();
    for (i, t) in terms.iter().enumerate() {
        let tp = format!("{path}[{i}]");
        let pair = t.as_array().filter(|a| a.len() == 2).ok_or_else(|| field_err(&tp, "expected [coefficient, exponent]"))?;
        let exp = parse_usize(Some(&pair[1]), &format!("{tp}[1]"))?;
        parsed.push((parse_coef(&pair[0], &format!("{tp}[0]"))?, exp));
    }
    let r = match degree {
        Some(r) => r,
        None => parsed.iter().map(|(_, e)| *e).max().ok_or_else(|| field_err(path, "empty polynomial"))?,
    };
    let mut coeffs: Vec<IntElem> = vec![Vec::new(); r];
    for (c, e) in parsed {
        if e == r {
            let monic = c.first().is_some_and(|x| x.is_one()) && c.iter().skip(1).all(Zero::is_zero);
            if !monic {
                return Err(field_err(path, format!("leading coefficient of x^{r} must be 1")));
            }
            continue;
        }
        if e > r {
            return Err(field_err(path, format!("exponent {e} exceeds degree {r}")));
        }
        let slot = &mut coeffs[e];
        if slot.len() < c.len() {
            slot.resize(c.len(), BigInt::zero());
        }
        for (s, x) in slot.iter_mut().zip(c) {
            *s += x;
        }
    }
    Ok(coeffs)
}

fn parse_step(v: &Value, path: &str) -> Result<StepSpec> {
    let obj = v.as_object().ok_or_else(|| field_err(path, "expected an object"))?;
    let kind = obj.get("kind").and_then(Value::as_str).ok_or_else(|| field_err(&format!("{path}.kind"), "missing"))?;
    match kind {
        "unramified" => {
            let f_factor = parse_usize(obj.get("f_factor").or(obj.get("degree")), &format!("{path}.f_factor"))?;
            let poly = obj
                .get("poly")
                .map(|p| parse_poly(p, Some(f_factor), &format!("{path}.poly")))
                .transpose()?;
            Ok(StepSpec::Unramified { f_factor, poly })
        }
        "eisenstein" => {
            let degree = obj.get("degree").map(|d| parse_usize(Some(d), &format!("{path}.degree"))).transpose()?;
            let poly = parse_poly(
                obj.get("poly").ok_or_else(|| field_err(&format!("{path}.poly"), "missing"))?,
                degree,
                &format!("{path}.poly"),
            )?;
            Ok(StepSpec::Eisenstein { degree: poly.len(), poly })
        }
        other => Err(field_err(&format!("{path}.kind"), format!("unknown step kind {other:?}"))),
    }
}

/// Parse a configuration document into a built tower.
pub fn tower_from_json_str(text: &str) -> Result<Tower> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("line {} column {}: {e}", e.line(), e.column())))?;
    tower_from_value(&v)
}

pub fn tower_from_file(path: &Path) -> Result<Tower> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    tower_from_json_str(&text)
}

pub fn tower_from_value(v: &Value) -> Result<Tower> {
    let obj = v.as_object().ok_or_else(|| field_err("$", "expected an object"))?;
    let p = obj.get("p").and_then(Value::as_u64).ok_or_else(|| field_err("p", "expected a prime"))?;
    if let Some(fl) = obj.get("unramified") {
        let arr = fl.as_array().ok_or_else(|| field_err("unramified", "expected a list"))?;
        let f_list = arr
            .iter()
            .enumerate()
            .map(|(i, x)| x.as_u64().ok_or_else(|| field_err(&format!("unramified[{i}]"), "expected an integer")))
            .collect::<Result<Vec<_>>>()?;
        return build_unramified_tower(p, &f_list);
    }
    if let Some(d) = obj.get("cyclotomic") {
        return build_cyclotomic_tower(p, parse_usize(Some(d), "cyclotomic")?);
    }
    let levels = if let Some(steps) = obj.get("steps") {
        let arr = steps.as_array().ok_or_else(|| field_err("steps", "expected a list"))?;
        arr.iter()
            .enumerate()
            .map(|(i, s)| parse_step(s, &format!("steps[{i}]")).map(|s| vec![s]))
            .collect::<Result<Vec<_>>>()?
    } else if let Some(levels) = obj.get("levels") {
        let arr = levels.as_array().ok_or_else(|| field_err("levels", "expected a list"))?;
        let mut out = Vec::new();
        for (i, lv) in arr.iter().enumerate() {
            let steps = lv.as_array().ok_or_else(|| field_err(&format!("levels[{i}]"), "expected a list of steps"))?;
            out.push(
                steps
                    .iter()
                    .enumerate()
                    .map(|(j, s)| parse_step(s, &format!("levels[{i}][{j}]")))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        out
    } else {
        Vec::new()
    };
    Tower::new(TowerSpec { p, levels })
}

fn poly_json(poly: &[IntElem]) -> Value {
    let mut terms: Vec<Value> = poly
        .iter()
        .enumerate()
        .filter(|(_, c)| c.iter().any(|x| !x.is_zero()))
        .map(|(e, c)| {
            let coef = if c.len() == 1 {
                json!(c[0].to_string())
            } else {
                Value::Array(c.iter().map(|x| json!(x.to_string())).collect())
            };
            json!([coef, e])
        })
        .collect();
    terms.push(json!(["1", poly.len()]));
    Value::Array(terms)
}

fn step_json(s: &StepSpec) -> Value {
    let mut m = Map::new();
    match s {
        StepSpec::Unramified { f_factor, poly } => {
            m.insert("kind".into(), json!("unramified"));
            m.insert("f_factor".into(), json!(f_factor));
            if let Some(p) = poly {
                m.insert("poly".into(), poly_json(p));
            }
        }
        StepSpec::Eisenstein { degree, poly } => {
            m.insert("kind".into(), json!("eisenstein"));
            m.insert("degree".into(), json!(degree));
            m.insert("poly".into(), poly_json(poly));
        }
    }
    Value::Object(m)
}

impl TowerSpec {
    /// Canonical document in the `levels` form.
    pub fn to_json(&self) -> Value {
        json!({
            "p": self.p,
            "levels": self.levels.iter().map(|l| l.iter().map(step_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }
}

/// Hex SHA-256 of the canonical tower document, truncated to 16 characters.
pub fn tower_hash(tower: &Tower) -> String {
    let text = serde_json::to_string(&tower.spec().to_json()).expect("json serialization");
    hex::encode(Sha256::digest(text.as_bytes()))[..16].to_string()
}
