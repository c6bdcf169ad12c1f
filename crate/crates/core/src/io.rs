//! JSON files for spaces and measures.
//!
//! Space: `{"name": str, "labels": [str]?, "matrix": [[num]]}` with the full
//! matrix stored. Measure: `{"space": str, "weights": [num]}`. Numbers are
//! written with 17 significant digits so every `f64` round-trips exactly.

use std::fs;
use std::path::Path;

use serde_json::Value;

use crate::energy::SignedMeasure;
use crate::error::{QhmError, Result};
use crate::space::{validate_metric, FiniteMetricSpace};

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn num_array(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|&v| num(v)).collect();
    format!("[{}]", parts.join(", "))
}

/// Serializes a space in the canonical JSON format.
pub fn space_to_json(x: &FiniteMetricSpace) -> String {
    let labels: Vec<String> = x.labels().iter().map(|l| string(l)).collect();
    let rows: Vec<String> = x.matrix_rows().iter().map(|r| format!("    {}", num_array(r))).collect();
    format!(
        "{{\n  \"name\": {},\n  \"labels\": [{}],\n  \"matrix\": [\n{}\n  ]\n}}\n",
        string(x.name()),
        labels.join(", "),
        rows.join(",\n")
    )
}

pub fn measure_to_json(mu: &SignedMeasure) -> String {
    format!("{{\"space\": {}, \"weights\": {}}}\n", string(&mu.space), num_array(&mu.weights))
}

fn parse_err(msg: impl Into<String>) -> QhmError {
    QhmError::Parse(msg.into())
}

fn numbers(v: &Value, key: &str) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| parse_err(format!("key '{key}': expected an array of numbers")))?
        .iter()
        .enumerate()
        .map(|(i, e)| e.as_f64().ok_or_else(|| parse_err(format!("key '{key}': element {i} is not a number"))))
        .collect()
}

/// Parses and validates a space; `tol_triangle = None` uses `1e-9 * max entry`.
pub fn space_from_json(text: &str, tol_triangle: Option<f64>) -> Result<FiniteMetricSpace> {
    let v: Value = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    let obj = v.as_object().ok_or_else(|| parse_err("top level: expected an object"))?;
    let matrix_v = obj.get("matrix").ok_or_else(|| parse_err("missing key 'matrix'"))?;
    let rows = matrix_v.as_array().ok_or_else(|| parse_err("key 'matrix': expected an array of rows"))?;
    let matrix =
        rows.iter().enumerate().map(|(i, r)| numbers(r, &format!("matrix[{i}]"))).collect::<Result<Vec<_>>>()?;
    let labels = match obj.get("labels") {
        None | Some(Value::Null) => None,
        Some(Value::Array(a)) => Some(
            a.iter()
                .enumerate()
                .map(|(i, l)| {
                    l.as_str()
                        .map(str::to_string)
                        .ok_or_else(|| parse_err(format!("key 'labels': element {i} is not a string")))
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        Some(_) => return Err(parse_err("key 'labels': expected an array of strings")),
    };
    let name = match obj.get("name") {
        None => "space".to_string(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(parse_err("key 'name': expected a string")),
    };
    let scale = matrix.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs()));
    let tol = tol_triangle.unwrap_or(crate::tolerance::DEFAULT_TRIANGLE_REL * scale);
    Ok(validate_metric(&matrix, labels, tol)?.with_name(name))
}

pub fn measure_from_json(text: &str) -> Result<SignedMeasure> {
    let v: Value = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    let obj = v.as_object().ok_or_else(|| parse_err("top level: expected an object"))?;
    let weights = numbers(obj.get("weights").ok_or_else(|| parse_err("missing key 'weights'"))?, "weights")?;
    let space = match obj.get("space") {
        None => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(parse_err("key 'space': expected a string")),
    };
    Ok(SignedMeasure { space, weights })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| QhmError::Io(format!("{}: {e}", path.display())))
}

pub fn load_space(path: &Path) -> Result<FiniteMetricSpace> {
    space_from_json(&read(path)?, None).map_err(|e| match e {
        QhmError::Parse(m) => QhmError::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn save_space(x: &FiniteMetricSpace, path: &Path) -> Result<()> {
    fs::write(path, space_to_json(x)).map_err(|e| QhmError::Io(format!("{}: {e}", path.display())))
}

pub fn load_measure(path: &Path) -> Result<SignedMeasure> {
    measure_from_json(&read(path)?)
}
