//! Method file format: UTF-8 JSON with exactly the keys
//! `name`, `scheme`, `order`, `alpha`, `beta`; coefficients as `[re, im]`
//! pairs written with 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use super::{MethodError, Scheme, SplittingMethod};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MethodFile {
    name: String,
    scheme: Scheme,
    order: u32,
    alpha: Vec<[f64; 2]>,
    beta: Vec<[f64; 2]>,
}

/// Formats a float with 17 significant digits.
pub(crate) fn sig17(x: f64) -> String {
    if x == 0.0 {
        // keeps the sign of negative zero out of the file
        return "0.0000000000000000e0".to_string();
    }
    format!("{x:.16e}")
}

fn write_coeffs(out: &mut String, v: &[Complex64]) {
    out.push('[');
    for (i, c) in v.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "[{}, {}]", sig17(c.re), sig17(c.im));
    }
    out.push(']');
}

pub fn method_to_json(m: &SplittingMethod) -> String {
    let mut out = String::new();
    out.push_str("{\"name\": ");
    out.push_str(&serde_json::to_string(m.name()).expect("string serializes"));
    let _ = write!(out, ", \"scheme\": \"{}\", \"order\": {}, \"alpha\": ", m.scheme(), m.order());
    write_coeffs(&mut out, m.alpha());
    out.push_str(", \"beta\": ");
    write_coeffs(&mut out, m.beta());
    out.push_str("}\n");
    out
}

pub fn method_from_json(text: &str) -> Result<SplittingMethod, MethodError> {
    let f: MethodFile =
        serde_json::from_str(text).map_err(|e| MethodError::File(e.to_string()))?;
    let conv = |v: Vec<[f64; 2]>| v.into_iter().map(|[re, im]| Complex64::new(re, im)).collect();
    SplittingMethod::new(f.name, f.scheme, f.order, conv(f.alpha), conv(f.beta))
}

pub fn save_method(m: &SplittingMethod, path: impl AsRef<Path>) -> Result<(), MethodError> {
    std::fs::write(path, method_to_json(m))?;
    Ok(())
}

pub fn load_method(path: impl AsRef<Path>) -> Result<SplittingMethod, MethodError> {
    method_from_json(&std::fs::read_to_string(path)?)
}
