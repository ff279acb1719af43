//! JSON report documents with numbers rounded to 12 significant digits.

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Round to [`SIGNIFICANT_DIGITS`] significant digits; non-finite values
/// pass through.
pub fn round_significant(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(x) = n.as_f64() {
                    if let Some(r) = serde_json::Number::from_f64(round_significant(x)) {
                        *n = r;
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

pub fn to_document<T: Serialize + ?Sized>(value: &T) -> Result<Value> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::argument(e.to_string()))?;
    round_value(&mut v);
    Ok(v)
}

/// Pretty-printed, rounded JSON followed by a newline.
pub fn render<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let doc = to_document(value)?;
    let mut out = serde_json::to_string_pretty(&doc).map_err(|e| Error::argument(e.to_string()))?;
    out.push('\n');
    Ok(out)
}
