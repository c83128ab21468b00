//! Canonical JSON: floats rounded to 15 significant digits, complex values as `[re, im]`.

use serde::Serialize;
use serde_json::{Number, Value};

/// Significant digits kept for every float.
pub const SIGNIFICANT_DIGITS: usize = 15;

pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().expect("formatted float")
}

fn canonicalize(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64"));
            // -0.0 prints as "-0.0"; fold it to 0
            let x = if x == 0.0 { 0.0 } else { x };
            *n = Number::from_f64(x).expect("finite");
        }
        Value::Array(items) => items.iter_mut().for_each(canonicalize),
        Value::Object(map) => map.values_mut().for_each(canonicalize),
        _ => {}
    }
}

pub fn to_value<T: Serialize>(value: &T) -> Value {
    let mut v = serde_json::to_value(value).expect("serializable report");
    canonicalize(&mut v);
    v
}

/// Pretty-printed canonical JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(&to_value(value)).expect("serializable value");
    s.push('\n');
    s
}
