//! Shared JSON shaping. serde_json's default map sorts keys, so every
//! object serializes byte-identically for identical content; the helpers
//! here keep numbers deterministic as well.

use num_bigint::BigUint;
use serde_json::{json, Value};

/// Big integers as decimal strings, any size.
pub fn big(b: &BigUint) -> Value {
    json!(b.to_string())
}

pub fn opt_big(b: &Option<BigUint>) -> Value {
    match b {
        Some(b) => big(b),
        None => Value::Null,
    }
}

/// Floats rounded to six decimals; enough for every report here and immune
/// to last-bit noise in formatting.
pub fn f6(x: f64) -> Value {
    json!((x * 1e6).round() / 1e6)
}

pub fn opt_f6(x: Option<f64>) -> Value {
    match x {
        Some(x) => f6(x),
        None => Value::Null,
    }
}

pub fn print_value(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("valid value"));
}
