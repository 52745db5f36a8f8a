//! Byte-reproducible JSON: object keys sorted, reals rounded to nine
//! significant digits and printed in shortest round-trip form.

use std::io;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Number, Value};

pub const SIGNIFICANT_DIGITS: usize = 9;

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().expect("formatted float parses")
}

fn canonicalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let r = round_sig(n.as_f64().expect("f64 number"));
            Number::from_f64(r).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(canonicalize).collect()),
        // serde_json's default map is ordered by key
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, canonicalize(v))).collect()),
        other => other,
    }
}

pub fn to_value<T: Serialize>(value: &T) -> Value {
    canonicalize(serde_json::to_value(value).expect("engine types serialize"))
}

pub fn to_string<T: Serialize>(value: &T) -> String {
    serde_json::to_string(&to_value(value)).expect("value serializes")
}

pub fn to_string_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(&to_value(value)).expect("value serializes");
    s.push('\n');
    s
}

pub fn write_pretty<T: Serialize>(path: impl AsRef<Path>, value: &T) -> io::Result<()> {
    std::fs::write(path, to_string_pretty(value))
}

/// Serialize-then-parse, so in-memory values match what a reader of the
/// written file sees.
pub fn round_trip<T: Serialize + DeserializeOwned>(value: &T) -> T {
    serde_json::from_value(to_value(value)).expect("canonical value deserializes")
}
