//! Fixed 17-significant-digit rendering of floats for CSV and JSON output.

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

/// Scientific notation with 16 digits after the point; parses back to the
/// same `f64`. Independent of locale.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// A JSON number with 17 significant digits, or `null` when not finite.
pub fn json_number(v: f64) -> Box<RawValue> {
    let text = if v.is_finite() {
        format_float(v)
    } else {
        "null".to_owned()
    };
    RawValue::from_string(text).expect("formatted float is valid JSON")
}

pub fn serialize_f64<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    json_number(*v).serialize(s)
}

pub fn serialize_vec<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| json_number(*x)))
}

pub fn serialize_opt_vec<S: Serializer>(v: &Option<Vec<f64>>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => serialize_vec(v, s),
        None => s.serialize_none(),
    }
}
