//! Serializers that write floats as JSON numbers with exactly six decimals,
//! so identical inputs give byte-identical responses.

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

fn raw(x: f64) -> Option<Box<RawValue>> {
    if !x.is_finite() {
        return None;
    }
    // -0.000000 is valid JSON but reads oddly; normalise it
    let text = format!("{x:.6}");
    let text = if text == "-0.000000" { "0.000000".to_owned() } else { text };
    RawValue::from_string(text).ok()
}

pub fn six<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    raw(*x).serialize(s)
}

pub fn six_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    x.and_then(raw).serialize(s)
}
