//! JSON model and shield files.

mod model;
mod shield;

pub use model::*;
pub use shield::*;

use serde::Serialize;

/// Pretty JSON with object keys sorted, so equal values give equal bytes.
pub fn to_canonical_json<T: Serialize>(v: &T) -> String {
    let value = serde_json::to_value(v).expect("serializable");
    let mut s = serde_json::to_string_pretty(&value).expect("serializable");
    s.push('\n');
    s
}
