use std::path::PathBuf;

use crate::tioa::Tioa;

pub fn model_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models").join(name)
}

pub fn model(name: &str) -> Tioa {
    crate::io::load_single(&model_path(name)).expect("shipped model loads")
}

pub fn q(n: i64, d: i64) -> crate::Time {
    crate::Time::new(n, d)
}

pub fn t(n: i64) -> crate::Time {
    crate::Time::from_integer(n)
}
