#![allow(dead_code)]

pub mod zone_oracle;

use std::path::{Path, PathBuf};

pub fn model_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models").join(name)
}

pub fn model(name: &str) -> tshield::tioa::Tioa {
    tshield::io::load_single(&model_path(name)).expect("shipped model loads")
}
