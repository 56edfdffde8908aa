//! Data files shipped under the repository `data/` directory, embedded at
//! compile time so library users and tests do not depend on the working
//! directory.

use std::path::PathBuf;

use crate::colorimetry::{ColorMatchingTable, Illuminant};
use crate::materials::{parse_material, MaterialDispersion};

pub const SILVER_CSV: &str = include_str!("../../../data/materials/ag.csv");
pub const ZNO_CSV: &str = include_str!("../../../data/materials/zno.csv");
pub const CIE1931_CSV: &str = include_str!("../../../data/colorimetry/cie1931_2deg_5nm.csv");
pub const D65_CSV: &str = include_str!("../../../data/colorimetry/d65_5nm.csv");
pub const PAPER_STACK_JSON: &str = include_str!("../../../data/paper_stack.json");

/// Refractive index used for the PET substrate over the visible.
pub const PET_INDEX: f64 = 1.57;

/// Absolute path of the source-tree `data/` directory.
pub fn default_data_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data"))
}

pub fn silver() -> MaterialDispersion {
    parse_material("Ag", SILVER_CSV).expect("bundled silver table is valid")
}

pub fn zno() -> MaterialDispersion {
    parse_material("ZnO", ZNO_CSV).expect("bundled ZnO table is valid")
}

pub fn pet() -> MaterialDispersion {
    MaterialDispersion::constant("PET", PET_INDEX, 0.0).expect("valid constant")
}

pub fn cie1931() -> ColorMatchingTable {
    ColorMatchingTable::parse(CIE1931_CSV).expect("bundled CMF table is valid")
}

pub fn d65() -> Illuminant {
    Illuminant::parse("D65", D65_CSV).expect("bundled D65 table is valid")
}
