//! Thin-film nanocavity workbench: transfer-matrix spectra, CIE colorimetry,
//! thickness design and a simulated thermochromic QR security tag.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assets;
pub mod colorimetry;
pub mod designer;
pub mod files;
pub mod materials;
pub mod numfmt;
pub mod tag;
pub mod tmm;

pub use colorimetry::{classify_mode_colors, ChromaticityResult, Colorimeter, ModeColors, Rgb, Xyz};
pub use designer::{objective, optimize, DesignResult, DesignSpace, DesignTarget, TargetKind};
pub use materials::{ComplexIndex, MaterialDispersion};
pub use tmm::{simulate, Channel, IncidenceSpec, Layer, Polarization, SpectralResponse, StackSpec, WavelengthGrid};
