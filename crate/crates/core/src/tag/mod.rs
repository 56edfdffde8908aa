//! Simulated two-level security tag: a QR symbol printed over the
//! nanocavity and hidden under a thermally switched PDLC diffuser.
//!
//! Rendering works in linear light. Light modules show the stack's
//! reflection or transmission colour, dark modules show the toner, and the
//! PDLC haze mixes the result towards a diffuse white.

mod gf256;
pub mod ppm;
pub mod qr;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colorimetry::{uv_distance, ColorError, Colorimeter, ModeColors, Rgb};
use crate::tmm::StackSpec;

pub use qr::{byte_capacity, decode, encode_qr, DecodeError, EcLevel, MaskChoice, QrError, QrSymbol};

pub const HAZE_WIDTH_C: f64 = 2.0;
pub const WHITE_DIFFUSE: f64 = 0.92;
pub const INK_REFLECTANCE: f64 = 0.05;
pub const QUIET_ZONE: usize = 4;
/// Michelson contrast between module classes below which a reader sees no code.
pub const MIN_CONTRAST: f64 = 0.2;
pub const LEVEL2_MAX_UV_DISTANCE: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
pub enum TagError {
    #[error("invalid tag model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Qr(#[from] QrError),
    #[error(transparent)]
    Color(#[from] ColorError),
    #[error("finder patterns not found at the expected positions")]
    NotATag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LiquidCrystal {
    #[serde(rename = "5CB")]
    Lc5cb,
    E7,
    #[serde(rename = "1825")]
    Lc1825,
}

impl LiquidCrystal {
    pub const ALL: [LiquidCrystal; 3] = [LiquidCrystal::Lc5cb, LiquidCrystal::E7, LiquidCrystal::Lc1825];

    pub fn name(self) -> &'static str {
        match self {
            LiquidCrystal::Lc5cb => "5CB",
            LiquidCrystal::E7 => "E7",
            LiquidCrystal::Lc1825 => "1825",
        }
    }

    /// Nematic–isotropic transition of the PDLC mixture in °C.
    pub fn transition_c(self) -> f64 {
        match self {
            LiquidCrystal::Lc5cb => 35.0,
            LiquidCrystal::E7 => 59.0,
            LiquidCrystal::Lc1825 => 140.0,
        }
    }
}

impl fmt::Display for LiquidCrystal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdlcModel {
    pub lc: LiquidCrystal,
    pub transition_c: f64,
    pub width_c: f64,
}

impl PdlcModel {
    pub fn for_lc(lc: LiquidCrystal) -> Self {
        Self {
            lc,
            transition_c: lc.transition_c(),
            width_c: HAZE_WIDTH_C,
        }
    }
}

/// Logistic haze: 1 well below the transition, 0.5 at it, 0 well above.
pub fn pdlc_haze(pdlc: &PdlcModel, temperature_c: f64) -> f64 {
    1.0 / (1.0 + ((temperature_c - pdlc.transition_c) / pdlc.width_c).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IlluminationMode {
    Reflection,
    Transmission,
}

impl FromStr for IlluminationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reflection" => Ok(Self::Reflection),
            "transmission" => Ok(Self::Transmission),
            _ => Err(format!("unknown mode {s:?}; expected reflection or transmission")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TagModel {
    pub stack: StackSpec,
    pub qr: QrSymbol,
    pub pdlc: PdlcModel,
    pub ink_reflectance: f64,
    pub white_diffuse: Rgb,
}

impl TagModel {
    pub fn new(stack: StackSpec, qr: QrSymbol, lc: LiquidCrystal) -> Self {
        Self {
            stack,
            qr,
            pdlc: PdlcModel::for_lc(lc),
            ink_reflectance: INK_REFLECTANCE,
            white_diffuse: Rgb::gray(WHITE_DIFFUSE),
        }
    }

    fn validate(&self) -> Result<(), TagError> {
        if !(0.0..0.2).contains(&self.ink_reflectance) {
            return Err(TagError::InvalidModel(format!(
                "ink reflectance {} must be in [0, 0.2)",
                self.ink_reflectance
            )));
        }
        if !(self.pdlc.width_c > 0.0) {
            return Err(TagError::InvalidModel(format!("haze width {} must be > 0", self.pdlc.width_c)));
        }
        Ok(())
    }
}

/// Rendered tag in linear light, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TagImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Rgb>,
    pub mode: IlluminationMode,
    pub temperature_c: f64,
    pub scale: usize,
    /// Symbol side in modules, excluding the quiet zone.
    pub modules: usize,
}

impl TagImage {
    pub fn pixel(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    /// Linear colour at the centre of symbol module `(row, col)`.
    pub fn module_center(&self, row: usize, col: usize) -> Rgb {
        let at = |m: usize| (m + QUIET_ZONE) * self.scale + self.scale / 2;
        self.pixel(at(col), at(row))
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        ppm::write_ppm(self.width, self.height, &self.pixels)
    }
}

pub fn render_tag(
    tag: &TagModel,
    temperature_c: f64,
    mode: IlluminationMode,
    scale: usize,
) -> Result<TagImage, TagError> {
    let haze = pdlc_haze(&tag.pdlc, temperature_c);
    let colors = Colorimeter::standard().classify_mode_colors(&tag.stack)?;
    render_with_haze(tag, &colors, haze, temperature_c, mode, scale)
}

/// Renders with precomputed mode colours and an explicit haze.
pub fn render_with_haze(
    tag: &TagModel,
    colors: &ModeColors,
    haze: f64,
    temperature_c: f64,
    mode: IlluminationMode,
    scale: usize,
) -> Result<TagImage, TagError> {
    tag.validate()?;
    if scale == 0 {
        return Err(TagError::InvalidModel("scale must be at least 1 pixel per module".into()));
    }
    if !(0.0..=1.0).contains(&haze) {
        return Err(TagError::InvalidModel(format!("haze {haze} outside [0, 1]")));
    }
    let (light, dark) = match mode {
        IlluminationMode::Reflection => (colors.reflection.linear_rgb, Rgb::gray(tag.ink_reflectance)),
        IlluminationMode::Transmission => (colors.transmission.linear_rgb, Rgb::gray(0.0)),
    };
    let mix = |base: Rgb| {
        let w = tag.white_diffuse;
        Rgb::new(
            haze * w.r + (1.0 - haze) * base.r,
            haze * w.g + (1.0 - haze) * base.g,
            haze * w.b + (1.0 - haze) * base.b,
        )
    };
    let (light, dark) = (mix(light), mix(dark));

    let modules = tag.qr.side();
    let span = modules + 2 * QUIET_ZONE;
    let side = span * scale;
    let mut pixels = Vec::with_capacity(side * side);
    for y in 0..side {
        for x in 0..side {
            let (mr, mc) = (y / scale, x / scale);
            let in_symbol = (QUIET_ZONE..QUIET_ZONE + modules).contains(&mr)
                && (QUIET_ZONE..QUIET_ZONE + modules).contains(&mc);
            let is_dark = in_symbol && tag.qr.is_dark(mr - QUIET_ZONE, mc - QUIET_ZONE);
            pixels.push(if is_dark { dark } else { light });
        }
    }
    Ok(TagImage {
        width: side,
        height: side,
        pixels,
        mode,
        temperature_c,
        scale,
        modules,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verdict {
    pub level1: bool,
    pub level2: bool,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.level1 && self.level2
    }

    /// `{"level1":"pass","level2":"fail"}`
    pub fn to_json(&self) -> String {
        let word = |b: bool| if b { "pass" } else { "fail" };
        format!("{{\"level1\":\"{}\",\"level2\":\"{}\"}}", word(self.level1), word(self.level2))
    }
}

/// Expected payload plus the predicted mode colours of a genuine stack.
#[derive(Debug, Clone)]
pub struct Verifier {
    pub expected_payload: Vec<u8>,
    pub reference: ModeColors,
    colorimeter: Colorimeter,
}

impl Verifier {
    pub fn new(expected_payload: &[u8], reference_stack: &StackSpec) -> Result<Self, TagError> {
        let colorimeter = Colorimeter::standard();
        let reference = colorimeter.classify_mode_colors(reference_stack)?;
        Ok(Self::from_colors(expected_payload, reference, colorimeter))
    }

    pub fn from_colors(expected_payload: &[u8], reference: ModeColors, colorimeter: Colorimeter) -> Self {
        Self {
            expected_payload: expected_payload.to_vec(),
            reference,
            colorimeter,
        }
    }
}

fn luminance(c: Rgb) -> f64 {
    0.2126 * c.r + 0.7152 * c.g + 0.0722 * c.b
}

fn mean(colors: &[Rgb]) -> Option<Rgb> {
    if colors.is_empty() {
        return None;
    }
    let n = colors.len() as f64;
    let sum = colors.iter().fold([0.0; 3], |acc, c| [acc[0] + c.r, acc[1] + c.g, acc[2] + c.b]);
    Some(Rgb::new(sum[0] / n, sum[1] / n, sum[2] / n))
}

/// Level 1 reads the QR code from module centres thresholded at the mean
/// luminance; level 2 compares the mean light-module chromaticity with the
/// verifier's predicted colour for the image's illumination mode.
pub fn authenticate(image: &TagImage, verifier: &Verifier) -> Result<Verdict, TagError> {
    let n = image.modules;
    if image.width != (n + 2 * QUIET_ZONE) * image.scale || image.height != image.width {
        return Err(TagError::NotATag);
    }
    let samples: Vec<Rgb> = (0..n * n).map(|i| image.module_center(i / n, i % n)).collect();
    let lum: Vec<f64> = samples.iter().map(|&c| luminance(c)).collect();
    let threshold = lum.iter().sum::<f64>() / lum.len() as f64;
    let dark: Vec<bool> = lum.iter().map(|&y| y < threshold).collect();

    let class_mean = |want_dark: bool| {
        let ys: Vec<f64> = lum.iter().zip(&dark).filter(|(_, &d)| d == want_dark).map(|(&y, _)| y).collect();
        (!ys.is_empty()).then(|| ys.iter().sum::<f64>() / ys.len() as f64)
    };
    let contrast = match (class_mean(false), class_mean(true)) {
        (Some(l), Some(d)) if l + d > 0.0 => (l - d) / (l + d),
        _ => 0.0,
    };
    let readable = contrast >= MIN_CONTRAST;

    let level1 = if readable {
        let grid: Vec<Vec<bool>> = dark.chunks(n).map(<[bool]>::to_vec).collect();
        if !qr::has_finders(&grid) {
            return Err(TagError::NotATag);
        }
        matches!(qr::decode(&grid), Ok(p) if p == verifier.expected_payload)
    } else {
        false
    };

    let light: Vec<Rgb> = if readable {
        samples.iter().zip(&dark).filter(|(_, &d)| !d).map(|(&c, _)| c).collect()
    } else {
        samples.clone()
    };
    let predicted = match image.mode {
        IlluminationMode::Reflection => verifier.reference.reflection.linear_rgb,
        IlluminationMode::Transmission => verifier.reference.transmission.linear_rgb,
    };
    let c = &verifier.colorimeter;
    let level2 = match (mean(&light).map(|m| c.uv_of_linear_rgb(m)), c.uv_of_linear_rgb(predicted)) {
        (Some(Ok(seen)), Ok(want)) => uv_distance(seen, want) <= LEVEL2_MAX_UV_DISTANCE,
        _ => false,
    };
    Ok(Verdict { level1, level2 })
}

const PAYLOAD_ALPHABET: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";

/// Seeded random alphanumeric payload of `len` bytes.
pub fn random_payload(seed: u64, len: usize) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| PAYLOAD_ALPHABET[rng.gen_range(0..PAYLOAD_ALPHABET.len())])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::files::paper_stack;

    #[test]
    fn haze_anchor_points() {
        let p = PdlcModel::for_lc(LiquidCrystal::Lc5cb);
        assert_eq!(pdlc_haze(&p, 35.0), 0.5);
        assert!((pdlc_haze(&p, 25.0) - 0.9933).abs() < 1e-4);
        assert!((pdlc_haze(&p, 45.0) - 0.0067).abs() < 1e-4);
        assert!(pdlc_haze(&PdlcModel::for_lc(LiquidCrystal::E7), 45.0) > 0.999);
    }

    #[test]
    fn serde_names() {
        let lcs: Vec<LiquidCrystal> = serde_json::from_str(r#"["5CB","E7","1825"]"#).unwrap();
        assert_eq!(lcs, LiquidCrystal::ALL);
        assert_eq!(serde_json::to_string(&EcLevel::Q).unwrap(), "\"Q\"");
    }

    fn tag(payload: &[u8]) -> TagModel {
        let q = encode_qr(payload, EcLevel::M, MaskChoice::Auto).unwrap();
        TagModel::new(paper_stack(), q, LiquidCrystal::Lc5cb)
    }

    #[test]
    fn full_haze_is_uniform_white() {
        let t = tag(b"hidden");
        let colors = Colorimeter::standard().classify_mode_colors(&t.stack).unwrap();
        let img = render_with_haze(&t, &colors, 1.0, 20.0, IlluminationMode::Reflection, 2).unwrap();
        assert_eq!(img.width, (21 + 8) * 2);
        for p in &img.pixels {
            for c in p.to_array() {
                assert!((c - WHITE_DIFFUSE).abs() < 1.0 / 255.0);
            }
        }
    }

    #[test]
    fn rejects_bad_models() {
        let mut t = tag(b"x");
        t.ink_reflectance = 0.3;
        assert!(matches!(
            render_tag(&t, 45.0, IlluminationMode::Reflection, 2),
            Err(TagError::InvalidModel(_))
        ));
        let t = tag(b"x");
        assert!(render_tag(&t, 45.0, IlluminationMode::Reflection, 0).is_err());
    }

    #[test]
    fn blank_image_is_not_a_tag() {
        let t = tag(b"x");
        let v = Verifier::new(b"x", &t.stack).unwrap();
        let mut img = render_tag(&t, 45.0, IlluminationMode::Reflection, 3).unwrap();
        // Wipe the top-left finder so the grid still has contrast but no registration.
        for y in 0..(QUIET_ZONE + 7) * 3 {
            for x in 0..(QUIET_ZONE + 7) * 3 {
                img.pixels[y * img.width + x] = Rgb::gray(0.8);
            }
        }
        assert_eq!(authenticate(&img, &v), Err(TagError::NotATag));
    }

    #[test]
    fn random_payloads_are_seeded() {
        assert_eq!(random_payload(9, 12), random_payload(9, 12));
        assert_ne!(random_payload(9, 12), random_payload(10, 12));
        assert!(random_payload(1, 40).iter().all(u8::is_ascii_alphanumeric));
    }
}
