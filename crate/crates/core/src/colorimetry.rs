//! CIE 1931 tristimulus integration, CIE 1976 u′v′ chromaticity and display RGB.
//!
//! Colour-matching functions and illuminant powers are linearly interpolated
//! onto the wavelength grid of the spectrum being integrated, and the
//! tristimulus sums use trapezoidal weights on that grid. The normalization
//! constant is chosen so that a unit factor under the same illuminant gives
//! `Y = 1`.
//!
//! Display RGB uses the Rec. 709 / sRGB primaries with the white point taken
//! from the illuminant in use, hard per-channel clipping and the sRGB transfer
//! curve.

use std::fmt::Write as _;

use thiserror::Error;

use crate::numfmt;
use crate::tmm::{self, Channel, IncidenceSpec, StackSpec, TmmError, WavelengthGrid};

const CMF_HEADER: &str = "wavelength_nm,x_bar,y_bar,z_bar";
const SPD_HEADER: &str = "wavelength_nm,relative_power";

/// Rec. 709 primaries as CIE xy chromaticities (red, green, blue).
const PRIMARIES: [(f64, f64); 3] = [(0.64, 0.33), (0.30, 0.60), (0.15, 0.06)];

#[derive(Debug, Error, PartialEq)]
pub enum ColorError {
    #[error("spectrum grid [{first}, {last}] nm does not cover the colour-matching range [{min}, {max}] nm")]
    GridMismatch { first: f64, last: f64, min: f64, max: f64 },
    #[error("spectral factor {value} at {wavelength_nm} nm is outside [0, 1]")]
    InvalidFactor { wavelength_nm: f64, value: f64 },
    #[error("spectrum has {wavelengths} wavelengths but {values} values")]
    LengthMismatch { wavelengths: usize, values: usize },
    #[error("tristimulus values are all zero; chromaticity undefined")]
    DegenerateColor,
    #[error("table line {line}: {message}")]
    Table { line: usize, message: String },
    #[error("illuminant {name} does not cover {wavelength_nm} nm")]
    IlluminantRange { name: String, wavelength_nm: f64 },
    #[error(transparent)]
    Tmm(#[from] TmmError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Xyz {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Xyz {
    pub const ZERO: Xyz = Xyz { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn scale(self, c: f64) -> Self {
        Self::new(self.x * c, self.y * c, self.z * c)
    }

    /// CIE 1931 (x, y) chromaticity.
    pub fn xy(self) -> Result<(f64, f64), ColorError> {
        let sum = self.x + self.y + self.z;
        if !(sum > 0.0) {
            return Err(ColorError::DegenerateColor);
        }
        Ok((self.x / sum, self.y / sum))
    }
}

pub fn xyz_to_uv_prime(xyz: Xyz) -> Result<(f64, f64), ColorError> {
    let d = xyz.x + 15.0 * xyz.y + 3.0 * xyz.z;
    if !(d > 0.0) {
        return Err(ColorError::DegenerateColor);
    }
    Ok((4.0 * xyz.x / d, 9.0 * xyz.y / d))
}

pub fn uv_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rgb {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl Rgb {
    pub fn new(r: f64, g: f64, b: f64) -> Self {
        Self { r, g, b }
    }

    pub fn gray(v: f64) -> Self {
        Self::new(v, v, v)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn clip(self) -> Self {
        Self::from_array(self.to_array().map(|c| c.clamp(0.0, 1.0)))
    }

    pub fn encode(self) -> Self {
        Self::from_array(self.to_array().map(srgb_encode))
    }

    pub fn decode(self) -> Self {
        Self::from_array(self.to_array().map(srgb_decode))
    }

    /// Red at least green, green strictly above blue.
    pub fn is_gold_family(self) -> bool {
        self.r >= self.g && self.g > self.b
    }

    pub fn is_blue_dominant(self) -> bool {
        self.b > self.r && self.b > self.g
    }
}

pub fn srgb_encode(c: f64) -> f64 {
    if c <= 0.0031308 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

pub fn srgb_decode(v: f64) -> f64 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColorMatchingTable {
    wavelengths: Vec<f64>,
    bars: Vec<[f64; 3]>,
}

impl ColorMatchingTable {
    pub fn parse(text: &str) -> Result<Self, ColorError> {
        let rows = parse_table(text, CMF_HEADER, 4)?;
        let wavelengths: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        check_increasing(&wavelengths)?;
        if rows.iter().any(|r| r[1..].iter().any(|v| *v < 0.0)) {
            return Err(ColorError::Table {
                line: 0,
                message: "colour-matching values must be non-negative".into(),
            });
        }
        let bars = rows.iter().map(|r| [r[1], r[2], r[3]]).collect();
        Ok(Self { wavelengths, bars })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.wavelengths[0], self.wavelengths[self.wavelengths.len() - 1])
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, [f64; 3])> + '_ {
        self.wavelengths.iter().copied().zip(self.bars.iter().copied())
    }

    /// `(x̄, ȳ, z̄)` at `wavelength_nm`, zero outside the tabulated support.
    pub fn at(&self, wavelength_nm: f64) -> [f64; 3] {
        let (lo, hi) = self.support();
        if wavelength_nm < lo || wavelength_nm > hi {
            return [0.0; 3];
        }
        let (i, t) = bracket(&self.wavelengths, wavelength_nm);
        if t == 0.0 {
            return self.bars[i];
        }
        let (a, b) = (self.bars[i], self.bars[i + 1]);
        [0, 1, 2].map(|c| a[c] + (b[c] - a[c]) * t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Illuminant {
    EqualEnergy,
    Tabulated {
        name: String,
        wavelengths: Vec<f64>,
        power: Vec<f64>,
    },
}

impl Illuminant {
    pub fn parse(name: &str, text: &str) -> Result<Self, ColorError> {
        let rows = parse_table(text, SPD_HEADER, 2)?;
        let wavelengths: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        check_increasing(&wavelengths)?;
        let power: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        if power.iter().any(|p| *p < 0.0) {
            return Err(ColorError::Table {
                line: 0,
                message: "relative power must be non-negative".into(),
            });
        }
        Ok(Self::Tabulated {
            name: name.to_string(),
            wavelengths,
            power,
        })
    }

    pub fn name(&self) -> &str {
        match self {
            Self::EqualEnergy => "E",
            Self::Tabulated { name, .. } => name,
        }
    }

    pub fn power_at(&self, wavelength_nm: f64) -> Result<f64, ColorError> {
        match self {
            Self::EqualEnergy => Ok(1.0),
            Self::Tabulated {
                name,
                wavelengths,
                power,
            } => {
                if wavelength_nm < wavelengths[0] || wavelength_nm > wavelengths[wavelengths.len() - 1] {
                    return Err(ColorError::IlluminantRange {
                        name: name.clone(),
                        wavelength_nm,
                    });
                }
                let (i, t) = bracket(wavelengths, wavelength_nm);
                if t == 0.0 {
                    return Ok(power[i]);
                }
                Ok(power[i] + (power[i + 1] - power[i]) * t)
            }
        }
    }
}

/// Index of the lower bracketing node and the fractional position above it.
fn bracket(nodes: &[f64], x: f64) -> (usize, f64) {
    let hi = nodes.partition_point(|&w| w < x);
    if nodes[hi] == x {
        return (hi, 0.0);
    }
    let lo = hi - 1;
    (lo, (x - nodes[lo]) / (nodes[hi] - nodes[lo]))
}

fn check_increasing(w: &[f64]) -> Result<(), ColorError> {
    if w.len() < 2 || w.windows(2).any(|p| p[1] <= p[0]) {
        return Err(ColorError::Table {
            line: 0,
            message: "need at least two strictly increasing wavelengths".into(),
        });
    }
    Ok(())
}

fn parse_table(text: &str, header: &str, columns: usize) -> Result<Vec<Vec<f64>>, ColorError> {
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if !seen_header {
            if line.starts_with('#') {
                continue;
            }
            if line.trim() != header {
                return Err(ColorError::Table {
                    line: i + 1,
                    message: format!("expected header `{header}`"),
                });
            }
            seen_header = true;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| ColorError::Table {
                line: i + 1,
                message: format!("malformed row `{line}`"),
            })?;
        if row.len() != columns {
            return Err(ColorError::Table {
                line: i + 1,
                message: format!("expected {columns} columns"),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Trapezoidal quadrature weights for a strictly increasing grid.
fn trapezoid_weights(w: &[f64]) -> Vec<f64> {
    let n = w.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            let left = if i > 0 { w[i] - w[i - 1] } else { 0.0 };
            let right = if i + 1 < n { w[i + 1] - w[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// Tristimulus values of a spectral factor (reflectance or transmittance)
/// viewed under `illuminant`.
pub fn spectrum_to_xyz(
    wavelengths: &[f64],
    factor: &[f64],
    illuminant: &Illuminant,
    cmf: &ColorMatchingTable,
) -> Result<Xyz, ColorError> {
    if wavelengths.len() != factor.len() {
        return Err(ColorError::LengthMismatch {
            wavelengths: wavelengths.len(),
            values: factor.len(),
        });
    }
    let (min, max) = cmf.support();
    let (first, last) = match (wavelengths.first(), wavelengths.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => return Err(ColorError::GridMismatch { first: f64::NAN, last: f64::NAN, min, max }),
    };
    const EDGE: f64 = 1e-9;
    if first > min + EDGE || last < max - EDGE {
        return Err(ColorError::GridMismatch { first, last, min, max });
    }
    let (mut selected, mut values) = (Vec::new(), Vec::new());
    for (&w, &f) in wavelengths.iter().zip(factor) {
        if w < min - EDGE || w > max + EDGE {
            continue;
        }
        if !(-1e-9..=1.0 + 1e-9).contains(&f) {
            return Err(ColorError::InvalidFactor { wavelength_nm: w, value: f });
        }
        selected.push(w);
        values.push(f);
    }
    let weights = trapezoid_weights(&selected);
    let (mut acc, mut norm) = ([0.0; 3], 0.0);
    for ((&w, &f), &dw) in selected.iter().zip(&values).zip(&weights) {
        let s = illuminant.power_at(w)?;
        let bar = cmf.at(w);
        norm += s * bar[1] * dw;
        for c in 0..3 {
            acc[c] += s * f * bar[c] * dw;
        }
    }
    if !(norm > 0.0) {
        return Err(ColorError::DegenerateColor);
    }
    Ok(Xyz::new(acc[0] / norm, acc[1] / norm, acc[2] / norm))
}

type Mat3 = [[f64; 3]; 3];

fn mat_vec(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|r| m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2])
}

fn invert(m: &Mat3) -> Mat3 {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let mut inv = [[0.0; 3]; 3];
    for (r, row) in inv.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            // cofactor of m[c][r]
            let (r1, r2) = ((c + 1) % 3, (c + 2) % 3);
            let (c1, c2) = ((r + 1) % 3, (r + 2) % 3);
            *cell = (m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]) / det;
        }
    }
    inv
}

/// Linear RGB → XYZ matrix for the Rec. 709 primaries and the given white.
fn rgb_to_xyz_matrix(white: Xyz) -> Mat3 {
    let mut p = [[0.0; 3]; 3];
    for (c, &(x, y)) in PRIMARIES.iter().enumerate() {
        p[0][c] = x / y;
        p[1][c] = 1.0;
        p[2][c] = (1.0 - x - y) / y;
    }
    let s = mat_vec(&invert(&p), [white.x, white.y, white.z]);
    let mut m = p;
    for row in m.iter_mut() {
        for c in 0..3 {
            row[c] *= s[c];
        }
    }
    m
}

/// Unclipped linear RGB.
pub fn xyz_to_linear_rgb(xyz: Xyz, white: Xyz) -> Rgb {
    let m = invert(&rgb_to_xyz_matrix(white));
    Rgb::from_array(mat_vec(&m, [xyz.x, xyz.y, xyz.z]))
}

pub fn linear_rgb_to_xyz(rgb: Rgb, white: Xyz) -> Xyz {
    let v = mat_vec(&rgb_to_xyz_matrix(white), rgb.to_array());
    Xyz::new(v[0], v[1], v[2])
}

/// Clipped, transfer-encoded display RGB.
pub fn xyz_to_display_rgb(xyz: Xyz, white: Xyz) -> Rgb {
    xyz_to_linear_rgb(xyz, white).clip().encode()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChromaticityResult {
    pub xyz: Xyz,
    pub uv_prime: (f64, f64),
    /// Clipped linear-light RGB before the display transfer curve.
    pub linear_rgb: Rgb,
    /// Display-encoded RGB in `[0, 1]³`.
    pub rgb: Rgb,
}

impl ChromaticityResult {
    /// `{"X":..,"Y":..,"Z":..,"u_prime":..,"v_prime":..,"rgb":[r,g,b]}`,
    /// 6 significant digits.
    pub fn to_json(&self) -> String {
        let f = |v: f64| numfmt::sig(v, 6);
        let mut s = String::new();
        let _ = write!(
            s,
            "{{\"X\":{},\"Y\":{},\"Z\":{},\"u_prime\":{},\"v_prime\":{},\"rgb\":[{},{},{}]}}",
            f(self.xyz.x),
            f(self.xyz.y),
            f(self.xyz.z),
            f(self.uv_prime.0),
            f(self.uv_prime.1),
            f(self.rgb.r),
            f(self.rgb.g),
            f(self.rgb.b),
        );
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeColors {
    pub reflection: ChromaticityResult,
    pub transmission: ChromaticityResult,
}

impl ModeColors {
    pub fn separation(&self) -> f64 {
        uv_distance(self.reflection.uv_prime, self.transmission.uv_prime)
    }
}

/// Observer, illuminant and the derived display white bundled together.
#[derive(Debug, Clone)]
pub struct Colorimeter {
    cmf: ColorMatchingTable,
    illuminant: Illuminant,
    white: Xyz,
}

impl Colorimeter {
    pub fn new(cmf: ColorMatchingTable, illuminant: Illuminant) -> Result<Self, ColorError> {
        let (min, max) = cmf.support();
        let grid = WavelengthGrid::range(min, max, 1.0)?;
        let ones = vec![1.0; grid.len()];
        let white = spectrum_to_xyz(grid.points(), &ones, &illuminant, &cmf)?;
        Ok(Self {
            cmf,
            illuminant,
            white,
        })
    }

    /// CIE 1931 observer under D65 from the bundled tables.
    pub fn standard() -> Self {
        Self::new(crate::assets::cie1931(), crate::assets::d65()).expect("bundled tables")
    }

    pub fn equal_energy() -> Self {
        Self::new(crate::assets::cie1931(), Illuminant::EqualEnergy).expect("bundled tables")
    }

    pub fn cmf(&self) -> &ColorMatchingTable {
        &self.cmf
    }

    pub fn illuminant(&self) -> &Illuminant {
        &self.illuminant
    }

    pub fn white(&self) -> Xyz {
        self.white
    }

    pub fn xyz(&self, wavelengths: &[f64], factor: &[f64]) -> Result<Xyz, ColorError> {
        spectrum_to_xyz(wavelengths, factor, &self.illuminant, &self.cmf)
    }

    pub fn result_for_xyz(&self, xyz: Xyz) -> Result<ChromaticityResult, ColorError> {
        let uv_prime = xyz_to_uv_prime(xyz)?;
        let linear_rgb = xyz_to_linear_rgb(xyz, self.white).clip();
        Ok(ChromaticityResult {
            xyz,
            uv_prime,
            linear_rgb,
            rgb: linear_rgb.encode(),
        })
    }

    pub fn chromaticity(&self, wavelengths: &[f64], factor: &[f64]) -> Result<ChromaticityResult, ColorError> {
        self.result_for_xyz(self.xyz(wavelengths, factor)?)
    }

    /// u′v′ of a linear RGB colour as shown on the display.
    pub fn uv_of_linear_rgb(&self, rgb: Rgb) -> Result<(f64, f64), ColorError> {
        xyz_to_uv_prime(linear_rgb_to_xyz(rgb, self.white))
    }

    /// Reflection and transmission colours of a stack at normal incidence,
    /// simulated on a 1 nm grid spanning the colour-matching range.
    pub fn classify_mode_colors(&self, stack: &StackSpec) -> Result<ModeColors, ColorError> {
        let (min, max) = self.cmf.support();
        let grid = WavelengthGrid::range(min, max, 1.0)?;
        let resp = tmm::simulate(stack, &grid, &IncidenceSpec::normal())?;
        self.mode_colors_of(&resp)
    }

    pub fn mode_colors_of(&self, resp: &tmm::SpectralResponse) -> Result<ModeColors, ColorError> {
        Ok(ModeColors {
            reflection: self.chromaticity(&resp.wavelengths, resp.channel(Channel::R))?,
            transmission: self.chromaticity(&resp.wavelengths, resp.channel(Channel::T))?,
        })
    }
}

pub fn classify_mode_colors(stack: &StackSpec) -> Result<ModeColors, ColorError> {
    Colorimeter::standard().classify_mode_colors(stack)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid() -> Vec<f64> {
        WavelengthGrid::visible().points().to_vec()
    }

    #[test]
    fn uv_prime_formula() {
        let (u, v) = xyz_to_uv_prime(Xyz::new(1.0, 1.0, 1.0)).unwrap();
        assert!((u - 4.0 / 19.0).abs() < 1e-15 && (v - 9.0 / 19.0).abs() < 1e-15);
        assert_eq!(xyz_to_uv_prime(Xyz::ZERO), Err(ColorError::DegenerateColor));
    }

    #[test]
    fn zero_factor_is_black() {
        let c = Colorimeter::standard();
        let w = grid();
        let xyz = c.xyz(&w, &vec![0.0; w.len()]).unwrap();
        assert_eq!(xyz, Xyz::ZERO);
        assert_eq!(xyz_to_display_rgb(xyz, c.white()), Rgb::gray(0.0));
    }

    #[test]
    fn unit_factor_has_unit_luminance() {
        let c = Colorimeter::standard();
        let w = grid();
        let xyz = c.xyz(&w, &vec![1.0; w.len()]).unwrap();
        assert!((xyz.y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn white_maps_to_display_white() {
        for c in [Colorimeter::standard(), Colorimeter::equal_energy()] {
            let rgb = xyz_to_display_rgb(c.white(), c.white());
            for v in rgb.to_array() {
                assert!((v - 1.0).abs() < 0.01, "{rgb:?}");
            }
        }
    }

    #[test]
    fn d65_matrix_matches_published_srgb() {
        // IEC 61966-2-1 row 1: 3.2406 -1.5372 -0.4986
        let white = Xyz::new(0.95047, 1.0, 1.08883);
        let r = xyz_to_linear_rgb(Xyz::new(1.0, 0.0, 0.0), white);
        assert!((r.r - 3.2406).abs() < 2e-3 && (r.g + 0.9689).abs() < 2e-3 && (r.b - 0.0557).abs() < 2e-3);
    }

    #[test]
    fn grid_must_cover_observer_range() {
        let c = Colorimeter::standard();
        let w: Vec<f64> = (400..=700).map(f64::from).collect();
        let err = c.xyz(&w, &vec![1.0; w.len()]).unwrap_err();
        assert!(matches!(err, ColorError::GridMismatch { .. }));
    }

    #[test]
    fn factor_outside_unit_interval_rejected() {
        let c = Colorimeter::standard();
        let w = grid();
        let mut f = vec![0.5; w.len()];
        f[100] = 1.5;
        assert!(matches!(c.xyz(&w, &f), Err(ColorError::InvalidFactor { .. })));
    }

    #[test]
    fn transfer_curve_inverts() {
        for i in 0..=100 {
            let v = i as f64 / 100.0;
            assert!((srgb_decode(srgb_encode(v)) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn json_record_layout() {
        let c = Colorimeter::standard();
        let w = grid();
        let res = c.chromaticity(&w, &vec![1.0; w.len()]).unwrap();
        let json = res.to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["Y"].as_f64().unwrap(), 1.0);
        assert_eq!(v["rgb"].as_array().unwrap().len(), 3);
        assert!(json.starts_with("{\"X\":"));
    }

    #[test]
    fn spectral_locus_from_spikes() {
        let c = Colorimeter::standard();
        let w = grid();
        for (lambda, bar) in c.cmf().nodes().filter(|(l, b)| *l <= 700.0 && b.iter().sum::<f64>() > 0.0) {
            let f: Vec<f64> = w.iter().map(|&x| if x == lambda { 1.0 } else { 0.0 }).collect();
            let (u, v) = xyz_to_uv_prime(c.xyz(&w, &f).unwrap()).unwrap();
            let (ul, vl) = xyz_to_uv_prime(Xyz::new(bar[0], bar[1], bar[2])).unwrap();
            assert!((u - ul).abs() < 1e-9 && (v - vl).abs() < 1e-9, "{lambda}");
        }
    }

    proptest! {
        #[test]
        fn uv_prime_is_scale_invariant(x in 0.0f64..2.0, y in 1e-3f64..2.0, z in 0.0f64..2.0, c in 1e-6f64..1e6) {
            let a = xyz_to_uv_prime(Xyz::new(x, y, z)).unwrap();
            let b = xyz_to_uv_prime(Xyz::new(x, y, z).scale(c)).unwrap();
            prop_assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        }

        #[test]
        fn integration_is_linear(
            f1 in proptest::collection::vec(0.0f64..1.0, 451),
            f2 in proptest::collection::vec(0.0f64..1.0, 451),
            a in 0.0f64..0.5,
            b in 0.0f64..0.5,
        ) {
            let c = Colorimeter::standard();
            let w = grid();
            let mix: Vec<f64> = f1.iter().zip(&f2).map(|(p, q)| a * p + b * q).collect();
            let lhs = c.xyz(&w, &mix).unwrap();
            let (x1, x2) = (c.xyz(&w, &f1).unwrap(), c.xyz(&w, &f2).unwrap());
            prop_assert!((lhs.x - (a * x1.x + b * x2.x)).abs() < 1e-12);
            prop_assert!((lhs.y - (a * x1.y + b * x2.y)).abs() < 1e-12);
            prop_assert!((lhs.z - (a * x1.z + b * x2.z)).abs() < 1e-12);
        }

        #[test]
        fn results_stay_in_bounds(f in proptest::collection::vec(0.0f64..1.0, 451)) {
            let c = Colorimeter::standard();
            let res = c.chromaticity(&grid(), &f).unwrap();
            let (u, v) = res.uv_prime;
            prop_assert!((0.0..=0.7).contains(&u) && (0.0..=0.7).contains(&v));
            for ch in res.rgb.to_array() {
                prop_assert!((0.0..=1.0).contains(&ch));
            }
        }
    }
}
