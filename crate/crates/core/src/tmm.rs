//! Characteristic-matrix transfer-matrix method for planar multilayers.
//!
//! Conventions: time dependence `e^(-iωt)`, complex index `ñ = n + iκ`, and a
//! forward wave `e^(+i k_z z)` so absorbing layers have `Im δ > 0`. In these
//! conventions the characteristic matrix of a layer with phase thickness
//! `δ = 2π ñ d cosθ / λ` and tilted admittance `η` is
//!
//! ```text
//! M = | cos δ          -i sin δ / η |
//!     | -i η sin δ      cos δ       |
//! ```
//!
//! relating the tangential fields `(E, H)` at the entrance face to those at the
//! exit face. Admittances are in free-space units: `η_s = ñ cosθ` and
//! `η_p = ñ / cosθ`. The complex cosine comes from Snell's invariant
//! `β = n₀ sinθ₀` via `ñ cosθ = sqrt(ñ² − β²)` on the branch with non-negative
//! imaginary part, which makes every transmitted wave decay.

use std::fmt::Write as _;
use std::ops::Mul;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::materials::{MaterialDispersion, MaterialError};
use crate::numfmt;

pub const SPECTRA_CSV_HEADER: &str = "wavelength_nm,R,T,A";

#[derive(Debug, Error, PartialEq)]
pub enum TmmError {
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("ambient medium {material} is absorbing at {wavelength_nm} nm (k = {kappa})")]
    LossyAmbient {
        material: String,
        wavelength_nm: f64,
        kappa: f64,
    },
    #[error("layer thickness must be a positive finite number of nm, got {0}")]
    InvalidThickness(f64),
    #[error("incidence angle must lie in [0, 90) degrees, got {0}")]
    InvalidAngle(f64),
    #[error("invalid wavelength grid: {0}")]
    InvalidGrid(String),
    #[error("expected {expected} thicknesses, got {got}")]
    ThicknessCount { expected: usize, got: usize },
    #[error("spectra CSV line {line}: {message}")]
    SpectraParse { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    material: Arc<MaterialDispersion>,
    thickness_nm: f64,
}

impl Layer {
    pub fn new(material: Arc<MaterialDispersion>, thickness_nm: f64) -> Result<Self, TmmError> {
        if !(thickness_nm.is_finite() && thickness_nm > 0.0) {
            return Err(TmmError::InvalidThickness(thickness_nm));
        }
        Ok(Self {
            material,
            thickness_nm,
        })
    }

    pub fn material(&self) -> &Arc<MaterialDispersion> {
        &self.material
    }

    pub fn thickness_nm(&self) -> f64 {
        self.thickness_nm
    }

    pub fn with_thickness(&self, thickness_nm: f64) -> Result<Self, TmmError> {
        Self::new(self.material.clone(), thickness_nm)
    }
}

/// Layers between a semi-infinite ambient and a semi-infinite exit medium,
/// listed from the ambient side.
#[derive(Debug, Clone, PartialEq)]
pub struct StackSpec {
    pub ambient: Arc<MaterialDispersion>,
    pub layers: Vec<Layer>,
    pub exit: Arc<MaterialDispersion>,
}

impl StackSpec {
    pub fn new(
        ambient: Arc<MaterialDispersion>,
        layers: Vec<Layer>,
        exit: Arc<MaterialDispersion>,
    ) -> Self {
        Self {
            ambient,
            layers,
            exit,
        }
    }

    pub fn thicknesses(&self) -> Vec<f64> {
        self.layers.iter().map(Layer::thickness_nm).collect()
    }

    /// Same materials with new thicknesses, in layer order.
    pub fn with_thicknesses(&self, thicknesses: &[f64]) -> Result<Self, TmmError> {
        if thicknesses.len() != self.layers.len() {
            return Err(TmmError::ThicknessCount {
                expected: self.layers.len(),
                got: thicknesses.len(),
            });
        }
        let layers = self
            .layers
            .iter()
            .zip(thicknesses)
            .map(|(l, &d)| l.with_thickness(d))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            ambient: self.ambient.clone(),
            layers,
            exit: self.exit.clone(),
        })
    }
}

/// Flips the stack: layers reversed, ambient and exit swapped.
pub fn reverse(stack: &StackSpec) -> StackSpec {
    StackSpec {
        ambient: stack.exit.clone(),
        layers: stack.layers.iter().rev().cloned().collect(),
        exit: stack.ambient.clone(),
    }
}

/// A single linear polarization eigenstate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linear {
    S,
    P,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    S,
    P,
    /// Average of the s and p powers.
    Unpolarized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncidenceSpec {
    angle_deg: f64,
    polarization: Polarization,
}

impl IncidenceSpec {
    pub fn new(angle_deg: f64, polarization: Polarization) -> Result<Self, TmmError> {
        if !(0.0..90.0).contains(&angle_deg) {
            return Err(TmmError::InvalidAngle(angle_deg));
        }
        Ok(Self {
            angle_deg,
            polarization,
        })
    }

    pub fn normal() -> Self {
        Self {
            angle_deg: 0.0,
            polarization: Polarization::Unpolarized,
        }
    }

    pub fn angle_deg(&self) -> f64 {
        self.angle_deg
    }

    pub fn polarization(&self) -> Polarization {
        self.polarization
    }

    fn components(&self) -> &'static [Linear] {
        match self.polarization {
            Polarization::S => &[Linear::S],
            Polarization::P => &[Linear::P],
            Polarization::Unpolarized => &[Linear::S, Linear::P],
        }
    }
}

/// Ordered wavelength samples in nm.
#[derive(Debug, Clone, PartialEq)]
pub struct WavelengthGrid(Vec<f64>);

impl WavelengthGrid {
    /// `min, min + step, ...` up to and including `max` when it falls on the
    /// lattice (within a relative 1e-9 of a step).
    pub fn range(min: f64, max: f64, step: f64) -> Result<Self, TmmError> {
        if !(min.is_finite() && max.is_finite() && step.is_finite()) {
            return Err(TmmError::InvalidGrid("bounds must be finite".into()));
        }
        if !(min > 0.0) {
            return Err(TmmError::InvalidGrid(format!("minimum must be > 0, got {min}")));
        }
        if !(max > min) {
            return Err(TmmError::InvalidGrid(format!(
                "maximum {max} must exceed minimum {min}"
            )));
        }
        if !(step > 0.0) {
            return Err(TmmError::InvalidGrid(format!("step must be > 0, got {step}")));
        }
        let intervals = ((max - min) / step + 1e-9).floor() as usize;
        let points = (0..=intervals).map(|i| min + i as f64 * step).collect();
        Ok(Self(points))
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self, TmmError> {
        if points.is_empty() {
            return Err(TmmError::InvalidGrid("empty grid".into()));
        }
        if points.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(TmmError::InvalidGrid("wavelengths must be positive and finite".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(TmmError::InvalidGrid("wavelengths must be strictly increasing".into()));
        }
        Ok(Self(points))
    }

    /// 350-800 nm in 1 nm steps.
    pub fn visible() -> Self {
        Self::range(350.0, 800.0, 1.0).expect("valid default grid")
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    R,
    T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResponse {
    pub wavelengths: Vec<f64>,
    pub reflectance: Vec<f64>,
    pub transmittance: Vec<f64>,
    pub absorptance: Vec<f64>,
}

impl SpectralResponse {
    pub fn channel(&self, channel: Channel) -> &[f64] {
        match channel {
            Channel::R => &self.reflectance,
            Channel::T => &self.transmittance,
        }
    }

    pub fn len(&self) -> usize {
        self.wavelengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavelengths.is_empty()
    }

    /// CSV with header `wavelength_nm,R,T,A`, 9 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(48 * self.len());
        out.push_str(SPECTRA_CSV_HEADER);
        out.push('\n');
        for i in 0..self.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                numfmt::sig(self.wavelengths[i], 9),
                numfmt::sig(self.reflectance[i], 9),
                numfmt::sig(self.transmittance[i], 9),
                numfmt::sig(self.absorptance[i], 9),
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, TmmError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end_matches('\r') == SPECTRA_CSV_HEADER => {}
            _ => {
                return Err(TmmError::SpectraParse {
                    line: 1,
                    message: format!("expected header `{SPECTRA_CSV_HEADER}`"),
                })
            }
        }
        let mut out = SpectralResponse {
            wavelengths: Vec::new(),
            reflectance: Vec::new(),
            transmittance: Vec::new(),
            absorptance: Vec::new(),
        };
        for (i, line) in lines {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let values: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| TmmError::SpectraParse {
                    line: i + 1,
                    message: format!("malformed row `{line}`"),
                })?;
            if values.len() != 4 {
                return Err(TmmError::SpectraParse {
                    line: i + 1,
                    message: format!("expected 4 columns, got {}", values.len()),
                });
            }
            out.wavelengths.push(values[0]);
            out.reflectance.push(values[1]);
            out.transmittance.push(values[2]);
            out.absorptance.push(values[3]);
        }
        WavelengthGrid::from_points(out.wavelengths.clone())?;
        Ok(out)
    }
}

/// 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix2(pub [[Complex64; 2]; 2]);

impl Matrix2 {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self([[one, zero], [zero, one]])
    }

    pub fn det(&self) -> Complex64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    fn characteristic(delta: Complex64, eta: Complex64) -> Self {
        let i = Complex64::i();
        let (s, c) = (delta.sin(), delta.cos());
        Self([[c, -i * s / eta], [-i * eta * s, c]])
    }
}

impl Mul for Matrix2 {
    type Output = Matrix2;

    fn mul(self, rhs: Matrix2) -> Matrix2 {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Matrix2(out)
    }
}

/// `ñ cosθ` on the decaying branch, given Snell's invariant `β = n₀ sinθ₀`.
fn normal_wavevector(index: Complex64, beta: f64) -> Complex64 {
    let kz = (index * index - beta * beta).sqrt();
    if kz.im < 0.0 || (kz.im == 0.0 && kz.re < 0.0) {
        -kz
    } else {
        kz
    }
}

fn admittance(index: Complex64, kz: Complex64, pol: Linear) -> Complex64 {
    match pol {
        Linear::S => kz,
        Linear::P => index * index / kz,
    }
}

fn incidence_invariant(ambient_n: f64, angle_deg: f64) -> f64 {
    ambient_n * angle_deg.to_radians().sin()
}

/// Characteristic matrix of one layer. `ambient_n` is the (real) index of the
/// incidence medium, which fixes the tangential wavevector.
pub fn layer_matrix(
    layer: &Layer,
    wavelength_nm: f64,
    angle_deg: f64,
    pol: Linear,
    ambient_n: f64,
) -> Result<Matrix2, TmmError> {
    let index = layer.material.index_at(wavelength_nm)?.to_complex();
    let beta = incidence_invariant(ambient_n, angle_deg);
    Ok(matrix_from_index(index, layer.thickness_nm, wavelength_nm, beta, pol))
}

fn matrix_from_index(index: Complex64, thickness_nm: f64, wavelength_nm: f64, beta: f64, pol: Linear) -> Matrix2 {
    let kz = normal_wavevector(index, beta);
    let delta = kz * (2.0 * std::f64::consts::PI * thickness_nm / wavelength_nm);
    Matrix2::characteristic(delta, admittance(index, kz, pol))
}

/// Reflectance and transmittance for one wavelength and linear polarization.
fn power_coefficients(
    ambient_n: f64,
    layers: &[(Complex64, f64)],
    exit: Complex64,
    wavelength_nm: f64,
    angle_deg: f64,
    pol: Linear,
) -> (f64, f64) {
    let beta = incidence_invariant(ambient_n, angle_deg);
    let ambient = Complex64::new(ambient_n, 0.0);
    let eta0 = admittance(ambient, normal_wavevector(ambient, beta), pol);
    let exit_kz = normal_wavevector(exit, beta);
    let eta_exit = admittance(exit, exit_kz, pol);

    let m = layers.iter().fold(Matrix2::identity(), |acc, &(idx, d)| {
        acc * matrix_from_index(idx, d, wavelength_nm, beta, pol)
    });
    let b = m.0[0][0] + m.0[0][1] * eta_exit;
    let c = m.0[1][0] + m.0[1][1] * eta_exit;
    let denom = eta0 * b + c;
    let r = (eta0 * b - c) / denom;
    let t = eta0 * 2.0 / denom;
    let reflectance = r.norm_sqr();
    let transmittance = eta_exit.re / eta0.re * t.norm_sqr();
    (reflectance, transmittance)
}

/// Complex indices of every medium sampled on a fixed grid, so repeated
/// evaluations with different thicknesses skip the table lookups.
#[derive(Debug, Clone)]
pub struct PreparedStack {
    wavelengths: Vec<f64>,
    ambient: Vec<f64>,
    layers: Vec<Vec<Complex64>>,
    exit: Vec<Complex64>,
    thicknesses: Vec<f64>,
}

impl PreparedStack {
    pub fn new(stack: &StackSpec, grid: &WavelengthGrid) -> Result<Self, TmmError> {
        let mut ambient = Vec::with_capacity(grid.len());
        let mut exit = Vec::with_capacity(grid.len());
        for &w in grid.points() {
            let a = stack.ambient.index_at(w)?;
            if !a.is_lossless() {
                return Err(TmmError::LossyAmbient {
                    material: stack.ambient.name().to_string(),
                    wavelength_nm: w,
                    kappa: a.kappa,
                });
            }
            ambient.push(a.n);
            exit.push(stack.exit.index_at(w)?.to_complex());
        }
        let layers = stack
            .layers
            .iter()
            .map(|l| {
                grid.points()
                    .iter()
                    .map(|&w| l.material.index_at(w).map(|i| i.to_complex()))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            wavelengths: grid.points().to_vec(),
            ambient,
            layers,
            exit,
            thicknesses: stack.thicknesses(),
        })
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn response(&self, incidence: &IncidenceSpec) -> SpectralResponse {
        self.response_with(incidence, &self.thicknesses)
            .expect("own thicknesses are valid")
    }

    /// Response with the layer thicknesses replaced by `thicknesses`.
    pub fn response_with(
        &self,
        incidence: &IncidenceSpec,
        thicknesses: &[f64],
    ) -> Result<SpectralResponse, TmmError> {
        if thicknesses.len() != self.layers.len() {
            return Err(TmmError::ThicknessCount {
                expected: self.layers.len(),
                got: thicknesses.len(),
            });
        }
        if let Some(&d) = thicknesses.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(TmmError::InvalidThickness(d));
        }
        let n = self.wavelengths.len();
        let mut out = SpectralResponse {
            wavelengths: self.wavelengths.clone(),
            reflectance: Vec::with_capacity(n),
            transmittance: Vec::with_capacity(n),
            absorptance: Vec::with_capacity(n),
        };
        let components = incidence.components();
        let mut layers = Vec::with_capacity(self.layers.len());
        for i in 0..n {
            layers.clear();
            layers.extend(self.layers.iter().zip(thicknesses).map(|(idx, &d)| (idx[i], d)));
            let (mut r, mut t) = (0.0, 0.0);
            for &pol in components {
                let (rp, tp) = power_coefficients(
                    self.ambient[i],
                    &layers,
                    self.exit[i],
                    self.wavelengths[i],
                    incidence.angle_deg,
                    pol,
                );
                r += rp;
                t += tp;
            }
            let k = components.len() as f64;
            let (r, t) = (r / k, t / k);
            out.reflectance.push(r);
            out.transmittance.push(t);
            out.absorptance.push(1.0 - r - t);
        }
        Ok(out)
    }
}

pub fn simulate(
    stack: &StackSpec,
    grid: &WavelengthGrid,
    incidence: &IncidenceSpec,
) -> Result<SpectralResponse, TmmError> {
    Ok(PreparedStack::new(stack, grid)?.response(incidence))
}

/// Grid points that are strict local maxima. A flat run counts once, at its
/// leftmost point, when both neighbours of the run are lower. End points are
/// never reported.
pub fn local_maxima(wavelengths: &[f64], values: &[f64]) -> Vec<f64> {
    extrema(wavelengths, values, |a, b| a > b)
}

/// Mirror of [`local_maxima`].
pub fn local_minima(wavelengths: &[f64], values: &[f64]) -> Vec<f64> {
    extrema(wavelengths, values, |a, b| a < b)
}

fn extrema(wavelengths: &[f64], values: &[f64], beats: impl Fn(f64, f64) -> bool) -> Vec<f64> {
    let n = values.len().min(wavelengths.len());
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        let mut j = i;
        while j + 1 < n && values[j + 1] == values[i] {
            j += 1;
        }
        if j + 1 < n && beats(values[i], values[i - 1]) && beats(values[i], values[j + 1]) {
            out.push(wavelengths[i]);
        }
        i = j + 1;
    }
    out
}
