//! Complex refractive-index dispersion data.
//!
//! Indices follow the `n + iκ` convention with `e^(-iωt)` time dependence, so a
//! positive extinction coefficient means absorption. Tabulated materials are
//! read from a small CSV format:
//!
//! ```text
//! # optional provenance comments
//! wavelength_nm,n,k
//! 400,2.0,0.0
//! 800,1.9,0.0
//! ```
//!
//! Values between nodes are linearly interpolated per component. Queries outside
//! the tabulated range are rejected rather than extrapolated.

use std::fmt::Write as _;
use std::io::Read;

use num_complex::Complex64;
use thiserror::Error;

pub const CSV_HEADER: &str = "wavelength_nm,n,k";

#[derive(Debug, Error, PartialEq)]
pub enum MaterialError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid material data: {0}")]
    Validation(String),
    #[error("wavelength {wavelength_nm} nm outside tabulated range [{min}, {max}] nm of {material}")]
    OutOfRange {
        material: String,
        wavelength_nm: f64,
        min: f64,
        max: f64,
    },
}

/// Complex refractive index `n + iκ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexIndex {
    pub n: f64,
    pub kappa: f64,
}

impl ComplexIndex {
    pub const VACUUM: ComplexIndex = ComplexIndex { n: 1.0, kappa: 0.0 };

    pub fn new(n: f64, kappa: f64) -> Self {
        Self { n, kappa }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.n, self.kappa)
    }

    pub fn is_lossless(self) -> bool {
        self.kappa == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub wavelength_nm: f64,
    pub n: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DispersionKind {
    Tabulated(Vec<Sample>),
    Constant(ComplexIndex),
}

/// A named material with either a tabulated or a wavelength-independent index.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialDispersion {
    name: String,
    kind: DispersionKind,
    comments: Vec<String>,
}

impl MaterialDispersion {
    pub fn constant(name: impl Into<String>, n: f64, kappa: f64) -> Result<Self, MaterialError> {
        validate_index(n, kappa)?;
        Ok(Self {
            name: name.into(),
            kind: DispersionKind::Constant(ComplexIndex::new(n, kappa)),
            comments: Vec::new(),
        })
    }

    pub fn air() -> Self {
        Self {
            name: "air".into(),
            kind: DispersionKind::Constant(ComplexIndex::VACUUM),
            comments: Vec::new(),
        }
    }

    pub fn tabulated(name: impl Into<String>, samples: Vec<Sample>) -> Result<Self, MaterialError> {
        validate_samples(&samples)?;
        Ok(Self {
            name: name.into(),
            kind: DispersionKind::Tabulated(samples),
            comments: Vec::new(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &DispersionKind {
        &self.kind
    }

    /// Provenance comment lines (without the leading `#`).
    pub fn comments(&self) -> &[String] {
        &self.comments
    }

    pub fn samples(&self) -> &[Sample] {
        match &self.kind {
            DispersionKind::Tabulated(s) => s,
            DispersionKind::Constant(_) => &[],
        }
    }

    /// Inclusive wavelength range, `None` for constant materials.
    pub fn wavelength_range(&self) -> Option<(f64, f64)> {
        match &self.kind {
            DispersionKind::Tabulated(s) => Some((s[0].wavelength_nm, s[s.len() - 1].wavelength_nm)),
            DispersionKind::Constant(_) => None,
        }
    }

    pub fn index_at(&self, wavelength_nm: f64) -> Result<ComplexIndex, MaterialError> {
        match &self.kind {
            DispersionKind::Constant(index) => Ok(*index),
            DispersionKind::Tabulated(samples) => {
                let first = samples[0].wavelength_nm;
                let last = samples[samples.len() - 1].wavelength_nm;
                if !(wavelength_nm >= first && wavelength_nm <= last) {
                    return Err(MaterialError::OutOfRange {
                        material: self.name.clone(),
                        wavelength_nm,
                        min: first,
                        max: last,
                    });
                }
                // First node with wavelength >= query.
                let hi = samples.partition_point(|s| s.wavelength_nm < wavelength_nm);
                let upper = samples[hi];
                if upper.wavelength_nm == wavelength_nm {
                    return Ok(ComplexIndex::new(upper.n, upper.kappa));
                }
                let lower = samples[hi - 1];
                let t = (wavelength_nm - lower.wavelength_nm)
                    / (upper.wavelength_nm - lower.wavelength_nm);
                Ok(ComplexIndex::new(
                    lerp(lower.n, upper.n, t),
                    lerp(lower.kappa, upper.kappa, t),
                ))
            }
        }
    }

    /// Serializes a tabulated material back to the CSV format.
    ///
    /// Numbers are written in Rust's shortest round-trip form, so parsing the
    /// output reproduces every sample bit for bit.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "#{c}");
        }
        out.push_str(CSV_HEADER);
        out.push('\n');
        for s in self.samples() {
            let _ = writeln!(out, "{},{},{}", s.wavelength_nm, s.n, s.kappa);
        }
        out
    }
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

fn validate_index(n: f64, kappa: f64) -> Result<(), MaterialError> {
    if !(n.is_finite() && n > 0.0) {
        return Err(MaterialError::Validation(format!("n must be > 0, got {n}")));
    }
    if !(kappa.is_finite() && kappa >= 0.0) {
        return Err(MaterialError::Validation(format!("k must be >= 0, got {kappa}")));
    }
    Ok(())
}

fn validate_samples(samples: &[Sample]) -> Result<(), MaterialError> {
    if samples.len() < 2 {
        return Err(MaterialError::Validation(format!(
            "tabulated material needs at least 2 rows, got {}",
            samples.len()
        )));
    }
    for s in samples {
        if !(s.wavelength_nm.is_finite() && s.wavelength_nm > 0.0) {
            return Err(MaterialError::Validation(format!(
                "wavelength must be > 0, got {}",
                s.wavelength_nm
            )));
        }
        validate_index(s.n, s.kappa)?;
    }
    if let Some(w) = samples
        .windows(2)
        .find(|w| w[1].wavelength_nm <= w[0].wavelength_nm)
    {
        return Err(MaterialError::Validation(format!(
            "wavelengths must be strictly increasing ({} followed by {})",
            w[0].wavelength_nm, w[1].wavelength_nm
        )));
    }
    Ok(())
}

/// Parses a material CSV stream.
pub fn load_material(name: &str, mut source: impl Read) -> Result<MaterialDispersion, MaterialError> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| MaterialError::Parse {
            line: 0,
            message: format!("unreadable stream: {e}"),
        })?;
    parse_material(name, &text)
}

pub fn parse_material(name: &str, text: &str) -> Result<MaterialDispersion, MaterialError> {
    let mut comments = Vec::new();
    let mut samples = Vec::new();
    let mut seen_header = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if !seen_header {
            if let Some(c) = line.strip_prefix('#') {
                comments.push(c.to_string());
                continue;
            }
            if line.trim() != CSV_HEADER {
                return Err(MaterialError::Parse {
                    line: line_no,
                    message: format!("expected header `{CSV_HEADER}`, got `{line}`"),
                });
            }
            seen_header = true;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(MaterialError::Parse {
                line: line_no,
                message: format!("expected 3 columns, got {}", fields.len()),
            });
        }
        let mut values = [0.0; 3];
        for (v, f) in values.iter_mut().zip(&fields) {
            *v = f.parse::<f64>().map_err(|_| MaterialError::Parse {
                line: line_no,
                message: format!("`{f}` is not a decimal number"),
            })?;
        }
        samples.push(Sample {
            wavelength_nm: values[0],
            n: values[1],
            kappa: values[2],
        });
    }
    if !seen_header {
        return Err(MaterialError::Parse {
            line: 0,
            message: format!("missing header `{CSV_HEADER}`"),
        });
    }
    let mut material = MaterialDispersion::tabulated(name, samples)?;
    material.comments = comments;
    Ok(material)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets;
    use proptest::prelude::*;

    fn two_node() -> MaterialDispersion {
        parse_material("t", "wavelength_nm,n,k\n400,2.0,0.0\n800,1.9,0.0\n").unwrap()
    }

    #[test]
    fn minimal_csv_loads() {
        let m = load_material("t", "wavelength_nm,n,k\n400,2.0,0.0\n800,1.9,0.0\n".as_bytes()).unwrap();
        assert_eq!(m.samples().len(), 2);
        assert_eq!(m.wavelength_range(), Some((400.0, 800.0)));
    }

    #[test]
    fn out_of_order_rows_rejected() {
        let err = parse_material("t", "wavelength_nm,n,k\n800,1.9,0\n400,2.0,0\n").unwrap_err();
        assert!(matches!(err, MaterialError::Validation(_)));
    }

    #[test]
    fn bad_values_rejected() {
        for body in ["400,0.0,0\n800,1,0\n", "400,1,-0.1\n800,1,0\n", "400,1,0\n"] {
            let err = parse_material("t", &format!("wavelength_nm,n,k\n{body}")).unwrap_err();
            assert!(matches!(err, MaterialError::Validation(_)), "{body}: {err:?}");
        }
    }

    #[test]
    fn malformed_rows_are_parse_errors() {
        let err = parse_material("t", "wavelength_nm,n,k\n400,abc,0\n800,1,0\n").unwrap_err();
        assert_eq!(
            err,
            MaterialError::Parse {
                line: 2,
                message: "`abc` is not a decimal number".into()
            }
        );
        assert!(matches!(
            parse_material("t", "lambda,n,k\n400,1,0\n"),
            Err(MaterialError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_material("t", "wavelength_nm,n,k\n400,1\n"),
            Err(MaterialError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn comments_before_header_are_kept() {
        let m = parse_material("t", "# source A\n# source B\nwavelength_nm,n,k\n1,1,0\n2,1,0\n").unwrap();
        assert_eq!(m.comments(), [" source A", " source B"]);
    }

    #[test]
    fn constant_material_is_wavelength_independent() {
        let air = MaterialDispersion::air();
        for w in [1.0, 550.0, 1e6] {
            assert_eq!(air.index_at(w).unwrap(), ComplexIndex::new(1.0, 0.0));
        }
        assert!(MaterialDispersion::constant("bad", -1.0, 0.0).is_err());
    }

    #[test]
    fn linear_midpoint() {
        let idx = two_node().index_at(600.0).unwrap();
        assert!((idx.n - 1.95).abs() < 1e-15);
        assert_eq!(idx.kappa, 0.0);
    }

    #[test]
    fn no_extrapolation() {
        let m = two_node();
        assert!(matches!(m.index_at(399.999), Err(MaterialError::OutOfRange { .. })));
        assert!(matches!(m.index_at(800.001), Err(MaterialError::OutOfRange { .. })));
        assert!(m.index_at(f64::NAN).is_err());
    }

    #[test]
    fn bundled_zno_is_a_weakly_absorbing_dielectric() {
        // Bounds read off the bundled thin-film table over 450-800 nm.
        let zno = assets::zno();
        let mut w = 450.0;
        while w <= 800.0 {
            let idx = zno.index_at(w).unwrap();
            assert!((1.75..=1.85).contains(&idx.n), "n({w}) = {}", idx.n);
            assert!(idx.kappa < 0.08, "k({w}) = {}", idx.kappa);
            w += 5.0;
        }
    }

    #[test]
    fn bundled_silver_is_metallic_in_the_red() {
        let idx = assets::silver().index_at(650.0).unwrap();
        assert!(idx.kappa > idx.n);
        assert!((3.5..=4.8).contains(&idx.kappa), "k(650) = {}", idx.kappa);
    }

    #[test]
    fn bundled_tables_reserialize_verbatim() {
        assert_eq!(assets::silver().to_csv(), assets::SILVER_CSV);
        assert_eq!(assets::zno().to_csv(), assets::ZNO_CSV);
    }

    proptest! {
        #[test]
        fn exact_at_nodes_and_bounded_between(t in 0.0f64..1.0, seg in 0usize..48) {
            let ag = assets::silver();
            let s = ag.samples();
            let seg = seg % (s.len() - 1);
            let (a, b) = (s[seg], s[seg + 1]);
            prop_assert_eq!(ag.index_at(a.wavelength_nm).unwrap(), ComplexIndex::new(a.n, a.kappa));
            let w = a.wavelength_nm + t * (b.wavelength_nm - a.wavelength_nm);
            let idx = ag.index_at(w).unwrap();
            prop_assert!(idx.n >= a.n.min(b.n) - 1e-15 && idx.n <= a.n.max(b.n) + 1e-15);
            prop_assert!(idx.kappa >= a.kappa.min(b.kappa) - 1e-15 && idx.kappa <= a.kappa.max(b.kappa) + 1e-15);
        }

        #[test]
        fn continuous(w in 300.0f64..1000.0) {
            let zno = assets::zno();
            let a = zno.index_at(w).unwrap();
            let b = zno.index_at(w + 1e-6).unwrap();
            prop_assert!((a.n - b.n).abs() < 1e-6 && (a.kappa - b.kappa).abs() < 1e-6);
        }

        #[test]
        fn csv_round_trip_is_bit_exact(rows in proptest::collection::vec((0.0f64..10.0, 1e-3f64..5.0, 0.0f64..5.0), 2..40)) {
            let mut w = 100.0;
            let samples: Vec<Sample> = rows.iter().map(|&(dw, n, kappa)| {
                w += dw + 1e-3;
                Sample { wavelength_nm: w, n, kappa }
            }).collect();
            let m = MaterialDispersion::tabulated("p", samples).unwrap();
            let back = parse_material("p", &m.to_csv()).unwrap();
            for (x, y) in m.samples().iter().zip(back.samples()) {
                prop_assert_eq!(x.wavelength_nm.to_bits(), y.wavelength_nm.to_bits());
                prop_assert_eq!(x.n.to_bits(), y.n.to_bits());
                prop_assert_eq!(x.kappa.to_bits(), y.kappa.to_bits());
            }
        }
    }
}
