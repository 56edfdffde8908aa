//! Binary PPM (P6, maxval 255) with sRGB-encoded samples.

use thiserror::Error;

use crate::colorimetry::Rgb;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PpmError {
    #[error("not a binary PPM: {0}")]
    Format(String),
}

/// Quantizes linear-light pixels to 8-bit sRGB and writes a P6 image.
pub fn write_ppm(width: usize, height: usize, pixels: &[Rgb]) -> Vec<u8> {
    assert_eq!(pixels.len(), width * height, "pixel count must match dimensions");
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.reserve(pixels.len() * 3);
    for p in pixels {
        for c in p.clip().encode().to_array() {
            out.push((c * 255.0).round() as u8);
        }
    }
    out
}

/// Reads a P6 image back into linear-light pixels.
pub fn read_ppm(bytes: &[u8]) -> Result<(usize, usize, Vec<Rgb>), PpmError> {
    let mut pos = 0;
    let mut token = || -> Result<String, PpmError> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(PpmError::Format("truncated header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P6" {
        return Err(PpmError::Format("missing P6 magic".into()));
    }
    let mut number = |what: &str| -> Result<usize, PpmError> {
        token()?
            .parse()
            .map_err(|_| PpmError::Format(format!("bad {what}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval != 255 {
        return Err(PpmError::Format(format!("maxval {maxval} is not 255")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    let raster = &bytes[pos + 1..];
    if raster.len() != width * height * 3 {
        return Err(PpmError::Format(format!(
            "expected {} raster bytes, found {}",
            width * height * 3,
            raster.len()
        )));
    }
    let pixels = raster
        .chunks_exact(3)
        .map(|c| Rgb::new(f64::from(c[0]) / 255.0, f64::from(c[1]) / 255.0, f64::from(c[2]) / 255.0).decode())
        .collect();
    Ok((width, height, pixels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_quantization() {
        let bytes = write_ppm(2, 1, &[Rgb::gray(1.0), Rgb::new(0.0, 0.5, 2.0)]);
        assert!(bytes.starts_with(b"P6\n2 1\n255\n"));
        let raster = &bytes[bytes.len() - 6..];
        assert_eq!(raster, [255, 255, 255, 0, 188, 255]);
    }

    #[test]
    fn reencoding_is_byte_identical() {
        let pixels: Vec<Rgb> = (0..=255).map(|i| Rgb::gray(crate::colorimetry::srgb_decode(i as f64 / 255.0))).collect();
        let bytes = write_ppm(16, 16, &pixels);
        let (w, h, back) = read_ppm(&bytes).unwrap();
        assert_eq!((w, h), (16, 16));
        assert_eq!(write_ppm(w, h, &back), bytes);
    }

    #[test]
    fn rejects_malformed_files() {
        assert!(read_ppm(b"P3\n1 1\n255\n\0\0\0").is_err());
        assert!(read_ppm(b"P6\n2 2\n255\n\0\0\0").is_err());
        assert!(read_ppm(b"P6\n1 1\n65535\n\0\0\0").is_err());
        assert!(read_ppm(b"P6\n# comment\n1 1\n255\n\0\0\0").is_ok());
    }
}
