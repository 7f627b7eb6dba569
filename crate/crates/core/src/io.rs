//! Grayscale raster input and output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use image::{DynamicImage, ImageReader};
use log::warn;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::transforms::ComplexImage;

fn format_error(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Largest power of two not exceeding `n` (n ≥ 1).
fn dyadic_floor(n: usize) -> usize {
    1 << (usize::BITS - 1 - n.leading_zeros())
}

/// Crops to the largest centered region whose sides are powers of two.
/// Returns the image unchanged when it already qualifies.
pub fn crop_to_dyadic(img: &ComplexImage) -> ComplexImage {
    let (h, w) = img.shape();
    let (ch, cw) = (dyadic_floor(h), dyadic_floor(w));
    if (ch, cw) == (h, w) {
        return img.clone();
    }
    let (top, left) = ((h - ch) / 2, (w - cw) / 2);
    ComplexImage::from_fn(ch, cw, |i, j| img.get(top + i, left + j))
}

/// Loads an 8- or 16-bit grayscale raster (PGM or PNG) as a real image in
/// `[0, 1]`. Sides that are not powers of two are center-cropped with a
/// warning.
pub fn load_grayscale(path: impl AsRef<Path>) -> Result<ComplexImage> {
    let path = path.as_ref();
    let decoded = ImageReader::open(path)?
        .with_guessed_format()?
        .decode()
        .map_err(|e| format_error(path, e.to_string()))?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let values: Vec<f64> = match decoded {
        DynamicImage::ImageLuma8(buf) => buf
            .into_raw()
            .into_iter()
            .map(|v| v as f64 / 255.0)
            .collect(),
        DynamicImage::ImageLuma16(buf) => buf
            .into_raw()
            .into_iter()
            .map(|v| v as f64 / 65535.0)
            .collect(),
        other => {
            return Err(format_error(
                path,
                format!("expected 8- or 16-bit grayscale, found {:?}", other.color()),
            ))
        }
    };
    if h == 0 || w == 0 {
        return Err(format_error(path, "empty raster"));
    }
    let img = ComplexImage::from_real(h, w, &values)?;
    let cropped = crop_to_dyadic(&img);
    if cropped.shape() != (h, w) {
        let (ch, cw) = cropped.shape();
        warn!(
            "{}: {h}×{w} is not dyadic, using the centered {ch}×{cw} region",
            path.display()
        );
    }
    Ok(cropped)
}

/// Writes the magnitude, clipped to `[0, 1]`, as a 16-bit binary PGM.
pub fn save_grayscale(img: &ComplexImage, path: impl AsRef<Path>) -> Result<()> {
    let (h, w) = img.shape();
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    write!(out, "P5\n{w} {h}\n65535\n")?;
    for v in img.data() {
        let q = (v.norm().clamp(0.0, 1.0) * 65535.0).round() as u16;
        out.write_all(&q.to_be_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Magnitude image scaled to `[0, 1]` by its own maximum, for display.
pub fn normalized_magnitude(img: &ComplexImage) -> ComplexImage {
    let max = img.data().iter().map(|v| v.norm()).fold(0.0, f64::max);
    let scale = if max > 0.0 { 1.0 / max } else { 0.0 };
    let (h, w) = img.shape();
    ComplexImage::from_fn(h, w, |i, j| {
        Complex64::new(img.get(i, j).norm() * scale, 0.0)
    })
}
