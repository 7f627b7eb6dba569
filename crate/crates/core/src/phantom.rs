//! Shepp-Logan head phantom rasterized at pixel centers.

use crate::error::{Error, Result};
use crate::transforms::ComplexImage;

/// One ellipse in the `[−1, 1]²` field of view (y pointing up).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseSpec {
    pub intensity: f64,
    pub center: (f64, f64),
    pub semi_axes: (f64, f64),
    /// Counter-clockwise rotation in radians.
    pub rotation: f64,
}

impl EllipseSpec {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.center.0, y - self.center.1);
        let (s, c) = self.rotation.sin_cos();
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        (u / self.semi_axes.0).powi(2) + (v / self.semi_axes.1).powi(2) <= 1.0
    }
}

/// (a, b, x0, y0, φ in degrees) of the ten ellipses.
const GEOMETRY: [(f64, f64, f64, f64, f64); 10] = [
    (0.69, 0.92, 0.0, 0.0, 0.0),
    (0.6624, 0.874, 0.0, -0.0184, 0.0),
    (0.11, 0.31, 0.22, 0.0, -18.0),
    (0.16, 0.41, -0.22, 0.0, 18.0),
    (0.21, 0.25, 0.0, 0.35, 0.0),
    (0.046, 0.046, 0.0, 0.1, 0.0),
    (0.046, 0.046, 0.0, -0.1, 0.0),
    (0.046, 0.023, -0.08, -0.605, 0.0),
    (0.023, 0.023, 0.0, -0.606, 0.0),
    (0.023, 0.046, 0.06, -0.605, 0.0),
];

const STANDARD_INTENSITY: [f64; 10] =
    [2.0, -0.98, -0.02, -0.02, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01];
const MODIFIED_INTENSITY: [f64; 10] = [1.0, -0.8, -0.2, -0.2, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1];

fn table(intensity: &[f64; 10]) -> Vec<EllipseSpec> {
    GEOMETRY
        .iter()
        .zip(intensity)
        .map(|(&(a, b, x0, y0, phi), &value)| EllipseSpec {
            intensity: value,
            center: (x0, y0),
            semi_axes: (a, b),
            rotation: phi.to_radians(),
        })
        .collect()
}

/// Original low-contrast intensities.
pub fn standard_ellipses() -> Vec<EllipseSpec> {
    table(&STANDARD_INTENSITY)
}

/// High-contrast intensities.
pub fn modified_ellipses() -> Vec<EllipseSpec> {
    table(&MODIFIED_INTENSITY)
}

/// Sum of ellipse intensities at each pixel center, scaled to max 1.
pub fn render_ellipses(
    height: usize,
    width: usize,
    ellipses: &[EllipseSpec],
) -> Result<ComplexImage> {
    if height < 16 || width < 16 {
        return Err(Error::InvalidArgument(format!(
            "phantom needs at least 16×16 pixels, got {height}×{width}"
        )));
    }
    let mut values = vec![0.0; height * width];
    for i in 0..height {
        let y = 1.0 - (2 * i + 1) as f64 / height as f64;
        for j in 0..width {
            let x = (2 * j + 1) as f64 / width as f64 - 1.0;
            values[i * width + j] = ellipses
                .iter()
                .filter(|e| e.contains(x, y))
                .map(|e| e.intensity)
                .sum();
        }
    }
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    if max > 0.0 {
        values.iter_mut().for_each(|v| *v /= max);
    }
    ComplexImage::from_real(height, width, &values)
}

pub fn shepp_logan(height: usize, width: usize) -> Result<ComplexImage> {
    render_ellipses(height, width, &standard_ellipses())
}

pub fn shepp_logan_modified(height: usize, width: usize) -> Result<ComplexImage> {
    render_ellipses(height, width, &modified_ellipses())
}
