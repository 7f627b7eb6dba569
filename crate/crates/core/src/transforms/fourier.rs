//! Unitary 2D DFT with the zero frequency at the array center.
//!
//! `F x = fftshift(fft2(ifftshift(x))) / √N`. Low frequencies sit in the
//! middle of the array, which is where variable-density masks put their
//! fully sampled region.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::ComplexImage;

/// Pre-planned centered unitary transform for one image shape.
#[derive(Clone)]
pub struct Fourier2d {
    height: usize,
    width: usize,
    rows_fwd: Arc<dyn Fft<f64>>,
    rows_inv: Arc<dyn Fft<f64>>,
    cols_fwd: Arc<dyn Fft<f64>>,
    cols_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fourier2d {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fourier2d")
            .field("height", &self.height)
            .field("width", &self.width)
            .finish()
    }
}

impl Fourier2d {
    pub fn new(height: usize, width: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            height,
            width,
            rows_fwd: planner.plan_fft_forward(width),
            rows_inv: planner.plan_fft_inverse(width),
            cols_fwd: planner.plan_fft_forward(height),
            cols_inv: planner.plan_fft_inverse(height),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn forward_in_place(&self, data: &mut [Complex64]) {
        self.apply(data, false);
    }

    pub fn inverse_in_place(&self, data: &mut [Complex64]) {
        self.apply(data, true);
    }

    pub fn forward(&self, img: &ComplexImage) -> ComplexImage {
        let mut out = img.clone();
        self.forward_in_place(out.data_mut());
        out
    }

    pub fn inverse(&self, spec: &ComplexImage) -> ComplexImage {
        let mut out = spec.clone();
        self.inverse_in_place(out.data_mut());
        out
    }

    fn apply(&self, data: &mut [Complex64], inverse: bool) {
        let (h, w) = (self.height, self.width);
        assert_eq!(data.len(), h * w, "buffer does not match planned shape");
        // ifftshift moves the center to the origin
        roll(data, h, w, h - h / 2, w - w / 2);

        let (rows, cols) = if inverse {
            (&self.rows_inv, &self.cols_inv)
        } else {
            (&self.rows_fwd, &self.cols_fwd)
        };
        rows.process(data);
        let mut t = transpose(data, h, w);
        cols.process(&mut t);
        let back = transpose(&t, w, h);
        data.copy_from_slice(&back);

        roll(data, h, w, h / 2, w / 2);
        let scale = 1.0 / ((h * w) as f64).sqrt();
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

fn transpose(data: &[Complex64], h: usize, w: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); h * w];
    for i in 0..h {
        for j in 0..w {
            out[j * h + i] = data[i * w + j];
        }
    }
    out
}

/// Circular shift: element (i, j) moves to ((i + dy) mod h, (j + dx) mod w).
fn roll(data: &mut [Complex64], h: usize, w: usize, dy: usize, dx: usize) {
    if dy.is_multiple_of(h) && dx.is_multiple_of(w) {
        return;
    }
    let src = data.to_vec();
    for i in 0..h {
        let ti = (i + dy) % h;
        for j in 0..w {
            data[ti * w + (j + dx) % w] = src[i * w + j];
        }
    }
}

pub fn fft2_unitary(img: &ComplexImage) -> ComplexImage {
    Fourier2d::new(img.height(), img.width()).forward(img)
}

pub fn ifft2_unitary(spec: &ComplexImage) -> ComplexImage {
    Fourier2d::new(spec.height(), spec.width()).inverse(spec)
}
