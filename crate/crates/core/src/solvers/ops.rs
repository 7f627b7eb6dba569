use num_complex::Complex64;

use crate::error::Result;
use crate::sampling::SamplingSet;
use crate::transforms::{
    dwt_forward_with, dwt_inverse_data, ComplexImage, Fourier2d, SubbandLayout, WaveletCoeffs,
};

/// Wavelet ↔ centered k-space maps shared by every solver.
#[derive(Clone)]
pub(crate) struct Operators {
    layout: SubbandLayout,
    fourier: Fourier2d,
}

impl Operators {
    pub fn new(shape: (usize, usize), scales: usize) -> Result<Self> {
        Ok(Self {
            layout: SubbandLayout::new(shape.0, shape.1, scales)?,
            fourier: Fourier2d::new(shape.0, shape.1),
        })
    }

    pub fn layout(&self) -> &SubbandLayout {
        &self.layout
    }

    /// `F Ψᴴ w`.
    pub fn to_kspace(&self, w: &WaveletCoeffs) -> Vec<Complex64> {
        let mut data = dwt_inverse_data(w.data(), &self.layout);
        self.fourier.forward_in_place(&mut data);
        data
    }

    /// `Ψ Fᴴ k`.
    pub fn to_wavelet(&self, mut kspace: Vec<Complex64>) -> WaveletCoeffs {
        self.fourier.inverse_in_place(&mut kspace);
        dwt_forward_with(&kspace, &self.layout)
    }

    /// `Ψᴴŵ + Fᴴ(y − M F Ψᴴ ŵ)`: the estimate's spectrum with measured
    /// entries replaced by `y`.
    pub fn data_consistent(
        &self,
        w_hat: &WaveletCoeffs,
        y: &ComplexImage,
        mask: &SamplingSet,
    ) -> ComplexImage {
        let mut spec = self.to_kspace(w_hat);
        for ((s, &m), yv) in spec.iter_mut().zip(mask.mask()).zip(y.data()) {
            if m {
                *s = *yv;
            }
        }
        self.fourier.inverse_in_place(&mut spec);
        let (h, w) = self.layout.shape();
        ComplexImage::new(h, w, spec).expect("layout shape")
    }

    /// `Ψ Fᴴ M F Ψᴴ w`.
    pub fn gram(&self, w: &WaveletCoeffs, mask: &SamplingSet) -> WaveletCoeffs {
        let mut k = self.to_kspace(w);
        mask.apply(&mut k);
        self.to_wavelet(k)
    }
}
