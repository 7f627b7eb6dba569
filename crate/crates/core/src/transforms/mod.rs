//! Centered unitary FFT, orthonormal Haar DWT and the subband layout.

mod fourier;
mod haar;
mod image;
mod layout;

pub use fourier::{fft2_unitary, ifft2_unitary, Fourier2d};
pub use haar::{dwt_forward, dwt_forward_with, dwt_inverse, dwt_inverse_data};
pub use image::ComplexImage;
pub use layout::{
    subband_average, subband_expand, Orientation, Subband, SubbandKind, SubbandLayout,
    SubbandVector, WaveletCoeffs,
};
