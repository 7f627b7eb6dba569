//! Per-subband noise model: Fourier power spectra of the wavelet subbands,
//! the expected aliasing power of density-compensated data, and its
//! importance-sampling estimate mapped into the wavelet domain.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sampling::{ProbabilityMap, SamplingSet};
use crate::transforms::{
    dwt_inverse, ComplexImage, Fourier2d, SubbandLayout, SubbandVector, WaveletCoeffs,
};

/// Unique rows of |F Ψᴴ|²: row `b` is the power spectrum shared by every
/// atom of subband `b` (atoms within a subband differ by translation only).
#[derive(Debug, Clone)]
pub struct SubbandSpectra {
    layout: SubbandLayout,
    rows: Vec<Vec<f64>>,
}

impl SubbandSpectra {
    pub fn layout(&self) -> &SubbandLayout {
        &self.layout
    }

    pub fn row(&self, b: usize) -> &[f64] {
        &self.rows[b]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// Power spectrum of the synthesis atom at flat coefficient index `index`.
pub fn atom_spectrum(layout: &SubbandLayout, fourier: &Fourier2d, index: usize) -> Vec<f64> {
    let mut impulse = WaveletCoeffs::zeros(layout);
    impulse.data_mut()[index] = Complex64::new(1.0, 0.0);
    let mut atom = dwt_inverse(&impulse).into_data();
    fourier.forward_in_place(&mut atom);
    atom.iter().map(|v| v.norm_sqr()).collect()
}

pub fn build_subband_spectra(shape: (usize, usize), scales: usize) -> Result<SubbandSpectra> {
    let layout = SubbandLayout::new(shape.0, shape.1, scales)?;
    let fourier = Fourier2d::new(shape.0, shape.1);
    let rows = layout
        .subbands()
        .iter()
        .map(|band| atom_spectrum(&layout, &fourier, band.range.start))
        .collect();
    Ok(SubbandSpectra { layout, rows })
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::LengthMismatch { expected, got });
    }
    Ok(())
}

/// Expected aliasing power of `P⁻¹ y` around the full reference spectrum:
/// `((1 − p)/p)|y_ref|² + σ²/p`, entrywise.
pub fn aliasing_spectrum_exact(
    y_ref: &ComplexImage,
    prob: &ProbabilityMap,
    sigma_eps: f64,
) -> Result<Vec<f64>> {
    y_ref.ensure_shape(prob.shape())?;
    let s2 = sigma_eps * sigma_eps;
    Ok(y_ref
        .data()
        .iter()
        .zip(prob.values())
        .map(|(y, &p)| (1.0 - p) / p * y.norm_sqr() + s2 / p)
        .collect())
}

/// Importance-sampling estimate of the aliasing power spectrum from the
/// observed residual: `(m/p)·[((1 − p)/p)|z|² + σ²]`, zero off Ω.
pub fn tau_y_estimate(
    z: &[Complex64],
    mask: &SamplingSet,
    prob: &ProbabilityMap,
    sigma_eps: f64,
) -> Result<Vec<f64>> {
    check_len(mask.len(), z.len())?;
    check_len(prob.len(), z.len())?;
    let s2 = sigma_eps * sigma_eps;
    Ok(z.iter()
        .zip(mask.mask())
        .zip(prob.values())
        .map(|((z, &m), &p)| {
            if m {
                ((1.0 - p) / p * z.norm_sqr() + s2) / p
            } else {
                0.0
            }
        })
        .collect())
}

/// Per-subband effective noise variance: `τ_b = ⟨S_b, τ^y⟩`.
pub fn tau_wavelet(spectra: &SubbandSpectra, tau_y: &[f64]) -> Result<SubbandVector> {
    check_len(spectra.layout.len(), tau_y.len())?;
    Ok(SubbandVector::from_fn(&spectra.layout, |b| {
        spectra.rows[b]
            .iter()
            .zip(tau_y)
            .map(|(s, t)| s * t)
            .sum::<f64>()
            .max(0.0)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{seeded, standard_complex};
    use crate::sampling::{draw_mask, measure};
    use crate::transforms::fft2_unitary;
    use rand::Rng;

    #[test]
    fn rows_are_normalized_and_nonnegative() {
        let spectra = build_subband_spectra((32, 16), 3).unwrap();
        for row in spectra.rows() {
            assert!(row.iter().all(|&v| v >= 0.0));
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn translated_atoms_share_a_spectrum() {
        let (h, w, s) = (32, 32, 3);
        let spectra = build_subband_spectra((h, w), s).unwrap();
        let layout = spectra.layout().clone();
        let fourier = Fourier2d::new(h, w);
        let mut rng = seeded(12);
        for (b, band) in layout.subbands().iter().enumerate() {
            for _ in 0..3 {
                let i = rng.random_range(band.range.clone());
                let j = rng.random_range(band.range.clone());
                let si = atom_spectrum(&layout, &fourier, i);
                let sj = atom_spectrum(&layout, &fourier, j);
                for ((a, c), r) in si.iter().zip(&sj).zip(spectra.row(b)) {
                    assert!((a - c).abs() < 1e-12);
                    assert!((a - r).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn approximation_row_is_low_pass() {
        // The s = 1 approximation atom is a 2×2 box of height 1/2, whose
        // per-axis power at centered frequency k is (1 + cos(2πk/8)) / 8.
        let spectra = build_subband_spectra((8, 8), 1).unwrap();
        let row = spectra.row(0);
        let axis = |k: i64| (1.0 + (std::f64::consts::PI * k as f64 / 4.0).cos()) / 8.0;
        for i in 0..8 {
            for j in 0..8 {
                let want = axis(i as i64 - 4) * axis(j as i64 - 4);
                assert!((row[i * 8 + j] - want).abs() < 1e-14);
            }
        }
        // more than half of the power sits in the central 4×4 frequencies
        let centre: f64 = (2..6)
            .flat_map(|i| (2..6).map(move |j| (i, j)))
            .map(|(i, j)| row[i * 8 + j])
            .sum();
        assert!(centre > 0.5, "centre mass {centre}");
    }

    #[test]
    fn exact_spectrum_special_cases() {
        let mut rng = seeded(3);
        let y0 = ComplexImage::from_fn(8, 8, |_, _| standard_complex(&mut rng));
        let full = ProbabilityMap::uniform(8, 8, 1.0).unwrap();
        assert!(aliasing_spectrum_exact(&y0, &full, 0.0)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
        let half = ProbabilityMap::uniform(8, 8, 0.5).unwrap();
        let spec = aliasing_spectrum_exact(&y0, &half, 0.0).unwrap();
        for (s, y) in spec.iter().zip(y0.data()) {
            assert!((s - y.norm_sqr()).abs() < 1e-15);
        }
    }

    #[test]
    fn tau_y_special_cases() {
        let z = vec![Complex64::new(2.0, 0.0)];
        let mask = SamplingSet::full(1, 1);
        let p = ProbabilityMap::uniform(1, 1, 0.5).unwrap();
        assert_eq!(tau_y_estimate(&z, &mask, &p, 0.0).unwrap(), vec![8.0]);

        let z = vec![Complex64::new(1.0, 1.0); 4];
        let full = ProbabilityMap::uniform(2, 2, 1.0).unwrap();
        let est = tau_y_estimate(&z, &SamplingSet::full(2, 2), &full, 0.0).unwrap();
        assert!(est.iter().all(|&v| v == 0.0));

        let none = SamplingSet::new(2, 2, vec![false; 4]).unwrap();
        let est = tau_y_estimate(&z, &none, &full, 1.0).unwrap();
        assert!(est.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tau_wavelet_special_cases() {
        let spectra = build_subband_spectra((16, 16), 2).unwrap();
        let zero = tau_wavelet(&spectra, &vec![0.0; 256]).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
        let c = 3.25;
        let flat = tau_wavelet(&spectra, &vec![c; 256]).unwrap();
        for &v in flat.values() {
            assert!((v - c).abs() < 1e-10 * c);
        }
        assert!(tau_wavelet(&spectra, &[1.0; 10]).is_err());
    }

    /// Monte-Carlo check that the importance-sampling estimate and the
    /// density-compensated aliasing both average to the exact spectrum.
    #[test]
    fn estimates_are_unbiased() {
        let (h, w) = (8, 8);
        let n = h * w;
        let mut rng = seeded(77);
        let y0 = ComplexImage::from_fn(h, w, |_, _| standard_complex(&mut rng));
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
        let prob = ProbabilityMap::new(h, w, p).unwrap();
        let sigma = 0.3;
        let x0 = crate::transforms::ifft2_unitary(&y0);
        let exact = aliasing_spectrum_exact(&y0, &prob, sigma).unwrap();

        let trials = 20000;
        let mut sum_est = vec![0.0; n];
        let mut sq_est = vec![0.0; n];
        let mut sum_alias = vec![0.0; n];
        let mut sq_alias = vec![0.0; n];
        for t in 0..trials {
            let mask = draw_mask(&prob, 1000 + t);
            let y = measure(&x0, &mask, sigma, 50_000 + t).unwrap();
            // at k = 0 the residual is y itself
            let est = tau_y_estimate(y.data(), &mask, &prob, sigma).unwrap();
            for j in 0..n {
                let alias = (y0.data()[j] - y.data()[j] / prob.values()[j]).norm_sqr();
                sum_est[j] += est[j];
                sq_est[j] += est[j] * est[j];
                sum_alias[j] += alias;
                sq_alias[j] += alias * alias;
            }
        }
        let t = trials as f64;
        for j in 0..n {
            for (sum, sq) in [(sum_est[j], sq_est[j]), (sum_alias[j], sq_alias[j])] {
                let mean = sum / t;
                let se = ((sq / t - mean * mean) / t).sqrt();
                assert!(
                    (mean - exact[j]).abs() <= 4.0 * se + 1e-12,
                    "j={j}: {mean} vs {} (se {se})",
                    exact[j]
                );
            }
        }
        // sanity: y0 really is the FFT of x0
        assert!(fft2_unitary(&x0).nmse(&y0) < 1e-24);
    }
}
