//! Orthonormal 2D Haar analysis/synthesis with `s` decimated levels.
//!
//! For a 2×2 block `[[a, b], [c, d]]` one level produces
//! approximation `(a+b+c+d)/2`, horizontal detail `(a+b−c−d)/2`,
//! vertical detail `(a−b+c−d)/2` and diagonal detail `(a−b−c+d)/2`.
//! The filters are real, so complex data is transformed componentwise.

use num_complex::Complex64;

use super::layout::{Orientation, SubbandLayout, WaveletCoeffs};
use super::ComplexImage;
use crate::error::Result;

pub fn dwt_forward(img: &ComplexImage, scales: usize) -> Result<WaveletCoeffs> {
    let layout = SubbandLayout::new(img.height(), img.width(), scales)?;
    Ok(dwt_forward_with(img.data(), &layout))
}

/// Analysis for a precomputed layout. `data` must have `layout.len()` entries.
pub fn dwt_forward_with(data: &[Complex64], layout: &SubbandLayout) -> WaveletCoeffs {
    assert_eq!(data.len(), layout.len());
    let mut out = WaveletCoeffs::zeros(layout);
    let (mut rows, mut cols) = layout.shape();
    let mut approx = data.to_vec();

    for scale in 1..=layout.scales() {
        let (hr, hc) = (rows / 2, cols / 2);
        let mut next = vec![Complex64::new(0.0, 0.0); hr * hc];
        let h_range = layout.detail(scale, Orientation::Horizontal).range.clone();
        let v_range = layout.detail(scale, Orientation::Vertical).range.clone();
        let d_range = layout.detail(scale, Orientation::Diagonal).range.clone();
        let coeffs = out.data_mut();
        for i in 0..hr {
            let top = &approx[2 * i * cols..(2 * i + 1) * cols];
            let bottom = &approx[(2 * i + 1) * cols..(2 * i + 2) * cols];
            for j in 0..hc {
                let (a, b) = (top[2 * j], top[2 * j + 1]);
                let (c, d) = (bottom[2 * j], bottom[2 * j + 1]);
                let k = i * hc + j;
                next[k] = (a + b + c + d) * 0.5;
                coeffs[h_range.start + k] = (a + b - c - d) * 0.5;
                coeffs[v_range.start + k] = (a - b + c - d) * 0.5;
                coeffs[d_range.start + k] = (a - b - c + d) * 0.5;
            }
        }
        approx = next;
        rows = hr;
        cols = hc;
    }
    let a_range = layout.subband(0).range.clone();
    out.data_mut()[a_range].copy_from_slice(&approx);
    out
}

pub fn dwt_inverse(coeffs: &WaveletCoeffs) -> ComplexImage {
    let layout = coeffs.layout();
    let data = dwt_inverse_data(coeffs.data(), layout);
    ComplexImage::new(layout.height(), layout.width(), data)
        .expect("layout length equals image size")
}

/// Synthesis on raw coefficient storage laid out per `layout`.
pub fn dwt_inverse_data(coeffs: &[Complex64], layout: &SubbandLayout) -> Vec<Complex64> {
    assert_eq!(coeffs.len(), layout.len());
    let s = layout.scales();
    let mut approx = coeffs[layout.subband(0).range.clone()].to_vec();
    let (mut rows, mut cols) = (layout.height() >> s, layout.width() >> s);

    for scale in (1..=s).rev() {
        let h = &coeffs[layout.detail(scale, Orientation::Horizontal).range.clone()];
        let v = &coeffs[layout.detail(scale, Orientation::Vertical).range.clone()];
        let d = &coeffs[layout.detail(scale, Orientation::Diagonal).range.clone()];
        let (fr, fc) = (rows * 2, cols * 2);
        let mut next = vec![Complex64::new(0.0, 0.0); fr * fc];
        for i in 0..rows {
            for j in 0..cols {
                let k = i * cols + j;
                let (aa, hh, vv, dd) = (approx[k], h[k], v[k], d[k]);
                next[2 * i * fc + 2 * j] = (aa + hh + vv + dd) * 0.5;
                next[2 * i * fc + 2 * j + 1] = (aa + hh - vv - dd) * 0.5;
                next[(2 * i + 1) * fc + 2 * j] = (aa - hh + vv - dd) * 0.5;
                next[(2 * i + 1) * fc + 2 * j + 1] = (aa - hh - vv + dd) * 0.5;
            }
        }
        approx = next;
        rows = fr;
        cols = fc;
    }
    approx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::rng::{seeded, standard_complex};
    use crate::transforms::layout::SubbandKind;

    fn random_image(h: usize, w: usize, seed: u64) -> ComplexImage {
        let mut rng = seeded(seed);
        ComplexImage::from_fn(h, w, |_, _| standard_complex(&mut rng))
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn two_by_two_block() {
        let (a, b, cc, d) = (1.0, 2.0, 5.0, -3.0);
        let img = ComplexImage::from_real(2, 2, &[a, b, cc, d]).unwrap();
        let w = dwt_forward(&img, 1).unwrap();
        let expect = [
            (a + b + cc + d) / 2.0,
            (a + b - cc - d) / 2.0,
            (a - b + cc - d) / 2.0,
            (a - b - cc + d) / 2.0,
        ];
        for (got, want) in w.data().iter().zip(expect) {
            assert!((got - c(want)).norm() < 1e-15);
        }
    }

    #[test]
    fn constant_has_no_detail() {
        for s in 1..=3 {
            let img = ComplexImage::from_fn(16, 8, |_, _| Complex64::new(1.5, -0.5));
            let w = dwt_forward(&img, s).unwrap();
            for b in 1..w.layout().num_subbands() {
                assert!(w.subband(b).iter().all(|v| v.norm() == 0.0));
            }
        }
    }

    /// Dense orthogonal Haar matrix built from separable 1D Haar matrices.
    fn haar_1d_matrix(n: usize, levels: usize) -> Vec<Vec<f64>> {
        // rows: analysis atoms, ordered [approx..., details of coarsest..finest]
        let mut mat = identity(n);
        let mut len = n;
        for _ in 0..levels {
            let mut step = identity(n);
            for row in step.iter_mut().take(len) {
                row.fill(0.0);
            }
            let half = len / 2;
            let s = std::f64::consts::FRAC_1_SQRT_2;
            for k in 0..half {
                step[k][2 * k] = s;
                step[k][2 * k + 1] = s;
                step[half + k][2 * k] = s;
                step[half + k][2 * k + 1] = -s;
            }
            mat = matmul(&step, &mat);
            len = half;
        }
        mat
    }

    fn identity(n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect()
    }

    fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = a.len();
        let m = b[0].len();
        (0..n)
            .map(|i| {
                (0..m)
                    .map(|j| (0..b.len()).map(|k| a[i][k] * b[k][j]).sum())
                    .collect()
            })
            .collect()
    }

    #[test]
    fn matches_dense_separable_oracle() {
        // One level at a time: a separable 1-level Haar on rows and columns
        // applied to the approximation block reproduces the subband values.
        let (h, w, s) = (32, 32, 3);
        let x = random_image(h, w, 21);
        let coeffs = dwt_forward(&x, s).unwrap();
        let layout = coeffs.layout().clone();

        let mut approx: Vec<Vec<Complex64>> = (0..h)
            .map(|i| (0..w).map(|j| x.get(i, j)).collect())
            .collect();
        for scale in 1..=s {
            let n = approx.len();
            let m = haar_1d_matrix(n, 1);
            // Y = M X Mᵀ
            let mx: Vec<Vec<Complex64>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| (0..n).map(|k| approx[k][j] * m[i][k]).sum())
                        .collect()
                })
                .collect();
            let y: Vec<Vec<Complex64>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| (0..n).map(|k| mx[i][k] * m[j][k]).sum())
                        .collect()
                })
                .collect();
            let half = n / 2;
            // row-lowpass/col-lowpass quadrant is the next approximation;
            // row-highpass (across rows) + col-lowpass is the horizontal detail
            let check = |orientation, r0: usize, c0: usize| {
                let band = layout.subband(
                    layout
                        .find(SubbandKind::Detail { scale, orientation })
                        .unwrap(),
                );
                for i in 0..half {
                    for j in 0..half {
                        let got = coeffs.data()[band.range.start + i * half + j];
                        assert!((got - y[r0 + i][c0 + j]).norm() < 1e-12);
                    }
                }
            };
            check(Orientation::Horizontal, half, 0);
            check(Orientation::Vertical, 0, half);
            check(Orientation::Diagonal, half, half);
            approx = (0..half).map(|i| y[i][..half].to_vec()).collect();
        }
        let a = coeffs.subband(0);
        for i in 0..approx.len() {
            for j in 0..approx.len() {
                assert!((a[i * approx.len() + j] - approx[i][j]).norm() < 1e-12);
            }
        }

        // Parseval
        let rel = (coeffs.norm_sqr().sqrt() - x.norm()).abs() / x.norm();
        assert!(rel < 1e-12);
        // the dense matrix oracle is orthogonal
        let m = haar_1d_matrix(32, 3);
        let mt: Vec<Vec<f64>> = (0..32)
            .map(|i| (0..32).map(|j| m[j][i]).collect())
            .collect();
        let mmt = matmul(&m, &mt);
        for (i, row) in mmt.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn round_trip_64_s4() {
        let x = random_image(64, 64, 8);
        let back = dwt_inverse(&dwt_forward(&x, 4).unwrap());
        assert!(back.nmse(&x).sqrt() < 1e-12);
    }

    #[test]
    fn synthesis_is_isometric() {
        let layout = SubbandLayout::new(32, 64, 3).unwrap();
        let mut rng = seeded(4);
        let data: Vec<Complex64> = (0..layout.len())
            .map(|_| standard_complex(&mut rng))
            .collect();
        let w = WaveletCoeffs::new(layout, data).unwrap();
        let x = dwt_inverse(&w);
        assert!((x.norm_sqr() - w.norm_sqr()).abs() / w.norm_sqr() < 1e-12);
    }

    #[test]
    fn diagonal_atom_shape() {
        let (h, w) = (16, 16);
        for scale in 1..=3 {
            let layout = SubbandLayout::new(h, w, 3).unwrap();
            let band = layout.detail(scale, Orientation::Diagonal).clone();
            let mut coeffs = WaveletCoeffs::zeros(&layout);
            // coefficient (1, 0) of the subband
            let k = band.cols;
            coeffs.data_mut()[band.range.start + k] = c(1.0);
            let img = dwt_inverse(&coeffs);
            let size = 1usize << scale;
            let amp = 1.0 / size as f64;
            for i in 0..h {
                for j in 0..w {
                    let v = img.get(i, j);
                    assert!(v.im.abs() < 1e-15);
                    let inside = i >= size && i < 2 * size && j < size;
                    if inside {
                        let (li, lj) = (i - size, j);
                        let sign = if (li < size / 2) == (lj < size / 2) {
                            1.0
                        } else {
                            -1.0
                        };
                        assert!((v.re - sign * amp).abs() < 1e-14, "({i},{j}) = {v}");
                    } else {
                        assert_eq!(v.re, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_non_dyadic() {
        let img = ComplexImage::zeros(24, 32);
        assert!(matches!(
            dwt_forward(&img, 4),
            Err(Error::NotDyadic { axis: "height", .. })
        ));
    }

    #[test]
    fn linearity() {
        let x = random_image(16, 16, 1);
        let y = random_image(16, 16, 2);
        let (a, b) = (Complex64::new(0.3, -1.2), Complex64::new(-2.0, 0.5));
        let combo = ComplexImage::new(
            16,
            16,
            x.data()
                .iter()
                .zip(y.data())
                .map(|(p, q)| a * p + b * q)
                .collect(),
        )
        .unwrap();
        let lhs = dwt_forward(&combo, 2).unwrap();
        let wx = dwt_forward(&x, 2).unwrap();
        let wy = dwt_forward(&y, 2).unwrap();
        for ((l, p), q) in lhs.data().iter().zip(wx.data()).zip(wy.data()) {
            assert!((l - (a * p + b * q)).norm() < 1e-12);
        }
    }
}
