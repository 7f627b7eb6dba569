//! Per-subband S-FISTA gradient weights from block operator norms.

use num_complex::Complex64;
use rayon::prelude::*;

use super::ops::Operators;
use crate::error::{Error, Result};
use crate::rng::{standard_complex, substream};
use crate::sampling::SamplingSet;
use crate::transforms::{SubbandVector, WaveletCoeffs};

pub const DEFAULT_POWER_ITERS: usize = 2000;
pub const DEFAULT_POWER_TOL: f64 = 1e-6;

/// Relative safety margin making the weight bound strict.
pub const SFISTA_MARGIN: f64 = 1e-3;

const INIT_SEED: u64 = 0x005F_157A;

/// `‖A v‖` below this (for unit `v`) is treated as an exact zero.
const NEGLIGIBLE_NORM: f64 = 1e-13;

/// Largest eigenvalue of the Hermitian positive semidefinite operator
/// `apply`, starting from `init`.
///
/// Stops when the Rayleigh quotient changes by at most `tol` relative to
/// its value between consecutive iterations. If `‖A v‖` for the unit
/// iterate drops below 1e-13 the operator is taken to be zero and 0 is
/// returned, which suits the unit-scale operators used here.
pub fn power_iteration(
    mut apply: impl FnMut(&[Complex64]) -> Vec<Complex64>,
    init: Vec<Complex64>,
    max_iters: usize,
    tol: f64,
) -> Result<f64> {
    let norm = |v: &[Complex64]| v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let mut v = init;
    let n0 = norm(&v);
    if n0 == 0.0 {
        return Err(Error::InvalidArgument(
            "power iteration needs a non-zero start".into(),
        ));
    }
    v.iter_mut().for_each(|x| *x /= n0);
    let mut prev = f64::NAN;
    let mut change = f64::INFINITY;
    for _ in 0..max_iters {
        let u = apply(&v);
        let rayleigh: f64 = v.iter().zip(&u).map(|(a, b)| (a.conj() * b).re).sum();
        let nu = norm(&u);
        if nu <= NEGLIGIBLE_NORM {
            return Ok(0.0);
        }
        if !nu.is_finite() {
            return Err(Error::PowerIterationDiverged {
                iterations: max_iters,
                residual: f64::INFINITY,
            });
        }
        change = (rayleigh - prev).abs() / rayleigh.abs();
        if change <= tol {
            return Ok(rayleigh);
        }
        prev = rayleigh;
        v = u;
        v.iter_mut().for_each(|x| *x /= nu);
    }
    Err(Error::PowerIterationDiverged {
        iterations: max_iters,
        residual: change,
    })
}

#[derive(Debug, Clone)]
pub struct SfistaWeights {
    /// `‖Φ_bᴴ Φ_b'‖` for every subband pair, row-major `b * B + b'`.
    pub block_norms: Vec<f64>,
    /// `Σ_b' ‖Φ_bᴴ Φ_b'‖` per subband.
    pub bound: SubbandVector,
    /// `bound · (1 + SFISTA_MARGIN)`.
    pub weights: SubbandVector,
}

impl SfistaWeights {
    pub fn num_subbands(&self) -> usize {
        self.bound.values().len()
    }

    /// `λ_max(Φ_b'ᴴ Φ_b Φ_bᴴ Φ_b')`.
    pub fn lambda_max(&self, b: usize, b_other: usize) -> f64 {
        let v = self.block_norms[b * self.num_subbands() + b_other];
        v * v
    }
}

/// Gradient weights `w_b` with `W − ΦᴴΦ` positive definite, where `Φ_b`
/// is the block of `M F Ψᴴ` acting on subband `b`.
///
/// Every block norm comes from power iteration on
/// `Φ_b'ᴴ Φ_b Φ_bᴴ Φ_b'`, applied matrix-free. The norms are symmetric in
/// the pair, so only `b ≤ b'` is computed.
pub fn sfista_weights(
    mask: &SamplingSet,
    shape: (usize, usize),
    scales: usize,
    power_iters: usize,
    tol: f64,
) -> Result<SfistaWeights> {
    if mask.shape() != shape {
        return Err(Error::ShapeMismatch {
            expected: shape,
            got: mask.shape(),
        });
    }
    let ops = Operators::new(shape, scales)?;
    let layout = ops.layout().clone();
    let nb = layout.num_subbands();
    let pairs: Vec<(usize, usize)> = (0..nb).flat_map(|b| (b..nb).map(move |c| (b, c))).collect();

    let norms: Vec<f64> = pairs
        .par_iter()
        .enumerate()
        .map(|(idx, &(b, other))| {
            let src = layout.subband(other).range.clone();
            let dst = layout.subband(b).range.clone();
            // v on subband b' → Φ_bᴴ Φ_b' v on b → Φ_b'ᴴ Φ_b (…) back on b'
            let mut full = WaveletCoeffs::zeros(&layout);
            let apply = |v: &[Complex64]| -> Vec<Complex64> {
                full.data_mut().fill(Complex64::new(0.0, 0.0));
                full.data_mut()[src.clone()].copy_from_slice(v);
                let mid = ops.gram(&full, mask);
                full.data_mut().fill(Complex64::new(0.0, 0.0));
                full.data_mut()[dst.clone()].copy_from_slice(&mid.data()[dst.clone()]);
                ops.gram(&full, mask).data()[src.clone()].to_vec()
            };
            let mut rng = substream(INIT_SEED, idx as u64);
            let init = (0..src.len()).map(|_| standard_complex(&mut rng)).collect();
            power_iteration(apply, init, power_iters, tol).map(|l| l.max(0.0).sqrt())
        })
        .collect::<Result<_>>()?;

    let mut block_norms = vec![0.0; nb * nb];
    for (&(b, c), &v) in pairs.iter().zip(&norms) {
        block_norms[b * nb + c] = v;
        block_norms[c * nb + b] = v;
    }
    let bound = SubbandVector::from_fn(&layout, |b| block_norms[b * nb..(b + 1) * nb].iter().sum());
    if bound.values().iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidArgument(
            "a subband is invisible through the mask; weights undefined".into(),
        ));
    }
    let weights = bound.map(|v| v * (1.0 + SFISTA_MARGIN));
    Ok(SfistaWeights {
        block_norms,
        bound,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{draw_mask, make_density};
    use crate::transforms::{dwt_inverse_data, Fourier2d};
    use nalgebra::DMatrix;

    #[test]
    fn diagonal_operator() {
        let diag = [1.0, 2.0, 3.0];
        let apply = |v: &[Complex64]| v.iter().zip(diag).map(|(x, d)| x * d).collect();
        let init = vec![Complex64::new(1.0, 0.0); 3];
        let l = power_iteration(apply, init, 1000, 1e-12).unwrap();
        assert!((l - 3.0).abs() < 1e-9);
    }

    #[test]
    fn zero_operator_and_iteration_cap() {
        let init = vec![Complex64::new(1.0, 0.0); 2];
        let l = power_iteration(
            |v| vec![Complex64::new(0.0, 0.0); v.len()],
            init.clone(),
            10,
            1e-9,
        )
        .unwrap();
        assert_eq!(l, 0.0);
        // nearly degenerate top eigenvalues converge too slowly for 3 steps
        let diag = [1.0, 1.0 - 1e-3];
        let apply = |v: &[Complex64]| v.iter().zip(diag).map(|(x, d)| x * d).collect();
        let slow = vec![Complex64::new(1e-3, 0.0), Complex64::new(1.0, 0.0)];
        assert!(matches!(
            power_iteration(apply, slow, 3, 1e-15),
            Err(Error::PowerIterationDiverged { iterations: 3, .. })
        ));
    }

    #[test]
    fn full_mask_gives_unit_weights() {
        let w = sfista_weights(&SamplingSet::full(32, 32), (32, 32), 3, 100, 1e-9).unwrap();
        let nb = w.num_subbands();
        for b in 0..nb {
            assert!((w.bound.get(b) - 1.0).abs() < 1e-6);
            for c in 0..nb {
                let expected = if b == c { 1.0 } else { 0.0 };
                assert!((w.lambda_max(b, c) - expected).abs() < 1e-6);
            }
        }
    }

    /// Columns of `M F Ψᴴ` built explicitly, restricted to observed rows.
    fn dense_phi(
        mask: &SamplingSet,
        n: usize,
        s: usize,
    ) -> (DMatrix<Complex64>, crate::transforms::SubbandLayout) {
        let layout = crate::transforms::SubbandLayout::new(n, n, s).unwrap();
        let fourier = Fourier2d::new(n, n);
        let rows: Vec<usize> = (0..n * n).filter(|&j| mask.contains(j)).collect();
        let mut phi = DMatrix::<Complex64>::zeros(rows.len(), n * n);
        for col in 0..n * n {
            let mut e = vec![Complex64::new(0.0, 0.0); n * n];
            e[col] = Complex64::new(1.0, 0.0);
            let mut k = dwt_inverse_data(&e, &layout);
            fourier.forward_in_place(&mut k);
            for (ri, &j) in rows.iter().enumerate() {
                phi[(ri, col)] = k[j];
            }
        }
        (phi, layout)
    }

    #[test]
    fn block_eigenvalues_match_dense_oracle() {
        let n = 16;
        let prob = make_density((n, n), 0.35, 1.0 / 8.0, 2.0, 0.05).unwrap();
        for seed in 0..2 {
            let mask = draw_mask(&prob, 100 + seed);
            let w =
                sfista_weights(&mask, (n, n), 1, DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL).unwrap();
            let (phi, layout) = dense_phi(&mask, n, 1);
            let nb = layout.num_subbands();
            for b in 0..nb {
                for c in 0..nb {
                    let pb = phi
                        .columns_range(layout.subband(b).range.clone())
                        .into_owned();
                    let pc = phi
                        .columns_range(layout.subband(c).range.clone())
                        .into_owned();
                    let cross = pb.adjoint() * &pc;
                    let op = cross.adjoint() * &cross;
                    let eig = op.symmetric_eigen();
                    let top = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
                    let est = w.lambda_max(b, c);
                    assert!(
                        (est - top).abs() <= 0.01 * top.max(1e-12),
                        "seed {seed} ({b},{c}): {est} vs {top}"
                    );
                }
            }
            // positivity of W − ΦᴴΦ using the dense operator
            let gram = phi.adjoint() * &phi;
            let mut shifted = -gram;
            for j in 0..n * n {
                shifted[(j, j)] += Complex64::new(w.weights.get(layout.subband_of(j)), 0.0);
            }
            let min_eig = shifted
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::MAX, f64::min);
            assert!(min_eig > 0.0, "min eigenvalue {min_eig}");
        }
    }
}
