use std::time::Instant;

use log::warn;
use num_complex::Complex64;

use super::ops::Operators;
use super::{finish, Algorithm, Problem, ReconResult, SolverConfig, TraceRecord};
use crate::denoise::{c_alpha, c_sure, gsure_denoise, onsager_correct, DenoiseResult};
use crate::error::{Error, Result};
use crate::spectrum::{build_subband_spectra, tau_wavelet, tau_y_estimate};
use crate::transforms::{dwt_forward, SubbandVector, WaveletCoeffs};

/// τ values are floored at this multiple of the estimated signal power.
pub const TAU_FLOOR_FACTOR: f64 = 1e-12;

/// A subband is frozen after this many consecutive floored iterations.
const FREEZE_AFTER: usize = 3;

/// Read-only snapshot of one VDAMP iteration, handed to observers.
pub struct IterationView<'a> {
    pub iteration: usize,
    /// Density-compensated iterate entering the denoiser.
    pub r: &'a WaveletCoeffs,
    /// Modeled per-subband aliasing variance of `r`.
    pub tau: &'a SubbandVector,
    pub denoised: &'a DenoiseResult,
    pub c: &'a SubbandVector,
    /// Subbands whose state is frozen after repeated τ underflow.
    pub frozen: &'a [bool],
}

pub fn vdamp(problem: &Problem, config: &SolverConfig) -> Result<ReconResult> {
    vdamp_observed(problem, config, |_| {})
}

/// VDAMP with a callback invoked after the gain update of every iteration.
pub fn vdamp_observed(
    problem: &Problem,
    config: &SolverConfig,
    mut observer: impl FnMut(&IterationView<'_>),
) -> Result<ReconResult> {
    config.validate()?;
    let sure_gain = match config.algorithm {
        Algorithm::VdampS => true,
        Algorithm::VdampAlpha => false,
        other => {
            return Err(Error::InvalidArgument(format!(
                "{other} is not a VDAMP variant"
            )))
        }
    };
    let shape = problem.shape();
    let ops = Operators::new(shape, config.scales)?;
    let layout = ops.layout().clone();
    let spectra = build_subband_spectra(shape, config.scales)?;
    let truth = problem.ground_truth();
    let w0 = truth.map(|x| dwt_forward(x, config.scales)).transpose()?;
    let y = problem.y();
    let (mask, prob) = (problem.mask(), problem.prob());
    let floor = (TAU_FLOOR_FACTOR * problem.signal_power()).max(f64::MIN_POSITIVE);
    let nb = layout.num_subbands();

    let mut r_tilde = WaveletCoeffs::zeros(&layout);
    let mut w_hat = WaveletCoeffs::zeros(&layout);
    let mut floored_run = vec![0usize; nb];
    let mut frozen = vec![false; nb];
    let mut trace = Vec::with_capacity(if config.record_trace {
        config.iterations
    } else {
        0
    });
    let start = Instant::now();

    for k in 0..config.iterations {
        // residual on Ω
        let mut z = ops.to_kspace(&r_tilde);
        for ((zv, &m), yv) in z.iter_mut().zip(mask.mask()).zip(y.data()) {
            *zv = if m {
                yv - *zv
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        // density-compensated gradient step
        let compensated: Vec<Complex64> =
            z.iter().zip(prob.values()).map(|(zv, p)| zv / p).collect();
        let mut r = ops.to_wavelet(compensated);
        for (rv, tv) in r.data_mut().iter_mut().zip(r_tilde.data()) {
            *rv += tv;
        }
        // per-subband noise variance from the residual
        let tau_y = tau_y_estimate(&z, mask, prob, config.sigma_eps)?;
        let mut tau = tau_wavelet(&spectra, &tau_y)?;
        for (b, t) in tau.values_mut().iter_mut().enumerate() {
            if !t.is_finite() {
                return Err(Error::NonFinite { iteration: k });
            }
            if *t < floor {
                *t = floor;
                floored_run[b] += 1;
                if floored_run[b] >= FREEZE_AFTER && !frozen[b] {
                    frozen[b] = true;
                    warn!(
                        "iteration {k}: subband {} frozen after repeated noise-floor underflow",
                        layout.subband(b).kind
                    );
                }
            } else {
                floored_run[b] = 0;
            }
        }

        let mut den = gsure_denoise(&r, &tau)?;
        let gain = if sure_gain {
            c_sure(&r, &den.w_hat, &den.alpha)?
        } else {
            c_alpha(&den.alpha)
        };
        let mut next = onsager_correct(&den.w_hat, &r, &den.alpha, &gain.c)?;
        for b in (0..nb).filter(|&b| frozen[b]) {
            den.w_hat.subband_mut(b).copy_from_slice(w_hat.subband(b));
            next.subband_mut(b).copy_from_slice(r_tilde.subband(b));
        }
        if !(r.data().iter().chain(den.w_hat.data()).chain(next.data()))
            .all(|v| v.re.is_finite() && v.im.is_finite())
        {
            return Err(Error::NonFinite { iteration: k });
        }

        observer(&IterationView {
            iteration: k,
            r: &r,
            tau: &tau,
            denoised: &den,
            c: &gain.c,
            frozen: &frozen,
        });

        if config.record_trace {
            let (nmse_db, per_subband_nmse) = match (truth, &w0) {
                (Some(x0), Some(w0)) => (
                    ops.data_consistent(&den.w_hat, y, mask).nmse_db(x0),
                    subband_nmse(&r, w0),
                ),
                _ => (f64::NAN, vec![f64::NAN; nb]),
            };
            trace.push(TraceRecord {
                iteration: k,
                nmse_db,
                per_subband_nmse,
                tau_model: tau.values().to_vec(),
                alpha: den.alpha.values().to_vec(),
                c: gain.c.values().to_vec(),
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            });
        }
        w_hat = den.w_hat;
        r_tilde = next;
    }

    let x_hat = ops.data_consistent(&w_hat, y, mask);
    Ok(finish(x_hat, w_hat, trace, truth))
}

/// `‖r_b − w₀_b‖² / ‖w₀_b‖²` per subband.
pub(crate) fn subband_nmse(r: &WaveletCoeffs, w0: &WaveletCoeffs) -> Vec<f64> {
    (0..r.layout().num_subbands())
        .map(|b| {
            let err: f64 = r
                .subband(b)
                .iter()
                .zip(w0.subband(b))
                .map(|(a, c)| (a - c).norm_sqr())
                .sum();
            let energy: f64 = w0.subband(b).iter().map(|v| v.norm_sqr()).sum();
            err / energy
        })
        .collect()
}
