use std::time::Instant;

use num_complex::Complex64;

use super::ops::Operators;
use super::vdamp::subband_nmse;
use super::{finish, Algorithm, Problem, ReconResult, SolverConfig, TraceRecord};
use crate::denoise::{gsure_denoise, soft_threshold_subbands};
use crate::error::{Error, Result};
use crate::spectrum::tau_y_estimate;
use crate::transforms::{dwt_forward, SubbandVector, WaveletCoeffs};

/// FISTA, S-FISTA or SURE-IT with per-subband gradient weights `weights`.
///
/// `weights` must be all ones for FISTA and SURE-IT. τ_k comes from the
/// ground truth when `config.oracle_tau` is set, otherwise from the mean
/// importance-sampled aliasing power of the current residual.
pub fn fista_family(
    problem: &Problem,
    config: &SolverConfig,
    weights: &SubbandVector,
) -> Result<ReconResult> {
    run(problem, config, weights, true)
}

pub(crate) fn run(
    problem: &Problem,
    config: &SolverConfig,
    weights: &SubbandVector,
    momentum: bool,
) -> Result<ReconResult> {
    config.validate()?;
    if config.algorithm.is_vdamp() {
        return Err(Error::InvalidArgument(format!(
            "{} is not a FISTA variant",
            config.algorithm
        )));
    }
    let shape = problem.shape();
    let ops = Operators::new(shape, config.scales)?;
    let layout = ops.layout().clone();
    if weights.layout() != &layout {
        return Err(Error::LengthMismatch {
            expected: layout.num_subbands(),
            got: weights.values().len(),
        });
    }
    if weights
        .values()
        .iter()
        .any(|&w| !(w > 0.0 && w.is_finite()))
    {
        return Err(Error::InvalidArgument(
            "subband weights must be positive".into(),
        ));
    }
    let truth = problem.ground_truth();
    if config.oracle_tau && truth.is_none() {
        return Err(Error::MissingGroundTruth("oracle noise estimate"));
    }
    let w0 = truth.map(|x| dwt_forward(x, config.scales)).transpose()?;
    let y = problem.y();
    let (mask, prob) = (problem.mask(), problem.prob());
    let n = layout.len() as f64;
    let nb = layout.num_subbands();
    let floor = (super::TAU_FLOOR_FACTOR * problem.signal_power()).max(f64::MIN_POSITIVE);
    let inv_weights = weights.map(|w| 1.0 / w);
    let lambda = config.lambda.unwrap_or(0.0);

    let mut r_tilde = WaveletCoeffs::zeros(&layout);
    let mut w_prev = WaveletCoeffs::zeros(&layout);
    let mut h_prev = 1.0f64;
    let mut trace = Vec::with_capacity(if config.record_trace {
        config.iterations
    } else {
        0
    });
    let start = Instant::now();

    for k in 0..config.iterations {
        // z = y − F Ψᴴ r̃ with no mask on the estimate term; the gradient
        // below masks it, so this equals the masked residual there.
        let mut z = ops.to_kspace(&r_tilde);
        for (zv, yv) in z.iter_mut().zip(y.data()) {
            *zv = yv - *zv;
        }
        let mut masked = z.clone();
        mask.apply(&mut masked);
        let grad = ops.to_wavelet(masked);
        let mut r = r_tilde.clone();
        for b in 0..nb {
            let step = inv_weights.get(b);
            for (rv, gv) in r.subband_mut(b).iter_mut().zip(grad.subband(b)) {
                *rv += gv * step;
            }
        }

        let tau = match &w0 {
            Some(w0) if config.oracle_tau => {
                r.data()
                    .iter()
                    .zip(w0.data())
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum::<f64>()
                    / n
            }
            _ => {
                let est = tau_y_estimate(&z, mask, prob, config.sigma_eps)?;
                est.iter().sum::<f64>() / n
            }
        }
        .max(floor);
        if !tau.is_finite() {
            return Err(Error::NonFinite { iteration: k });
        }

        let (w_hat, alpha) = if config.algorithm == Algorithm::SureIt {
            let den = gsure_denoise(&r, &SubbandVector::constant(&layout, tau))?;
            (den.w_hat, den.alpha.values().to_vec())
        } else {
            let thresholds = inv_weights.map(|iw| tau * lambda * iw);
            (soft_threshold_subbands(&r, &thresholds), vec![0.0; nb])
        };

        let h = if momentum { next_momentum(h_prev) } else { 1.0 };
        let blend = (h_prev - 1.0) / h;
        let mut next = w_hat.clone();
        for ((nv, wv), pv) in next
            .data_mut()
            .iter_mut()
            .zip(w_hat.data())
            .zip(w_prev.data())
        {
            *nv += (wv - pv) * blend;
        }
        if !next
            .data()
            .iter()
            .all(|v: &Complex64| v.re.is_finite() && v.im.is_finite())
        {
            return Err(Error::NonFinite { iteration: k });
        }

        if config.record_trace {
            let (nmse_db, per_subband_nmse) = match (truth, &w0) {
                (Some(x0), Some(w0)) => (
                    ops.data_consistent(&w_hat, y, mask).nmse_db(x0),
                    subband_nmse(&r, w0),
                ),
                _ => (f64::NAN, vec![f64::NAN; nb]),
            };
            trace.push(TraceRecord {
                iteration: k,
                nmse_db,
                per_subband_nmse,
                tau_model: vec![tau; nb],
                alpha,
                c: vec![1.0; nb],
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            });
        }
        w_prev = w_hat;
        h_prev = h;
        r_tilde = next;
    }

    let x_hat = ops.data_consistent(&w_prev, y, mask);
    Ok(finish(x_hat, w_prev, trace, truth))
}

/// `h_k` from `h_{k−1}`.
pub(crate) fn next_momentum(h: f64) -> f64 {
    (1.0 + (1.0 + 4.0 * h * h).sqrt()) / 2.0
}
