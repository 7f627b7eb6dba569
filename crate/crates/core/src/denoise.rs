//! Complex soft thresholding tuned per subband with complex SURE, the
//! subband-wise Onsager correction, and the two gain (`c`) updates.

use log::warn;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::transforms::{SubbandVector, WaveletCoeffs};

/// Subbands smaller than this give noisy SURE threshold choices.
pub const SMALL_SUBBAND: usize = 16;

/// Gains are capped here when a subband is thresholded away entirely (α → 1).
pub const MAX_GAIN: f64 = 1e6;

/// `v (1 − min(t/|v|, 1))`.
pub fn soft_threshold(v: Complex64, t: f64) -> Complex64 {
    let mag = v.norm();
    if mag <= t {
        Complex64::new(0.0, 0.0)
    } else {
        v * (1.0 - t / mag)
    }
}

/// Half the sum of ∂Re/∂Re and ∂Im/∂Im of [`soft_threshold`] at `v`.
pub fn soft_threshold_partial(v: Complex64, t: f64) -> f64 {
    let mag = v.norm();
    if mag <= t {
        0.0
    } else {
        1.0 - t / (2.0 * mag)
    }
}

/// Soft threshold of `r` at whitened threshold `t` for noise variance `tau`.
pub fn shrink(r: Complex64, tau: f64, t: f64) -> Complex64 {
    let scale = tau.sqrt();
    soft_threshold(r / scale, t) * scale
}

/// Derivative of [`shrink`] with respect to `r` (whitening cancels).
pub fn shrink_partial(r: Complex64, tau: f64, t: f64) -> f64 {
    soft_threshold_partial(r / tau.sqrt(), t)
}

/// Unbiased estimate of `E‖η(v; t) − v₀‖²` for `v = v₀ + CN(0, τ_v I)`.
pub fn csure_soft(v: &[Complex64], tau_v: f64, t: f64) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::Empty("cSURE input vector"));
    }
    let n = v.len() as f64;
    let mut risk = -n * tau_v;
    for x in v {
        let mag = x.norm();
        if mag > t {
            risk += t * t + 2.0 * tau_v - t * tau_v / mag;
        } else {
            risk += mag * mag;
        }
    }
    Ok(risk)
}

/// Threshold minimizing [`csure_soft`] over `t ≥ 0`.
///
/// cSURE is a convex quadratic in `t` between consecutive magnitudes
/// `|v_j|`, so the global minimum is either `0`, one of the `|v_j|`, or the
/// stationary point of one of those pieces. All are scanned in ascending
/// order after one sort; ties go to the smallest threshold. Returns
/// `(t_hat, sure_min)` with `sure_min` evaluated directly at `t_hat`.
pub fn optimize_threshold(v: &[Complex64], tau_v: f64) -> Result<(f64, f64)> {
    if v.is_empty() {
        return Err(Error::Empty("threshold search input"));
    }
    if !(tau_v > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise variance {tau_v} must be positive"
        )));
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.norm()).collect();
    mags.sort_by(f64::total_cmp);
    let n = mags.len();

    // prefix_sq[k]: Σ_{i<k} a_i²; suffix_inv[k]: Σ_{i≥k} 1/a_i over a_i > 0
    let mut prefix_sq = vec![0.0; n + 1];
    for (k, a) in mags.iter().enumerate() {
        prefix_sq[k + 1] = prefix_sq[k] + a * a;
    }
    let mut suffix_inv = vec![0.0; n + 1];
    for k in (0..n).rev() {
        let inv = if mags[k] > 0.0 { 1.0 / mags[k] } else { 0.0 };
        suffix_inv[k] = suffix_inv[k + 1] + inv;
    }
    let nt = n as f64 * tau_v;
    // k entries are ≤ t
    let risk = |t: f64, k: usize| {
        let above = (n - k) as f64;
        (t * t + 2.0 * tau_v) * above - nt + prefix_sq[k] - t * tau_v * suffix_inv[k]
    };

    let mut best_t = 0.0;
    let mut k = mags.partition_point(|&a| a <= 0.0);
    let mut best = risk(0.0, k);
    let mut lower = 0.0;
    while k < n {
        let upper = mags[k];
        // stationary point of the piece on (lower, upper), where k entries are below
        let above = (n - k) as f64;
        let stationary = tau_v * suffix_inv[k] / (2.0 * above);
        if stationary > lower && stationary < upper {
            let r = risk(stationary, k);
            if r < best {
                best = r;
                best_t = stationary;
            }
        }
        // jump to the candidate t = upper, absorbing every tie
        let next_k = k + mags[k..].partition_point(|&a| a <= upper);
        let r = risk(upper, next_k);
        if r < best {
            best = r;
            best_t = upper;
        }
        lower = upper;
        k = next_k;
    }
    Ok((best_t, csure_soft(v, tau_v, best_t)?))
}

#[derive(Debug, Clone)]
pub struct DenoiseResult {
    pub w_hat: WaveletCoeffs,
    /// Chosen threshold per subband, in whitened (unit-variance) units.
    pub thresholds: SubbandVector,
    /// Subband mean of the denoiser's partial derivative.
    pub alpha: SubbandVector,
    pub sure_values: SubbandVector,
}

/// Subband-wise SURE-tuned complex soft thresholding for noise variances `tau`.
pub fn gsure_denoise(r: &WaveletCoeffs, tau: &SubbandVector) -> Result<DenoiseResult> {
    let layout = r.layout();
    if tau.layout() != layout {
        return Err(Error::LengthMismatch {
            expected: layout.num_subbands(),
            got: tau.values().len(),
        });
    }
    let nb = layout.num_subbands();
    let mut w_hat = WaveletCoeffs::zeros(layout);
    let mut thresholds = vec![0.0; nb];
    let mut alpha = vec![0.0; nb];
    let mut sure = vec![0.0; nb];

    for b in 0..nb {
        let tau_b = tau.get(b);
        if !(tau_b > 0.0 && tau_b.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "subband {b} noise variance {tau_b} must be positive and finite"
            )));
        }
        let band = r.subband(b);
        if band.len() < SMALL_SUBBAND {
            warn!(
                "subband {} has only {} coefficients; SURE threshold selection is unreliable",
                layout.subband(b).kind,
                band.len()
            );
        }
        let scale = tau_b.sqrt();
        let whitened: Vec<Complex64> = band.iter().map(|v| v / scale).collect();
        let (t, s) = optimize_threshold(&whitened, 1.0)?;
        let out = w_hat.subband_mut(b);
        let mut div = 0.0;
        for (o, v) in out.iter_mut().zip(&whitened) {
            *o = soft_threshold(*v, t) * scale;
            div += soft_threshold_partial(*v, t);
        }
        thresholds[b] = t;
        alpha[b] = div / band.len() as f64;
        sure[b] = s;
    }
    Ok(DenoiseResult {
        w_hat,
        thresholds: SubbandVector::new(layout.clone(), thresholds)?,
        alpha: SubbandVector::new(layout.clone(), alpha)?,
        sure_values: SubbandVector::new(layout.clone(), sure)?,
    })
}

/// Soft thresholding with one (unwhitened) threshold per subband.
pub fn soft_threshold_subbands(r: &WaveletCoeffs, thresholds: &SubbandVector) -> WaveletCoeffs {
    let mut out = r.clone();
    for b in 0..r.layout().num_subbands() {
        let t = thresholds.get(b);
        for v in out.subband_mut(b) {
            *v = soft_threshold(*v, t);
        }
    }
    out
}

/// `c ⊙ (g − α ⊙ r)` with subband-constant `α` and `c`.
pub fn onsager_correct(
    g: &WaveletCoeffs,
    r: &WaveletCoeffs,
    alpha: &SubbandVector,
    c: &SubbandVector,
) -> Result<WaveletCoeffs> {
    g.ensure_compatible(r)?;
    let layout = g.layout();
    if alpha.layout() != layout || c.layout() != layout {
        return Err(Error::InvalidArgument(
            "subband vectors do not match the coefficient layout".into(),
        ));
    }
    let mut out = WaveletCoeffs::zeros(layout);
    for b in 0..layout.num_subbands() {
        let (a, cb) = (alpha.get(b), c.get(b));
        for ((o, gv), rv) in out
            .subband_mut(b)
            .iter_mut()
            .zip(g.subband(b))
            .zip(r.subband(b))
        {
            *o = (gv - rv * a) * cb;
        }
    }
    Ok(out)
}

/// Analytic partials `c_b (∂η_j − α_b)` of the corrected denoiser.
pub fn corrected_partials(
    r: &WaveletCoeffs,
    tau: &SubbandVector,
    thresholds: &SubbandVector,
    alpha: &SubbandVector,
    c: &SubbandVector,
) -> Vec<f64> {
    let mut out = vec![0.0; r.data().len()];
    for (b, band) in r.layout().subbands().iter().enumerate() {
        let (tau_b, t, a, cb) = (tau.get(b), thresholds.get(b), alpha.get(b), c.get(b));
        for j in band.range.clone() {
            out[j] = cb * (shrink_partial(r.data()[j], tau_b, t) - a);
        }
    }
    out
}

/// Per-subband gains plus the subbands that needed a fallback.
#[derive(Debug, Clone)]
pub struct GainUpdate {
    pub c: SubbandVector,
    pub flagged: Vec<usize>,
}

fn alpha_gain(a: f64) -> Option<f64> {
    if a >= 1.0 - 1e-6 {
        None
    } else {
        Some(1.0 / (1.0 - a))
    }
}

/// `c_b = 1 / (1 − α_b)`.
pub fn c_alpha(alpha: &SubbandVector) -> GainUpdate {
    let mut flagged = Vec::new();
    let c = SubbandVector::from_fn(alpha.layout(), |b| {
        alpha_gain(alpha.get(b)).unwrap_or_else(|| {
            flagged.push(b);
            MAX_GAIN
        })
    });
    if !flagged.is_empty() {
        warn!("alpha at 1 in subbands {flagged:?}; gain clamped to {MAX_GAIN:e}");
    }
    GainUpdate { c, flagged }
}

/// Per-subband least-squares gain fitting `c (g_b − α_b r_b)` to `r_b`.
///
/// The real part of the inner product is used so the gain stays real.
pub fn c_sure(r: &WaveletCoeffs, g: &WaveletCoeffs, alpha: &SubbandVector) -> Result<GainUpdate> {
    g.ensure_compatible(r)?;
    let mut flagged = Vec::new();
    let c = SubbandVector::from_fn(r.layout(), |b| {
        let a = alpha.get(b);
        let mut num = 0.0;
        let mut den = 0.0;
        for (gv, rv) in g.subband(b).iter().zip(r.subband(b)) {
            let d = gv - rv * a;
            num += (rv.conj() * d).re;
            den += d.norm_sqr();
        }
        if den > 0.0 && den.is_finite() {
            num / den
        } else {
            flagged.push(b);
            alpha_gain(a).unwrap_or(MAX_GAIN)
        }
    });
    if !flagged.is_empty() {
        warn!("degenerate SURE gain in subbands {flagged:?}; fell back to 1/(1-alpha)");
    }
    Ok(GainUpdate { c, flagged })
}
