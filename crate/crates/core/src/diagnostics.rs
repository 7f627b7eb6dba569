//! Empirical checks of the colored state evolution: per-subband excess
//! kurtosis of the effective noise, normal quantile-quantile data, and the
//! agreement between modeled and measured aliasing power.

use std::io::Write;

use log::debug;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::solvers::{IterationView, TraceRecord};
use crate::transforms::{SubbandKind, WaveletCoeffs};

/// A variance at or below this multiple of the squared mean is treated as
/// zero, so constant subbands with rounding noise are not measured.
const DEGENERATE_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Real,
    Imag,
}

impl Part {
    fn pick(self, v: num_complex::Complex64) -> f64 {
        match self {
            Part::Real => v.re,
            Part::Imag => v.im,
        }
    }
}

fn mean_and_variance(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

fn is_degenerate(mean: f64, var: f64) -> bool {
    var <= DEGENERATE_VARIANCE * mean * mean || var == 0.0 || !var.is_finite()
}

/// `μ₄ / σ⁴ − 3` with population moments.
pub fn excess_kurtosis(samples: &[f64]) -> Result<f64> {
    if samples.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "kurtosis needs at least 4 samples, got {}",
            samples.len()
        )));
    }
    let (mean, var) = mean_and_variance(samples);
    if is_degenerate(mean, var) {
        return Err(Error::ZeroVariance("kurtosis sample"));
    }
    let m4 = samples.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / samples.len() as f64;
    Ok(m4 / (var * var) - 3.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct SubbandKurtosis {
    /// Per subband; `None` where the subband was skipped as degenerate.
    pub per_subband: Vec<Option<f64>>,
    /// Mean over the subbands that were not skipped.
    pub mean: f64,
    pub skipped: Vec<usize>,
}

/// Mean excess kurtosis over subbands of one component of `err`.
/// Zero-variance subbands are skipped and listed; if every subband is
/// degenerate the call fails.
pub fn mean_subband_kurtosis(err: &WaveletCoeffs, part: Part) -> Result<SubbandKurtosis> {
    let layout = err.layout();
    let mut per_subband = Vec::with_capacity(layout.num_subbands());
    let mut skipped = Vec::new();
    for b in 0..layout.num_subbands() {
        let samples: Vec<f64> = err.subband(b).iter().map(|&v| part.pick(v)).collect();
        match excess_kurtosis(&samples) {
            Ok(k) => per_subband.push(Some(k)),
            Err(Error::ZeroVariance(_)) => {
                debug!("subband {} skipped: zero variance", layout.subband(b).kind);
                skipped.push(b);
                per_subband.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    let kept: Vec<f64> = per_subband.iter().flatten().copied().collect();
    if kept.is_empty() {
        return Err(Error::ZeroVariance("every subband"));
    }
    Ok(SubbandKurtosis {
        mean: kept.iter().sum::<f64>() / kept.len() as f64,
        per_subband,
        skipped,
    })
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// `(theoretical, empirical)` pairs at plotting positions `(i − ½)/n_points`.
///
/// Samples are standardized to zero mean and unit variance. Empirical
/// quantiles interpolate linearly between order statistics placed at the
/// same plotting positions, so with `n_points` equal to the sample count
/// each pair holds one sorted sample.
pub fn qq_data(samples: &[f64], n_points: usize) -> Result<Vec<(f64, f64)>> {
    if n_points == 0 || n_points > samples.len() {
        return Err(Error::InvalidArgument(format!(
            "n_points {n_points} must be in 1..={}",
            samples.len()
        )));
    }
    let (mean, var) = mean_and_variance(samples);
    if is_degenerate(mean, var) {
        return Err(Error::ZeroVariance("quantile sample"));
    }
    let sd = var.sqrt();
    let mut sorted: Vec<f64> = samples.iter().map(|x| (x - mean) / sd).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Ok((1..=n_points)
        .map(|i| {
            let p = (i as f64 - 0.5) / n_points as f64;
            let pos = (p * n as f64 - 0.5).clamp(0.0, (n - 1) as f64);
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let frac = pos - lo as f64;
            (
                normal_quantile(p),
                sorted[lo] * (1.0 - frac) + sorted[hi] * frac,
            )
        })
        .collect())
}

/// Largest `|empirical − theoretical|` over a set of QQ pairs.
pub fn qq_max_deviation(points: &[(f64, f64)]) -> f64 {
    points
        .iter()
        .map(|(t, e)| (t - e).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauTrackingRow {
    pub iteration: usize,
    pub subband: usize,
    /// `‖r_b − w₀_b‖² / ‖w₀_b‖²`.
    pub true_nmse: f64,
    /// `N_b τ_b / ‖w₀_b‖²`.
    pub model_nmse: f64,
    /// `model / true`; `None` when the true value is zero.
    pub ratio: Option<f64>,
}

/// Measured against modeled per-subband aliasing power for every
/// iteration of a trace recorded with ground truth `w0`.
pub fn tau_tracking_report(
    trace: &[TraceRecord],
    w0: &WaveletCoeffs,
) -> Result<Vec<TauTrackingRow>> {
    let layout = w0.layout();
    let nb = layout.num_subbands();
    let energy: Vec<f64> = (0..nb)
        .map(|b| w0.subband(b).iter().map(|v| v.norm_sqr()).sum())
        .collect();
    let mut rows = Vec::with_capacity(trace.len() * nb);
    for rec in trace {
        if rec.tau_model.len() != nb || rec.per_subband_nmse.len() != nb {
            return Err(Error::LengthMismatch {
                expected: nb,
                got: rec.tau_model.len().min(rec.per_subband_nmse.len()),
            });
        }
        for (b, &e) in energy.iter().enumerate() {
            let true_nmse = rec.per_subband_nmse[b];
            let model_err = layout.subband(b).len() as f64 * rec.tau_model[b];
            let model_nmse = model_err / e;
            // squared error from the NMSE; avoids 0/0 when w₀_b = 0
            let true_err = true_nmse * e;
            let ratio = (true_err > 0.0 && true_err.is_finite()).then(|| model_err / true_err);
            rows.push(TauTrackingRow {
                iteration: rec.iteration,
                subband: b,
                true_nmse,
                model_nmse,
                ratio,
            });
        }
    }
    Ok(rows)
}

/// Median of the defined ratios among `rows`; `None` if there are none.
pub fn median_ratio<'a>(rows: impl IntoIterator<Item = &'a TauTrackingRow>) -> Option<f64> {
    let mut r: Vec<f64> = rows.into_iter().filter_map(|row| row.ratio).collect();
    if r.is_empty() {
        return None;
    }
    r.sort_by(f64::total_cmp);
    let m = r.len() / 2;
    Some(if r.len() % 2 == 1 {
        r[m]
    } else {
        0.5 * (r[m - 1] + r[m])
    })
}

/// Writes `iter,subband,true_nmse,model_nmse,ratio`; undefined ratios are
/// left empty.
pub fn write_tau_tracking_csv(rows: &[TauTrackingRow], mut out: impl Write) -> Result<()> {
    writeln!(out, "iter,subband,true_nmse,model_nmse,ratio")?;
    for r in rows {
        let ratio = r.ratio.map_or(String::new(), |v| format!("{v:.9e}"));
        writeln!(
            out,
            "{},{},{:.9e},{:.9e},{ratio}",
            r.iteration, r.subband, r.true_nmse, r.model_nmse
        )?;
    }
    Ok(())
}

/// Default QQ subbands: diagonal at scale 1, horizontal at scale 2 and
/// vertical at scale 4 (or the coarsest available scale).
pub fn default_qq_subbands(scales: usize) -> Vec<SubbandKind> {
    use crate::transforms::Orientation::*;
    vec![
        SubbandKind::Detail {
            scale: 1,
            orientation: Diagonal,
        },
        SubbandKind::Detail {
            scale: 2.min(scales),
            orientation: Horizontal,
        },
        SubbandKind::Detail {
            scale: 4.min(scales),
            orientation: Vertical,
        },
    ]
}

pub const DEFAULT_QQ_ITERATIONS: [usize; 3] = [0, 5, 20];
pub const DEFAULT_QQ_POINTS: usize = 20;

#[derive(Debug, Clone, Serialize)]
pub struct IterationStats {
    pub iteration: usize,
    pub kurtosis_real: SubbandKurtosis,
    pub kurtosis_imag: SubbandKurtosis,
    pub per_subband_nmse_true: Vec<f64>,
    pub per_subband_nmse_model: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct QqSeries {
    pub subband: SubbandKind,
    pub iteration: usize,
    pub real: Vec<(f64, f64)>,
    pub imag: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StateEvolutionSummary {
    pub mean_kurt_real: f64,
    pub mean_kurt_imag: f64,
    pub converged_iteration: Option<usize>,
    pub final_nmse_db: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StateEvolutionReport {
    pub subband_labels: Vec<String>,
    pub iterations: Vec<IterationStats>,
    pub qq: Vec<QqSeries>,
    pub converged_iteration: Option<usize>,
    pub final_nmse_db: Option<f64>,
}

impl StateEvolutionReport {
    pub fn summary(&self) -> StateEvolutionSummary {
        let last = self.iterations.last();
        StateEvolutionSummary {
            mean_kurt_real: last.map_or(f64::NAN, |s| s.kurtosis_real.mean),
            mean_kurt_imag: last.map_or(f64::NAN, |s| s.kurtosis_imag.mean),
            converged_iteration: self.converged_iteration,
            final_nmse_db: self.final_nmse_db,
        }
    }

    /// One row per iteration and subband; skipped kurtosis cells are empty.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(
            out,
            "iter,subband,label,kurtosis_real,kurtosis_imag,nmse_true,nmse_model,skipped"
        )?;
        let cell = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6e}"));
        for it in &self.iterations {
            for (b, label) in self.subband_labels.iter().enumerate() {
                let kr = it.kurtosis_real.per_subband[b];
                let ki = it.kurtosis_imag.per_subband[b];
                writeln!(
                    out,
                    "{},{b},{label},{},{},{:.6e},{:.6e},{}",
                    it.iteration,
                    cell(kr),
                    cell(ki),
                    it.per_subband_nmse_true[b],
                    it.per_subband_nmse_model[b],
                    u8::from(kr.is_none() || ki.is_none()),
                )?;
            }
        }
        Ok(())
    }

    pub fn write_summary_json(&self, out: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.summary())?;
        Ok(())
    }
}

/// Writes one QQ series as `theoretical,empirical_real,empirical_imag`.
pub fn write_qq_csv(series: &QqSeries, mut out: impl Write) -> Result<()> {
    writeln!(out, "theoretical,empirical_real,empirical_imag")?;
    for ((t, re), (_, im)) in series.real.iter().zip(&series.imag) {
        writeln!(out, "{t:.9e},{re:.9e},{im:.9e}")?;
    }
    Ok(())
}

/// Collects state-evolution statistics from VDAMP iterations; feed it
/// through [`crate::solvers::vdamp_observed`].
#[derive(Debug)]
pub struct StateEvolutionRecorder {
    w0: WaveletCoeffs,
    qq_subbands: Vec<usize>,
    qq_iterations: Vec<usize>,
    qq_points: usize,
    iterations: Vec<IterationStats>,
    qq: Vec<QqSeries>,
    error: Option<Error>,
}

impl StateEvolutionRecorder {
    pub fn new(
        w0: WaveletCoeffs,
        qq_subbands: &[SubbandKind],
        qq_iterations: &[usize],
        qq_points: usize,
    ) -> Result<Self> {
        let layout = w0.layout();
        let qq_subbands = qq_subbands
            .iter()
            .map(|&kind| {
                layout.find(kind).ok_or_else(|| {
                    Error::InvalidArgument(format!("no subband {kind} in this layout"))
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            w0,
            qq_subbands,
            qq_iterations: qq_iterations.to_vec(),
            qq_points,
            iterations: Vec::new(),
            qq: Vec::new(),
            error: None,
        })
    }

    pub fn observe(&mut self, view: &IterationView<'_>) {
        if self.error.is_none() {
            if let Err(e) = self.try_observe(view) {
                self.error = Some(e);
            }
        }
    }

    fn try_observe(&mut self, view: &IterationView<'_>) -> Result<()> {
        let layout = self.w0.layout().clone();
        let mut err = view.r.clone();
        for (e, w) in err.data_mut().iter_mut().zip(self.w0.data()) {
            *e -= w;
        }
        let nb = layout.num_subbands();
        let mut nmse_true = Vec::with_capacity(nb);
        let mut nmse_model = Vec::with_capacity(nb);
        for b in 0..nb {
            let energy: f64 = self.w0.subband(b).iter().map(|v| v.norm_sqr()).sum();
            let e: f64 = err.subband(b).iter().map(|v| v.norm_sqr()).sum();
            nmse_true.push(e / energy);
            nmse_model.push(layout.subband(b).len() as f64 * view.tau.get(b) / energy);
        }
        self.iterations.push(IterationStats {
            iteration: view.iteration,
            kurtosis_real: mean_subband_kurtosis(&err, Part::Real)?,
            kurtosis_imag: mean_subband_kurtosis(&err, Part::Imag)?,
            per_subband_nmse_true: nmse_true,
            per_subband_nmse_model: nmse_model,
        });
        if self.qq_iterations.contains(&view.iteration) {
            for &b in &self.qq_subbands {
                let real: Vec<f64> = err.subband(b).iter().map(|v| v.re).collect();
                let imag: Vec<f64> = err.subband(b).iter().map(|v| v.im).collect();
                let points = self.qq_points.min(real.len());
                self.qq.push(QqSeries {
                    subband: layout.subband(b).kind,
                    iteration: view.iteration,
                    real: qq_data(&real, points)?,
                    imag: qq_data(&imag, points)?,
                });
            }
        }
        Ok(())
    }

    /// Final report; the first error raised while observing, if any.
    pub fn finish(
        self,
        converged_iteration: Option<usize>,
        final_nmse_db: Option<f64>,
    ) -> Result<StateEvolutionReport> {
        if let Some(e) = self.error {
            return Err(e);
        }
        Ok(StateEvolutionReport {
            subband_labels: self
                .w0
                .layout()
                .subbands()
                .iter()
                .map(|s| s.kind.to_string())
                .collect(),
            iterations: self.iterations,
            qq: self.qq,
            converged_iteration,
            final_nmse_db,
        })
    }
}
