use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

/// Two NMSE values closer than this (in dB) count as converged.
pub const CONVERGENCE_TOLERANCE_DB: f64 = 0.1;

/// Per-iteration solver state. Ground-truth quantities are NaN without a
/// reference image; FISTA variants without a gain record `alpha = 0, c = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iteration: usize,
    /// NMSE of the data-consistent output at this iteration.
    pub nmse_db: f64,
    /// `‖r_b − w₀_b‖² / ‖w₀_b‖²` for the pre-denoising iterate.
    pub per_subband_nmse: Vec<f64>,
    /// Modeled per-coefficient aliasing variance.
    pub tau_model: Vec<f64>,
    pub alpha: Vec<f64>,
    pub c: Vec<f64>,
    /// Milliseconds since the solver started.
    pub wall_ms: f64,
}

/// Writes `iter,nmse_db,subband_nmse_1..B,tau_1..B,alpha_1..B,c_1..B,wall_ms`.
pub fn write_trace_csv<W: Write>(trace: &[TraceRecord], out: W) -> Result<()> {
    write_trace_csv_with(trace, out, true)
}

/// As [`write_trace_csv`]; with `timing` off the `wall_ms` cells are left
/// empty so that repeated runs produce identical files.
pub fn write_trace_csv_with<W: Write>(
    trace: &[TraceRecord],
    mut out: W,
    timing: bool,
) -> Result<()> {
    let nb = trace.first().map_or(0, |t| t.tau_model.len());
    let mut header = vec!["iter".to_string(), "nmse_db".to_string()];
    for prefix in ["subband_nmse", "tau", "alpha", "c"] {
        header.extend((1..=nb).map(|b| format!("{prefix}_{b}")));
    }
    header.push("wall_ms".into());
    writeln!(out, "{}", header.join(","))?;
    for t in trace {
        for v in [&t.per_subband_nmse, &t.tau_model, &t.alpha, &t.c] {
            if v.len() != nb {
                return Err(Error::LengthMismatch {
                    expected: nb,
                    got: v.len(),
                });
            }
        }
        let mut row = vec![t.iteration.to_string(), t.nmse_db.to_string()];
        for v in [&t.per_subband_nmse, &t.tau_model, &t.alpha, &t.c] {
            row.extend(v.iter().map(f64::to_string));
        }
        row.push(if timing {
            format!("{:.3}", t.wall_ms)
        } else {
            String::new()
        });
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Smallest `k` such that every entry from `k` on is within
/// [`CONVERGENCE_TOLERANCE_DB`] of `final_db`. Returns `trace.len()` if
/// not even the last entry qualifies.
pub fn convergence_iteration(trace: &[f64], final_db: f64) -> usize {
    let tol = CONVERGENCE_TOLERANCE_DB + 1e-12;
    let mut k = trace.len();
    while k > 0 && (trace[k - 1] - final_db).abs() <= tol {
        k -= 1;
    }
    k
}
