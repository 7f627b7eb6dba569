use rayon::prelude::*;

use super::fista::fista_family;
use super::{Problem, SolverConfig};
use crate::error::{Error, Result};
use crate::transforms::SubbandVector;

/// Iteration at which λ is scored by default.
pub const DEFAULT_K_EVAL: usize = 100;

#[derive(Debug, Clone)]
pub struct LambdaTuning {
    pub lambda: f64,
    /// `(λ, NMSE in dB at k_eval)` for every grid point, in grid order.
    pub scores: Vec<(f64, f64)>,
}

/// `per_decade` log-spaced values per decade from `lo` to `hi` inclusive.
pub fn lambda_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && per_decade > 0);
    let decades = (hi / lo).log10();
    let steps = (decades * per_decade as f64).round() as usize;
    (0..=steps)
        .map(|i| lo * 10f64.powf(i as f64 / per_decade as f64))
        .collect()
}

/// 16 points per decade over `[1e-4, 1e1] / P`, where `P` is the estimated
/// mean signal power, so the product τ_k λ lands in a useful range.
pub fn default_lambda_grid(problem: &Problem) -> Vec<f64> {
    let scale = 1.0 / problem.signal_power().max(f64::MIN_POSITIVE);
    lambda_grid(1e-4 * scale, 1e1 * scale, 16)
}

/// Exhaustive search for the λ minimizing the NMSE of the output after
/// `k_eval` iterations. Ties go to the smaller λ.
pub fn tune_lambda(
    problem: &Problem,
    config: &SolverConfig,
    weights: &SubbandVector,
    grid: &[f64],
    k_eval: usize,
) -> Result<LambdaTuning> {
    if grid.is_empty() {
        return Err(Error::Empty("lambda grid"));
    }
    let truth = problem
        .ground_truth()
        .ok_or(Error::MissingGroundTruth("lambda tuning"))?;
    let scores: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&lambda| {
            let run = SolverConfig {
                lambda: Some(lambda),
                iterations: k_eval,
                record_trace: false,
                ..config.clone()
            };
            let res = fista_family(problem, &run, weights)?;
            let nmse = res.x_hat.nmse_db(truth);
            Ok((lambda, if nmse.is_nan() { f64::INFINITY } else { nmse }))
        })
        .collect::<Result<_>>()?;
    let mut best = scores[0];
    for &(l, s) in &scores[1..] {
        if s < best.1 || (s == best.1 && l < best.0) {
            best = (l, s);
        }
    }
    Ok(LambdaTuning {
        lambda: best.0,
        scores,
    })
}
