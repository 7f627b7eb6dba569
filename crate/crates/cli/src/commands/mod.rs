mod benchmark;
mod diagnose;
mod reconstruct;

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::time::Instant;

use log::info;
use serde::Serialize;
use vdamp::phantom::{shepp_logan, shepp_logan_modified};
use vdamp::sampling::{draw_mask, ProbabilityMap, SamplingSet};
use vdamp::solvers::{
    default_lambda_grid, fista_family, sfista_weights, tune_lambda, vdamp, write_trace_csv_with,
    Algorithm, Problem, ReconResult, SolverConfig, DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL,
};
use vdamp::{ComplexImage, SubbandLayout, SubbandVector};

use crate::args::{MaskArgs, MeasuredArgs, PhantomArgs};
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

pub use benchmark::run as benchmark;
pub use diagnose::run as diagnose;
pub use reconstruct::run as reconstruct;

pub(crate) fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))
}

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(file, value)?;
    Ok(())
}

fn read_binary<T>(
    path: &Path,
    read: impl FnOnce(BufReader<File>) -> Result<T, String>,
) -> CliResult<T> {
    let file =
        File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    read(BufReader::new(file)).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[derive(Debug, Serialize)]
struct MaskSummary {
    shape: (usize, usize),
    acceleration: f64,
    seed: u64,
    /// Realized |Ω|.
    observed: usize,
    /// E|Ω| = Σ p.
    expected_samples: f64,
    /// Σ p / N.
    sampling_fraction: f64,
    realized_fraction: f64,
}

pub fn mask(args: &MaskArgs) -> CliResult<()> {
    let cfg = args.resolve()?;
    let (accel, seed) = (cfg.accelerations[0], cfg.seeds[0]);
    let prob = cfg.density.build(cfg.shape, accel)?;
    let mask = draw_mask(&prob, seed);
    create_dir(&cfg.output)?;
    prob.write_binary(BufWriter::new(File::create(cfg.output.join("prob.bin"))?))?;
    mask.write_binary(BufWriter::new(File::create(cfg.output.join("mask.bin"))?))?;
    let n = prob.len() as f64;
    let summary = MaskSummary {
        shape: cfg.shape,
        acceleration: accel,
        seed,
        observed: mask.n_observed(),
        expected_samples: prob.expected_samples(),
        sampling_fraction: prob.expected_samples() / n,
        realized_fraction: mask.n_observed() as f64 / n,
    };
    write_json(&cfg.output.join("mask_summary.json"), &summary)?;
    cfg.write_resolved(&cfg.output)?;
    info!("mask: {} of {} samples", summary.observed, prob.len());
    Ok(())
}

pub fn phantom(args: &PhantomArgs) -> CliResult<()> {
    let (h, w) = args.shape;
    let img = if args.modified {
        shepp_logan_modified(h, w)?
    } else {
        shepp_logan(h, w)?
    };
    if let Some(parent) = args.output.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    vdamp::io::save_grayscale(&img, &args.output)?;
    Ok(())
}

/// Problem from measured k-space files, when given.
fn load_measured(m: &MeasuredArgs) -> CliResult<Option<(Problem, f64)>> {
    let (Some(y), Some(mask), Some(prob)) = (&m.kspace, &m.mask, &m.prob) else {
        return Ok(None);
    };
    let y = read_binary(y, ComplexImage::read_binary)?;
    let mask = read_binary(mask, SamplingSet::read_binary)?;
    let prob = read_binary(prob, ProbabilityMap::read_binary)?;
    let sigma = m.sigma_eps.unwrap_or(0.0);
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(CliError::Config(format!(
            "sigma_eps {sigma} must be non-negative"
        )));
    }
    Ok(Some((Problem::new(y, mask, prob)?, sigma)))
}

fn check_lambda_source(cfg: &ExperimentConfig, algorithm: Algorithm) -> CliResult<()> {
    if algorithm.needs_lambda() && cfg.lambda.is_none() && !cfg.tune_lambda {
        return Err(CliError::Usage(format!(
            "{algorithm} needs --lambda or --tune-lambda"
        )));
    }
    Ok(())
}

/// Per-subband gradient weights for the FISTA family.
fn fista_weights(
    problem: &Problem,
    algorithm: Algorithm,
    scales: usize,
) -> CliResult<SubbandVector> {
    let (h, w) = problem.shape();
    if algorithm == Algorithm::Sfista {
        let start = Instant::now();
        let weights = sfista_weights(
            problem.mask(),
            (h, w),
            scales,
            DEFAULT_POWER_ITERS,
            DEFAULT_POWER_TOL,
        )
        .map_err(CliError::solver)?;
        info!("S-FISTA weights in {:.1} s", start.elapsed().as_secs_f64());
        Ok(weights.weights)
    } else {
        Ok(SubbandVector::constant(
            &SubbandLayout::new(h, w, scales)?,
            1.0,
        ))
    }
}

/// Runs one algorithm, tuning λ first when the config asks for it.
/// Returns the result and the λ used.
fn solve(
    cfg: &ExperimentConfig,
    problem: &Problem,
    base: SolverConfig,
    weights: Option<&SubbandVector>,
) -> CliResult<(ReconResult, Option<f64>)> {
    let algorithm = base.algorithm;
    if algorithm.is_vdamp() {
        return Ok((vdamp(problem, &base).map_err(CliError::solver)?, None));
    }
    let owned;
    let weights = match weights {
        Some(w) => w,
        None => {
            owned = fista_weights(problem, algorithm, cfg.scales)?;
            &owned
        }
    };
    let lambda = match (algorithm.needs_lambda(), cfg.lambda) {
        (false, _) => None,
        (true, Some(l)) => Some(l),
        (true, None) => {
            let grid = default_lambda_grid(problem);
            let tuned = tune_lambda(problem, &base, weights, &grid, cfg.k_eval)
                .map_err(CliError::solver)?;
            info!("{algorithm}: tuned λ = {:.4e}", tuned.lambda);
            Some(tuned.lambda)
        }
    };
    let run = SolverConfig { lambda, ..base };
    Ok((
        fista_family(problem, &run, weights).map_err(CliError::solver)?,
        lambda,
    ))
}

#[derive(Debug, Serialize)]
struct RunSummary {
    algorithm: Algorithm,
    acceleration: Option<f64>,
    seed: u64,
    iterations: usize,
    lambda: Option<f64>,
    sigma_eps: f64,
    observed: usize,
    final_nmse_db: Option<f64>,
    converged_iteration: Option<usize>,
    wall_time_s: f64,
}

/// `x_hat.pgm`, `trace.csv` and `summary.json` in `dir`.
fn write_run(
    dir: &Path,
    result: &ReconResult,
    summary: &RunSummary,
    timing: bool,
) -> CliResult<()> {
    vdamp::io::save_grayscale(&result.x_hat, dir.join("x_hat.pgm"))?;
    write_trace_csv_with(
        &result.trace,
        BufWriter::new(File::create(dir.join("trace.csv"))?),
        timing,
    )?;
    write_json(&dir.join("summary.json"), summary)
}
