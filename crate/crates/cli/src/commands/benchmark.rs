use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use vdamp::solvers::Algorithm;

use super::{check_lambda_source, create_dir, fista_weights, solve, write_run, RunSummary};
use crate::args::ExperimentArgs;
use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone)]
struct Cell {
    algorithm: Algorithm,
    accel: f64,
    seed: u64,
    outcome: Result<CellResult, String>,
}

#[derive(Debug, Clone)]
struct CellResult {
    final_nmse_db: Option<f64>,
    converged_iteration: Option<usize>,
    lambda: Option<f64>,
    wall_time_s: f64,
}

fn cell_dir(root: &Path, algorithm: Algorithm, accel: f64, seed: u64) -> std::path::PathBuf {
    root.join("cells")
        .join(format!("{algorithm}_accel{accel}_seed{seed}"))
}

/// All algorithms on one (acceleration, seed) problem.
fn run_group(
    cfg: &ExperimentConfig,
    truth: &vdamp::ComplexImage,
    accel: f64,
    seed: u64,
) -> Vec<Cell> {
    let fail = |msg: String| -> Vec<Cell> {
        cfg.algorithms
            .iter()
            .map(|&algorithm| Cell {
                algorithm,
                accel,
                seed,
                outcome: Err(msg.clone()),
            })
            .collect()
    };
    let (problem, sigma) = match cfg.simulate(truth, accel, seed) {
        Ok(p) => p,
        Err(e) => return fail(e.to_string()),
    };
    // S-FISTA weights depend only on the mask, so they are shared by the group
    let mut sfista = None;
    let mut cells = Vec::with_capacity(cfg.algorithms.len());
    for &algorithm in &cfg.algorithms {
        let outcome = (|| -> CliResult<CellResult> {
            let weights = if algorithm == Algorithm::Sfista {
                if sfista.is_none() {
                    sfista = Some(fista_weights(&problem, algorithm, cfg.scales)?);
                }
                sfista.as_ref()
            } else {
                None
            };
            let start = Instant::now();
            let (result, lambda) = solve(
                cfg,
                &problem,
                cfg.solver_config(algorithm, sigma, seed, None),
                weights,
            )?;
            let wall = start.elapsed().as_secs_f64();
            let summary = RunSummary {
                algorithm,
                acceleration: Some(accel),
                seed,
                iterations: cfg.iterations,
                lambda,
                sigma_eps: sigma,
                observed: problem.mask().n_observed(),
                final_nmse_db: result.nmse_db,
                converged_iteration: result.converged_iteration,
                wall_time_s: wall,
            };
            let dir = cell_dir(&cfg.output, algorithm, accel, seed);
            create_dir(&dir)?;
            write_run(&dir, &result, &summary, cfg.timing)?;
            info!(
                "{algorithm} accel {accel} seed {seed}: {:?} dB in {wall:.1} s",
                result.nmse_db
            );
            Ok(CellResult {
                final_nmse_db: result.nmse_db,
                converged_iteration: result.converged_iteration,
                lambda,
                wall_time_s: wall,
            })
        })()
        .map_err(|e| {
            warn!("{algorithm} accel {accel} seed {seed} failed: {e}");
            e.to_string()
        });
        cells.push(Cell {
            algorithm,
            accel,
            seed,
            outcome,
        });
    }
    cells
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

/// Combined table; the ratio column divides each cell's convergence
/// iteration by FISTA's on the same problem.
fn write_table(cells: &[Cell], mut out: impl Write) -> CliResult<()> {
    writeln!(
        out,
        "algorithm,accel,seed,status,final_nmse_db,converged_iteration,lambda,wall_time_s,convergence_ratio_vs_fista"
    )?;
    for c in cells {
        let fista_conv = cells
            .iter()
            .find(|f| f.algorithm == Algorithm::Fista && f.accel == c.accel && f.seed == c.seed)
            .and_then(|f| f.outcome.as_ref().ok())
            .and_then(|r| r.converged_iteration)
            .filter(|&k| k > 0);
        match &c.outcome {
            Ok(r) => {
                let ratio = r
                    .converged_iteration
                    .zip(fista_conv)
                    .map(|(k, f)| k as f64 / f as f64);
                writeln!(
                    out,
                    "{},{},{},ok,{},{},{},{:.3},{}",
                    c.algorithm,
                    c.accel,
                    c.seed,
                    opt(r.final_nmse_db),
                    opt(r.converged_iteration),
                    opt(r.lambda),
                    r.wall_time_s,
                    opt(ratio)
                )?;
            }
            Err(e) => {
                let msg = e.replace([',', '\n'], ";");
                writeln!(
                    out,
                    "{},{},{},error: {msg},,,,,",
                    c.algorithm, c.accel, c.seed
                )?;
            }
        }
    }
    Ok(())
}

pub fn run(args: &ExperimentArgs) -> CliResult<()> {
    let mut cfg = args.resolve()?;
    // benchmarks always tune λ when none is given
    if cfg.lambda.is_none() {
        cfg.tune_lambda = true;
    }
    for &a in &cfg.algorithms {
        check_lambda_source(&cfg, a)?;
    }
    let truth = cfg.ground_truth()?;
    create_dir(&cfg.output)?;
    cfg.write_resolved(&cfg.output)?;

    let groups: Vec<(f64, u64)> = cfg
        .accelerations
        .iter()
        .flat_map(|&a| cfg.seeds.iter().map(move |&s| (a, s)))
        .collect();
    let cells: Vec<Cell> = groups
        .par_iter()
        .flat_map_iter(|&(accel, seed)| run_group(&cfg, &truth, accel, seed))
        .collect();

    write_table(
        &cells,
        BufWriter::new(File::create(cfg.output.join("benchmark.csv"))?),
    )?;
    let failed = cells.iter().filter(|c| c.outcome.is_err()).count();
    println!("benchmark: {} cells, {failed} failed", cells.len());
    if failed == cells.len() {
        return Err(CliError::Solver(format!(
            "all {failed} benchmark cells failed"
        )));
    }
    Ok(())
}
