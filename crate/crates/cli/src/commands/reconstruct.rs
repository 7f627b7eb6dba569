use std::fs::File;
use std::io::BufWriter;
use std::time::Instant;

use log::info;

use super::{check_lambda_source, create_dir, load_measured, solve, write_run, RunSummary};
use crate::args::ReconstructArgs;
use crate::error::{CliError, CliResult};

pub fn run(args: &ReconstructArgs) -> CliResult<()> {
    let cfg = args.experiment.resolve()?;
    if cfg.accelerations.len() != 1 || cfg.seeds.len() != 1 || cfg.algorithms.len() != 1 {
        return Err(CliError::Usage(
            "reconstruct takes one algorithm, acceleration and seed; use benchmark for sweeps"
                .into(),
        ));
    }
    let (algorithm, seed) = (cfg.algorithms[0], cfg.seeds[0]);
    check_lambda_source(&cfg, algorithm)?;

    create_dir(&cfg.output)?;
    let (problem, sigma, accel) = match load_measured(&args.measured)? {
        Some((problem, sigma)) => (problem, sigma, None),
        None => {
            let truth = cfg.ground_truth()?;
            let accel = cfg.accelerations[0];
            let (problem, sigma) = cfg.simulate(&truth, accel, seed)?;
            let out = |name: &str| -> CliResult<BufWriter<File>> {
                Ok(BufWriter::new(File::create(cfg.output.join(name))?))
            };
            problem.y().write_binary(out("kspace.bin")?)?;
            problem.mask().write_binary(out("mask.bin")?)?;
            problem.prob().write_binary(out("prob.bin")?)?;
            (problem, sigma, Some(accel))
        }
    };
    if algorithm.needs_lambda() && cfg.lambda.is_none() && problem.ground_truth().is_none() {
        return Err(CliError::Usage(
            "--tune-lambda needs a ground truth; pass --lambda".into(),
        ));
    }

    let start = Instant::now();
    let (result, lambda) = solve(
        &cfg,
        &problem,
        cfg.solver_config(algorithm, sigma, seed, None),
        None,
    )?;
    let wall = start.elapsed().as_secs_f64();
    info!("{algorithm}: {} iterations in {wall:.2} s", cfg.iterations);

    let summary = RunSummary {
        algorithm,
        acceleration: accel,
        seed,
        iterations: cfg.iterations,
        lambda,
        sigma_eps: sigma,
        observed: problem.mask().n_observed(),
        final_nmse_db: result.nmse_db,
        converged_iteration: result.converged_iteration,
        wall_time_s: wall,
    };
    write_run(&cfg.output, &result, &summary, cfg.timing)?;
    let resolved = crate::config::ExperimentConfig {
        lambda: lambda.or(cfg.lambda),
        ..cfg.clone()
    };
    resolved.write_resolved(&cfg.output)?;
    if let Some(db) = result.nmse_db {
        println!("{algorithm}: final NMSE {db:.2} dB");
    }
    Ok(())
}
