use std::fs::File;
use std::io::BufWriter;

use log::warn;
use vdamp::diagnostics::{
    default_qq_subbands, median_ratio, tau_tracking_report, write_qq_csv, write_tau_tracking_csv,
    StateEvolutionRecorder,
};
use vdamp::solvers::{vdamp_observed, write_trace_csv_with};
use vdamp::transforms::{dwt_forward, SubbandKind};

use super::{create_dir, load_measured, write_json};
use crate::args::DiagnoseArgs;
use crate::error::{CliError, CliResult};

pub fn run(args: &DiagnoseArgs) -> CliResult<()> {
    let cfg = args.resolve()?;
    if cfg.accelerations.len() != 1 || cfg.seeds.len() != 1 || cfg.algorithms.len() != 1 {
        return Err(CliError::Usage(
            "diagnose takes one algorithm, acceleration and seed".into(),
        ));
    }
    let (algorithm, seed) = (cfg.algorithms[0], cfg.seeds[0]);
    if !algorithm.is_vdamp() {
        return Err(CliError::Usage(format!(
            "diagnose runs vdamp_alpha or vdamp_s, not {algorithm}"
        )));
    }
    if load_measured(&args.measured)?.is_some() {
        return Err(CliError::Usage(
            "diagnose needs a ground truth; measured k-space has none".into(),
        ));
    }
    let subbands: Vec<SubbandKind> = match &cfg.qq_subbands {
        Some(list) => list
            .iter()
            .map(|s| {
                s.parse()
                    .map_err(|e: vdamp::Error| CliError::Usage(e.to_string()))
            })
            .collect::<CliResult<_>>()?,
        None => default_qq_subbands(cfg.scales),
    };
    if let Some(&k) = cfg.qq_iterations.iter().find(|&&k| k >= cfg.iterations) {
        warn!(
            "QQ iteration {k} is beyond the last iteration {}",
            cfg.iterations - 1
        );
    }

    let truth = cfg.ground_truth()?;
    let (problem, sigma) = cfg.simulate(&truth, cfg.accelerations[0], seed)?;
    let w0 = dwt_forward(&truth, cfg.scales)?;
    let mut recorder =
        StateEvolutionRecorder::new(w0.clone(), &subbands, &cfg.qq_iterations, cfg.qq_points)?;
    let solver = cfg.solver_config(algorithm, sigma, seed, None);
    let result = vdamp_observed(&problem, &solver, |view| recorder.observe(view))
        .map_err(CliError::solver)?;
    let report = recorder
        .finish(result.converged_iteration, result.nmse_db)
        .map_err(CliError::solver)?;

    let out = &cfg.output;
    create_dir(&out.join("qq"))?;
    let create = |name: &str| -> CliResult<BufWriter<File>> {
        Ok(BufWriter::new(File::create(out.join(name))?))
    };
    report.write_csv(create("report.csv")?)?;
    report.write_summary_json(create("summary.json")?)?;
    for series in &report.qq {
        let name = format!("qq/qq_{}_k{}.csv", series.subband, series.iteration);
        write_qq_csv(series, create(&name)?)?;
    }
    let tracking = tau_tracking_report(&result.trace, &w0)?;
    write_tau_tracking_csv(&tracking, create("tau_tracking.csv")?)?;
    write_trace_csv_with(&result.trace, create("trace.csv")?, cfg.timing)?;
    cfg.write_resolved(out)?;

    let summary = report.summary();
    let k0 = median_ratio(tracking.iter().filter(|r| r.iteration == 0));
    write_json(
        &out.join("tau_tracking_summary.json"),
        &serde_json::json!({ "median_ratio_k0": k0 }),
    )?;
    println!(
        "{algorithm}: final NMSE {:.2} dB, final mean kurtosis {:.3} (re) {:.3} (im), {} QQ series",
        summary.final_nmse_db.unwrap_or(f64::NAN),
        summary.mean_kurt_real,
        summary.mean_kurt_imag,
        report.qq.len()
    );
    Ok(())
}
