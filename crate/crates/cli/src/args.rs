use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use vdamp::solvers::Algorithm;

use crate::config::{parse_shape, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(
    name = "vdamp",
    version,
    about = "Variable density AMP and FISTA reconstructions of Fourier-sampled images"
)]
pub struct Cli {
    /// Log level (error, warn, info, debug, trace); RUST_LOG takes precedence.
    #[arg(long, global = true, default_value = "warn")]
    pub log: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a sampling density and draw a mask.
    Mask(MaskArgs),
    /// Render the Shepp-Logan phantom to a PGM file.
    Phantom(PhantomArgs),
    /// Run one algorithm on one problem instance.
    Reconstruct(ReconstructArgs),
    /// Sweep algorithms × accelerations × seeds.
    Benchmark(ExperimentArgs),
    /// Record state-evolution statistics of a VDAMP run.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    #[command(flatten)]
    pub density: DensityArgs,
    /// Image size, e.g. 256x256.
    #[arg(long, value_parser = parse_shape)]
    pub shape: Option<(usize, usize)>,
    /// Acceleration N/n.
    #[arg(long)]
    pub accel: Option<f64>,
    /// Mask seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON experiment config; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    #[arg(long, value_parser = parse_shape, default_value = "256x256")]
    pub shape: (usize, usize),
    /// High-contrast intensity table.
    #[arg(long)]
    pub modified: bool,
    /// Output PGM path.
    #[arg(short, long, default_value = "phantom.pgm")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    /// Minimum sampling probability.
    #[arg(long)]
    pub pmin: Option<f64>,
    /// Polynomial decay exponent.
    #[arg(long)]
    pub decay: Option<f64>,
    /// Radius of the fully sampled center, as a fraction of the width.
    #[arg(long)]
    pub center_frac: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// JSON experiment config; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Grayscale PGM/PNG ground truth instead of the phantom.
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Use the high-contrast phantom.
    #[arg(long)]
    pub modified: bool,
    /// Phantom size.
    #[arg(long, value_parser = parse_shape)]
    pub shape: Option<(usize, usize)>,
    /// Acceleration N/n (comma-separated for sweeps).
    #[arg(long, value_delimiter = ',')]
    pub accel: Vec<f64>,
    /// Measurement SNR in dB.
    #[arg(long)]
    pub snr_db: Option<f64>,
    /// Haar decomposition scales.
    #[arg(long)]
    pub scales: Option<usize>,
    /// vdamp_alpha, vdamp_s, fista, sfista or sure_it (comma-separated for sweeps).
    #[arg(long, value_delimiter = ',')]
    pub algorithm: Vec<Algorithm>,
    /// Iteration count K.
    #[arg(short = 'k', long)]
    pub iterations: Option<usize>,
    /// Seed (comma-separated for sweeps); the noise uses a derived stream.
    #[arg(long, value_delimiter = ',')]
    pub seed: Vec<u64>,
    /// Sparsity weight for fista and sfista.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Grid-search λ against the ground truth.
    #[arg(long)]
    pub tune_lambda: bool,
    /// Iteration at which tuned λ values are scored.
    #[arg(long)]
    pub k_eval: Option<usize>,
    /// FISTA family: estimate τ from the data instead of the ground truth.
    #[arg(long)]
    pub data_tau: bool,
    #[command(flatten)]
    pub density: DensityArgs,
    /// Record wall times in trace files (makes them non-reproducible).
    #[arg(long)]
    pub timing: bool,
    /// Output directory.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// Measured k-space input instead of a simulated one; no ground truth.
#[derive(Debug, Args)]
pub struct MeasuredArgs {
    /// Complex k-space data in the binary matrix format.
    #[arg(long, requires_all = ["mask", "prob"])]
    pub kspace: Option<PathBuf>,
    /// Sampling mask in the binary format.
    #[arg(long, requires = "kspace")]
    pub mask: Option<PathBuf>,
    /// Probability map in the binary format.
    #[arg(long, requires = "kspace")]
    pub prob: Option<PathBuf>,
    /// Noise standard deviation of measured data.
    #[arg(long, requires = "kspace")]
    pub sigma_eps: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    #[command(flatten)]
    pub measured: MeasuredArgs,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    #[command(flatten)]
    pub measured: MeasuredArgs,
    /// Subbands for QQ output, e.g. D1,H2,V4.
    #[arg(long, value_delimiter = ',')]
    pub subbands: Vec<String>,
    /// Iterations for QQ output.
    #[arg(long, value_delimiter = ',')]
    pub qq_iterations: Vec<usize>,
    /// Quantiles per QQ series.
    #[arg(long)]
    pub qq_points: Option<usize>,
}

impl DensityArgs {
    fn apply(&self, c: &mut ExperimentConfig) {
        if let Some(v) = self.pmin {
            c.density.p_min = v;
        }
        if let Some(v) = self.decay {
            c.density.decay = v;
        }
        if let Some(v) = self.center_frac {
            c.density.center_fraction = v;
        }
    }
}

fn base(config: &Option<PathBuf>) -> crate::error::CliResult<ExperimentConfig> {
    match config {
        Some(path) => ExperimentConfig::load(path),
        None => Ok(ExperimentConfig::default()),
    }
}

impl ExperimentArgs {
    /// Config file (or defaults) with every given flag applied on top.
    pub fn resolve(&self) -> crate::error::CliResult<ExperimentConfig> {
        let mut c = base(&self.config)?;
        if self.image.is_some() {
            c.image = self.image.clone();
        }
        c.modified_phantom |= self.modified;
        if let Some(s) = self.shape {
            c.shape = s;
        }
        if !self.accel.is_empty() {
            c.accelerations = self.accel.clone();
        }
        if let Some(v) = self.snr_db {
            c.snr_db = v;
        }
        if let Some(v) = self.scales {
            c.scales = v;
        }
        if !self.algorithm.is_empty() {
            c.algorithms = self.algorithm.clone();
        }
        if let Some(v) = self.iterations {
            c.iterations = v;
        }
        if !self.seed.is_empty() {
            c.seeds = self.seed.clone();
        }
        if self.lambda.is_some() {
            c.lambda = self.lambda;
        }
        c.tune_lambda |= self.tune_lambda;
        if let Some(v) = self.k_eval {
            c.k_eval = v;
        }
        if self.data_tau {
            c.oracle_tau = false;
        }
        self.density.apply(&mut c);
        c.timing |= self.timing;
        if let Some(o) = &self.output {
            c.output = o.clone();
        }
        c.validate()?;
        Ok(c)
    }
}

impl MaskArgs {
    pub fn resolve(&self) -> crate::error::CliResult<ExperimentConfig> {
        let mut c = base(&self.config)?;
        if let Some(s) = self.shape {
            c.shape = s;
        }
        if let Some(a) = self.accel {
            c.accelerations = vec![a];
        }
        if let Some(s) = self.seed {
            c.seeds = vec![s];
        }
        self.density.apply(&mut c);
        if let Some(o) = &self.output {
            c.output = o.clone();
        }
        c.validate()?;
        Ok(c)
    }
}

impl DiagnoseArgs {
    pub fn resolve(&self) -> crate::error::CliResult<ExperimentConfig> {
        let mut c = self.experiment.resolve()?;
        if !self.subbands.is_empty() {
            c.qq_subbands = Some(self.subbands.clone());
        }
        if !self.qq_iterations.is_empty() {
            c.qq_iterations = self.qq_iterations.clone();
        }
        if let Some(p) = self.qq_points {
            c.qq_points = p;
        }
        Ok(c)
    }
}
