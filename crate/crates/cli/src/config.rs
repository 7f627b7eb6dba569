//! Experiment configuration: JSON file, command-line overrides, and the
//! problem instances built from it.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vdamp::phantom::{shepp_logan, shepp_logan_modified};
use vdamp::sampling::{
    make_density, snr_to_sigma, ProbabilityMap, DEFAULT_CENTER_FRACTION, DEFAULT_DECAY,
    DEFAULT_P_MIN,
};
use vdamp::solvers::{Algorithm, Problem, SolverConfig, DEFAULT_K_EVAL};
use vdamp::ComplexImage;

use crate::error::{CliError, CliResult};

/// Offset separating the noise stream from the mask stream of one seed.
pub const NOISE_SEED_OFFSET: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityConfig {
    pub center_fraction: f64,
    pub decay: f64,
    pub p_min: f64,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self {
            center_fraction: DEFAULT_CENTER_FRACTION,
            decay: DEFAULT_DECAY,
            p_min: DEFAULT_P_MIN,
        }
    }
}

impl DensityConfig {
    pub fn build(&self, shape: (usize, usize), accel: f64) -> vdamp::Result<ProbabilityMap> {
        make_density(
            shape,
            1.0 / accel,
            self.center_fraction,
            self.decay,
            self.p_min,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Grayscale raster; the Shepp-Logan phantom when absent.
    pub image: Option<PathBuf>,
    pub modified_phantom: bool,
    /// Phantom size `[height, width]`; ignored for file images.
    pub shape: (usize, usize),
    pub accelerations: Vec<f64>,
    pub snr_db: f64,
    pub scales: usize,
    pub algorithms: Vec<Algorithm>,
    pub iterations: usize,
    pub seeds: Vec<u64>,
    pub lambda: Option<f64>,
    pub tune_lambda: bool,
    pub k_eval: usize,
    pub oracle_tau: bool,
    pub density: DensityConfig,
    pub output: PathBuf,
    /// Write per-iteration wall times into trace files.
    pub timing: bool,
    pub qq_subbands: Option<Vec<String>>,
    pub qq_iterations: Vec<usize>,
    pub qq_points: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            image: None,
            modified_phantom: false,
            shape: (256, 256),
            accelerations: vec![8.0],
            snr_db: 40.0,
            scales: 4,
            algorithms: vec![Algorithm::VdampS],
            iterations: 100,
            seeds: vec![0],
            lambda: None,
            tune_lambda: false,
            k_eval: DEFAULT_K_EVAL,
            oracle_tau: true,
            density: DensityConfig::default(),
            output: PathBuf::from("vdamp_out"),
            timing: false,
            qq_subbands: None,
            qq_iterations: vdamp::diagnostics::DEFAULT_QQ_ITERATIONS.to_vec(),
            qq_points: vdamp::diagnostics::DEFAULT_QQ_POINTS,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let file =
            File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_reader(BufReader::new(file))
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.accelerations.is_empty() || self.seeds.is_empty() || self.algorithms.is_empty() {
            return bad("accelerations, seeds and algorithms must be non-empty".into());
        }
        if let Some(a) = self
            .accelerations
            .iter()
            .find(|a| !(**a >= 1.0 && a.is_finite()))
        {
            return bad(format!("acceleration {a} must be at least 1"));
        }
        if self.iterations == 0 || self.k_eval == 0 {
            return bad("iterations and k_eval must be at least 1".into());
        }
        if self.scales == 0 {
            return bad("scales must be at least 1".into());
        }
        if !self.snr_db.is_finite() {
            return bad(format!("snr_db {} must be finite", self.snr_db));
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return bad(format!("lambda {l} must be positive"));
            }
        }
        if self.shape.0 == 0 || self.shape.1 == 0 {
            return bad("shape must be non-empty".into());
        }
        Ok(())
    }

    /// Ground-truth image: the file if given, else the phantom.
    pub fn ground_truth(&self) -> CliResult<ComplexImage> {
        let img = match &self.image {
            Some(path) => vdamp::io::load_grayscale(path)?,
            None if self.modified_phantom => shepp_logan_modified(self.shape.0, self.shape.1)?,
            None => shepp_logan(self.shape.0, self.shape.1)?,
        };
        Ok(img)
    }

    /// Simulated measurement of `truth` at one acceleration and seed.
    /// Returns the problem and the noise level used.
    pub fn simulate(
        &self,
        truth: &ComplexImage,
        accel: f64,
        seed: u64,
    ) -> CliResult<(Problem, f64)> {
        let prob = self.density.build(truth.shape(), accel)?;
        let sigma = snr_to_sigma(truth, self.snr_db)?;
        let problem = Problem::simulate(
            truth,
            &prob,
            sigma,
            seed,
            seed.wrapping_add(NOISE_SEED_OFFSET),
        )?;
        Ok((problem, sigma))
    }

    pub fn solver_config(
        &self,
        algorithm: Algorithm,
        sigma_eps: f64,
        seed: u64,
        lambda: Option<f64>,
    ) -> SolverConfig {
        SolverConfig {
            algorithm,
            iterations: self.iterations,
            scales: self.scales,
            lambda,
            sigma_eps,
            seed,
            oracle_tau: self.oracle_tau,
            record_trace: true,
        }
    }

    pub fn write_resolved(&self, dir: &Path) -> CliResult<()> {
        let file = File::create(dir.join("config.json"))?;
        serde_json::to_writer_pretty(file, self)?;
        Ok(())
    }
}

/// `256x256`, `256×256` or `256` (square).
pub fn parse_shape(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(['x', 'X', '×']).collect();
    let num = |p: &str| {
        p.trim()
            .parse::<usize>()
            .map_err(|_| format!("invalid shape {s:?}"))
    };
    let shape = match parts.as_slice() {
        [n] => (num(n)?, num(n)?),
        [h, w] => (num(h)?, num(w)?),
        _ => return Err(format!("invalid shape {s:?}, expected HxW")),
    };
    if shape.0 == 0 || shape.1 == 0 {
        return Err(format!("shape {s:?} is empty"));
    }
    Ok(shape)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        assert_eq!(parse_shape("256x128"), Ok((256, 128)));
        assert_eq!(parse_shape("64"), Ok((64, 64)));
        assert_eq!(parse_shape("32×16"), Ok((32, 16)));
        assert!(parse_shape("0x4").is_err());
        assert!(parse_shape("4x4x4").is_err());
        assert!(parse_shape("ax4").is_err());
    }

    #[test]
    fn json_defaults_and_unknown_fields() {
        let c: ExperimentConfig =
            serde_json::from_str(r#"{"iterations": 7, "density": {"decay": 2.0}}"#).unwrap();
        assert_eq!(c.iterations, 7);
        assert_eq!(c.density.decay, 2.0);
        assert_eq!(c.density.p_min, DEFAULT_P_MIN);
        assert_eq!(c.accelerations, vec![8.0]);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"accel": 4}"#).is_err());
        let round: ExperimentConfig =
            serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(round, c);
    }

    #[test]
    fn validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        let mut c = ExperimentConfig {
            accelerations: vec![0.5],
            ..ExperimentConfig::default()
        };
        assert!(c.validate().is_err());
        c.accelerations = vec![4.0];
        c.iterations = 0;
        assert!(c.validate().is_err());
        c.iterations = 1;
        c.lambda = Some(0.0);
        assert!(c.validate().is_err());
    }
}
