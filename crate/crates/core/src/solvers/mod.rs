//! Reconstruction algorithms: VDAMP (with the α or SURE gain update) and the
//! FISTA family (plain FISTA, subband-weighted S-FISTA, SURE-IT).

mod fista;
mod ops;
mod trace;
mod tuning;
mod vdamp;
mod weights;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{draw_mask, measure, ProbabilityMap, SamplingSet};
use crate::transforms::{ComplexImage, SubbandLayout, SubbandVector, WaveletCoeffs};

pub use fista::fista_family;
pub use trace::{
    convergence_iteration, write_trace_csv, write_trace_csv_with, TraceRecord,
    CONVERGENCE_TOLERANCE_DB,
};
pub use tuning::{default_lambda_grid, lambda_grid, tune_lambda, LambdaTuning, DEFAULT_K_EVAL};
pub use vdamp::{vdamp, vdamp_observed, IterationView, TAU_FLOOR_FACTOR};
pub use weights::{
    power_iteration, sfista_weights, SfistaWeights, DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL,
    SFISTA_MARGIN,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    VdampAlpha,
    VdampS,
    Fista,
    Sfista,
    SureIt,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::VdampAlpha,
        Algorithm::VdampS,
        Algorithm::Fista,
        Algorithm::Sfista,
        Algorithm::SureIt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::VdampAlpha => "vdamp_alpha",
            Algorithm::VdampS => "vdamp_s",
            Algorithm::Fista => "fista",
            Algorithm::Sfista => "sfista",
            Algorithm::SureIt => "sure_it",
        }
    }

    pub fn is_vdamp(self) -> bool {
        matches!(self, Algorithm::VdampAlpha | Algorithm::VdampS)
    }

    pub fn needs_lambda(self) -> bool {
        matches!(self, Algorithm::Fista | Algorithm::Sfista)
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub iterations: usize,
    pub scales: usize,
    /// Sparsity weight; FISTA and S-FISTA only.
    pub lambda: Option<f64>,
    pub sigma_eps: f64,
    pub seed: u64,
    /// FISTA family: take τ_k from the ground truth instead of the data.
    pub oracle_tau: bool,
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::VdampS,
            iterations: 50,
            scales: 4,
            lambda: None,
            sigma_eps: 0.0,
            seed: 0,
            oracle_tau: true,
            record_trace: true,
        }
    }
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidArgument(
                "iterations must be at least 1".into(),
            ));
        }
        if self.scales == 0 {
            return Err(Error::InvalidArgument("scales must be at least 1".into()));
        }
        if !(self.sigma_eps >= 0.0 && self.sigma_eps.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sigma_eps {} must be finite and non-negative",
                self.sigma_eps
            )));
        }
        if self.algorithm.needs_lambda() {
            match self.lambda {
                None => return Err(Error::MissingLambda(self.algorithm.name())),
                Some(l) if !(l > 0.0 && l.is_finite()) => {
                    return Err(Error::InvalidArgument(format!(
                        "lambda {l} must be positive"
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Measured data plus everything the solvers need to interpret it.
#[derive(Debug, Clone)]
pub struct Problem {
    y: ComplexImage,
    mask: SamplingSet,
    prob: ProbabilityMap,
    ground_truth: Option<ComplexImage>,
}

impl Problem {
    /// Entries of `y` outside the mask are zeroed.
    pub fn new(mut y: ComplexImage, mask: SamplingSet, prob: ProbabilityMap) -> Result<Self> {
        y.ensure_shape(mask.shape())?;
        y.ensure_shape(prob.shape())?;
        if prob.values().iter().any(|&p| p <= 0.0) {
            return Err(Error::InvalidArgument(
                "sampling probabilities must be positive".into(),
            ));
        }
        mask.apply(y.data_mut());
        Ok(Self {
            y,
            mask,
            prob,
            ground_truth: None,
        })
    }

    pub fn with_ground_truth(mut self, x0: ComplexImage) -> Result<Self> {
        x0.ensure_shape(self.y.shape())?;
        self.ground_truth = Some(x0);
        Ok(self)
    }

    /// Draws a mask from `prob`, measures `x0` with noise level `sigma_eps`,
    /// and keeps `x0` as ground truth. Mask and noise use separate seeds.
    pub fn simulate(
        x0: &ComplexImage,
        prob: &ProbabilityMap,
        sigma_eps: f64,
        mask_seed: u64,
        noise_seed: u64,
    ) -> Result<Self> {
        let mask = draw_mask(prob, mask_seed);
        let y = measure(x0, &mask, sigma_eps, noise_seed)?;
        Self::new(y, mask, prob.clone())?.with_ground_truth(x0.clone())
    }

    pub fn y(&self) -> &ComplexImage {
        &self.y
    }

    pub fn mask(&self) -> &SamplingSet {
        &self.mask
    }

    pub fn prob(&self) -> &ProbabilityMap {
        &self.prob
    }

    pub fn ground_truth(&self) -> Option<&ComplexImage> {
        self.ground_truth.as_ref()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.y.shape()
    }

    /// Importance-sampled estimate of the mean signal power `‖F x₀‖²/N`.
    pub fn signal_power(&self) -> f64 {
        let total: f64 = self
            .y
            .data()
            .iter()
            .zip(self.mask.mask())
            .zip(self.prob.values())
            .filter(|((_, &m), _)| m)
            .map(|((v, _), p)| v.norm_sqr() / p)
            .sum();
        total / self.y.len() as f64
    }
}

#[derive(Debug, Clone)]
pub struct ReconResult {
    pub x_hat: ComplexImage,
    pub w_hat: WaveletCoeffs,
    pub trace: Vec<TraceRecord>,
    /// First iteration within [`CONVERGENCE_TOLERANCE_DB`] of the final NMSE
    /// for good; only available with ground truth and a recorded trace.
    pub converged_iteration: Option<usize>,
    /// Final NMSE in dB, when ground truth is available.
    pub nmse_db: Option<f64>,
}

impl ReconResult {
    pub fn nmse_trace_db(&self) -> Vec<f64> {
        self.trace.iter().map(|t| t.nmse_db).collect()
    }
}

/// Runs `config.algorithm`, computing S-FISTA weights when needed.
pub fn reconstruct(problem: &Problem, config: &SolverConfig) -> Result<ReconResult> {
    config.validate()?;
    match config.algorithm {
        Algorithm::VdampAlpha | Algorithm::VdampS => vdamp(problem, config),
        Algorithm::Fista | Algorithm::SureIt => {
            let (h, w) = problem.shape();
            let ones = SubbandVector::constant(&SubbandLayout::new(h, w, config.scales)?, 1.0);
            fista_family(problem, config, &ones)
        }
        Algorithm::Sfista => {
            let w = sfista_weights(
                problem.mask(),
                problem.shape(),
                config.scales,
                DEFAULT_POWER_ITERS,
                DEFAULT_POWER_TOL,
            )?;
            fista_family(problem, config, &w.weights)
        }
    }
}

pub(crate) fn finish(
    x_hat: ComplexImage,
    w_hat: WaveletCoeffs,
    trace: Vec<TraceRecord>,
    ground_truth: Option<&ComplexImage>,
) -> ReconResult {
    let nmse_db = ground_truth.map(|x0| x_hat.nmse_db(x0));
    let converged_iteration = match (nmse_db, trace.is_empty()) {
        (Some(final_db), false) => {
            let series: Vec<f64> = trace.iter().map(|t| t.nmse_db).collect();
            Some(convergence_iteration(&series, final_db))
        }
        _ => None,
    };
    ReconResult {
        x_hat,
        w_hat,
        trace,
        converged_iteration,
        nmse_db,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let mut c = SolverConfig::new(Algorithm::Fista);
        assert!(matches!(c.validate(), Err(Error::MissingLambda(_))));
        c.lambda = Some(-1.0);
        assert!(c.validate().is_err());
        c.lambda = Some(1.0);
        assert!(c.validate().is_ok());
        c.iterations = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let c = SolverConfig {
            algorithm: Algorithm::Sfista,
            lambda: Some(3.5),
            ..SolverConfig::default()
        };
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"sfista\""));
        assert_eq!(serde_json::from_str::<SolverConfig>(&s).unwrap(), c);
        let partial: SolverConfig = serde_json::from_str(r#"{"algorithm":"sure_it"}"#).unwrap();
        assert_eq!(partial.iterations, 50);
        assert!(serde_json::from_str::<SolverConfig>(r#"{"bogus":1}"#).is_err());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("vdamp".parse::<Algorithm>().is_err());
    }
}
