use thiserror::Error;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("{0}")]
    Config(String),

    #[error("solver failed: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Solver(_) => EXIT_SOLVER,
        }
    }

    /// For errors raised while iterating; a missing λ or ground truth
    /// stays a usage error.
    pub fn solver(e: vdamp::Error) -> Self {
        match e {
            vdamp::Error::MissingLambda(_) | vdamp::Error::MissingGroundTruth(_) => e.into(),
            other => CliError::Solver(other.to_string()),
        }
    }
}

impl From<vdamp::Error> for CliError {
    fn from(e: vdamp::Error) -> Self {
        use vdamp::Error::*;
        match e {
            MissingLambda(_) | MissingGroundTruth(_) => CliError::Usage(e.to_string()),
            NonFinite { .. } | PowerIterationDiverged { .. } => CliError::Solver(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_error_class() {
        let infeasible: CliError = vdamp::Error::InfeasibleDensity("x".into()).into();
        assert_eq!(infeasible.exit_code(), EXIT_CONFIG);
        let missing: CliError = vdamp::Error::MissingLambda("fista").into();
        assert_eq!(missing.exit_code(), EXIT_USAGE);
        let diverged: CliError = vdamp::Error::NonFinite { iteration: 3 }.into();
        assert_eq!(diverged.exit_code(), EXIT_SOLVER);
        assert_eq!(
            CliError::solver(vdamp::Error::InvalidArgument("x".into())).exit_code(),
            EXIT_SOLVER
        );
        assert_eq!(
            CliError::solver(vdamp::Error::MissingGroundTruth("t")).exit_code(),
            EXIT_USAGE
        );
    }
}
