use thiserror::Error;

use crate::model::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown tendon `{0}`")]
    UnknownTendon(String),

    #[error("unknown joint `{0}`")]
    UnknownJoint(String),

    #[error("design is invalid: {}", format_violations(.0))]
    InvalidDesign(Vec<Violation>),

    #[error("motor angle {angle} outside motor range [{min}, {max}]")]
    MotorOutOfRange { angle: f64, min: f64, max: f64 },

    #[error("joint `{joint}` angle {angle} outside limits [{min}, {max}]")]
    JointOutOfRange {
        joint: String,
        angle: f64,
        min: f64,
        max: f64,
    },

    #[error("configuration stretches tendon `{tendon}` by {stretch} mm")]
    InextensibilityViolated { tendon: String, stretch: f64 },

    #[error("infeasible constraint set: {0}")]
    Infeasible(String),

    #[error("joint `{0}` has zero spring stiffness; equilibrium is not unique")]
    DegenerateDesign(String),

    #[error("{0}")]
    InvalidInput(String),

    #[error("no feasible sample found on the search grid")]
    NoFeasibleSample,

    #[error("at sample {index}: {source}")]
    AtSample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("budget of {budget} evaluations cannot cover {restarts} restarts of at least {per_restart} evaluations")]
    BudgetTooSmall {
        budget: usize,
        restarts: usize,
        per_restart: usize,
    },

    #[error("no valid candidate found")]
    NoValidCandidate,

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
}

impl Error {
    pub(crate) fn at_sample(index: usize, source: Error) -> Error {
        Error::AtSample {
            index,
            source: Box::new(source),
        }
    }

    /// Innermost error, skipping sample annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtSample { source, .. } => source.root(),
            other => other,
        }
    }
}

fn format_violations(violations: &[Violation]) -> String {
    violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}
