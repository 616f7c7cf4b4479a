use std::fmt;

use thiserror::Error;

/// Machine-readable code for a violated model invariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationCode {
    NonFiniteParameter,
    NonPositiveCurvature,
    TabulatedLengthMismatch,
    TabulatedNotStrictlyQuasiconcave,
    NegativeCostSlope,
    PowerExponentBelowOne,
    EmptyBelief,
    AtomProbabilityOutOfRange,
    NegativeAtomValue,
    DuplicateAtomValue,
    ProbabilityMassNotOne,
    NegativeWeight,
    MissingBeliefs,
    BeliefCountMismatch,
    TooFewAgents,
    AggregatorWeightsInvalid,
    AggregatorLengthMismatch,
    NonPositiveBound,
    ZeroGridSteps,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::NonFiniteParameter => "NonFiniteParameter",
            ViolationCode::NonPositiveCurvature => "NonPositiveCurvature",
            ViolationCode::TabulatedLengthMismatch => "TabulatedLengthMismatch",
            ViolationCode::TabulatedNotStrictlyQuasiconcave => "TabulatedNotStrictlyQuasiconcave",
            ViolationCode::NegativeCostSlope => "NegativeCostSlope",
            ViolationCode::PowerExponentBelowOne => "PowerExponentBelowOne",
            ViolationCode::EmptyBelief => "EmptyBelief",
            ViolationCode::AtomProbabilityOutOfRange => "AtomProbabilityOutOfRange",
            ViolationCode::NegativeAtomValue => "NegativeAtomValue",
            ViolationCode::DuplicateAtomValue => "DuplicateAtomValue",
            ViolationCode::ProbabilityMassNotOne => "ProbabilityMassNotOne",
            ViolationCode::NegativeWeight => "NegativeWeight",
            ViolationCode::MissingBeliefs => "MissingBeliefs",
            ViolationCode::BeliefCountMismatch => "BeliefCountMismatch",
            ViolationCode::TooFewAgents => "TooFewAgents",
            ViolationCode::AggregatorWeightsInvalid => "AggregatorWeightsInvalid",
            ViolationCode::AggregatorLengthMismatch => "AggregatorLengthMismatch",
            ViolationCode::NonPositiveBound => "NonPositiveBound",
            ViolationCode::ZeroGridSteps => "ZeroGridSteps",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One violated invariant, located by a dotted path into the validated value.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub code: ViolationCode,
    pub path: String,
}

impl Violation {
    pub fn new(code: ViolationCode, path: impl Into<String>) -> Self {
        Violation {
            code,
            path: path.into(),
        }
    }

    pub(crate) fn nested(mut self, prefix: &str) -> Self {
        self.path = if self.path.is_empty() {
            prefix.to_string()
        } else {
            format!("{prefix}.{}", self.path)
        };
        self
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.code)
        } else {
            write!(f, "{} at {}", self.code, self.path)
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {what} = {value} is outside the admissible range")]
    Domain { what: &'static str, value: f64 },
    #[error("lookup error: {x} is not a point of the tabulation grid")]
    OffGrid { x: f64 },
    #[error("invalid model: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("closed-form consideration interval unavailable: first-stage cost must be strictly increasing")]
    PropOneUnavailable,
    #[error("method unsupported: {0}")]
    MethodUnsupported(String),
    #[error("configuration error: {0}")]
    Configuration(String),
}

impl Error {
    /// True for errors caused by a model that fails its own invariants.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Invalid(_)
                | Error::Configuration(_)
                | Error::Domain { .. }
                | Error::OffGrid { .. }
        )
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_nonnegative(what: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { what, value })
    }
}
