use thiserror::Error;

use crate::conditions::Violation;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("graph needs at least one vertex and one edge")]
    EmptyGraph,
    #[error("edge {edge} has non-positive or non-finite length {length}")]
    NonPositiveLength { edge: usize, length: f64 },
    #[error("edge {edge} references vertex {vertex}, but the graph has {vertex_count} vertices")]
    DanglingEndpoint {
        edge: usize,
        vertex: usize,
        vertex_count: usize,
    },
    #[error("graph is not connected")]
    DisconnectedGraph,
    #[error("scale factor must be positive and finite, got {0}")]
    NonPositiveScale(f64),

    #[error("no delta strength given for vertex {0}")]
    MissingStrength(usize),
    #[error("matrix is {rows}x{cols}, expected {expected}x{expected}")]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("invalid vertex conditions: {}", format_violations(.0))]
    InvalidConditions(Vec<Violation>),

    #[error("no eigenvalue found below cutoff {cutoff}, although the Weyl count predicts some")]
    CutoffTooSmall { cutoff: f64 },
    #[error("found {found} negative eigenvalues but L has only {bound} positive eigenvalues")]
    BoundViolation { found: usize, bound: usize },

    #[error("chemical potential {mu} is not below the ground state energy {ground}")]
    ChemicalPotentialAboveGroundState { mu: f64, ground: f64 },
    #[error("spectral cutoff {cutoff} too small: {reason}")]
    InsufficientCutoff { cutoff: f64, reason: String },
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("overflow in {0}")]
    Overflow(&'static str),
    #[error("quadrature failed to reach tolerance {tolerance:e} (estimated error {estimate:e})")]
    QuadratureFailure { tolerance: f64, estimate: f64 },

    #[error("cutoff {cutoff} needs {grid_points} scan points, more than the limit {limit}")]
    CutoffTooLarge {
        cutoff: f64,
        grid_points: f64,
        limit: usize,
    },
    #[error("need at least {needed} one-particle levels, got {available}")]
    TooFewLevels { needed: usize, available: usize },
    #[error("no temperature on the grid reaches the condensate threshold")]
    NoCondensationDetected,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// Failures of a numerical method, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::CutoffTooSmall { .. }
                | Error::BoundViolation { .. }
                | Error::InsufficientCutoff { .. }
                | Error::NoConvergence(_)
                | Error::Overflow(_)
                | Error::QuadratureFailure { .. }
                | Error::NoCondensationDetected
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyGraph => "EmptyGraph",
            Error::NonPositiveLength { .. } => "NonPositiveLength",
            Error::DanglingEndpoint { .. } => "DanglingEndpoint",
            Error::DisconnectedGraph => "DisconnectedGraph",
            Error::NonPositiveScale(_) => "NonPositiveScale",
            Error::MissingStrength(_) => "MissingStrength",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::InvalidConditions(_) => "InvalidConditions",
            Error::CutoffTooSmall { .. } => "CutoffTooSmall",
            Error::BoundViolation { .. } => "BoundViolation",
            Error::ChemicalPotentialAboveGroundState { .. } => "ChemicalPotentialAboveGroundState",
            Error::InsufficientCutoff { .. } => "InsufficientCutoff",
            Error::NoConvergence(_) => "NoConvergence",
            Error::Overflow(_) => "Overflow",
            Error::QuadratureFailure { .. } => "QuadratureFailure",
            Error::CutoffTooLarge { .. } => "CutoffTooLarge",
            Error::TooFewLevels { .. } => "TooFewLevels",
            Error::NoCondensationDetected => "NoCondensationDetected",
            Error::InvalidParameter(_) => "InvalidParameter",
        }
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
