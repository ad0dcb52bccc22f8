use thiserror::Error;

/// Errors raised by the estimation and inference routines.
///
/// The variant name is the stable identifier printed by the command-line
/// front end, so variants are never renamed.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("DuplicateEdge: pair {{{0},{1}}} appears more than once")]
    DuplicateEdge(usize, usize),
    #[error("VertexOutOfRange: vertex {vertex} not in 1..={n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("SelfLoop: vertex {0} paired with itself")]
    SelfLoop(usize),
    #[error("NonFiniteValue: edge {{{0},{1}}} has a non-finite value")]
    NonFiniteValue(usize, usize),
    #[error("SampleTooSmall: need at least {needed} vertices, got {got}")]
    SampleTooSmall { needed: usize, got: usize },
    #[error("NonPositiveBandwidth: bandwidth must be > 0, got {0}")]
    NonPositiveBandwidth(f64),
    #[error("EmptyNetwork: no observed edges")]
    EmptyNetwork,
    #[error("ZeroSpreadSample: edge values have zero standard deviation or interquartile range")]
    ZeroSpreadSample,
    #[error("IncompleteSampleRequiresIncompletePath: observed fraction {0} < 1")]
    IncompleteSampleRequiresIncompletePath(f64),
    #[error("NonPositiveModifiedVariance: modified jackknife variance {0} <= 0")]
    NonPositiveModifiedVariance(f64),
    #[error("NonFiniteInput: pseudo-values must be finite")]
    NonFiniteInput,
    #[error("BracketFailure: statistic did not exceed {critical} on the {side} side")]
    BracketFailure { side: &'static str, critical: f64 },
    #[error("InvalidAlpha: alpha must lie in (0,1), got {0}")]
    InvalidAlpha(f64),
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// Stable variant name, used in CLI messages and Monte Carlo tallies.
    pub fn name(&self) -> &'static str {
        match self {
            Error::DuplicateEdge(..) => "DuplicateEdge",
            Error::VertexOutOfRange { .. } => "VertexOutOfRange",
            Error::SelfLoop(_) => "SelfLoop",
            Error::NonFiniteValue(..) => "NonFiniteValue",
            Error::SampleTooSmall { .. } => "SampleTooSmall",
            Error::NonPositiveBandwidth(_) => "NonPositiveBandwidth",
            Error::EmptyNetwork => "EmptyNetwork",
            Error::ZeroSpreadSample => "ZeroSpreadSample",
            Error::IncompleteSampleRequiresIncompletePath(_) => {
                "IncompleteSampleRequiresIncompletePath"
            }
            Error::NonPositiveModifiedVariance(_) => "NonPositiveModifiedVariance",
            Error::NonFiniteInput => "NonFiniteInput",
            Error::BracketFailure { .. } => "BracketFailure",
            Error::InvalidAlpha(_) => "InvalidAlpha",
            Error::InvalidConfig(_) => "InvalidConfig",
        }
    }

    /// True for errors caused by malformed input rather than by the data
    /// failing a method's requirements.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::DuplicateEdge(..)
                | Error::VertexOutOfRange { .. }
                | Error::SelfLoop(_)
                | Error::NonFiniteValue(..)
                | Error::InvalidAlpha(_)
                | Error::InvalidConfig(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
