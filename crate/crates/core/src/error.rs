use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dilated arc would cover the circle (gamma * length = {0})")]
    DilationOverflow(f64),
    #[error("dilation factor must exceed 1, got {0}")]
    InvalidGamma(f64),
    #[error("point lies outside the open unit disc (|z| = {0})")]
    OutsideDisc(f64),
    #[error("requested tolerance unreachable: achieved error {achieved:e} on value {value:e}")]
    PrecisionLoss { value: f64, achieved: f64 },
    #[error("mass {mass} exceeds total mass {total} (tail {tail})")]
    MassExceedsTotal { mass: f64, total: f64, tail: f64 },
    #[error("point capacity is zero or undetermined at theta = {0}; the bound needs a positive capacity")]
    HypothesisViolated(f64),
    #[error("dilated arcs are not pairwise disjoint: {0}")]
    FamilyInvalid(String),
    #[error("energy plus L2 term vanishes; the ratio is undefined")]
    DegenerateDenominator,
    #[error("invalid Cantor lengths: {0}")]
    InvalidLengths(String),
    #[error("epsilon = {0} is too large: arcs or atom clusters overlap")]
    EpsilonTooLarge(f64),
    #[error("capacity-zero series converges; the construction needs a divergent series")]
    PreconditionSeriesConverges,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
