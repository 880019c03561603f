use alloc::string::String;

/// Errors raised by the algorithmic core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("bid {bid} exceeds ask {ask}")]
    BidAboveAsk { bid: f64, ask: f64 },
    #[error("non-positive or non-finite price {0}")]
    InvalidPrice(f64),
    #[error("timestamp {current} precedes previous timestamp {previous}")]
    DecreasingTimestamp { previous: i64, current: i64 },
    #[error("price series is empty")]
    EmptySeries,
    #[error("invalid threshold ladder: {0}")]
    InvalidLadder(&'static str),
    #[error("state code {code} out of range for a {n}-threshold network")]
    StateOutOfRange { code: u64, n: usize },
    #[error("directional changes at threshold {threshold} do not alternate")]
    NonAlternating { threshold: usize },
    #[error("transition {from} -> {to} violates the intrinsic network rule")]
    IllegalTransition { from: u32, to: u32 },
    #[error("invalid transition matrix: {0}")]
    InvalidMatrix(String),
    #[error("transition matrix is reducible")]
    Reducible,
    #[error("transition {from} -> {to} has zero probability")]
    ZeroProbability { from: u32, to: u32 },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("resolution guard violated: sigma*sqrt(dt) = {step} exceeds {limit}")]
    ResolutionGuard { step: f64, limit: f64 },
    #[error("second-order informativeness is zero but the windowed surprise is not K*H1")]
    DegenerateLadder,
    #[error("insufficient transitions: state {state} observed {observed} times, need {required}")]
    InsufficientTransitions {
        state: u32,
        observed: u64,
        required: u64,
    },
    #[error("objective cannot be evaluated: {0}")]
    Objective(String),
}

pub type Result<T> = core::result::Result<T, Error>;
