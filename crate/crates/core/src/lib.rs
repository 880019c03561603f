//! Directional-change intrinsic networks.
//!
//! Prices are dissected into directional changes and overshoots at a
//! ladder of relative thresholds. The joint state of all thresholds is a
//! binary vector that moves on the intrinsic network, a Markov model whose
//! transition probabilities follow from the exponential overshoot law of
//! Brownian motion. The surprise of observed transitions under that model,
//! standardised over a sliding window, gives the liquidity indicator.
//!
//! The crate is `no_std` (it needs `alloc`). File formats and the command
//! line live in the `dcnet` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dc;
pub mod error;
pub mod info;
pub mod ladder;
pub mod markov;
pub mod network;
pub mod scales;
pub mod sim;
pub mod stats;
pub mod tick;

pub use dc::{
    dissect, merge_streams, runner_step, DcKind, Dissector, IntrinsicEvent, Mode, RunnerState,
};
pub use error::{Error, Result};
pub use info::{
    h1, h2_estimate, liquidity_stream, stationary_distribution, surprise, H2Options, InfoSummary,
    LiquidityConfig, LiquiditySample,
};
pub use ladder::ThresholdLadder;
pub use markov::{
    analytic_matrix, contract, drifted_escape_probability, two_threshold_matrix, TransitionMatrix,
};
pub use network::{
    decode, encode, replay, successors, MarketState, Replayer, TransitionRecord, Warmup,
};
pub use tick::{midprice, PriceSeries, Tick, Timestamp};
