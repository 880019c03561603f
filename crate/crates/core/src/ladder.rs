//! Ordered relative thresholds defining the scales of a network.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Largest supported ladder; state codes are `u32` and the analytic
/// matrix stores `2 * 2^n` entries.
pub const MAX_THRESHOLDS: usize = 20;

/// Smallest threshold of the standard FX ladder (0.025%).
pub const STANDARD_DELTA1: f64 = 0.00025;
/// Number of thresholds in the standard FX ladder.
pub const STANDARD_LEN: usize = 12;

/// Strictly increasing, positive relative thresholds `delta_1 < ... < delta_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdLadder {
    deltas: Vec<f64>,
}

impl ThresholdLadder {
    pub fn new(deltas: Vec<f64>) -> Result<Self> {
        if deltas.is_empty() {
            return Err(Error::InvalidLadder("ladder needs at least one threshold"));
        }
        if deltas.len() > MAX_THRESHOLDS {
            return Err(Error::InvalidLadder("ladder exceeds 20 thresholds"));
        }
        if deltas.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::InvalidLadder(
                "thresholds must be positive and finite",
            ));
        }
        if deltas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidLadder(
                "thresholds must be strictly increasing",
            ));
        }
        Ok(Self { deltas })
    }

    /// `delta_i = delta1 * ratio^(i-1)`.
    pub fn geometric(delta1: f64, ratio: f64, n: usize) -> Result<Self> {
        if !(ratio.is_finite() && ratio > 1.0) {
            return Err(Error::InvalidLadder("geometric ratio must exceed 1"));
        }
        let mut deltas = Vec::with_capacity(n);
        let mut d = delta1;
        for _ in 0..n {
            deltas.push(d);
            d *= ratio;
        }
        Self::new(deltas)
    }

    pub fn doubling(delta1: f64, n: usize) -> Result<Self> {
        Self::geometric(delta1, 2.0, n)
    }

    /// Twelve doubling thresholds starting at 0.025%.
    pub fn standard() -> Self {
        Self::doubling(STANDARD_DELTA1, STANDARD_LEN).expect("standard ladder is valid")
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn delta(&self, index: usize) -> f64 {
        self.deltas[index]
    }

    /// Every threshold multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.deltas.iter().map(|d| d * factor).collect())
    }

    /// The ladder with the smallest threshold removed, if any remain.
    pub fn without_smallest(&self) -> Option<Self> {
        (self.len() > 1).then(|| Self {
            deltas: self.deltas[1..].to_vec(),
        })
    }

    /// Probability that the overshoot at threshold `k - 1` extends far
    /// enough to reach threshold `k`, `exp(-(delta_k - delta_{k-1}) / delta_{k-1})`,
    /// for `k = 1..n` (0-based). Depends only on consecutive ratios.
    pub fn reach_probabilities(&self) -> Vec<f64> {
        self.deltas
            .windows(2)
            .map(|w| libm::exp(-(w[1] / w[0] - 1.0)))
            .collect()
    }
}
