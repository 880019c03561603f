//! Preferred scales: equal-probability ladders and one-parameter searches
//! over geometric ladders.

use alloc::format;

use crate::error::{Error, Result};
use crate::info::{h1, h2_estimate_with, stationary_distribution, H2Options};
use crate::ladder::ThresholdLadder;
use crate::markov::analytic_matrix;

/// `delta_k = delta1 * prod_{i=1}^{k-1} (1 + ln(1 + 1/i))`, the ladder whose
/// analytic matrix gives every branch probability one half.
pub fn equal_probability_ladder(delta1: f64, n: usize) -> Result<ThresholdLadder> {
    let mut deltas = alloc::vec::Vec::with_capacity(n);
    let mut d = delta1;
    for k in 1..=n {
        deltas.push(d);
        d *= 1.0 + libm::log1p(1.0 / k as f64);
    }
    ThresholdLadder::new(deltas)
}

/// `delta_k / (delta1 * k)` of the equal-probability ladder, for any `k >= 1`.
pub fn equal_probability_ratio(k: u64) -> f64 {
    let log_sum: f64 = (1..k)
        .map(|i| libm::log1p(libm::log1p(1.0 / i as f64)))
        .sum();
    libm::exp(log_sum - libm::log(k as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    EqualProbability,
    MaxH1,
    MaxH2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderSearchConfig {
    pub n: usize,
    pub delta1: f64,
    pub objective: Objective,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub tolerance: f64,
    /// Chain settings for the `MaxH2` objective.
    pub h2: H2Options,
}

impl Default for LadderSearchConfig {
    fn default() -> Self {
        Self {
            n: 2,
            delta1: crate::ladder::STANDARD_DELTA1,
            objective: Objective::MaxH1,
            lambda_min: 1.01,
            lambda_max: 4.0,
            tolerance: 1e-6,
            h2: H2Options {
                chain_length: 1_000_000,
                ..H2Options::default()
            },
        }
    }
}

impl LadderSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || !(self.delta1.is_finite() && self.delta1 > 0.0) {
            return Err(Error::InvalidArgument("need n >= 1 and delta1 > 0"));
        }
        if !(self.lambda_min > 1.0
            && self.lambda_max > self.lambda_min
            && self.lambda_max.is_finite())
        {
            return Err(Error::InvalidArgument(
                "lambda bounds must satisfy 1 < min < max",
            ));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidArgument("tolerance must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderSearchResult {
    pub ladder: ThresholdLadder,
    /// Ratio of the first two thresholds (the common ratio for geometric ladders).
    pub lambda: f64,
    pub value: f64,
}

/// H1 or H2 of the analytic chain on `ladder`.
pub fn objective_value(
    ladder: &ThresholdLadder,
    objective: Objective,
    h2: &H2Options,
) -> Result<f64> {
    let w = analytic_matrix(ladder)?;
    let mu = stationary_distribution(&w)?;
    let entropy = h1(&w, &mu);
    let value = match objective {
        Objective::EqualProbability | Objective::MaxH1 => entropy,
        Objective::MaxH2 => h2_estimate_with(&w, &mu, entropy, h2)?,
    };
    if !value.is_finite() {
        return Err(Error::Objective(format!(
            "non-finite objective at {:?}",
            ladder.deltas()
        )));
    }
    Ok(value)
}

/// Maximises `f` on `[a, b]` by golden-section search until the bracket is
/// narrower than `tol`.
pub fn golden_section_max(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let inv_phi = (libm::sqrt(5.0) - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

const SCAN_POINTS: usize = 24;

/// Searches the geometric family `delta_i = lambda * delta_{i-1}`; the
/// equal-probability objective is solved in closed form instead.
///
/// A coarse scan picks the bracket for the golden-section refinement, so a
/// second local maximum elsewhere in the bounds is not missed.
pub fn optimize_ladder(config: &LadderSearchConfig) -> Result<LadderSearchResult> {
    config.validate()?;
    if config.objective == Objective::EqualProbability {
        let ladder = equal_probability_ladder(config.delta1, config.n)?;
        let value = objective_value(&ladder, config.objective, &config.h2)?;
        let lambda = if config.n > 1 {
            ladder.delta(1) / ladder.delta(0)
        } else {
            f64::NAN
        };
        return Ok(LadderSearchResult {
            ladder,
            lambda,
            value,
        });
    }
    if config.n == 1 {
        let ladder = ThresholdLadder::new(alloc::vec![config.delta1])?;
        let value = objective_value(&ladder, config.objective, &config.h2)?;
        return Ok(LadderSearchResult {
            ladder,
            lambda: f64::NAN,
            value,
        });
    }
    let eval = |lambda: f64| {
        let ladder = ThresholdLadder::geometric(config.delta1, lambda, config.n)?;
        objective_value(&ladder, config.objective, &config.h2)
    };
    let (lo, hi) = (config.lambda_min, config.lambda_max);
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let mut best = (0, f64::NEG_INFINITY);
    for i in 0..SCAN_POINTS {
        let v = eval(lo + step * i as f64)?;
        if v > best.1 {
            best = (i, v);
        }
    }
    let a = lo + step * best.0.saturating_sub(1) as f64;
    let b = (lo + step * (best.0 + 1) as f64).min(hi);
    let (lambda, value) = golden_section_max(eval, a, b, config.tolerance)?;
    Ok(LadderSearchResult {
        ladder: ThresholdLadder::geometric(config.delta1, lambda, config.n)?,
        lambda,
        value,
    })
}
