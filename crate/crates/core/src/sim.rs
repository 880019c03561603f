//! Brownian path simulation and the Monte Carlo estimators used to check
//! the closed forms.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dc::{Dissector, Mode, RunnerState};
use crate::error::{Error, Result};
use crate::ladder::ThresholdLadder;
use crate::markov::{EmpiricalCounts, EmpiricalMatrix};
use crate::network::{Replayer, Warmup};
use crate::stats::{ks_exponential, KsResult};
use crate::tick::{PriceSeries, Tick, Timestamp};

pub const DAY_MS: i64 = 86_400_000;

/// The finest step allowed relative to a threshold: `sigma sqrt(dt) <= delta x0 / 20`.
pub const RESOLUTION: f64 = 20.0;

/// Arithmetic random walk `x_{t+1} = x_t + mu dt + sigma sqrt(dt) xi_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Volatility per time unit.
    pub sigma: f64,
    /// Drift per time unit.
    pub mu: f64,
    /// Step in time units.
    pub dt: f64,
    pub steps: usize,
    pub x0: f64,
    pub seed: u64,
    pub start_ms: Timestamp,
    /// Length of one time unit in milliseconds.
    pub time_unit_ms: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            sigma: 0.01,
            mu: 0.0,
            dt: 1e-6,
            steps: 1_000_000,
            x0: 1.0,
            seed: 0,
            start_ms: 0,
            time_unit_ms: DAY_MS as f64,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidArgument("sigma must be positive"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidArgument("dt must be positive"));
        }
        if !(self.x0.is_finite() && self.x0 > 0.0) {
            return Err(Error::InvalidArgument("x0 must be positive"));
        }
        if !self.mu.is_finite() || !self.time_unit_ms.is_finite() || self.time_unit_ms <= 0.0 {
            return Err(Error::InvalidArgument("drift and time unit must be finite"));
        }
        Ok(())
    }

    pub fn step_sd(&self) -> f64 {
        self.sigma * libm::sqrt(self.dt)
    }

    /// Checks `sigma sqrt(dt) <= delta x0 / 20` for a relative threshold.
    pub fn check_resolution(&self, delta: f64) -> Result<()> {
        let limit = delta * self.x0 / RESOLUTION;
        let step = self.step_sd();
        if step > limit {
            return Err(Error::ResolutionGuard { step, limit });
        }
        Ok(())
    }

    /// Same config with `dt` chosen so that `delta x0 = steps_per_delta * sigma sqrt(dt)`.
    pub fn with_resolution(self, delta: f64, steps_per_delta: f64) -> Self {
        let sd = delta * self.x0 / steps_per_delta;
        Self {
            dt: (sd / self.sigma) * (sd / self.sigma),
            ..self
        }
    }
}

/// Endless simulated price path; the first item is `x0` at `start_ms`.
#[derive(Debug, Clone)]
pub struct BrownianPath {
    x: f64,
    drift_step: f64,
    sd: f64,
    dt: f64,
    k: u64,
    start_ms: Timestamp,
    ms_per_step: f64,
    started: bool,
    rng: ChaCha8Rng,
}

impl BrownianPath {
    /// Path number `stream` of the seed; distinct streams are independent.
    pub fn new(config: &SimConfig, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(stream);
        Self {
            x: config.x0,
            drift_step: config.mu * config.dt,
            sd: config.step_sd(),
            dt: config.dt,
            k: 0,
            start_ms: config.start_ms,
            ms_per_step: config.dt * config.time_unit_ms,
            started: false,
            rng,
        }
    }

    /// Changes the drift (per time unit) from the next step on.
    pub fn set_drift(&mut self, mu: f64) {
        self.drift_step = mu * self.dt;
    }

    pub fn price(&self) -> f64 {
        self.x
    }

    pub fn steps_taken(&self) -> u64 {
        self.k
    }

    pub fn time_ms(&self) -> Timestamp {
        self.start_ms + libm::round(self.k as f64 * self.ms_per_step) as Timestamp
    }

    #[inline]
    pub fn advance(&mut self) -> (Timestamp, f64) {
        let xi: f64 = self.rng.sample(StandardNormal);
        self.x += self.drift_step + self.sd * xi;
        self.k += 1;
        (self.time_ms(), self.x)
    }
}

impl Iterator for BrownianPath {
    type Item = (Timestamp, f64);

    fn next(&mut self) -> Option<Self::Item> {
        if !self.started {
            self.started = true;
            return Some((self.time_ms(), self.x));
        }
        Some(self.advance())
    }
}

/// `steps + 1` zero-spread ticks starting at `x0`.
pub fn simulate_path(config: &SimConfig) -> Result<PriceSeries> {
    config.validate()?;
    let mut ticks = Vec::with_capacity(config.steps + 1);
    for (t, x) in BrownianPath::new(config, 0).take(config.steps + 1) {
        ticks.push(Tick::at_price(t, x)?);
    }
    PriceSeries::new("SIM", ticks)
}

/// Overshoot statistics from [`verify_fit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitReport {
    pub overshoots: usize,
    /// Mean absolute overshoot amplitude over `delta`.
    pub mean_ratio: f64,
    pub ks: KsResult,
    /// Share of overshoots of exactly zero length.
    pub zero_fraction: f64,
}

/// Overshoots kept per simulated path, after discarding its first two events.
pub const OVERSHOOTS_PER_PATH: usize = 4;

/// Collects absolute overshoot amplitudes at `delta` over independent paths.
pub fn collect_overshoots(config: &SimConfig, delta: f64, n_overshoots: usize) -> Result<Vec<f64>> {
    config.validate()?;
    config.check_resolution(delta)?;
    let mut out = Vec::with_capacity(n_overshoots);
    let mut stream = 0u64;
    while out.len() < n_overshoots {
        let mut path = BrownianPath::new(config, stream);
        stream += 1;
        let mut runner = RunnerState::new(Mode::ExpectUp, config.x0, config.start_ms);
        let mut events = 0usize;
        while events < 2 + OVERSHOOTS_PER_PATH && out.len() < n_overshoots {
            let (t, x) = path.advance();
            if let Some(dc) = runner.step(delta, x, t) {
                events += 1;
                if events > 2 {
                    out.push(
                        dc.overshoot
                            .expect("only the first change lacks one")
                            .amplitude
                            .abs(),
                    );
                }
            }
        }
    }
    Ok(out)
}

/// Mean ratio and KS distance of overshoots to Exponential(mean `delta`).
pub fn verify_fit(config: &SimConfig, delta: f64, n_overshoots: usize) -> Result<FitReport> {
    if n_overshoots == 0 {
        return Err(Error::InvalidArgument("need at least one overshoot"));
    }
    let os = collect_overshoots(config, delta, n_overshoots)?;
    let n = os.len() as f64;
    Ok(FitReport {
        overshoots: os.len(),
        mean_ratio: os.iter().sum::<f64>() / n / delta,
        ks: ks_exponential(&os, delta),
        zero_fraction: os.iter().filter(|&&o| o == 0.0).count() as f64 / n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmpiricalOptions {
    /// Transitions counted per path before a fresh path starts.
    pub transitions_per_path: usize,
    /// Directional changes every threshold must have seen before counting.
    pub warmup_changes: usize,
    pub min_row_count: u64,
}

impl EmpiricalOptions {
    /// Keeps the price of each path within a few percent of `x0`.
    pub fn for_ladder(ladder: &ThresholdLadder) -> Self {
        let m = (0.033 / ladder.delta(0)) * (0.033 / ladder.delta(0));
        Self {
            transitions_per_path: (m as usize).clamp(16, 1_000_000),
            warmup_changes: 2,
            min_row_count: 1,
        }
    }
}

/// Transition frequencies from replaying the ladder over simulated paths.
pub fn empirical_matrix(
    config: &SimConfig,
    ladder: &ThresholdLadder,
    n_transitions: usize,
    options: &EmpiricalOptions,
) -> Result<EmpiricalMatrix> {
    config.validate()?;
    config.check_resolution(ladder.delta(0))?;
    let n = ladder.len();
    let mut counts = EmpiricalCounts::new(n)?;
    let mut events = Vec::new();
    let mut records = Vec::new();
    let mut stream = 0u64;
    let mut total = 0usize;
    while total < n_transitions {
        let mut path = BrownianPath::new(config, stream);
        stream += 1;
        let mut dissector = Dissector::new(ladder, Mode::ExpectUp);
        let mut replayer = Replayer::new(n, Mode::ExpectUp, Warmup::Seeded)?;
        let mut changes = alloc::vec![0usize; n];
        let mut warm = false;
        let mut on_path = 0usize;
        let (t0, x0) = path.next().expect("endless path");
        dissector.push(x0, t0, &mut events);
        while on_path < options.transitions_per_path && total < n_transitions {
            let (t, x) = path.advance();
            events.clear();
            if dissector.push(x, t, &mut events) == 0 {
                continue;
            }
            records.clear();
            for ev in &events {
                changes[ev.threshold_index] += 1;
                replayer.push(*ev, &mut records)?;
            }
            replayer.flush(&mut records)?;
            if warm {
                for r in &records {
                    if on_path == options.transitions_per_path || total == n_transitions {
                        break;
                    }
                    counts.add(r.from.code(), r.to.code())?;
                    on_path += 1;
                    total += 1;
                }
            } else {
                warm = changes.iter().all(|&c| c >= options.warmup_changes);
            }
        }
    }
    counts.finish(options.min_row_count)
}

/// Dual-barrier problem: fixed upper barrier `x0 + big_delta`, lower
/// barrier trailing the running maximum by `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstPassageConfig {
    pub big_delta: f64,
    pub delta: f64,
    pub mu: f64,
    pub sigma: f64,
    pub paths: usize,
    pub seed: u64,
    /// `delta / (sigma sqrt(dt))`.
    pub steps_per_delta: f64,
}

impl Default for FirstPassageConfig {
    fn default() -> Self {
        Self {
            big_delta: 1.0,
            delta: 1.0,
            mu: 0.0,
            sigma: 1.0,
            paths: 1_000_000,
            seed: 0,
            steps_per_delta: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstPassageEstimate {
    pub probability: f64,
    pub stderr: f64,
    pub paths: usize,
}

const PATHS_PER_STREAM: usize = 1 << 16;

/// Share of paths reaching the upper barrier first.
///
/// Each step samples the exact maximum of the Brownian bridge between its
/// endpoints, and the lower barrier is crossed with the bridge crossing
/// probability, so the estimate carries no discrete-monitoring bias beyond
/// barrier moves within a single step.
pub fn first_passage_probability(config: &FirstPassageConfig) -> Result<FirstPassageEstimate> {
    for v in [
        config.big_delta,
        config.delta,
        config.sigma,
        config.steps_per_delta,
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidArgument(
                "barriers, sigma and resolution must be positive",
            ));
        }
    }
    if config.steps_per_delta < RESOLUTION / 2.0 {
        return Err(Error::ResolutionGuard {
            step: config.delta / config.steps_per_delta,
            limit: config.delta / (RESOLUTION / 2.0),
        });
    }
    if config.paths == 0 || !config.mu.is_finite() {
        return Err(Error::InvalidArgument(
            "need at least one path and a finite drift",
        ));
    }
    let sd = config.delta / config.steps_per_delta;
    let dt = (sd / config.sigma) * (sd / config.sigma);
    let var = sd * sd;
    let drift = config.mu * dt;
    let mut hits = 0usize;
    let mut done = 0usize;
    let mut stream = 0u64;
    while done < config.paths {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(stream);
        stream += 1;
        let batch = PATHS_PER_STREAM.min(config.paths - done);
        for _ in 0..batch {
            let (mut x, mut max) = (0.0f64, 0.0f64);
            loop {
                let xi: f64 = rng.sample(StandardNormal);
                let b = x + drift + sd * xi;
                let u1: f64 = rng.random();
                let d = b - x;
                let bridge_max =
                    0.5 * (x + b + libm::sqrt(d * d - 2.0 * var * libm::log(1.0 - u1)));
                if bridge_max >= config.big_delta {
                    hits += 1;
                    break;
                }
                let lower = max - config.delta;
                if b <= lower {
                    break;
                }
                let u2: f64 = rng.random();
                if libm::exp(-2.0 * (x - lower) * (b - lower) / var) > u2 {
                    break;
                }
                max = max.max(bridge_max);
                x = b;
            }
        }
        done += batch;
    }
    let p = hits as f64 / done as f64;
    Ok(FirstPassageEstimate {
        probability: p,
        stderr: libm::sqrt(p * (1.0 - p) / done as f64),
        paths: done,
    })
}
