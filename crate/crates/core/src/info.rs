//! Stationary distribution, informativeness and windowed liquidity.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::markov::{contract, entry_state, island_exit_probability, TransitionMatrix};
use crate::network::{branch_index, TransitionRecord};
use crate::stats::{normal_sf, AutoCovariance};

/// Networks up to this size are solved densely; larger ones through the
/// island hierarchy.
pub const DIRECT_SOLVE_MAX_N: usize = 8;

const RESIDUAL_TOL: f64 = 1e-10;

/// Left fixed vector `mu W = mu`, `sum mu = 1`.
pub fn stationary_distribution(matrix: &TransitionMatrix) -> Result<Vec<f64>> {
    let mu = if matrix.n() <= DIRECT_SOLVE_MAX_N {
        stationary_direct(matrix)?
    } else {
        stationary_hierarchical(matrix)?
    };
    if stationary_residual(matrix, &mu) > RESIDUAL_TOL {
        return Err(Error::Reducible);
    }
    Ok(mu)
}

/// `max_j |(mu W)_j - mu_j|`.
pub fn stationary_residual(matrix: &TransitionMatrix, mu: &[f64]) -> f64 {
    let mut next = alloc::vec![0.0; matrix.size()];
    for from in 0..matrix.size() as u32 {
        for (to, p) in matrix.row(from) {
            next[to as usize] += mu[from as usize] * p;
        }
    }
    next.iter()
        .zip(mu)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Gaussian elimination on `(W^T - I) mu = 0` with one equation replaced
/// by the normalisation `sum mu = 1`.
pub fn stationary_direct(matrix: &TransitionMatrix) -> Result<Vec<f64>> {
    let size = matrix.size();
    let mut a = alloc::vec![0.0; size * size];
    for from in 0..size {
        a[from * size + from] -= 1.0;
        for (to, p) in matrix.row(from as u32) {
            a[to as usize * size + from] += p;
        }
    }
    for col in 0..size {
        a[(size - 1) * size + col] = 1.0;
    }
    let mut b = alloc::vec![0.0; size];
    b[size - 1] = 1.0;

    for col in 0..size {
        let pivot = (col..size)
            .max_by(|&i, &j| a[i * size + col].abs().total_cmp(&a[j * size + col].abs()))
            .expect("non-empty range");
        if a[pivot * size + col].abs() < 1e-12 {
            return Err(Error::Reducible);
        }
        if pivot != col {
            for k in 0..size {
                a.swap(pivot * size + k, col * size + k);
            }
            b.swap(pivot, col);
        }
        let d = a[col * size + col];
        for row in col + 1..size {
            let f = a[row * size + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..size {
                a[row * size + k] -= f * a[col * size + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut mu = alloc::vec![0.0; size];
    for row in (0..size).rev() {
        let mut s = b[row];
        for k in row + 1..size {
            s -= a[row * size + k] * mu[k];
        }
        mu[row] = s / a[row * size + row];
    }
    normalise(&mut mu)?;
    Ok(mu)
}

/// Exact solve through the island hierarchy.
///
/// Every island is entered at its `b_1 = b_2` member `E`, and its other
/// member `O` is only reachable from `E`. Watching the chain only on entry
/// states gives a chain that holds at `E_k` with probability
/// `rho_k = W(E,O) W(O,E)` and otherwise moves like the contracted chain,
/// hence `mu(E_k) ~ mu_hat(k) / (1 - rho_k)` and `mu(O_k) = mu(E_k) W(E,O)`.
pub fn stationary_hierarchical(matrix: &TransitionMatrix) -> Result<Vec<f64>> {
    let n = matrix.n();
    if n == 1 {
        return Ok(alloc::vec![0.5, 0.5]);
    }
    let coarse = stationary_hierarchical(&contract(matrix)?)?;
    let mut mu = alloc::vec![0.0; matrix.size()];
    for (k, &m) in coarse.iter().enumerate() {
        let e = entry_state(k as u32);
        let o = e ^ 1;
        let w_eo = matrix.prob(e, o);
        let exit = island_exit_probability(matrix, k as u32);
        if exit <= 0.0 {
            return Err(Error::Reducible);
        }
        let me = m / exit;
        mu[e as usize] = me;
        mu[o as usize] = me * w_eo;
    }
    normalise(&mut mu)?;
    Ok(mu)
}

fn normalise(mu: &mut [f64]) -> Result<()> {
    if mu.iter().any(|m| !m.is_finite() || *m < -1e-12) {
        return Err(Error::Reducible);
    }
    for m in mu.iter_mut() {
        *m = m.max(0.0);
    }
    let total: f64 = mu.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Reducible);
    }
    for m in mu.iter_mut() {
        *m /= total;
    }
    Ok(())
}

/// Binary entropy in nats.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x > 0.0 { -x * libm::log(x) } else { 0.0 };
    term(p) + term(1.0 - p)
}

/// Entropy rate `sum_i mu_i H_b(row i)`.
pub fn h1(matrix: &TransitionMatrix, mu: &[f64]) -> f64 {
    (0..matrix.size() as u32)
        .map(|s| {
            let p = matrix.branch_probability(s).unwrap_or(0.0);
            mu[s as usize] * binary_entropy(p)
        })
        .sum()
}

/// `-ln W(from, to)`.
pub fn transition_surprise(matrix: &TransitionMatrix, from: u32, to: u32) -> Result<f64> {
    let p = matrix.prob(from, to);
    if p.is_nan() || p <= 0.0 {
        return Err(Error::ZeroProbability { from, to });
    }
    Ok(-libm::log(p))
}

/// Total surprise of a transition path.
pub fn surprise(records: &[TransitionRecord], matrix: &TransitionMatrix) -> Result<f64> {
    records.iter().try_fold(0.0, |acc, r| {
        Ok(acc + transition_surprise(matrix, r.from.code(), r.to.code())?)
    })
}

/// Settings of the simulated-chain variance estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct H2Options {
    pub chain_length: usize,
    pub lag: usize,
    pub seed: u64,
}

impl Default for H2Options {
    fn default() -> Self {
        Self {
            chain_length: 10_000_000,
            lag: 64,
            seed: 0x5EED,
        }
    }
}

#[derive(Clone, Copy)]
struct ChainRow {
    first: u32,
    branch: u32,
    p_branch: f64,
    s_first: f64,
    s_branch: f64,
}

fn chain_rows(matrix: &TransitionMatrix) -> Vec<ChainRow> {
    let n = matrix.n();
    (0..matrix.size() as u32)
        .map(|s| {
            let p = matrix.branch_probability(s).unwrap_or(0.0);
            let branch = branch_index(s, n).map_or(s ^ 1, |i| s ^ (1 << i));
            let sur = |q: f64| {
                if q > 0.0 {
                    -libm::log(q)
                } else {
                    f64::INFINITY
                }
            };
            ChainRow {
                first: s ^ 1,
                branch,
                p_branch: p,
                s_first: sur(1.0 - p),
                s_branch: sur(p),
            }
        })
        .collect()
}

/// Simulates the chain from `mu` and returns per-step surprises to `sink`.
pub fn simulate_surprises(
    matrix: &TransitionMatrix,
    mu: &[f64],
    steps: usize,
    seed: u64,
    mut sink: impl FnMut(u32, u32, f64),
) {
    let rows = chain_rows(matrix);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut state = (mu.len() - 1) as u32;
    for (i, m) in mu.iter().enumerate() {
        acc += m;
        if u < acc {
            state = i as u32;
            break;
        }
    }
    for _ in 0..steps {
        let row = &rows[state as usize];
        let u: f64 = rng.random();
        let (next, s) = if u < row.p_branch {
            (row.branch, row.s_branch)
        } else {
            (row.first, row.s_first)
        };
        sink(state, next, s);
        state = next;
    }
}

/// Truncated-autocovariance estimate of the per-transition surprise
/// variance on a simulated chain.
///
/// Every transition flips one bit, so the chain alternates between even
/// and odd states and single-step autocovariances never decay. The
/// estimator therefore works on sums of consecutive pairs,
/// `(R(0) + 2 sum_{tau=1}^{lag/2} R(tau)) / 2`, which is the variance of a
/// long window's surprise divided by its length.
pub fn h2_estimate(matrix: &TransitionMatrix, options: &H2Options) -> Result<f64> {
    let mu = stationary_distribution(matrix)?;
    let h = h1(matrix, &mu);
    h2_estimate_with(matrix, &mu, h, options)
}

/// [`h2_estimate`] with a known stationary distribution and entropy rate.
pub fn h2_estimate_with(
    matrix: &TransitionMatrix,
    mu: &[f64],
    h1: f64,
    options: &H2Options,
) -> Result<f64> {
    let pair_lag = options.lag.div_ceil(2).max(1);
    if 2 * pair_lag >= options.chain_length {
        return Err(Error::InvalidArgument(
            "truncation lag must be below the chain length",
        ));
    }
    let mut acc = AutoCovariance::new(pair_lag, 2.0 * h1);
    let mut half = None;
    simulate_surprises(
        matrix,
        mu,
        options.chain_length,
        options.seed,
        |_, _, s| match half.take() {
            None => half = Some(s),
            Some(first) => acc.push(first + s),
        },
    );
    let v = acc.long_run_variance().expect("chain longer than lag");
    Ok((v / 2.0).max(0.0))
}

/// Stationary distribution with first- and second-order informativeness.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoSummary {
    pub mu: Vec<f64>,
    pub h1: f64,
    pub h2: f64,
}

impl InfoSummary {
    pub fn compute(matrix: &TransitionMatrix, options: &H2Options) -> Result<Self> {
        let mu = stationary_distribution(matrix)?;
        let h1 = h1(matrix, &mu);
        let h2 = h2_estimate_with(matrix, &mu, h1, options)?;
        Ok(Self { mu, h1, h2 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LiquidityConfig {
    pub window_ms: i64,
    pub cadence_ms: i64,
    /// Samples with fewer transitions are flagged low-confidence.
    pub k_min: usize,
}

impl Default for LiquidityConfig {
    fn default() -> Self {
        Self {
            window_ms: 86_400_000,
            cadence_ms: 60_000,
            k_min: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiquiditySample {
    pub time_ms: i64,
    pub k: usize,
    pub surprise: f64,
    pub z: f64,
    pub liquidity: f64,
    pub low_confidence: bool,
}

/// Standardised surprise and its upper-tail quantile for one window.
pub fn standardise(k: usize, surprise: f64, h1: f64, h2: f64) -> Result<(f64, f64)> {
    let kf = k as f64;
    let excess = surprise - kf * h1;
    let z = if h2 > 0.0 {
        excess / libm::sqrt(kf * h2)
    } else if excess.abs() <= 1e-9 * (1.0 + kf) {
        0.0
    } else {
        return Err(Error::DegenerateLadder);
    };
    Ok((z, normal_sf(z)))
}

// Window sums use fixed point so that a window's surprise does not depend
// on how much history precedes it.
const FIXED_SCALE: f64 = (1u64 << 40) as f64;

/// Samples at every cadence point from the first to the last record,
/// over windows `(t - window, t]`; points with an empty window are skipped.
pub fn liquidity_stream(
    records: &[TransitionRecord],
    matrix: &TransitionMatrix,
    info: &InfoSummary,
    config: &LiquidityConfig,
) -> Result<Vec<LiquiditySample>> {
    if config.window_ms <= 0 || config.cadence_ms <= 0 {
        return Err(Error::InvalidArgument(
            "window and cadence must be positive",
        ));
    }
    if records.windows(2).any(|w| w[1].time_ms < w[0].time_ms) {
        return Err(Error::InvalidArgument(
            "transition records must be time-ordered",
        ));
    }
    let (Some(first), Some(last)) = (records.first(), records.last()) else {
        return Ok(Vec::new());
    };
    let mut prefix = Vec::with_capacity(records.len() + 1);
    prefix.push(0i128);
    let mut running = 0i128;
    for r in records {
        let s = transition_surprise(matrix, r.from.code(), r.to.code())?;
        running += libm::round(s * FIXED_SCALE) as i128;
        prefix.push(running);
    }

    let cadence = config.cadence_ms;
    let mut t = first.time_ms.div_euclid(cadence) * cadence;
    if t < first.time_ms {
        t += cadence;
    }
    let (mut lo, mut hi) = (0usize, 0usize);
    let mut out = Vec::new();
    while t < last.time_ms + cadence {
        while hi < records.len() && records[hi].time_ms <= t {
            hi += 1;
        }
        while lo < hi && records[lo].time_ms <= t - config.window_ms {
            lo += 1;
        }
        let k = hi - lo;
        if k > 0 {
            let gamma = (prefix[hi] - prefix[lo]) as f64 / FIXED_SCALE;
            let (z, liquidity) = standardise(k, gamma, info.h1, info.h2)?;
            out.push(LiquiditySample {
                time_ms: t,
                k,
                surprise: gamma,
                z,
                liquidity,
                low_confidence: k < config.k_min,
            });
        }
        t += cadence;
    }
    Ok(out)
}
