//! Transition matrices on the intrinsic network: closed forms, contraction
//! and empirical counts.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::ladder::{ThresholdLadder, MAX_THRESHOLDS};
use crate::network::{branch_index, MarketState, TransitionRecord};

/// Matrices with more thresholds than this keep only the two
/// probabilities of each row.
pub const DENSE_MAX_N: usize = 7;

const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
struct RowPair {
    flip_first: f64,
    branch: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    Dense(Vec<f64>),
    Sparse(Vec<RowPair>),
}

/// Row-stochastic `2^n x 2^n` matrix whose row `s` is supported on the
/// successors of `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    storage: Storage,
}

impl TransitionMatrix {
    fn from_pairs(n: usize, pairs: Vec<RowPair>) -> Self {
        let storage = if n <= DENSE_MAX_N {
            let size = 1usize << n;
            let mut dense = alloc::vec![0.0; size * size];
            for (s, p) in pairs.iter().enumerate() {
                let s = s as u32;
                dense[s as usize * size + (s ^ 1) as usize] = p.flip_first;
                if let Some(i) = branch_index(s, n) {
                    dense[s as usize * size + (s ^ (1 << i)) as usize] = p.branch;
                }
            }
            Storage::Dense(dense)
        } else {
            Storage::Sparse(pairs)
        };
        Self { n, storage }
    }

    /// Builds a matrix from the probability of taking the branch edge in
    /// every non-blind-spot state; the first-bit flip gets the complement.
    pub fn from_branch_fn(n: usize, mut branch: impl FnMut(MarketState) -> f64) -> Result<Self> {
        if n == 0 || n > MAX_THRESHOLDS {
            return Err(Error::InvalidArgument("network size must be 1..=20"));
        }
        let mut pairs = Vec::with_capacity(1 << n);
        for code in 0..(1u32 << n) {
            let pair = if branch_index(code, n).is_some() {
                let p = branch(MarketState::new(code, n)?);
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidMatrix(format!(
                        "branch probability {p} of state {code} outside [0, 1]"
                    )));
                }
                RowPair {
                    flip_first: 1.0 - p,
                    branch: p,
                }
            } else {
                RowPair {
                    flip_first: 1.0,
                    branch: 0.0,
                }
            };
            pairs.push(pair);
        }
        Ok(Self::from_pairs(n, pairs))
    }

    /// Builds a matrix from `(from, to, prob)` entries. Missing legal
    /// entries are zero; illegal or duplicated entries and rows not summing
    /// to one are rejected.
    pub fn from_triplets(n: usize, triplets: &[(u32, u32, f64)]) -> Result<Self> {
        if n == 0 || n > MAX_THRESHOLDS {
            return Err(Error::InvalidArgument("network size must be 1..=20"));
        }
        let size = 1u32 << n;
        let mut pairs = alloc::vec![(None::<f64>, None::<f64>); size as usize];
        for &(from, to, p) in triplets {
            // absorb rounding just outside [0, 1]
            let p = if (-ROW_SUM_TOL..0.0).contains(&p) {
                0.0
            } else if p > 1.0 && p <= 1.0 + ROW_SUM_TOL {
                1.0
            } else {
                p
            };
            if from >= size || to >= size {
                return Err(Error::InvalidMatrix(format!(
                    "entry {from} -> {to} outside a {n}-threshold network"
                )));
            }
            if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
                return Err(Error::InvalidMatrix(format!(
                    "probability {p} of {from} -> {to} outside [0, 1]"
                )));
            }
            let slot = if to == from ^ 1 {
                &mut pairs[from as usize].0
            } else if branch_index(from, n).map(|i| from ^ (1 << i)) == Some(to) {
                &mut pairs[from as usize].1
            } else {
                return Err(Error::IllegalTransition { from, to });
            };
            if slot.replace(p).is_some() {
                return Err(Error::InvalidMatrix(format!(
                    "duplicate entry {from} -> {to}"
                )));
            }
        }
        let mut rows = Vec::with_capacity(size as usize);
        for (s, (a, b)) in pairs.into_iter().enumerate() {
            let row = RowPair {
                flip_first: a.unwrap_or(0.0),
                branch: b.unwrap_or(0.0),
            };
            if (row.flip_first + row.branch - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidMatrix(format!(
                    "row {s} sums to {}",
                    row.flip_first + row.branch
                )));
            }
            rows.push(row);
        }
        Ok(Self::from_pairs(n, rows))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of states, `2^n`.
    pub fn size(&self) -> usize {
        1 << self.n
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    fn pair(&self, from: u32) -> RowPair {
        match &self.storage {
            Storage::Sparse(rows) => rows[from as usize],
            Storage::Dense(d) => {
                let size = self.size();
                let base = from as usize * size;
                RowPair {
                    flip_first: d[base + (from ^ 1) as usize],
                    branch: branch_index(from, self.n)
                        .map_or(0.0, |i| d[base + (from ^ (1 << i)) as usize]),
                }
            }
        }
    }

    /// `W(from, to)`; zero for non-edges and out-of-range codes.
    pub fn prob(&self, from: u32, to: u32) -> f64 {
        let size = self.size() as u32;
        if from >= size || to >= size {
            return 0.0;
        }
        match &self.storage {
            Storage::Dense(d) => d[from as usize * self.size() + to as usize],
            Storage::Sparse(rows) => {
                if to == from ^ 1 {
                    rows[from as usize].flip_first
                } else if branch_index(from, self.n).map(|i| from ^ (1 << i)) == Some(to) {
                    rows[from as usize].branch
                } else {
                    0.0
                }
            }
        }
    }

    /// Probability of the branch edge, `None` for blind spots.
    pub fn branch_probability(&self, from: u32) -> Option<f64> {
        branch_index(from, self.n).map(|_| self.pair(from).branch)
    }

    /// Legal successors of `from` with their probabilities (zeros included).
    pub fn row(&self, from: u32) -> impl Iterator<Item = (u32, f64)> {
        let pair = self.pair(from);
        let branch = branch_index(from, self.n).map(|i| (from ^ (1 << i), pair.branch));
        core::iter::once((from ^ 1, pair.flip_first)).chain(branch)
    }

    /// Every legal entry as `(from, to, prob)`, row by row, first-bit flip
    /// before the branch edge.
    pub fn triplets(&self) -> Vec<(u32, u32, f64)> {
        let mut out = Vec::with_capacity(2 * self.size());
        for from in 0..self.size() as u32 {
            out.extend(self.row(from).map(|(to, p)| (from, to, p)));
        }
        out
    }

    /// Row sums and support pattern.
    pub fn validate(&self) -> Result<()> {
        for from in 0..self.size() as u32 {
            let pair = self.pair(from);
            if branch_index(from, self.n).is_none() && pair.flip_first != 1.0 {
                return Err(Error::InvalidMatrix(format!(
                    "blind spot {from} is not certain"
                )));
            }
            if (pair.flip_first + pair.branch - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidMatrix(format!(
                    "row {from} is not stochastic"
                )));
            }
        }
        if let Storage::Dense(d) = &self.storage {
            let size = self.size();
            for from in 0..size {
                let nonzero = (0..size)
                    .filter(|&to| d[from * size + to] != 0.0)
                    .all(|to| {
                        let s = MarketState::new(from as u32, self.n).unwrap();
                        s.can_reach(MarketState::new(to as u32, self.n).unwrap())
                    });
                if !nonzero {
                    return Err(Error::InvalidMatrix(format!(
                        "row {from} leaves the network"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Largest absolute entrywise difference to a matrix of the same size.
    pub fn max_abs_diff(&self, other: &TransitionMatrix) -> Option<f64> {
        (self.n == other.n).then(|| {
            (0..self.size() as u32)
                .flat_map(|s| self.row(s).map(move |(t, p)| (s, t, p)))
                .map(|(s, t, p)| (p - other.prob(s, t)).abs())
                .fold(0.0, f64::max)
        })
    }
}

/// The 4x4 matrix for two thresholds, states ordered
/// `(0,0)=0, (1,0)=1, (0,1)=2, (1,1)=3`.
pub fn two_threshold_matrix(delta1: f64, delta2: f64) -> Result<TransitionMatrix> {
    let ladder = ThresholdLadder::new(alloc::vec![delta1, delta2])?;
    let alpha = ladder.reach_probabilities()[0];
    let beta = alpha;
    TransitionMatrix::from_triplets(
        2,
        &[
            (0, 1, 1.0),
            (1, 0, 1.0 - alpha),
            (1, 3, alpha),
            (2, 0, beta),
            (2, 3, 1.0 - beta),
            (3, 2, 1.0),
        ],
    )
}

/// Branch probability for every 0-based branch index `i >= 1`
/// (entry 0 is unused and set to 0).
///
/// With `e_k` the reach probability of threshold `k`,
/// `q_i = prod_{k=1}^{i} e_k / (1 - sum_{k=1}^{i-1} (1 - e_k) prod_{j=k+1}^{i} e_j)`.
pub fn analytic_branch_probabilities(ladder: &ThresholdLadder) -> Vec<f64> {
    let e = ladder.reach_probabilities();
    let mut q = alloc::vec![0.0; ladder.len()];
    for i in 1..ladder.len() {
        let num: f64 = e[..i].iter().product();
        let mut loops = 0.0;
        for k in 1..i {
            let tail: f64 = e[k..i].iter().product();
            loops += (1.0 - e[k - 1]) * tail;
        }
        q[i] = num / (1.0 - loops);
    }
    q
}

/// Closed-form matrix: the branch probability of a state depends only on
/// its branch index.
pub fn analytic_matrix(ladder: &ThresholdLadder) -> Result<TransitionMatrix> {
    let q = analytic_branch_probabilities(ladder);
    TransitionMatrix::from_branch_fn(ladder.len(), |s| {
        q[s.branch_index().expect("called for non-blind states only")]
    })
}

/// Probability that a Brownian motion with drift `mu` and volatility
/// `sigma` rises by `big_delta` before falling `delta` below its running
/// maximum.
pub fn drifted_escape_probability(big_delta: f64, delta: f64, mu: f64, sigma: f64) -> Result<f64> {
    for v in [big_delta, delta, sigma] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidArgument(
                "Delta, delta and sigma must be positive",
            ));
        }
    }
    if !mu.is_finite() {
        return Err(Error::InvalidArgument("drift must be finite"));
    }
    if mu == 0.0 {
        return Ok(libm::exp(-big_delta / delta));
    }
    let s2 = sigma * sigma;
    let a = mu.abs();
    let x = 2.0 * delta * a / s2;
    let e = libm::exp(-x);
    let one_minus_e = -libm::expm1(-x);
    let rate = ((a - mu) + (a + mu) * e) / one_minus_e;
    Ok(libm::exp(-big_delta / s2 * rate))
}

/// Level-`level` island `k`: the states sharing bits above the lowest
/// `level` ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Island {
    pub level: usize,
    pub index: u32,
}

impl Island {
    pub fn containing(code: u32, level: usize) -> Self {
        Self {
            level,
            index: code >> level,
        }
    }

    /// The two level-(j-1) islands forming this one.
    pub fn members(self) -> [u32; 2] {
        [2 * self.index, 2 * self.index + 1]
    }

    /// Full-network states in this island.
    pub fn states(self) -> core::ops::Range<u32> {
        (self.index << self.level)..((self.index + 1) << self.level)
    }
}

/// The member of level-1 island `k` through which it is always entered
/// (the state with `b_1 = b_2`).
pub fn entry_state(k: u32) -> u32 {
    2 * k + (k & 1)
}

/// Collapses every island `{2k, 2k+1}` into one state, removing the
/// smallest threshold.
///
/// With `E` the entry member and `O` the other one, the chain bounces
/// `E -> O -> E` with probability `rho = W(E,O) W(O,E)` per loop, so every
/// exit probability carries the geometric factor `1 / (1 - rho)`. Exits
/// keeping `b_2` (`k + j` even) leave from `E`; exits flipping `b_2`
/// (`k + j` odd, either direction) go through `O`.
pub fn contract(matrix: &TransitionMatrix) -> Result<TransitionMatrix> {
    let n = matrix.n();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "contraction needs at least two thresholds",
        ));
    }
    let mut entries = Vec::with_capacity(1 << n);
    for k in 0..(1u32 << (n - 1)) {
        let e = entry_state(k);
        let o = e ^ 1;
        // k + j odd: E -> O, then O flips b_2
        let via_other = matrix.prob(e, o) * matrix.prob(o, o ^ 2);
        // k + j even: E flips its own branch bit
        let direct =
            branch_index(k, n - 1).map(|i| (k ^ (1 << i), matrix.prob(e, e ^ (1 << (i + 1)))));
        // the two exits sum to 1 - W(E,O) W(O,E) without cancellation
        let exit = via_other + direct.map_or(0.0, |d| d.1);
        if exit <= 0.0 {
            return Err(Error::Reducible);
        }
        entries.push((k, k ^ 1, via_other / exit));
        if let Some((j, p)) = direct {
            entries.push((k, j, p / exit));
        }
    }
    TransitionMatrix::from_triplets(n - 1, &entries)
}

/// `1 - W(E,O) W(O,E)` for level-1 island `k`, summed from its exits.
pub fn island_exit_probability(matrix: &TransitionMatrix, k: u32) -> f64 {
    let e = entry_state(k);
    let o = e ^ 1;
    let direct = branch_index(e, matrix.n())
        .filter(|&i| i > 0)
        .map_or(0.0, |i| matrix.prob(e, e ^ (1 << i)));
    matrix.prob(e, o) * matrix.prob(o, o ^ 2) + direct
}

/// Transition counts with the frequency matrix they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMatrix {
    pub matrix: TransitionMatrix,
    counts: Vec<[u64; 2]>,
}

impl EmpiricalMatrix {
    /// Counts transitions. States never left keep an even split between
    /// their successors; `min_row_count` rejects rows observed fewer times.
    pub fn from_records(
        n: usize,
        records: impl IntoIterator<Item = TransitionRecord>,
        min_row_count: u64,
    ) -> Result<Self> {
        let mut counts = EmpiricalCounts::new(n)?;
        for r in records {
            counts.add(r.from.code(), r.to.code())?;
        }
        counts.finish(min_row_count)
    }

    /// Observations of `from -> to`.
    pub fn count(&self, from: u32, to: u32) -> u64 {
        let c = self.counts[from as usize];
        if to == from ^ 1 {
            c[0]
        } else if branch_index(from, self.matrix.n()).map(|i| from ^ (1 << i)) == Some(to) {
            c[1]
        } else {
            0
        }
    }

    pub fn row_total(&self, from: u32) -> u64 {
        let c = self.counts[from as usize];
        c[0] + c[1]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|c| c[0] + c[1]).sum()
    }

    /// Binomial standard error of `W(from, to)`.
    pub fn standard_error(&self, from: u32, to: u32) -> f64 {
        let n = self.row_total(from) as f64;
        let p = self.matrix.prob(from, to);
        libm::sqrt(p * (1.0 - p) / n)
    }
}

/// Incremental counterpart of [`EmpiricalMatrix::from_records`].
#[derive(Debug, Clone)]
pub struct EmpiricalCounts {
    n: usize,
    counts: Vec<[u64; 2]>,
}

impl EmpiricalCounts {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_THRESHOLDS {
            return Err(Error::InvalidArgument("network size must be 1..=20"));
        }
        Ok(Self {
            n,
            counts: alloc::vec![[0, 0]; 1 << n],
        })
    }

    #[inline]
    pub fn add(&mut self, from: u32, to: u32) -> Result<()> {
        let slot = if to == from ^ 1 {
            0
        } else if branch_index(from, self.n).map(|i| from ^ (1 << i)) == Some(to) {
            1
        } else {
            return Err(Error::IllegalTransition { from, to });
        };
        self.counts[from as usize][slot] += 1;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|c| c[0] + c[1]).sum()
    }

    pub fn finish(self, min_row_count: u64) -> Result<EmpiricalMatrix> {
        for (s, c) in self.counts.iter().enumerate() {
            let observed = c[0] + c[1];
            if observed < min_row_count {
                return Err(Error::InsufficientTransitions {
                    state: s as u32,
                    observed,
                    required: min_row_count,
                });
            }
        }
        let counts = self.counts;
        let matrix = TransitionMatrix::from_branch_fn(self.n, |s| {
            let c = counts[s.code() as usize];
            match c[0] + c[1] {
                0 => 0.5,
                total => c[1] as f64 / total as f64,
            }
        })?;
        Ok(EmpiricalMatrix { matrix, counts })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn two_threshold_closed_form() {
        let w = two_threshold_matrix(0.01, 0.02).unwrap();
        assert!((w.prob(1, 3) - 0.36787944117144233).abs() < 1e-15);
        assert_eq!(w.prob(0, 1), 1.0);
        assert_eq!(w.prob(3, 2), 1.0);
        let near = two_threshold_matrix(0.01, 0.01 * (1.0 + 1e-12)).unwrap();
        assert!((near.prob(1, 3) - 1.0).abs() < 1e-11);
        assert!(two_threshold_matrix(0.02, 0.01).is_err());
        let a = analytic_matrix(&ThresholdLadder::doubling(0.01, 2).unwrap()).unwrap();
        assert!(a.max_abs_diff(&w).unwrap() < 1e-16);
    }

    #[test]
    fn doubling_three_ladder_entry() {
        let w = analytic_matrix(&ThresholdLadder::doubling(0.01, 3).unwrap()).unwrap();
        let e1 = libm::exp(-1.0);
        let expected = e1 * e1 / (1.0 - (1.0 - e1) * e1);
        // (1,1,0) = 3 -> (1,1,1) = 7
        assert!((w.prob(3, 7) - expected).abs() < 1e-15);
        assert!((w.prob(3, 7) - 0.17634).abs() < 1e-5);
        w.validate().unwrap();
    }

    #[test]
    fn storage_switches_at_eight() {
        let l7 = ThresholdLadder::doubling(0.01, 7).unwrap();
        let l8 = ThresholdLadder::doubling(0.01, 8).unwrap();
        assert!(analytic_matrix(&l7).unwrap().is_dense());
        let sparse = analytic_matrix(&l8).unwrap();
        assert!(!sparse.is_dense());
        sparse.validate().unwrap();
        assert_eq!(sparse.triplets().len(), 2 * 256 - 2);
    }

    #[test]
    fn triplets_round_trip_and_validation() {
        let w = analytic_matrix(&ThresholdLadder::geometric(0.003, 1.7, 4).unwrap()).unwrap();
        let back = TransitionMatrix::from_triplets(4, &w.triplets()).unwrap();
        assert_eq!(back, w);
        assert!(matches!(
            TransitionMatrix::from_triplets(2, &[(0, 2, 1.0)]),
            Err(Error::IllegalTransition { from: 0, to: 2 })
        ));
        assert!(TransitionMatrix::from_triplets(2, &[(0, 1, 0.5)]).is_err());
    }

    #[test]
    fn driftless_limit_and_drift_extremes() {
        let p0 = drifted_escape_probability(1.0, 1.0, 0.0, 1.0).unwrap();
        assert!((p0 - libm::exp(-1.0)).abs() < 1e-15);
        let tiny = drifted_escape_probability(1.0, 1.0, 1e-9, 1.0).unwrap();
        assert!((tiny - p0).abs() < 1e-8);
        let tiny_neg = drifted_escape_probability(1.0, 1.0, -1e-9, 1.0).unwrap();
        assert!((tiny_neg - p0).abs() < 1e-8);
        assert!(drifted_escape_probability(1.0, 1.0, 50.0, 1.0).unwrap() > 0.999_999);
        assert!(drifted_escape_probability(1.0, 1.0, -50.0, 1.0).unwrap() < 1e-40);
        assert!(drifted_escape_probability(0.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn islands() {
        assert_eq!(Island::containing(14, 1).index, 7);
        assert_eq!(Island { level: 1, index: 7 }.members(), [14, 15]);
        assert_eq!(Island { level: 1, index: 0 }.members(), [0, 1]);
        assert_eq!(Island { level: 2, index: 1 }.states(), 4..8);
        assert_eq!(entry_state(0), 0);
        assert_eq!(entry_state(1), 3);
        assert_eq!(entry_state(2), 4);
    }

    #[test]
    fn contraction_of_two_matrix_is_alternator() {
        let w = two_threshold_matrix(0.01, 0.025).unwrap();
        let c = contract(&w).unwrap();
        assert_eq!(c.n(), 1);
        assert_eq!(c.prob(0, 1), 1.0);
        assert_eq!(c.prob(1, 0), 1.0);
        assert!(contract(&c).is_err());
    }

    #[test]
    fn contraction_identity_small() {
        let ladder = ThresholdLadder::new(vec![0.001, 0.0017, 0.0041, 0.0050]).unwrap();
        let c = contract(&analytic_matrix(&ladder).unwrap()).unwrap();
        let reduced = analytic_matrix(&ladder.without_smallest().unwrap()).unwrap();
        assert!(c.max_abs_diff(&reduced).unwrap() < 1e-12);
    }

    #[test]
    fn empirical_counts() {
        let s = |c| MarketState::new(c, 2).unwrap();
        let rec = |a, b| TransitionRecord {
            time_ms: 0,
            from: s(a),
            to: s(b),
            trigger_threshold: 0,
        };
        let e = EmpiricalMatrix::from_records(
            2,
            vec![
                rec(0, 1),
                rec(1, 3),
                rec(3, 2),
                rec(2, 0),
                rec(0, 1),
                rec(1, 0),
            ],
            0,
        )
        .unwrap();
        assert_eq!(e.count(1, 3), 1);
        assert_eq!(e.row_total(1), 2);
        assert_eq!(e.matrix.prob(1, 3), 0.5);
        assert_eq!(e.matrix.prob(0, 1), 1.0);
        assert_eq!(e.total(), 6);
        assert!(EmpiricalMatrix::from_records(2, vec![rec(0, 1)], 1).is_err());
        assert!(EmpiricalMatrix::from_records(2, vec![rec(0, 2)], 0).is_err());
    }
}
