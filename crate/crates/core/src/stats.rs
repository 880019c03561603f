//! Small statistics toolkit: autocovariance, KS tests, normal tail.

use alloc::vec::Vec;

/// Streaming sample autocovariances `R(0..=lag)` with mean removal.
///
/// Values are shifted by a caller-supplied constant close to the mean
/// before accumulation to keep the cross sums well conditioned.
#[derive(Debug, Clone)]
pub struct AutoCovariance {
    lag: usize,
    shift: f64,
    count: usize,
    total: f64,
    head: Vec<f64>,
    ring: Vec<f64>,
    pos: usize,
    cross: Vec<f64>,
}

impl AutoCovariance {
    pub fn new(lag: usize, shift: f64) -> Self {
        Self {
            lag,
            shift,
            count: 0,
            total: 0.0,
            head: Vec::with_capacity(lag),
            ring: alloc::vec![0.0; 2 * lag],
            pos: 0,
            cross: alloc::vec![0.0; lag + 1],
        }
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        let y = x - self.shift;
        self.cross[0] += y * y;
        if self.lag > 0 {
            // ring[pos..pos + lag] holds the previous values, oldest first;
            // slots not yet written are zero and add nothing
            let window = &self.ring[self.pos..self.pos + self.lag];
            for (c, &prev) in self.cross[1..].iter_mut().zip(window.iter().rev()) {
                *c += y * prev;
            }
            self.ring[self.pos] = y;
            self.ring[self.pos + self.lag] = y;
            self.pos = (self.pos + 1) % self.lag;
        }
        if self.head.len() < self.lag {
            self.head.push(y);
        }
        self.total += y;
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.shift + self.total / self.count as f64
    }

    /// `R(tau) = (1/N) sum_{t=1}^{N-tau} (x_t - mean)(x_{t+tau} - mean)`
    /// for `tau = 0..=lag`; requires more than `lag` observations.
    pub fn autocovariances(&self) -> Option<Vec<f64>> {
        if self.count <= self.lag {
            return None;
        }
        let n = self.count as f64;
        let m = self.total / n;
        let mut out = Vec::with_capacity(self.lag + 1);
        for tau in 0..=self.lag {
            // sum of the last tau values and of the first tau values
            let tail: f64 = self.ring[self.pos + self.lag - tau..self.pos + self.lag]
                .iter()
                .sum();
            let head: f64 = self.head[..tau].iter().sum();
            let pairs = (self.count - tau) as f64;
            let s =
                self.cross[tau] - m * ((self.total - tail) + (self.total - head)) + pairs * m * m;
            out.push(s / n);
        }
        Some(out)
    }

    /// `R(0) + 2 sum_{tau=1}^{lag} R(tau)`.
    pub fn long_run_variance(&self) -> Option<f64> {
        self.autocovariances()
            .map(|r| r[0] + 2.0 * r[1..].iter().sum::<f64>())
    }
}

/// Kolmogorov-Smirnov one-sample result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

impl KsResult {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }
}

/// One-sample KS test against a continuous CDF.
pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let nf = n as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f);
    }
    KsResult {
        statistic: d,
        p_value: kolmogorov_p_value(n, d),
        n,
    }
}

pub fn ks_exponential(samples: &[f64], mean: f64) -> KsResult {
    ks_test(samples, |x| {
        if x <= 0.0 {
            0.0
        } else {
            -libm::expm1(-x / mean)
        }
    })
}

pub fn ks_uniform(samples: &[f64]) -> KsResult {
    ks_test(samples, |x| x.clamp(0.0, 1.0))
}

/// Asymptotic Kolmogorov tail with Stephens' small-sample correction.
pub fn kolmogorov_p_value(n: usize, d: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let sn = libm::sqrt(n as f64);
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = libm::exp(-2.0 * kf * kf * lambda * lambda);
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / core::f64::consts::SQRT_2)
}

/// Standard normal upper tail `1 - Phi(z)`, accurate for large `z`.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / core::f64::consts::SQRT_2)
}
