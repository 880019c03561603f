//! Named verification suites comparing closed forms with simulation.

use std::f64::consts::LN_2;

use dcnet_core::info::{h1, simulate_surprises, standardise, stationary_distribution};
use dcnet_core::markov::analytic_branch_probabilities;
use dcnet_core::scales::{
    equal_probability_ladder, equal_probability_ratio, optimize_ladder, LadderSearchConfig,
    Objective,
};
use dcnet_core::sim::{
    empirical_matrix, first_passage_probability, verify_fit, EmpiricalOptions, FirstPassageConfig,
    SimConfig,
};
use dcnet_core::stats::{mean, variance};
use dcnet_core::{
    analytic_matrix, contract, drifted_escape_probability, H2Options, InfoSummary, ThresholdLadder,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const SUITES: [&str; 9] = [
    "fit",
    "exponential",
    "two-threshold",
    "first-passage",
    "contraction",
    "entropy-bound",
    "scales",
    "constants",
    "clt",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(suite: &'static str, name: impl Into<String>, passed: bool, detail: String) -> Self {
        Self {
            suite,
            name: name.into(),
            passed,
            detail,
        }
    }
}

pub fn run_suite(name: &str, seed: u64) -> Result<Vec<Check>> {
    match name {
        "fit" => fit(seed),
        "exponential" => exponential(seed),
        "two-threshold" => two_threshold(seed),
        "first-passage" => first_passage(seed),
        "contraction" => contraction(seed),
        "entropy-bound" => entropy_bound(seed),
        "scales" => scales(),
        "constants" => constants(seed),
        "clt" => clt(seed),
        other => Err(Error::Usage(format!(
            "unknown suite {other:?}; available: {}",
            SUITES.join(", ")
        ))),
    }
}

fn fit(seed: u64) -> Result<Vec<Check>> {
    let delta = 0.005;
    let mut out = Vec::new();
    let mut ratios = Vec::new();
    for (i, sigma) in [0.005, 0.01, 0.03].into_iter().enumerate() {
        let cfg = SimConfig {
            sigma,
            seed: seed + i as u64,
            ..SimConfig::default()
        }
        .with_resolution(delta, 64.0);
        let r = verify_fit(&cfg, delta, 20_000)?;
        ratios.push(r.mean_ratio);
        out.push(Check::new(
            "fit",
            format!("mean overshoot / delta, sigma={sigma}"),
            (r.mean_ratio - 1.0).abs() <= 0.02,
            format!(
                "{:.4} from {} overshoots (band 0.98..1.02)",
                r.mean_ratio, r.overshoots
            ),
        ));
    }
    Ok(out)
}

fn exponential(seed: u64) -> Result<Vec<Check>> {
    let delta = 0.005;
    let cfg = SimConfig {
        seed,
        ..SimConfig::default()
    }
    .with_resolution(delta, 100.0);
    let r = verify_fit(&cfg, delta, 10_000)?;
    Ok(vec![Check::new(
        "exponential",
        "KS against Exponential(delta)",
        r.ks.passes(0.01),
        format!("D={:.5} p={:.4} n={}", r.ks.statistic, r.ks.p_value, r.ks.n),
    )])
}

fn two_threshold(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for lambda in [1.5, 2.0, 3.0] {
        let ladder = ThresholdLadder::geometric(0.001, lambda, 2)?;
        let cfg = SimConfig {
            seed,
            ..SimConfig::default()
        }
        .with_resolution(0.001, 20.0);
        let e = empirical_matrix(
            &cfg,
            &ladder,
            200_000,
            &EmpiricalOptions::for_ladder(&ladder),
        )?;
        let p = e.matrix.prob(1, 3);
        let expected = (-(lambda - 1.0)).exp();
        let se = (expected * (1.0 - expected) / e.row_total(1) as f64).sqrt();
        out.push(Check::new(
            "two-threshold",
            format!("P(1->3), lambda={lambda}"),
            (p - expected).abs() <= 3.0 * se,
            format!("{p:.4} vs {expected:.4} (3 se = {:.4})", 3.0 * se),
        ));
    }
    Ok(out)
}

fn first_passage(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (mu, delta, big_delta) in [(0.0, 1.0, 1.0), (0.5, 1.0, 1.0), (-0.5, 1.0, 0.5)] {
        let est = first_passage_probability(&FirstPassageConfig {
            big_delta,
            delta,
            mu,
            sigma: 1.0,
            paths: 200_000,
            seed,
            steps_per_delta: 10.0,
        })?;
        let exact = drifted_escape_probability(big_delta, delta, mu, 1.0)?;
        out.push(Check::new(
            "first-passage",
            format!("mu={mu} delta={delta} Delta={big_delta}"),
            (est.probability - exact).abs() <= 3.0 * est.stderr,
            format!("{:.4} +- {:.4} vs {exact:.4}", est.probability, est.stderr),
        ));
    }
    Ok(out)
}

fn random_geometric(rng: &mut ChaCha8Rng, n: usize) -> Result<ThresholdLadder> {
    let delta1 = 10f64.powf(rng.random_range(-4.0..-1.0));
    let lambda = rng.random_range(1.05..4.0);
    Ok(ThresholdLadder::geometric(delta1, lambda, n)?)
}

fn contraction(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for n in 2..=8 {
        for _ in 0..10 {
            let ladder = random_geometric(&mut rng, n)?;
            let c = contract(&analytic_matrix(&ladder)?)?;
            let reduced = analytic_matrix(&ladder.without_smallest().expect("n >= 2"))?;
            worst = worst.max(c.max_abs_diff(&reduced).expect("same size"));
        }
    }
    Ok(vec![Check::new(
        "contraction",
        "contract(W(d1..dn)) = W(d2..dn), n=2..8",
        worst <= 1e-12,
        format!("max |diff| = {worst:.2e}"),
    )])
}

fn entropy_bound(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=8);
        let mut deltas = Vec::with_capacity(n);
        let mut d = 10f64.powf(rng.random_range(-4.0..-2.0));
        for _ in 0..n {
            deltas.push(d);
            d *= rng.random_range(1.01..5.0);
        }
        let w = analytic_matrix(&ThresholdLadder::new(deltas)?)?;
        worst = worst.max(h1(&w, &stationary_distribution(&w)?));
    }
    Ok(vec![Check::new(
        "entropy-bound",
        "H1 <= ln 2 over 1000 random ladders",
        worst <= LN_2,
        format!("max H1 = {worst:.6} (ln 2 = {LN_2:.6})"),
    )])
}

fn scales() -> Result<Vec<Check>> {
    let mut worst: f64 = 0.0;
    for n in 2..=20 {
        let l = equal_probability_ladder(0.00025, n)?;
        for q in &analytic_branch_probabilities(&l)[1..] {
            worst = worst.max((q - 0.5).abs());
        }
    }
    let opt = optimize_ladder(&LadderSearchConfig {
        objective: Objective::MaxH1,
        ..LadderSearchConfig::default()
    })?;
    let ratio = equal_probability_ratio(1_000_000);
    Ok(vec![
        Check::new(
            "scales",
            "equal-probability branches",
            worst <= 1e-9,
            format!("max |q - 0.5| = {worst:.2e}"),
        ),
        Check::new(
            "scales",
            "n=2 max-H1 ratio",
            (opt.lambda - (1.0 + LN_2)).abs() <= 1e-3,
            format!("{:.6} vs 1 + ln 2 = {:.6}", opt.lambda, 1.0 + LN_2),
        ),
        Check::new(
            "scales",
            "delta_k / (delta_1 k) at k=1e6",
            (ratio - 0.8625576).abs() <= 1e-4,
            format!("{ratio:.7} vs 0.8625576"),
        ),
    ])
}

fn constants(seed: u64) -> Result<Vec<Check>> {
    let w = analytic_matrix(&ThresholdLadder::standard())?;
    let info = InfoSummary::compute(
        &w,
        &H2Options {
            seed,
            ..H2Options::default()
        },
    )?;
    Ok(vec![
        Check::new(
            "constants",
            "H1 of the doubling 12-ladder",
            (info.h1 - 0.4604).abs() <= 0.01,
            format!("{:.6} vs 0.4604", info.h1),
        ),
        Check::new(
            "constants",
            "H2 of the doubling 12-ladder",
            (info.h2 - 0.70818).abs() <= 0.05,
            format!("{:.6} vs 0.70818", info.h2),
        ),
    ])
}

fn clt(seed: u64) -> Result<Vec<Check>> {
    let w = analytic_matrix(&ThresholdLadder::standard())?;
    let info = InfoSummary::compute(
        &w,
        &H2Options {
            seed,
            ..H2Options::default()
        },
    )?;
    let k = 1000;
    let windows = 2000;
    let mut zs = Vec::with_capacity(windows);
    let mut acc = 0.0;
    let mut count = 0;
    simulate_surprises(&w, &info.mu, k * windows, seed ^ 0x9E37, |_, _, s| {
        acc += s;
        count += 1;
        if count == k {
            zs.push(acc);
            acc = 0.0;
            count = 0;
        }
    });
    let zs: Vec<f64> = zs
        .into_iter()
        .map(|g| standardise(k, g, info.h1, info.h2).map(|(z, _)| z))
        .collect::<std::result::Result<_, _>>()?;
    let (m, v) = (mean(&zs), variance(&zs));
    Ok(vec![Check::new(
        "clt",
        "standardised surprise on the Markov chain, K=1000",
        m.abs() <= 0.05 && (v - 1.0).abs() <= 0.1,
        format!("mean {m:.4}, variance {v:.4} over {windows} windows"),
    )])
}
