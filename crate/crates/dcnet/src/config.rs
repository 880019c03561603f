//! Run configuration files and duration strings.

use std::fmt;
use std::path::Path;

use dcnet_core::{H2Options, LiquidityConfig, Mode, ThresholdLadder, Warmup};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const UNITS: [(&str, i64); 5] = [
    ("d", 86_400_000),
    ("h", 3_600_000),
    ("m", 60_000),
    ("s", 1_000),
    ("ms", 1),
];

/// Parses `1d`, `1h`, `1m`, `5s` or `250ms` into milliseconds.
pub fn parse_duration(s: &str) -> std::result::Result<i64, String> {
    let s = s.trim();
    let split = s
        .find(|c: char| !c.is_ascii_digit())
        .ok_or_else(|| format!("duration {s:?} needs a unit (d, h, m, s, ms)"))?;
    let (num, unit) = s.split_at(split);
    let value: i64 = num
        .parse()
        .map_err(|_| format!("duration {s:?} must start with a whole number"))?;
    let scale = UNITS
        .iter()
        .find(|(u, _)| *u == unit)
        .map(|(_, ms)| *ms)
        .ok_or_else(|| format!("unknown duration unit {unit:?} in {s:?}"))?;
    let ms = value
        .checked_mul(scale)
        .ok_or_else(|| format!("duration {s:?} overflows"))?;
    if ms <= 0 {
        return Err(format!("duration {s:?} must be positive"));
    }
    Ok(ms)
}

/// Largest exact unit, the inverse of [`parse_duration`].
pub fn format_duration(ms: i64) -> String {
    for (unit, scale) in UNITS {
        if ms % scale == 0 {
            return format!("{}{unit}", ms / scale);
        }
    }
    unreachable!("milliseconds always divide")
}

/// Milliseconds, written as a duration string in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Duration(pub i64);

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_duration(self.0))
    }
}

impl std::str::FromStr for Duration {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        parse_duration(s).map(Duration)
    }
}

impl Serialize for Duration {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Duration {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum LadderSpec {
    Explicit { deltas: Vec<f64> },
    Geometric { n: usize, delta1: f64, lambda: f64 },
}

impl LadderSpec {
    pub fn standard() -> Self {
        LadderSpec::Geometric {
            n: dcnet_core::ladder::STANDARD_LEN,
            delta1: dcnet_core::ladder::STANDARD_DELTA1,
            lambda: 2.0,
        }
    }

    pub fn build(&self) -> Result<ThresholdLadder> {
        Ok(match self {
            LadderSpec::Explicit { deltas } => ThresholdLadder::new(deltas.clone())?,
            LadderSpec::Geometric { n, delta1, lambda } => {
                ThresholdLadder::geometric(*delta1, *lambda, *n)?
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum InitialMode {
    ExpectUp,
    ExpectDown,
}

impl From<InitialMode> for Mode {
    fn from(m: InitialMode) -> Self {
        match m {
            InitialMode::ExpectUp => Mode::ExpectUp,
            InitialMode::ExpectDown => Mode::ExpectDown,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum WarmupPolicy {
    Seeded,
    AllConfirmed,
}

impl From<WarmupPolicy> for Warmup {
    fn from(w: WarmupPolicy) -> Self {
        match w {
            WarmupPolicy::Seeded => Warmup::Seeded,
            WarmupPolicy::AllConfirmed => Warmup::AllConfirmed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LiquiditySection {
    pub window: Duration,
    pub cadence: Duration,
    pub k_min: usize,
}

impl Default for LiquiditySection {
    fn default() -> Self {
        let d = LiquidityConfig::default();
        Self {
            window: Duration(d.window_ms),
            cadence: Duration(d.cadence_ms),
            k_min: d.k_min,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct H2Section {
    pub chain_length: usize,
    pub lag: usize,
    pub seed: u64,
}

impl Default for H2Section {
    fn default() -> Self {
        let d = H2Options::default();
        Self {
            chain_length: d.chain_length,
            lag: d.lag,
            seed: d.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReplaySection {
    pub initial_mode: InitialMode,
    pub warmup: WarmupPolicy,
}

impl Default for ReplaySection {
    fn default() -> Self {
        Self {
            initial_mode: InitialMode::ExpectUp,
            warmup: WarmupPolicy::Seeded,
        }
    }
}

/// Everything a pipeline needs besides its input files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub ladder: LadderSpec,
    #[serde(default)]
    pub liquidity: LiquiditySection,
    #[serde(default)]
    pub h2: H2Section,
    #[serde(default)]
    pub replay: ReplaySection,
}

impl RunConfig {
    /// Twelve doubling thresholds from 0.025%, one-day window, one-minute cadence.
    pub fn standard() -> Self {
        Self::with_ladder(LadderSpec::standard())
    }

    pub fn with_ladder(ladder: LadderSpec) -> Self {
        Self {
            ladder,
            liquidity: LiquiditySection::default(),
            h2: H2Section::default(),
            replay: ReplaySection::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serialisable")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn liquidity_config(&self) -> LiquidityConfig {
        LiquidityConfig {
            window_ms: self.liquidity.window.0,
            cadence_ms: self.liquidity.cadence.0,
            k_min: self.liquidity.k_min,
        }
    }

    pub fn h2_options(&self) -> H2Options {
        H2Options {
            chain_length: self.h2.chain_length,
            lag: self.h2.lag,
            seed: self.h2.seed,
        }
    }
}
