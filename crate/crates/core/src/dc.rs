//! Directional-change / overshoot dissection.
//!
//! A runner follows the literal pseudocode: in [`Mode::ExpectUp`] it tracks
//! the running minimum and confirms an upward directional change once
//! `price / extreme - 1 >= delta`; [`Mode::ExpectDown`] is the mirror image.
//! The mode names the direction of the move that would confirm next.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::ladder::ThresholdLadder;
use crate::tick::{PriceSeries, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    #[default]
    ExpectUp,
    ExpectDown,
}

impl Mode {
    pub fn flipped(self) -> Self {
        match self {
            Mode::ExpectUp => Mode::ExpectDown,
            Mode::ExpectDown => Mode::ExpectUp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DcKind {
    Up,
    Down,
}

impl DcKind {
    /// Network bit set by this change (1 = moving up).
    pub fn bit(self) -> u32 {
        match self {
            DcKind::Up => 1,
            DcKind::Down => 0,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            DcKind::Up => DcKind::Down,
            DcKind::Down => DcKind::Up,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DcKind::Up => "up",
            DcKind::Down => "down",
        }
    }

    /// The kind a runner in `mode` confirms first.
    pub fn first_for(mode: Mode) -> Self {
        match mode {
            Mode::ExpectUp => DcKind::Up,
            Mode::ExpectDown => DcKind::Down,
        }
    }
}

/// The completed overshoot preceding a directional change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overshoot {
    /// `(extreme - last_dc_price) / last_dc_price`, positive when upward.
    pub amplitude: f64,
    pub duration_ms: i64,
}

/// A confirmed directional change at one threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionalChange {
    pub kind: DcKind,
    pub confirm_price: f64,
    pub confirm_time: Timestamp,
    /// Extremum the reversal was measured from.
    pub extreme_price: f64,
    pub extreme_time: Timestamp,
    /// `None` for the first change after initialisation.
    pub overshoot: Option<Overshoot>,
}

impl DirectionalChange {
    pub fn at(self, threshold_index: usize) -> IntrinsicEvent {
        IntrinsicEvent {
            threshold_index,
            kind: self.kind,
            confirm_price: self.confirm_price,
            confirm_time: self.confirm_time,
            overshoot: self.overshoot,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntrinsicEvent {
    pub threshold_index: usize,
    pub kind: DcKind,
    pub confirm_price: f64,
    pub confirm_time: Timestamp,
    pub overshoot: Option<Overshoot>,
}

impl IntrinsicEvent {
    pub fn overshoot_amplitude(&self) -> Option<f64> {
        self.overshoot.map(|o| o.amplitude)
    }
}

/// State of a single-threshold runner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunnerState {
    pub mode: Mode,
    pub extreme: f64,
    pub extreme_time: Timestamp,
    /// Last confirmation point, `None` before the first change.
    pub last_dc: Option<(f64, Timestamp)>,
}

impl RunnerState {
    pub fn new(mode: Mode, price: f64, time: Timestamp) -> Self {
        Self {
            mode,
            extreme: price,
            extreme_time: time,
            last_dc: None,
        }
    }

    #[inline]
    pub fn step(&mut self, delta: f64, price: f64, time: Timestamp) -> Option<DirectionalChange> {
        let r = price / self.extreme - 1.0;
        let kind = match self.mode {
            Mode::ExpectUp if r >= delta => DcKind::Up,
            Mode::ExpectDown if r <= -delta => DcKind::Down,
            Mode::ExpectUp => {
                if price < self.extreme {
                    self.extreme = price;
                    self.extreme_time = time;
                }
                return None;
            }
            Mode::ExpectDown => {
                if price > self.extreme {
                    self.extreme = price;
                    self.extreme_time = time;
                }
                return None;
            }
        };
        let overshoot = self.last_dc.map(|(p, t)| Overshoot {
            amplitude: (self.extreme - p) / p,
            duration_ms: self.extreme_time - t,
        });
        let change = DirectionalChange {
            kind,
            confirm_price: price,
            confirm_time: time,
            extreme_price: self.extreme,
            extreme_time: self.extreme_time,
            overshoot,
        };
        self.mode = self.mode.flipped();
        self.extreme = price;
        self.extreme_time = time;
        self.last_dc = Some((price, time));
        Some(change)
    }
}

/// Functional form of [`RunnerState::step`].
pub fn runner_step(
    state: RunnerState,
    delta: f64,
    price: f64,
    time: Timestamp,
) -> (RunnerState, Option<DirectionalChange>) {
    let mut next = state;
    let change = next.step(delta, price, time);
    (next, change)
}

/// Streaming dissection over every threshold of a ladder.
#[derive(Debug, Clone)]
pub struct Dissector {
    deltas: Vec<f64>,
    initial_mode: Mode,
    runners: Vec<RunnerState>,
}

impl Dissector {
    pub fn new(ladder: &ThresholdLadder, initial_mode: Mode) -> Self {
        Self {
            deltas: ladder.deltas().to_vec(),
            initial_mode,
            runners: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn runners(&self) -> &[RunnerState] {
        &self.runners
    }

    /// Feeds one price. Events confirmed on it are appended to `out` in
    /// ascending threshold order; returns how many were appended.
    #[inline]
    pub fn push(&mut self, price: f64, time: Timestamp, out: &mut Vec<IntrinsicEvent>) -> usize {
        if self.runners.is_empty() {
            let mode = self.initial_mode;
            self.runners = self
                .deltas
                .iter()
                .map(|_| RunnerState::new(mode, price, time))
                .collect();
            return 0;
        }
        let before = out.len();
        for (i, (runner, &delta)) in self.runners.iter_mut().zip(&self.deltas).enumerate() {
            if let Some(change) = runner.step(delta, price, time) {
                out.push(change.at(i));
            }
        }
        out.len() - before
    }
}

/// Runs every threshold over the whole series; one stream per threshold.
pub fn dissect(
    series: &PriceSeries,
    ladder: &ThresholdLadder,
    initial_mode: Mode,
) -> Result<Vec<Vec<IntrinsicEvent>>> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let mut streams: Vec<Vec<IntrinsicEvent>> = (0..ladder.len()).map(|_| Vec::new()).collect();
    let mut dissector = Dissector::new(ladder, initial_mode);
    let mut buf = Vec::new();
    for (time, price) in series.midprices() {
        buf.clear();
        dissector.push(price, time, &mut buf);
        for ev in &buf {
            streams[ev.threshold_index].push(*ev);
        }
    }
    Ok(streams)
}

/// Interleaves per-threshold streams by `(confirm_time, threshold_index)`,
/// keeping stream order for ties.
pub fn merge_streams(streams: &[Vec<IntrinsicEvent>]) -> Vec<IntrinsicEvent> {
    let mut all: Vec<IntrinsicEvent> = streams.iter().flatten().copied().collect();
    all.sort_by_key(|e| (e.confirm_time, e.threshold_index));
    all
}
