//! Binary market states over a ladder and the single-bit-flip transition rule.

use alloc::vec::Vec;

use crate::dc::{DcKind, IntrinsicEvent, Mode};
use crate::error::{Error, Result};
use crate::ladder::MAX_THRESHOLDS;
use crate::tick::Timestamp;

/// `b = (b_1, ..., b_n)` stored as its code `s = sum b_i 2^(i-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MarketState {
    code: u32,
    n: u8,
}

impl MarketState {
    pub fn new(code: u32, n: usize) -> Result<Self> {
        if n == 0 || n > MAX_THRESHOLDS || u64::from(code) >= 1u64 << n {
            return Err(Error::StateOutOfRange {
                code: code.into(),
                n,
            });
        }
        Ok(Self { code, n: n as u8 })
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        Self::new(encode(bits)?, bits.len())
    }

    #[inline]
    pub fn code(self) -> u32 {
        self.code
    }

    #[inline]
    pub fn n(self) -> usize {
        self.n as usize
    }

    /// `b_{index+1}` (0-based index).
    #[inline]
    pub fn bit(self, index: usize) -> u32 {
        (self.code >> index) & 1
    }

    pub fn bits(self) -> Vec<u8> {
        (0..self.n()).map(|i| self.bit(i) as u8).collect()
    }

    #[inline]
    pub fn flip(self, index: usize) -> Self {
        Self {
            code: self.code ^ (1 << index),
            n: self.n,
        }
    }

    /// 0-based index of the first bit differing from `b_1`, if any.
    #[inline]
    pub fn branch_index(self) -> Option<usize> {
        branch_index(self.code, self.n())
    }

    pub fn is_blind_spot(self) -> bool {
        self.branch_index().is_none()
    }

    pub fn successors(self) -> Successors {
        Successors {
            flip_first: self.flip(0),
            branch: self.branch_index().map(|i| self.flip(i)),
        }
    }

    /// Whether flipping bit `index` is allowed from here.
    #[inline]
    pub fn can_flip(self, index: usize) -> bool {
        index == 0 || self.branch_index() == Some(index)
    }

    pub fn can_reach(self, to: MarketState) -> bool {
        to.n == self.n && self.successors().contains(to)
    }
}

/// Code-level branch index, see [`MarketState::branch_index`].
#[inline]
pub fn branch_index(code: u32, n: usize) -> Option<usize> {
    let mask = ((1u64 << n) - 1) as u32 & !1;
    let diff = if code & 1 == 1 { !code } else { code } & mask;
    (diff != 0).then(|| diff.trailing_zeros() as usize)
}

/// One or two successor states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Successors {
    pub flip_first: MarketState,
    pub branch: Option<MarketState>,
}

impl Successors {
    pub fn len(&self) -> usize {
        1 + usize::from(self.branch.is_some())
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, s: MarketState) -> bool {
        self.flip_first == s || self.branch == Some(s)
    }

    pub fn iter(&self) -> impl Iterator<Item = MarketState> {
        core::iter::once(self.flip_first).chain(self.branch)
    }
}

pub fn successors(state: MarketState) -> Successors {
    state.successors()
}

/// Little-endian base-2 code of a bit vector.
pub fn encode(bits: &[u8]) -> Result<u32> {
    if bits.is_empty() || bits.len() > MAX_THRESHOLDS {
        return Err(Error::InvalidArgument("bit vector length must be 1..=20"));
    }
    let mut code = 0u32;
    for (i, &b) in bits.iter().enumerate() {
        match b {
            0 => {}
            1 => code |= 1 << i,
            _ => return Err(Error::InvalidArgument("bits must be 0 or 1")),
        }
    }
    Ok(code)
}

pub fn decode(code: u64, n: usize) -> Result<Vec<u8>> {
    if n == 0 || n > MAX_THRESHOLDS || code >= 1u64 << n {
        return Err(Error::StateOutOfRange { code, n });
    }
    Ok((0..n).map(|i| ((code >> i) & 1) as u8).collect())
}

/// A timestamped move between network states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransitionRecord {
    pub time_ms: Timestamp,
    pub from: MarketState,
    pub to: MarketState,
    pub trigger_threshold: usize,
}

/// How the state is initialised before every threshold has fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Warmup {
    /// Bits start at the value implied by the runners' initial mode
    /// (expect-up means the price is falling, so 0); every change is recorded.
    #[default]
    Seeded,
    /// Bits are taken from each threshold's first change; nothing is
    /// recorded until every threshold has confirmed once.
    AllConfirmed,
}

/// Turns merged directional changes into network transitions.
///
/// Changes sharing a timestamp are buffered and applied as a group:
/// repeatedly the lowest threshold whose flip is currently legal goes
/// next, which serialises multi-threshold confirmations into legal
/// single-bit flips.
#[derive(Debug, Clone)]
pub struct Replayer {
    n: usize,
    code: u32,
    last_kind: Vec<Option<DcKind>>,
    seeded_kind: DcKind,
    unconfirmed: usize,
    warmup: Warmup,
    pending: Vec<IntrinsicEvent>,
}

impl Replayer {
    pub fn new(n: usize, initial_mode: Mode, warmup: Warmup) -> Result<Self> {
        if n == 0 || n > MAX_THRESHOLDS {
            return Err(Error::InvalidArgument("network size must be 1..=20"));
        }
        let first = DcKind::first_for(initial_mode);
        let code = if first == DcKind::Up {
            0
        } else {
            ((1u64 << n) - 1) as u32
        };
        Ok(Self {
            n,
            code,
            last_kind: alloc::vec![None; n],
            seeded_kind: first.opposite(),
            unconfirmed: n,
            warmup,
            pending: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Current state, `None` while warming up.
    pub fn state(&self) -> Option<MarketState> {
        let ready = self.warmup == Warmup::Seeded || self.unconfirmed == 0;
        ready.then_some(MarketState {
            code: self.code,
            n: self.n as u8,
        })
    }

    /// Accepts the next change in merged order.
    pub fn push(&mut self, event: IntrinsicEvent, out: &mut Vec<TransitionRecord>) -> Result<()> {
        let i = event.threshold_index;
        if i >= self.n {
            return Err(Error::InvalidArgument("threshold index outside the ladder"));
        }
        if let Some(first) = self.pending.first() {
            if first.confirm_time != event.confirm_time {
                self.flush(out)?;
            }
        }
        let previous = match (self.last_kind[i], self.warmup) {
            (Some(k), _) => Some(k),
            (None, Warmup::Seeded) => Some(self.seeded_kind),
            (None, Warmup::AllConfirmed) => None,
        };
        if previous == Some(event.kind) {
            return Err(Error::NonAlternating { threshold: i });
        }
        self.last_kind[i] = Some(event.kind);
        self.pending.push(event);
        Ok(())
    }

    /// Applies any buffered group; call once after the last event.
    pub fn flush(&mut self, out: &mut Vec<TransitionRecord>) -> Result<()> {
        if self.pending.is_empty() {
            return Ok(());
        }
        if self.warmup == Warmup::AllConfirmed && self.unconfirmed > 0 {
            for ev in &self.pending {
                self.code = (self.code & !(1 << ev.threshold_index))
                    | (ev.kind.bit() << ev.threshold_index);
            }
            self.unconfirmed = self.last_kind.iter().filter(|k| k.is_none()).count();
            self.pending.clear();
            return Ok(());
        }
        let mut pending = core::mem::take(&mut self.pending);
        while !pending.is_empty() {
            let mut chosen = None;
            let mut blocked = 0u32;
            for (pos, ev) in pending.iter().enumerate() {
                let i = ev.threshold_index;
                if blocked & (1 << i) != 0 {
                    continue;
                }
                blocked |= 1 << i;
                if i == 0 || branch_index(self.code, self.n) == Some(i) {
                    chosen = Some(pos);
                    break;
                }
            }
            let Some(pos) = chosen else {
                let i = pending[0].threshold_index;
                return Err(Error::IllegalTransition {
                    from: self.code,
                    to: self.code ^ (1 << i),
                });
            };
            let ev = pending.remove(pos);
            let i = ev.threshold_index;
            let from = self.code;
            let to = (from & !(1 << i)) | (ev.kind.bit() << i);
            debug_assert_ne!(from, to);
            self.code = to;
            out.push(TransitionRecord {
                time_ms: ev.confirm_time,
                from: MarketState {
                    code: from,
                    n: self.n as u8,
                },
                to: MarketState {
                    code: to,
                    n: self.n as u8,
                },
                trigger_threshold: i,
            });
        }
        self.pending = pending;
        Ok(())
    }
}

/// Replays events already merged by `(time, threshold)`.
pub fn replay_merged(
    events: &[IntrinsicEvent],
    n: usize,
    initial_mode: Mode,
    warmup: Warmup,
) -> Result<Vec<TransitionRecord>> {
    let mut replayer = Replayer::new(n, initial_mode, warmup)?;
    let mut out = Vec::new();
    for ev in events {
        replayer.push(*ev, &mut out)?;
    }
    replayer.flush(&mut out)?;
    Ok(out)
}

/// Merges per-threshold streams and replays them.
pub fn replay(
    streams: &[Vec<IntrinsicEvent>],
    initial_mode: Mode,
    warmup: Warmup,
) -> Result<Vec<TransitionRecord>> {
    let merged = crate::dc::merge_streams(streams);
    replay_merged(&merged, streams.len(), initial_mode, warmup)
}
