//! Quotes and midprice series.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Milliseconds since the Unix epoch.
pub type Timestamp = i64;

/// A single bid/ask quote.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tick {
    pub timestamp_ms: Timestamp,
    pub bid: f64,
    pub ask: f64,
}

impl Tick {
    /// Builds a validated quote: `ask >= bid > 0`, both finite.
    pub fn new(timestamp_ms: Timestamp, bid: f64, ask: f64) -> Result<Self> {
        for price in [bid, ask] {
            if !(price.is_finite() && price > 0.0) {
                return Err(Error::InvalidPrice(price));
            }
        }
        if bid > ask {
            return Err(Error::BidAboveAsk { bid, ask });
        }
        Ok(Self {
            timestamp_ms,
            bid,
            ask,
        })
    }

    /// Zero-spread quote at `price`.
    pub fn at_price(timestamp_ms: Timestamp, price: f64) -> Result<Self> {
        Self::new(timestamp_ms, price, price)
    }

    pub fn midprice(&self) -> f64 {
        midprice(self)
    }
}

/// `(bid + ask) / 2`. Rounding is monotone and halving is exact, so the
/// result always lies in `[bid, ask]`.
pub fn midprice(tick: &Tick) -> f64 {
    (tick.bid + tick.ask) / 2.0
}

/// Time-ordered quotes for one instrument. Equal timestamps are kept in
/// arrival order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PriceSeries {
    instrument: String,
    ticks: Vec<Tick>,
}

impl PriceSeries {
    pub fn new(instrument: impl Into<String>, ticks: Vec<Tick>) -> Result<Self> {
        for pair in ticks.windows(2) {
            if pair[1].timestamp_ms < pair[0].timestamp_ms {
                return Err(Error::DecreasingTimestamp {
                    previous: pair[0].timestamp_ms,
                    current: pair[1].timestamp_ms,
                });
            }
        }
        Ok(Self {
            instrument: instrument.into(),
            ticks,
        })
    }

    pub fn empty(instrument: impl Into<String>) -> Self {
        Self {
            instrument: instrument.into(),
            ticks: Vec::new(),
        }
    }

    /// Appends a tick, rejecting one that goes back in time.
    pub fn push(&mut self, tick: Tick) -> Result<()> {
        if let Some(last) = self.ticks.last() {
            if tick.timestamp_ms < last.timestamp_ms {
                return Err(Error::DecreasingTimestamp {
                    previous: last.timestamp_ms,
                    current: tick.timestamp_ms,
                });
            }
        }
        self.ticks.push(tick);
        Ok(())
    }

    pub fn instrument(&self) -> &str {
        &self.instrument
    }

    pub fn ticks(&self) -> &[Tick] {
        &self.ticks
    }

    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }

    /// `(timestamp, midprice)` pairs in series order.
    pub fn midprices(&self) -> impl Iterator<Item = (Timestamp, f64)> + '_ {
        self.ticks.iter().map(|t| (t.timestamp_ms, t.midprice()))
    }
}
