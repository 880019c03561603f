//! CSV formats and file plumbing.
//!
//! | file        | header                                                                                   |
//! |-------------|------------------------------------------------------------------------------------------|
//! | ticks       | `timestamp_ms,bid,ask`                                                                   |
//! | events      | `threshold_index,kind,confirm_time_ms,confirm_price,overshoot_amplitude,overshoot_duration_ms` |
//! | transitions | `time_ms,from_state,to_state,trigger_threshold`                                          |
//! | matrix      | `from,to,prob`                                                                           |
//! | liquidity   | `time_ms,K,surprise_nats,z,liquidity,low_confidence`                                     |
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! gives bit-identical values. Empty overshoot fields mark the first change
//! of a threshold.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use dcnet_core::dc::Overshoot;
use dcnet_core::{
    DcKind, IntrinsicEvent, LiquiditySample, MarketState, PriceSeries, Tick, TransitionMatrix,
    TransitionRecord,
};
use flate2::read::MultiGzDecoder;

use crate::error::{Error, Result};

pub const TICK_HEADER: &str = "timestamp_ms,bid,ask";
pub const EVENT_HEADER: &str =
    "threshold_index,kind,confirm_time_ms,confirm_price,overshoot_amplitude,overshoot_duration_ms";
pub const TRANSITION_HEADER: &str = "time_ms,from_state,to_state,trigger_threshold";
pub const MATRIX_HEADER: &str = "from,to,prob";
pub const LIQUIDITY_HEADER: &str = "time_ms,K,surprise_nats,z,liquidity,low_confidence";

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

/// Opens a file (or stdin for `-`), decompressing gzip transparently.
pub fn open_input(path: &Path) -> Result<Box<dyn Read>> {
    let raw: Box<dyn Read> = if path == Path::new("-") {
        Box::new(io::stdin().lock())
    } else {
        Box::new(File::open(path).map_err(|e| Error::io(path, e))?)
    };
    let mut reader = BufReader::new(raw);
    let head = reader.fill_buf().map_err(|e| Error::io(path, e))?;
    if head.starts_with(&GZIP_MAGIC) {
        Ok(Box::new(MultiGzDecoder::new(reader)))
    } else {
        Ok(Box::new(reader))
    }
}

/// Writes through a temporary file renamed into place on success; `-`
/// writes to stdout.
pub fn write_output(
    path: &Path,
    body: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<()> {
    if path == Path::new("-") {
        let stdout = io::stdout();
        let mut w = BufWriter::new(stdout.lock());
        body(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))?;
        return Ok(());
    }
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

struct Rows<R: Read> {
    reader: csv::Reader<R>,
    record: csv::StringRecord,
}

impl<R: Read> Rows<R> {
    fn new(input: R, header: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(input);
        let found = reader.headers().map_err(|e| csv_error(&e))?.clone();
        let want: Vec<&str> = header.split(',').collect();
        if found.iter().collect::<Vec<_>>() != want {
            return Err(Error::parse(1, format!("expected header `{header}`")));
        }
        Ok(Self {
            reader,
            record: csv::StringRecord::new(),
        })
    }

    /// Next data row as `(line, fields)`.
    fn next(&mut self) -> Result<Option<(u64, &csv::StringRecord)>> {
        match self.reader.read_record(&mut self.record) {
            Ok(false) => Ok(None),
            Ok(true) => {
                let line = self.record.position().map_or(0, |p| p.line());
                Ok(Some((line, &self.record)))
            }
            Err(e) => Err(csv_error(&e)),
        }
    }
}

fn csv_error(e: &csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::parse(line, e.to_string())
}

fn field<T: FromStr>(record: &csv::StringRecord, i: usize, name: &str, line: u64) -> Result<T> {
    let raw = record.get(i).unwrap_or("");
    raw.parse()
        .map_err(|_| Error::parse(line, format!("invalid {name} {raw:?}")))
}

fn optional<T: FromStr>(
    record: &csv::StringRecord,
    i: usize,
    name: &str,
    line: u64,
) -> Result<Option<T>> {
    match record.get(i).unwrap_or("") {
        "" => Ok(None),
        _ => field(record, i, name, line).map(Some),
    }
}

fn at_line(line: u64, e: dcnet_core::Error) -> Error {
    Error::parse(line, e.to_string())
}

pub fn read_ticks(input: impl Read, instrument: &str) -> Result<PriceSeries> {
    let mut rows = Rows::new(input, TICK_HEADER)?;
    let mut series = PriceSeries::empty(instrument);
    while let Some((line, r)) = rows.next()? {
        let tick = Tick::new(
            field(r, 0, "timestamp_ms", line)?,
            field(r, 1, "bid", line)?,
            field(r, 2, "ask", line)?,
        )
        .map_err(|e| at_line(line, e))?;
        series.push(tick).map_err(|e| at_line(line, e))?;
    }
    Ok(series)
}

pub fn write_ticks(w: &mut dyn Write, series: &PriceSeries) -> io::Result<()> {
    writeln!(w, "{TICK_HEADER}")?;
    for t in series.ticks() {
        writeln!(w, "{},{},{}", t.timestamp_ms, t.bid, t.ask)?;
    }
    Ok(())
}

fn parse_kind(s: &str, line: u64) -> Result<DcKind> {
    match s {
        "up" => Ok(DcKind::Up),
        "down" => Ok(DcKind::Down),
        _ => Err(Error::parse(line, format!("invalid kind {s:?}"))),
    }
}

pub fn read_events(input: impl Read) -> Result<Vec<IntrinsicEvent>> {
    let mut rows = Rows::new(input, EVENT_HEADER)?;
    let mut out = Vec::new();
    while let Some((line, r)) = rows.next()? {
        let amplitude: Option<f64> = optional(r, 4, "overshoot_amplitude", line)?;
        let duration: Option<i64> = optional(r, 5, "overshoot_duration_ms", line)?;
        let overshoot = match (amplitude, duration) {
            (Some(amplitude), Some(duration_ms)) => Some(Overshoot {
                amplitude,
                duration_ms,
            }),
            (None, None) => None,
            _ => {
                return Err(Error::parse(
                    line,
                    "overshoot amplitude and duration must both be set or empty",
                ))
            }
        };
        out.push(IntrinsicEvent {
            threshold_index: field(r, 0, "threshold_index", line)?,
            kind: parse_kind(r.get(1).unwrap_or(""), line)?,
            confirm_time: field(r, 2, "confirm_time_ms", line)?,
            confirm_price: field(r, 3, "confirm_price", line)?,
            overshoot,
        });
    }
    Ok(out)
}

pub fn write_events(w: &mut dyn Write, events: &[IntrinsicEvent]) -> io::Result<()> {
    writeln!(w, "{EVENT_HEADER}")?;
    for e in events {
        write!(
            w,
            "{},{},{},{},",
            e.threshold_index,
            e.kind.as_str(),
            e.confirm_time,
            e.confirm_price
        )?;
        match e.overshoot {
            Some(o) => writeln!(w, "{},{}", o.amplitude, o.duration_ms)?,
            None => writeln!(w, ",")?,
        }
    }
    Ok(())
}

pub fn read_transitions(input: impl Read, n: usize) -> Result<Vec<TransitionRecord>> {
    let mut rows = Rows::new(input, TRANSITION_HEADER)?;
    let mut out = Vec::new();
    while let Some((line, r)) = rows.next()? {
        let from =
            MarketState::new(field(r, 1, "from_state", line)?, n).map_err(|e| at_line(line, e))?;
        let to =
            MarketState::new(field(r, 2, "to_state", line)?, n).map_err(|e| at_line(line, e))?;
        if !from.can_reach(to) {
            return Err(at_line(
                line,
                dcnet_core::Error::IllegalTransition {
                    from: from.code(),
                    to: to.code(),
                },
            ));
        }
        out.push(TransitionRecord {
            time_ms: field(r, 0, "time_ms", line)?,
            from,
            to,
            trigger_threshold: field(r, 3, "trigger_threshold", line)?,
        });
    }
    Ok(out)
}

pub fn write_transitions(w: &mut dyn Write, records: &[TransitionRecord]) -> io::Result<()> {
    writeln!(w, "{TRANSITION_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{}",
            r.time_ms,
            r.from.code(),
            r.to.code(),
            r.trigger_threshold
        )?;
    }
    Ok(())
}

/// Reads sparse triplets; the network size follows from the largest code.
pub fn read_matrix(input: impl Read) -> Result<TransitionMatrix> {
    let mut rows = Rows::new(input, MATRIX_HEADER)?;
    let mut triplets = Vec::new();
    while let Some((line, r)) = rows.next()? {
        triplets.push((
            field::<u32>(r, 0, "from", line)?,
            field::<u32>(r, 1, "to", line)?,
            field::<f64>(r, 2, "prob", line)?,
        ));
    }
    let max = triplets
        .iter()
        .map(|&(a, b, _)| a.max(b))
        .max()
        .ok_or_else(|| Error::parse(1, "matrix file has no entries"))?;
    let n = (u32::BITS - max.leading_zeros()).max(1) as usize;
    Ok(TransitionMatrix::from_triplets(n, &triplets)?)
}

pub fn write_matrix(w: &mut dyn Write, matrix: &TransitionMatrix) -> io::Result<()> {
    writeln!(w, "{MATRIX_HEADER}")?;
    for (from, to, p) in matrix.triplets() {
        writeln!(w, "{from},{to},{p}")?;
    }
    Ok(())
}

/// Statistics are written with six decimals.
pub fn write_liquidity(w: &mut dyn Write, samples: &[LiquiditySample]) -> io::Result<()> {
    writeln!(w, "{LIQUIDITY_HEADER}")?;
    for s in samples {
        writeln!(
            w,
            "{},{},{:.6},{:.6},{:.6},{}",
            s.time_ms,
            s.k,
            s.surprise,
            s.z,
            s.liquidity,
            u8::from(s.low_confidence)
        )?;
    }
    Ok(())
}

/// Reads a whole file (gzip or plain) through [`open_input`].
pub fn read_ticks_file(path: &Path) -> Result<PriceSeries> {
    let instrument = path
        .file_stem()
        .map(|s| s.to_string_lossy().trim_end_matches(".csv").to_string())
        .unwrap_or_default();
    read_ticks(open_input(path)?, &instrument)
}
