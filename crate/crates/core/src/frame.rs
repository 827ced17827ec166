//! CAN frames, candump-style log files and the byte series the detector monitors.
//!
//! The detector never looks at identifiers or timing: it consumes the payload
//! bytes of consecutive frames concatenated in bus order. Timestamps ride along
//! in the [`ByteSeries`] index map so that byte positions can be mapped back to
//! wall-clock time for reporting.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest payload a classic CAN frame carries.
pub const MAX_PAYLOAD: usize = 8;

const MAX_STANDARD_ID: u32 = 0x7FF;
const MAX_EXTENDED_ID: u32 = 0x1FFF_FFFF;
const MICROS_PER_SEC: u64 = 1_000_000;

/// Identifies which part of a log line was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineField {
    Timestamp,
    Channel,
    Id,
    Payload,
    Structure,
}

impl fmt::Display for LineField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            LineField::Timestamp => "timestamp",
            LineField::Channel => "channel",
            LineField::Id => "id",
            LineField::Payload => "payload",
            LineField::Structure => "line",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("malformed {field}: {reason}")]
    MalformedLine { field: LineField, reason: String },
    #[error("payload has {digits} hex digits, at most 16 allowed")]
    PayloadTooLong { digits: usize },
    #[error("identifier {id:#X} out of range for {} format", if *.extended { "extended" } else { "standard" })]
    BadId { id: u32, extended: bool },
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<FrameError>,
    },
    #[error("frame {index} has timestamp earlier than its predecessor")]
    NonMonotonicTimestamp { index: usize },
    #[error("annotation `{label}` lies outside the log's time range")]
    AnnotationOutOfRange { label: String },
    #[error("id filter must not be empty")]
    EmptyFilter,
    #[error("no frame payload bytes passed the filter")]
    EmptyResult,
    #[error("annotation file: {0}")]
    Annotation(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl FrameError {
    fn malformed(field: LineField, reason: impl Into<String>) -> Self {
        FrameError::MalformedLine {
            field,
            reason: reason.into(),
        }
    }

    fn at_line(self, line: usize) -> Self {
        FrameError::AtLine {
            line,
            source: Box::new(self),
        }
    }
}

impl From<std::io::Error> for FrameError {
    fn from(err: std::io::Error) -> Self {
        FrameError::Io(err.to_string())
    }
}

/// An 11-bit standard or 29-bit extended identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct CanId {
    raw: u32,
    extended: bool,
}

impl CanId {
    pub fn standard(raw: u32) -> Result<Self, FrameError> {
        if raw > MAX_STANDARD_ID {
            return Err(FrameError::BadId {
                id: raw,
                extended: false,
            });
        }
        Ok(CanId { raw, extended: false })
    }

    pub fn extended(raw: u32) -> Result<Self, FrameError> {
        if raw > MAX_EXTENDED_ID {
            return Err(FrameError::BadId {
                id: raw,
                extended: true,
            });
        }
        Ok(CanId { raw, extended: true })
    }

    /// Standard format when the value fits in 11 bits, extended otherwise.
    pub fn from_raw(raw: u32) -> Result<Self, FrameError> {
        if raw <= MAX_STANDARD_ID {
            Self::standard(raw)
        } else {
            Self::extended(raw)
        }
    }

    pub fn raw(self) -> u32 {
        self.raw
    }

    pub fn is_extended(self) -> bool {
        self.extended
    }

    /// Key ordering frames by bus arbitration: the lower key wins. The 11-bit
    /// base identifier decides first; a standard frame beats an extended one
    /// sharing the same base.
    pub fn arbitration_key(self) -> (u32, u8, u32) {
        if self.extended {
            (self.raw >> 18, 1, self.raw)
        } else {
            (self.raw, 0, 0)
        }
    }
}

impl TryFrom<u32> for CanId {
    type Error = FrameError;

    fn try_from(raw: u32) -> Result<Self, Self::Error> {
        CanId::from_raw(raw)
    }
}

impl From<CanId> for u32 {
    fn from(id: CanId) -> u32 {
        id.raw
    }
}

impl fmt::Display for CanId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.extended {
            write!(f, "{:08X}", self.raw)
        } else {
            write!(f, "{:03X}", self.raw)
        }
    }
}

/// One classic CAN data frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanFrame {
    /// Microseconds since the start of the capture.
    pub timestamp_us: u64,
    pub id: CanId,
    payload: Vec<u8>,
    pub channel: String,
}

impl CanFrame {
    pub fn new(timestamp_us: u64, id: CanId, payload: Vec<u8>, channel: impl Into<String>) -> Result<Self, FrameError> {
        if payload.len() > MAX_PAYLOAD {
            return Err(FrameError::PayloadTooLong {
                digits: payload.len() * 2,
            });
        }
        Ok(CanFrame {
            timestamp_us,
            id,
            payload,
            channel: channel.into(),
        })
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn timestamp_secs(&self) -> f64 {
        self.timestamp_us as f64 / MICROS_PER_SEC as f64
    }
}

pub fn secs_to_micros(secs: f64) -> u64 {
    (secs * MICROS_PER_SEC as f64).round().max(0.0) as u64
}

pub fn micros_to_secs(us: u64) -> f64 {
    us as f64 / MICROS_PER_SEC as f64
}

fn format_micros(us: u64) -> String {
    format!("{}.{:06}", us / MICROS_PER_SEC, us % MICROS_PER_SEC)
}

/// Parses a non-negative decimal seconds value into microseconds without going
/// through floating point. Digits beyond the sixth decimal are rounded.
fn parse_timestamp(text: &str) -> Result<u64, FrameError> {
    let bad = |reason: &str| FrameError::malformed(LineField::Timestamp, format!("`{text}`: {reason}"));
    let (int_part, frac_part) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text, ""),
    };
    if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad("expected decimal seconds"));
    }
    if !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad("expected decimal seconds"));
    }
    let secs: u64 = int_part.parse().map_err(|_| bad("seconds overflow"))?;
    let mut micros = 0u64;
    for (i, digit) in frac_part.bytes().take(6).enumerate() {
        micros += u64::from(digit - b'0') * 10u64.pow(5 - i as u32);
    }
    if let Some(next) = frac_part.as_bytes().get(6).copied() {
        if next >= b'5' {
            micros += 1;
        }
    }
    secs.checked_mul(MICROS_PER_SEC)
        .and_then(|s| s.checked_add(micros))
        .ok_or_else(|| bad("seconds overflow"))
}

fn parse_id(text: &str) -> Result<CanId, FrameError> {
    let digits = text
        .strip_prefix("0x")
        .or_else(|| text.strip_prefix("0X"))
        .unwrap_or(text);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(FrameError::malformed(
            LineField::Id,
            format!("`{text}` is not hexadecimal"),
        ));
    }
    let value = u32::from_str_radix(digits, 16).map_err(|_| FrameError::BadId {
        id: u32::MAX,
        extended: true,
    })?;
    match digits.len() {
        1..=3 => CanId::standard(value),
        8 => CanId::extended(value),
        n => Err(FrameError::malformed(
            LineField::Id,
            format!("`{text}` has {n} digits, expected 3 or 8"),
        )),
    }
}

fn parse_payload(hex: &str) -> Result<Vec<u8>, FrameError> {
    if !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(FrameError::malformed(
            LineField::Payload,
            format!("`{hex}` is not hexadecimal"),
        ));
    }
    if !hex.len().is_multiple_of(2) {
        return Err(FrameError::malformed(
            LineField::Payload,
            format!("`{hex}` has an odd number of digits"),
        ));
    }
    if hex.len() > 2 * MAX_PAYLOAD {
        return Err(FrameError::PayloadTooLong { digits: hex.len() });
    }
    (0..hex.len())
        .step_by(2)
        .map(|i| {
            u8::from_str_radix(&hex[i..i + 2], 16)
                .map_err(|_| FrameError::malformed(LineField::Payload, hex.to_string()))
        })
        .collect()
}

/// Parses one candump line: `(<ts>) <channel> <ID>#<HEXBYTES>`.
pub fn parse_log_line(line: &str) -> Result<CanFrame, FrameError> {
    let line = line.trim_end_matches(['\r', '\n']);
    let rest = line
        .strip_prefix('(')
        .ok_or_else(|| FrameError::malformed(LineField::Structure, "expected `(` before timestamp"))?;
    let (ts, rest) = rest
        .split_once(')')
        .ok_or_else(|| FrameError::malformed(LineField::Structure, "unterminated timestamp"))?;
    let timestamp_us = parse_timestamp(ts)?;

    let mut parts = rest.split_whitespace();
    let channel = parts
        .next()
        .ok_or_else(|| FrameError::malformed(LineField::Channel, "missing channel"))?;
    let body = parts
        .next()
        .ok_or_else(|| FrameError::malformed(LineField::Structure, "missing `ID#DATA`"))?;
    if let Some(extra) = parts.next() {
        return Err(FrameError::malformed(
            LineField::Structure,
            format!("unexpected trailing field `{extra}`"),
        ));
    }
    let (id, hex) = body
        .split_once('#')
        .ok_or_else(|| FrameError::malformed(LineField::Structure, format!("`{body}` lacks `#`")))?;
    let id = parse_id(id)?;
    let payload = parse_payload(hex)?;
    CanFrame::new(timestamp_us, id, payload, channel)
}

/// Parses the CSV variant `timestamp,id,hexdata`; the channel defaults to `can0`.
pub fn parse_csv_line(line: &str) -> Result<CanFrame, FrameError> {
    let fields: Vec<&str> = line.trim_end_matches(['\r', '\n']).split(',').map(str::trim).collect();
    if fields.len() != 3 {
        return Err(FrameError::malformed(
            LineField::Structure,
            format!("expected 3 comma-separated fields, found {}", fields.len()),
        ));
    }
    let timestamp_us = parse_timestamp(fields[0])?;
    let id = parse_id(fields[1])?;
    let payload = parse_payload(fields[2])?;
    CanFrame::new(timestamp_us, id, payload, "can0")
}

/// Renders a frame as a candump line (no trailing newline).
pub fn serialize_frame(frame: &CanFrame) -> String {
    let mut out = format!(
        "({}) {} {}#",
        format_micros(frame.timestamp_us),
        frame.channel,
        frame.id
    );
    for byte in &frame.payload {
        out.push_str(&format!("{byte:02X}"));
    }
    out
}

/// A labelled time interval `[start, end)` during which an attack was active.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub label: String,
    pub start_us: u64,
    pub end_us: u64,
}

/// An ordered capture plus ground-truth metadata.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FrameLog {
    frames: Vec<CanFrame>,
    pub source: String,
    annotations: Vec<Annotation>,
    /// Transmitting ECU per frame when known (simulator output); empty otherwise.
    senders: Vec<String>,
}

impl FrameLog {
    pub fn new(frames: Vec<CanFrame>, source: impl Into<String>) -> Result<Self, FrameError> {
        if let Some(index) = frames.windows(2).position(|w| w[1].timestamp_us < w[0].timestamp_us) {
            return Err(FrameError::NonMonotonicTimestamp { index: index + 1 });
        }
        Ok(FrameLog {
            frames,
            source: source.into(),
            annotations: Vec::new(),
            senders: Vec::new(),
        })
    }

    pub fn frames(&self) -> &[CanFrame] {
        &self.frames
    }

    pub fn annotations(&self) -> &[Annotation] {
        &self.annotations
    }

    pub fn senders(&self) -> &[String] {
        &self.senders
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn time_range(&self) -> Option<(u64, u64)> {
        Some((self.frames.first()?.timestamp_us, self.frames.last()?.timestamp_us))
    }

    pub fn add_annotation(&mut self, annotation: Annotation) -> Result<(), FrameError> {
        let (first, last) = self.time_range().unwrap_or((0, 0));
        if annotation.start_us < first || annotation.end_us > last || annotation.end_us < annotation.start_us {
            return Err(FrameError::AnnotationOutOfRange {
                label: annotation.label,
            });
        }
        self.annotations.push(annotation);
        Ok(())
    }

    pub(crate) fn set_senders(&mut self, senders: Vec<String>) {
        debug_assert_eq!(senders.len(), self.frames.len());
        self.senders = senders;
    }

    /// Appends another log whose frames start no earlier than this one ends.
    pub fn extend(&mut self, other: FrameLog) -> Result<(), FrameError> {
        if let (Some(last), Some(first)) = (self.frames.last(), other.frames.first()) {
            if first.timestamp_us < last.timestamp_us {
                return Err(FrameError::NonMonotonicTimestamp {
                    index: self.frames.len(),
                });
            }
        }
        let keep_senders = self.senders.len() == self.frames.len()
            && other.senders.len() == other.frames.len()
            && (!self.senders.is_empty() || self.frames.is_empty());
        if keep_senders {
            self.senders.extend(other.senders);
        } else {
            self.senders.clear();
        }
        self.frames.extend(other.frames);
        self.annotations.extend(other.annotations);
        Ok(())
    }
}

/// Options for [`read_log`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ReadOptions {
    /// Skip unparseable lines instead of aborting; they are still reported.
    pub skip_bad_lines: bool,
}

/// Result of reading a log: the frames plus any lines that were skipped.
#[derive(Debug)]
pub struct ReadOutcome {
    pub log: FrameLog,
    pub skipped: Vec<(usize, FrameError)>,
}

/// Reads candump text or the CSV variant (detected per line). Blank lines,
/// `#` comments and a `timestamp,id,hexdata` header are ignored. Line numbers
/// in errors are 1-based.
pub fn read_log<R: BufRead>(reader: R, source: &str, options: ReadOptions) -> Result<ReadOutcome, FrameError> {
    let mut frames = Vec::new();
    let mut skipped = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if trimmed.eq_ignore_ascii_case("timestamp,id,hexdata") {
            continue;
        }
        let parsed = if trimmed.starts_with('(') {
            parse_log_line(trimmed)
        } else {
            parse_csv_line(trimmed)
        };
        match parsed {
            Ok(frame) => frames.push(frame),
            Err(err) if options.skip_bad_lines => skipped.push((line_no, err)),
            Err(err) => return Err(err.at_line(line_no)),
        }
    }
    Ok(ReadOutcome {
        log: FrameLog::new(frames, source)?,
        skipped,
    })
}

pub fn write_log<W: Write>(mut writer: W, log: &FrameLog) -> std::io::Result<()> {
    for frame in &log.frames {
        writeln!(writer, "{}", serialize_frame(frame))?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct AnnotationRow {
    label: String,
    start_ts: String,
    end_ts: String,
}

/// Writes the annotation sidecar `label,start_ts,end_ts`.
pub fn write_annotations<W: Write>(writer: W, annotations: &[Annotation]) -> Result<(), FrameError> {
    // Headers are written up front so an attack-free run still gets one.
    let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    csv.write_record(["label", "start_ts", "end_ts"])
        .map_err(|e| FrameError::Annotation(e.to_string()))?;
    for a in annotations {
        csv.serialize(AnnotationRow {
            label: a.label.clone(),
            start_ts: format_micros(a.start_us),
            end_ts: format_micros(a.end_us),
        })
        .map_err(|e| FrameError::Annotation(e.to_string()))?;
    }
    csv.flush()?;
    Ok(())
}

pub fn read_annotations<R: std::io::Read>(reader: R) -> Result<Vec<Annotation>, FrameError> {
    let mut csv = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in csv.deserialize::<AnnotationRow>().enumerate() {
        let row = row.map_err(|e| FrameError::Annotation(e.to_string()))?;
        let parse = |s: &str| parse_timestamp(s).map_err(|e| e.at_line(i + 2));
        let annotation = Annotation {
            label: row.label,
            start_us: parse(&row.start_ts)?,
            end_us: parse(&row.end_ts)?,
        };
        if annotation.end_us < annotation.start_us {
            return Err(FrameError::Annotation(format!("row {}: end precedes start", i + 2)));
        }
        out.push(annotation);
    }
    Ok(out)
}

/// Where a byte of the series came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ByteOrigin {
    pub frame: usize,
    pub offset: u8,
    pub timestamp_us: u64,
}

/// Payload bytes of consecutive frames concatenated in bus order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ByteSeries {
    values: Vec<u8>,
    index_map: Vec<ByteOrigin>,
}

impl ByteSeries {
    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn index_map(&self) -> &[ByteOrigin] {
        &self.index_map
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp_us(&self, index: usize) -> Option<u64> {
        self.index_map.get(index).map(|o| o.timestamp_us)
    }

    /// Index of the first byte whose frame timestamp is `>= us`.
    pub fn first_index_at_or_after(&self, us: u64) -> usize {
        self.index_map.partition_point(|o| o.timestamp_us < us)
    }

    /// Byte positions belonging to frames with timestamps in `[start_us, end_us)`.
    pub fn byte_range(&self, start_us: u64, end_us: u64) -> Range<usize> {
        let start = self.first_index_at_or_after(start_us);
        let end = self.first_index_at_or_after(end_us).max(start);
        start..end
    }
}

/// Flattens a log into the monitored byte series. With no filter the whole
/// bus is treated as a single signal.
pub fn extract_byte_series(log: &FrameLog, id_filter: Option<&BTreeSet<CanId>>) -> Result<ByteSeries, FrameError> {
    if matches!(id_filter, Some(f) if f.is_empty()) {
        return Err(FrameError::EmptyFilter);
    }
    let mut series = ByteSeries::default();
    for (frame_index, frame) in log.frames.iter().enumerate() {
        if let Some(filter) = id_filter {
            if !filter.contains(&frame.id) {
                continue;
            }
        }
        for (offset, &byte) in frame.payload.iter().enumerate() {
            series.values.push(byte);
            series.index_map.push(ByteOrigin {
                frame: frame_index,
                offset: offset as u8,
                timestamp_us: frame.timestamp_us,
            });
        }
    }
    if series.is_empty() {
        return Err(FrameError::EmptyResult);
    }
    Ok(series)
}
