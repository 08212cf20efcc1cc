//! Traces, windows and catalogs, plus their on-disk formats.
//!
//! Two trace encodings are supported:
//!
//! * CSV: a header line `station=<id>,channel=<c>,start=<epoch_s>,rate=<hz>`
//!   followed by one decimal amplitude per line.
//! * Binary: magic `QSIF`, version byte `1`, then little-endian `rate: f64`,
//!   `start: f64`, station and channel as `u32` length + UTF-8 bytes,
//!   `count: u64` and `count` samples as `f64`.
//!
//! Catalogs are CSV files with the header `origin_time,magnitude,id`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 4] = b"QSIF";
pub const BINARY_VERSION: u8 = 1;

/// Default window length in seconds.
pub const DEFAULT_WINDOW_S: f64 = 20.0;
/// Default separation between noise windows and catalog origins.
pub const DEFAULT_GUARD_S: f64 = 60.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub station_id: String,
    pub channel: String,
    /// Seconds since the Unix epoch.
    pub start_time: f64,
    pub sampling_rate: f64,
    pub samples: Vec<f64>,
}

impl Trace {
    pub fn new(
        station_id: impl Into<String>,
        channel: impl Into<String>,
        start_time: f64,
        sampling_rate: f64,
        samples: Vec<f64>,
    ) -> Result<Self> {
        let trace = Trace {
            station_id: station_id.into(),
            channel: channel.into(),
            start_time,
            sampling_rate,
            samples,
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sampling_rate > 0.0) || !self.sampling_rate.is_finite() {
            return Err(Error::NonPositiveRate);
        }
        if !self.start_time.is_finite() {
            return Err(Error::MalformedHeader("non-finite start time".into()));
        }
        if self.samples.is_empty() {
            return Err(Error::EmptyTrace);
        }
        if let Some(i) = self.samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteSample(i));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sampling_rate
    }

    pub fn end_time(&self) -> f64 {
        self.start_time + self.duration()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Event,
    Noise,
    Unlabeled,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Event => "event",
            Label::Noise => "noise",
            Label::Unlabeled => "unlabeled",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "event" => Ok(Label::Event),
            "noise" => Ok(Label::Noise),
            "unlabeled" | "" => Ok(Label::Unlabeled),
            other => Err(Error::MalformedData(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub station_id: String,
    pub channel: String,
    pub start_time: f64,
    pub sampling_rate: f64,
    pub samples: Vec<f64>,
    pub label: Label,
}

impl Window {
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sampling_rate
    }

    pub fn with_samples(&self, samples: Vec<f64>) -> Window {
        Window {
            samples,
            ..self.clone()
        }
    }

    /// View the window as a standalone trace (used by the window-directory format).
    pub fn to_trace(&self) -> Trace {
        Trace {
            station_id: self.station_id.clone(),
            channel: self.channel.clone(),
            start_time: self.start_time,
            sampling_rate: self.sampling_rate,
            samples: self.samples.clone(),
        }
    }

    pub fn from_trace(trace: Trace, label: Label) -> Window {
        Window {
            station_id: trace.station_id,
            channel: trace.channel,
            start_time: trace.start_time,
            sampling_rate: trace.sampling_rate,
            samples: trace.samples,
            label,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub origin_time: f64,
    pub magnitude: f64,
    pub id: String,
}

/// Event catalog, always sorted ascending by origin time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Catalog {
    entries: Vec<CatalogEntry>,
}

impl Catalog {
    pub fn new(mut entries: Vec<CatalogEntry>) -> Self {
        entries.sort_by(|a, b| a.origin_time.total_cmp(&b.origin_time));
        Catalog { entries }
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceFormat {
    Csv,
    Binary,
}

impl TraceFormat {
    /// `.csv` is CSV, anything else is binary.
    pub fn from_path(path: &Path) -> TraceFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => TraceFormat::Csv,
            _ => TraceFormat::Binary,
        }
    }
}

pub fn load_trace(path: &Path, format: TraceFormat) -> Result<Trace> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match format {
        TraceFormat::Csv => {
            let text = String::from_utf8(bytes)
                .map_err(|_| Error::MalformedData("trace csv is not UTF-8".into()))?;
            parse_trace_csv(&text)
        }
        TraceFormat::Binary => decode_trace_binary(&bytes),
    }
}

pub fn save_trace(trace: &Trace, path: &Path, format: TraceFormat) -> Result<()> {
    trace.validate()?;
    let bytes = match format {
        TraceFormat::Csv => format_trace_csv(trace)?.into_bytes(),
        TraceFormat::Binary => encode_trace_binary(trace),
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn parse_trace_csv(text: &str) -> Result<Trace> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::MalformedHeader("empty file".into()))?;
    let (mut station, mut channel, mut start, mut rate) = (None, None, None, None);
    for field in header.trim().split(',') {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::MalformedHeader(format!("field {field:?} is not key=value")))?;
        let value = value.trim();
        match key.trim() {
            "station" => station = Some(value.to_string()),
            "channel" => channel = Some(value.to_string()),
            "start" => start = Some(parse_header_f64("start", value)?),
            "rate" => rate = Some(parse_header_f64("rate", value)?),
            other => return Err(Error::MalformedHeader(format!("unknown key {other:?}"))),
        }
    }
    let missing = |k: &str| Error::MalformedHeader(format!("missing key {k:?}"));
    let station = station.ok_or_else(|| missing("station"))?;
    let channel = channel.ok_or_else(|| missing("channel"))?;
    let start = start.ok_or_else(|| missing("start"))?;
    let rate = rate.ok_or_else(|| missing("rate"))?;
    if !(rate > 0.0) {
        return Err(Error::NonPositiveRate);
    }

    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Error::MalformedData(format!("line {}: {line:?}", i + 2)))?;
        if !v.is_finite() {
            return Err(Error::NonFiniteSample(samples.len()));
        }
        samples.push(v);
    }
    Trace::new(station, channel, start, rate, samples)
}

fn parse_header_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| Error::MalformedHeader(format!("{key}={value:?} is not a number")))
}

pub fn format_trace_csv(trace: &Trace) -> Result<String> {
    for s in [&trace.station_id, &trace.channel] {
        if s.contains([',', '=', '\n', '\r']) {
            return Err(Error::MalformedHeader(format!(
                "identifier {s:?} cannot be written to csv"
            )));
        }
    }
    let mut out = format!(
        "station={},channel={},start={:?},rate={:?}\n",
        trace.station_id, trace.channel, trace.start_time, trace.sampling_rate
    );
    out.reserve(trace.samples.len() * 24);
    for x in &trace.samples {
        // Debug formatting is the shortest representation that round-trips.
        out.push_str(&format!("{x:?}\n"));
    }
    Ok(out)
}

pub fn encode_trace_binary(trace: &Trace) -> Vec<u8> {
    let mut buf = Vec::with_capacity(64 + trace.samples.len() * 8);
    buf.extend_from_slice(BINARY_MAGIC);
    buf.push(BINARY_VERSION);
    buf.extend_from_slice(&trace.sampling_rate.to_le_bytes());
    buf.extend_from_slice(&trace.start_time.to_le_bytes());
    for s in [&trace.station_id, &trace.channel] {
        buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
        buf.extend_from_slice(s.as_bytes());
    }
    buf.extend_from_slice(&(trace.samples.len() as u64).to_le_bytes());
    for x in &trace.samples {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::MalformedData("truncated binary trace".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec())
            .map_err(|_| Error::MalformedHeader("identifier is not UTF-8".into()))
    }
}

pub fn decode_trace_binary(bytes: &[u8]) -> Result<Trace> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4).map_err(|_| bad_magic())? != BINARY_MAGIC {
        return Err(bad_magic());
    }
    let version = r.take(1)?[0];
    if version != BINARY_VERSION {
        return Err(Error::MalformedHeader(format!(
            "unsupported version {version}"
        )));
    }
    let rate = r.f64()?;
    let start = r.f64()?;
    let station = r.string()?;
    let channel = r.string()?;
    let count = r.u64()? as usize;
    if !(rate > 0.0) {
        return Err(Error::NonPositiveRate);
    }
    let remaining = bytes.len() - r.pos;
    if count.checked_mul(8) != Some(remaining) {
        return Err(Error::MalformedData(format!(
            "header declares {count} samples but {remaining} payload bytes follow"
        )));
    }
    let samples = r
        .take(remaining)?
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Trace::new(station, channel, start, rate, samples)
}

fn bad_magic() -> Error {
    Error::MalformedHeader("missing QSIF magic".into())
}

pub fn load_catalog(path: &Path) -> Result<Catalog> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_catalog(file)
}

pub fn read_catalog<R: std::io::Read>(reader: R) -> Result<Catalog> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["origin_time", "magnitude", "id"] {
        return Err(Error::MalformedHeader(format!(
            "catalog header must be origin_time,magnitude,id (got {:?})",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let mut entries = Vec::new();
    for record in rdr.deserialize() {
        let entry: CatalogEntry = record?;
        if !entry.origin_time.is_finite() {
            return Err(Error::MalformedData("non-finite origin time".into()));
        }
        entries.push(entry);
    }
    Ok(Catalog::new(entries))
}

pub fn save_catalog(catalog: &Catalog, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_catalog(catalog, &mut buf)?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn write_catalog<W: Write>(catalog: &Catalog, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["origin_time", "magnitude", "id"])?;
    for e in catalog.entries() {
        wtr.write_record([
            format!("{:?}", e.origin_time),
            format!("{:?}", e.magnitude),
            e.id.clone(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<catalog>", e))?;
    Ok(())
}

fn seconds_to_samples(seconds: f64, rate: f64) -> usize {
    (seconds * rate).round().max(0.0) as usize
}

/// Number of windows `cut_windows` produces for the given lengths in samples.
pub fn window_count(n_samples: usize, window_len: usize, step_len: usize) -> usize {
    if window_len == 0 || step_len == 0 || window_len > n_samples {
        0
    } else {
        (n_samples - window_len) / step_len + 1
    }
}

/// Partition a trace into fixed-length windows starting every `step_s`
/// seconds. A trailing remainder shorter than one window is dropped.
pub fn cut_windows(trace: &Trace, window_s: f64, step_s: f64) -> Result<Vec<Window>> {
    if !(window_s > 0.0) || !(step_s > 0.0) {
        return Err(Error::InvalidParameter(
            "window and step lengths must be positive".into(),
        ));
    }
    let rate = trace.sampling_rate;
    let wl = seconds_to_samples(window_s, rate);
    let sl = seconds_to_samples(step_s, rate);
    if wl == 0 || sl == 0 {
        return Err(Error::InvalidParameter(
            "window or step is shorter than one sample".into(),
        ));
    }
    let n = trace.samples.len();
    if wl > n {
        return Err(Error::WindowLongerThanTrace {
            window: wl,
            trace: n,
        });
    }
    Ok((0..window_count(n, wl, sl))
        .map(|k| {
            let i = k * sl;
            Window {
                station_id: trace.station_id.clone(),
                channel: trace.channel.clone(),
                start_time: trace.start_time + k as f64 * step_s,
                sampling_rate: rate,
                samples: trace.samples[i..i + wl].to_vec(),
                label: Label::Unlabeled,
            }
        })
        .collect())
}

/// Cut labeled training windows from a trace.
///
/// Every catalog origin inside the trace yields one event window centered on
/// it. The trace is then tiled with back-to-back windows and each tile whose
/// span `[s, s + window_s)` stays clear of every `[origin - guard_s,
/// origin + guard_s)` becomes a noise window. Event windows come first, in
/// catalog order, followed by noise windows in time order.
pub fn label_windows(
    trace: &Trace,
    catalog: &Catalog,
    window_s: f64,
    guard_s: f64,
) -> Result<Vec<Window>> {
    if !(window_s > 0.0) {
        return Err(Error::InvalidParameter("window length must be positive".into()));
    }
    if !(guard_s >= window_s) {
        return Err(Error::InvalidParameter(format!(
            "guard ({guard_s} s) must be at least the window length ({window_s} s)"
        )));
    }
    let rate = trace.sampling_rate;
    let wl = seconds_to_samples(window_s, rate);
    let n = trace.samples.len();
    if wl == 0 {
        return Err(Error::InvalidParameter("window is shorter than one sample".into()));
    }

    let make = |i: usize, label: Label| Window {
        station_id: trace.station_id.clone(),
        channel: trace.channel.clone(),
        start_time: trace.start_time + i as f64 / rate,
        sampling_rate: rate,
        samples: trace.samples[i..i + wl].to_vec(),
        label,
    };

    let mut out = Vec::new();
    for entry in catalog.entries() {
        let offset = (entry.origin_time - window_s / 2.0 - trace.start_time) * rate;
        let i = offset.round();
        if i < 0.0 || i as usize + wl > n {
            continue;
        }
        out.push(make(i as usize, Label::Event));
    }

    for k in 0..n / wl {
        let i = k * wl;
        let s = trace.start_time + i as f64 / rate;
        let e = s + window_s;
        let clear = catalog
            .entries()
            .iter()
            .all(|c| e <= c.origin_time - guard_s || s >= c.origin_time + guard_s);
        if clear {
            out.push(make(i, Label::Noise));
        }
    }
    Ok(out)
}

/// Time of day (UTC) of an epoch timestamp as `HH:MM:SS`.
pub fn format_hms(epoch_s: f64) -> String {
    let secs = epoch_s.floor() as i64;
    let day = secs.rem_euclid(86_400);
    format!("{:02}:{:02}:{:02}", day / 3600, (day % 3600) / 60, day % 60)
}
