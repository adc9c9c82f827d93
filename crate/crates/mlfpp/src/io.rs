//! CSV and JSON formats.
//!
//! Machine outputs use `.` decimals, UTF-8, LF line endings and floats with
//! 17 significant digits; an empty field marks a missing value.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use mlfpp_core::seasonal::ReturnTimeSeries;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pot::ObservationSeries;

/// `x` with 17 significant digits; empty for `None` and non-finite values.
pub fn fmt_float(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v:.16e}"),
        _ => String::new(),
    }
}

/// RFC 3339, or a naive `YYYY-MM-DD[ T]HH[:MM[:SS]]` / `YYYY-MM-DD` read as UTC.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    const FORMATS: [&str; 6] = ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M", "%Y-%m-%dT%H", "%Y-%m-%d %H"];
    for f in FORMATS {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, f) {
            return Some(t.and_utc());
        }
    }
    // `%H` alone is not accepted by chrono as a complete time
    if let Some((date, hour)) = s.split_once(['T', ' ']) {
        if let (Ok(d), Ok(h)) = (NaiveDate::parse_from_str(date, "%Y-%m-%d"), hour.parse::<u32>()) {
            return d.and_hms_opt(h, 0, 0).map(|t| t.and_utc());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok().and_then(|d| d.and_hms_opt(0, 0, 0)).map(|t| t.and_utc())
}

fn open_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, message: message.into() }
}

/// Column indices for `names` in the header; `None` for absent optional ones.
fn columns<const N: usize>(path: &Path, reader: &mut csv::Reader<File>, names: [(&str, bool); N]) -> Result<[Option<usize>; N]> {
    let header = reader.headers().map_err(|e| parse_error(path, 1, e.to_string()))?.clone();
    let mut out = [None; N];
    for (slot, (name, required)) in out.iter_mut().zip(names) {
        *slot = header.iter().position(|h| h == name);
        if required && slot.is_none() {
            return Err(parse_error(path, 1, format!("missing column `{name}`")));
        }
    }
    Ok(out)
}

fn records<'a>(path: &Path, reader: &'a mut csv::Reader<File>) -> impl Iterator<Item = Result<(u64, csv::StringRecord)>> + 'a {
    let path = path.to_path_buf();
    reader.records().map(move |r| {
        let r = r.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(&path, line, e.to_string())
        })?;
        let line = r.position().map_or(0, |p| p.line());
        Ok((line, r))
    })
}

fn field<T: std::str::FromStr>(path: &Path, line: u64, r: &csv::StringRecord, idx: usize, name: &str) -> Result<T> {
    let raw = r.get(idx).unwrap_or("");
    raw.parse().map_err(|_| parse_error(path, line, format!("invalid {name} {raw:?}")))
}

/// Observation CSV with header `timestamp,value`; the cadence is the
/// median time step unless given.
pub fn read_observations(path: &Path, cadence_hours: Option<f64>) -> Result<ObservationSeries> {
    let mut reader = open_reader(path)?;
    let [ts_col, value_col] = columns(path, &mut reader, [("timestamp", true), ("value", true)])?;
    let (ts_col, value_col) = (ts_col.expect("required"), value_col.expect("required"));
    let mut timestamps: Vec<DateTime<Utc>> = Vec::new();
    let mut values = Vec::new();
    for rec in records(path, &mut reader) {
        let (line, r) = rec?;
        let raw = r.get(ts_col).unwrap_or("");
        let t = parse_timestamp(raw).ok_or_else(|| parse_error(path, line, format!("invalid timestamp {raw:?}")))?;
        if timestamps.last().is_some_and(|&prev| prev >= t) {
            return Err(parse_error(path, line, "timestamps must be strictly increasing"));
        }
        let v: f64 = field(path, line, &r, value_col, "value")?;
        if !v.is_finite() {
            return Err(parse_error(path, line, "value must be finite"));
        }
        timestamps.push(t);
        values.push(v);
    }
    if timestamps.is_empty() {
        return Err(parse_error(path, 1, "no observations"));
    }
    match cadence_hours {
        Some(c) => ObservationSeries::new(timestamps, values, c),
        None => ObservationSeries::with_inferred_cadence(timestamps, values),
    }
}

/// One row of a grid manifest; `path` is resolved against the manifest's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub lat: f64,
    pub lon: f64,
    pub path: PathBuf,
}

/// Manifest CSV with header `lat,lon,path`.
pub fn read_manifest(path: &Path) -> Result<Vec<GridPoint>> {
    let mut reader = open_reader(path)?;
    let [lat, lon, file] = columns(path, &mut reader, [("lat", true), ("lon", true), ("path", true)])?.map(|c| c.expect("required"));
    let base = path.parent().unwrap_or(Path::new(""));
    let mut out = Vec::new();
    for rec in records(path, &mut reader) {
        let (line, r) = rec?;
        let lat: f64 = field(path, line, &r, lat, "lat")?;
        let lon: f64 = field(path, line, &r, lon, "lon")?;
        let p = PathBuf::from(r.get(file).unwrap_or(""));
        if p.as_os_str().is_empty() {
            return Err(parse_error(path, line, "empty path"));
        }
        out.push(GridPoint { lat, lon, path: base.join(p) });
    }
    Ok(out)
}

/// Contents of a return-time CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnTimeTable {
    pub return_times: Vec<f64>,
    pub start_days: Option<Vec<u16>>,
    /// Raw (unnormalized) observation weights.
    pub weights: Option<Vec<f64>>,
}

impl ReturnTimeTable {
    pub fn series(&self) -> Result<ReturnTimeSeries> {
        let days = self.start_days.clone().ok_or_else(|| Error::Config("input has no start_day column".into()))?;
        Ok(ReturnTimeSeries::new(self.return_times.clone(), days)?)
    }
}

/// Return-time CSV: column `return_time_hours`, optional `start_day` and
/// `weight`.
pub fn read_return_times(path: &Path) -> Result<ReturnTimeTable> {
    let mut reader = open_reader(path)?;
    let [w_col, day_col, weight_col] = columns(path, &mut reader, [("return_time_hours", true), ("start_day", false), ("weight", false)])?;
    let w_col = w_col.expect("required");
    let mut out = ReturnTimeTable {
        return_times: Vec::new(),
        start_days: day_col.map(|_| Vec::new()),
        weights: weight_col.map(|_| Vec::new()),
    };
    for rec in records(path, &mut reader) {
        let (line, r) = rec?;
        let w: f64 = field(path, line, &r, w_col, "return time")?;
        if !(w > 0.0 && w.is_finite()) {
            return Err(parse_error(path, line, "return time must be positive and finite"));
        }
        out.return_times.push(w);
        if let (Some(c), Some(days)) = (day_col, out.start_days.as_mut()) {
            let d: u16 = field(path, line, &r, c, "start_day")?;
            if !(1..=365).contains(&d) {
                return Err(parse_error(path, line, "start_day must lie in 1..=365"));
            }
            days.push(d);
        }
        if let (Some(c), Some(weights)) = (weight_col, out.weights.as_mut()) {
            let v: f64 = field(path, line, &r, c, "weight")?;
            if !(v >= 0.0 && v.is_finite()) {
                return Err(parse_error(path, line, "weight must be finite and non-negative"));
            }
            weights.push(v);
        }
    }
    Ok(out)
}

/// Buffered CSV writer with LF terminators.
pub struct CsvOut {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(BufWriter::new(file));
        let mut out = Self { path: path.to_path_buf(), writer };
        out.row(header)?;
        Ok(out)
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(|e| Error::Serialize(format!("{}: {e}", self.path.display())))
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub fn write_return_times(path: &Path, s: &ReturnTimeSeries) -> Result<()> {
    let mut out = CsvOut::create(path, &["return_time_hours", "start_day"])?;
    for (w, d) in s.return_times().iter().zip(s.start_days()) {
        out.row([fmt_float(Some(*w)), d.to_string()])?;
    }
    out.finish()
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Serialize(e.to_string()))?;
    text.push('\n');
    let mut f = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    f.write_all(text.as_bytes()).and_then(|_| f.flush()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 12345.678] {
            let s = fmt_float(Some(x));
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_float(Some(1.5)), "1.5000000000000000e0");
        assert_eq!(fmt_float(None), "");
        assert_eq!(fmt_float(Some(f64::NAN)), "");
    }

    #[test]
    fn timestamp_forms() {
        let t = Utc.with_ymd_and_hms(1980, 1, 1, 6, 0, 0).unwrap();
        for s in ["1980-01-01T06:00:00Z", "1980-01-01T06:00:00.000", "1980-01-01T06:00:00", "1980-01-01 06:00", "1980-01-01T06", "1980-01-01T06:00:00+00:00"] {
            assert_eq!(parse_timestamp(s), Some(t), "{s}");
        }
        assert_eq!(parse_timestamp("1980-01-01"), Some(t - chrono::Duration::hours(6)));
        assert_eq!(parse_timestamp("yesterday"), None);
    }

    #[test]
    fn malformed_rows_report_their_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        std::fs::write(&p, "return_time_hours\n3.0\n4.0\nabc\n").unwrap();
        match read_return_times(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        std::fs::write(&p, "timestamp,value\n1980-01-01T00,1\n1980-01-01T00,2\n").unwrap();
        match read_observations(&p, None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn return_time_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rt.csv");
        let s = ReturnTimeSeries::new(vec![30.0, 0.125], vec![1, 365]).unwrap();
        write_return_times(&p, &s).unwrap();
        let t = read_return_times(&p).unwrap();
        assert_eq!(t.series().unwrap(), s);
        assert!(t.weights.is_none());
    }

    #[test]
    fn manifest_paths_are_relative_to_the_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("grid.csv");
        std::fs::write(&p, "lat,lon,path\n56,-40,a.csv\n").unwrap();
        let g = read_manifest(&p).unwrap();
        assert_eq!(g, vec![GridPoint { lat: 56.0, lon: -40.0, path: dir.path().join("a.csv") }]);
    }
}
