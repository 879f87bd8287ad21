//! FIRMS-format VIIRS detection records: parsing, validated domain types,
//! streaming dataset access and derived fields.
//!
//! The input format is the FIRMS VIIRS CSV extract: comma separated, first
//! row is a header, one detection per row. Mandatory columns may appear in
//! any order; unknown extra columns are ignored. Coordinate range violations
//! parse successfully on purpose — they are quality-control findings, not
//! parse failures.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Columns that must be present in the header.
pub const MANDATORY_COLUMNS: [&str; 13] = [
    "latitude",
    "longitude",
    "bright_ti4",
    "scan",
    "track",
    "acq_date",
    "acq_time",
    "satellite",
    "instrument",
    "confidence",
    "version",
    "frp",
    "daynight",
];

/// Canonical column order used when writing records back out (the order of
/// FIRMS archive extracts). `bright_ti5` is optional on input but always
/// written.
pub const CANONICAL_COLUMNS: [&str; 14] = [
    "latitude",
    "longitude",
    "bright_ti4",
    "scan",
    "track",
    "acq_date",
    "acq_time",
    "satellite",
    "instrument",
    "confidence",
    "version",
    "bright_ti5",
    "frp",
    "daynight",
];

/// Detection confidence class. Ordering follows the letter codes: h < l < n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Confidence {
    #[serde(rename = "h")]
    High,
    #[serde(rename = "l")]
    Low,
    #[serde(rename = "n")]
    Nominal,
}

impl Confidence {
    pub const ALL: [Confidence; 3] = [Confidence::High, Confidence::Low, Confidence::Nominal];

    pub fn as_str(self) -> &'static str {
        match self {
            Confidence::High => "h",
            Confidence::Low => "l",
            Confidence::Nominal => "n",
        }
    }

    /// Long-form name used in rendered tables.
    pub fn name(self) -> &'static str {
        match self {
            Confidence::High => "High",
            Confidence::Low => "Low",
            Confidence::Nominal => "Nominal",
        }
    }

    /// Fixed class index (h=0, l=1, n=2) used by the tree learner.
    pub fn index(self) -> usize {
        match self {
            Confidence::High => 0,
            Confidence::Low => 1,
            Confidence::Nominal => 2,
        }
    }

    pub fn from_index(i: usize) -> Confidence {
        Self::ALL[i]
    }

    fn parse(s: &str) -> Option<Confidence> {
        match s {
            "h" => Some(Confidence::High),
            "l" => Some(Confidence::Low),
            "n" => Some(Confidence::Nominal),
            _ => None,
        }
    }
}

impl fmt::Display for Confidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Solar illumination flag at acquisition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DayNight {
    #[serde(rename = "D")]
    Day,
    #[serde(rename = "N")]
    Night,
}

impl DayNight {
    pub const ALL: [DayNight; 2] = [DayNight::Day, DayNight::Night];

    pub fn as_str(self) -> &'static str {
        match self {
            DayNight::Day => "D",
            DayNight::Night => "N",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DayNight::Day => "Day",
            DayNight::Night => "Night",
        }
    }

    pub fn index(self) -> usize {
        match self {
            DayNight::Day => 0,
            DayNight::Night => 1,
        }
    }

    fn parse(s: &str) -> Option<DayNight> {
        match s {
            "D" => Some(DayNight::Day),
            "N" => Some(DayNight::Night),
            _ => None,
        }
    }
}

impl fmt::Display for DayNight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One parsed detection row.
///
/// `acq_time` is normalized from HHMM text to minutes of day so records are
/// orderable; the raw text is retained so a parse/serialize round trip is
/// bit-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FireDetection {
    pub latitude: f64,
    pub longitude: f64,
    /// Brightness temperature, channel I-4 (3.74 µm), kelvin.
    pub bright_ti4: f64,
    /// Brightness temperature, channel I-5, kelvin. Carried for format
    /// fidelity; unused by the analyses.
    pub bright_ti5: Option<f64>,
    /// Pixel along-scan size, km.
    pub scan: f64,
    /// Pixel along-track size, km.
    pub track: f64,
    pub acq_date: NaiveDate,
    /// Minutes of day UTC, 0..=1439.
    pub acq_time: u16,
    /// Original HHMM text (FIRMS extracts write it unpadded).
    pub acq_time_raw: String,
    pub satellite: String,
    pub instrument: String,
    pub confidence: Confidence,
    pub version: String,
    /// Fire radiative power, megawatts.
    pub frp: f64,
    pub daynight: DayNight,
}

impl FireDetection {
    pub fn is_night(&self) -> bool {
        self.daynight == DayNight::Night
    }

    /// Render the record in canonical column order. Values parsed from
    /// canonical text reproduce that text byte for byte.
    pub fn to_csv_fields(&self) -> [String; 14] {
        [
            format!("{:.5}", self.latitude),
            format!("{:.5}", self.longitude),
            format!("{:.2}", self.bright_ti4),
            format!("{:.2}", self.scan),
            format!("{:.2}", self.track),
            self.acq_date.format("%Y-%m-%d").to_string(),
            self.acq_time_raw.clone(),
            self.satellite.clone(),
            self.instrument.clone(),
            self.confidence.as_str().to_string(),
            self.version.clone(),
            self.bright_ti5.map(|v| format!("{:.2}", v)).unwrap_or_default(),
            format!("{:.2}", self.frp),
            self.daynight.as_str().to_string(),
        ]
    }
}

/// Row-level parse failure. Each variant names the offending column and the
/// raw value seen there.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum ParseError {
    #[error("header is missing mandatory column `{column}`")]
    MissingColumn { column: String },
    #[error("column `{column}`: cannot parse `{value}` as a number")]
    UnparseableNumber { column: String, value: String },
    #[error("column `{column}`: invalid confidence `{value}` (expected one of h, n, l)")]
    InvalidConfidence { column: String, value: String },
    #[error("column `{column}`: invalid day/night flag `{value}` (expected D or N)")]
    InvalidDayNight { column: String, value: String },
    #[error("column `{column}`: invalid calendar date `{value}` (expected YYYY-MM-DD)")]
    InvalidDate { column: String, value: String },
    #[error("column `{column}`: invalid HHMM time `{value}`")]
    InvalidTime { column: String, value: String },
}

/// Maps mandatory column names to their positions in this file's header.
#[derive(Debug, Clone)]
pub struct HeaderMap {
    idx: [usize; 13],
    bright_ti5: Option<usize>,
}

impl HeaderMap {
    pub fn from_header<S: AsRef<str>>(fields: &[S]) -> Result<HeaderMap, ParseError> {
        let position = |name: &str| {
            fields
                .iter()
                .position(|f| f.as_ref().trim() == name)
                .ok_or_else(|| ParseError::MissingColumn { column: name.to_string() })
        };
        let mut idx = [0usize; 13];
        for (k, name) in MANDATORY_COLUMNS.iter().enumerate() {
            idx[k] = position(name)?;
        }
        let bright_ti5 = fields.iter().position(|f| f.as_ref().trim() == "bright_ti5");
        Ok(HeaderMap { idx, bright_ti5 })
    }

    fn get<'a>(&self, row: &'a [&'a str], col: usize) -> &'a str {
        row.get(self.idx[col]).copied().unwrap_or("").trim()
    }
}

// Column indices into MANDATORY_COLUMNS.
const COL_LATITUDE: usize = 0;
const COL_LONGITUDE: usize = 1;
const COL_BRIGHT_TI4: usize = 2;
const COL_SCAN: usize = 3;
const COL_TRACK: usize = 4;
const COL_ACQ_DATE: usize = 5;
const COL_ACQ_TIME: usize = 6;
const COL_SATELLITE: usize = 7;
const COL_INSTRUMENT: usize = 8;
const COL_CONFIDENCE: usize = 9;
const COL_VERSION: usize = 10;
const COL_FRP: usize = 11;
const COL_DAYNIGHT: usize = 12;

fn parse_finite(column: &str, raw: &str) -> Result<f64, ParseError> {
    let err = || ParseError::UnparseableNumber {
        column: column.to_string(),
        value: raw.to_string(),
    };
    let v: f64 = raw.parse().map_err(|_| err())?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(err())
    }
}

/// Parse HHMM text (padded or not) to minutes of day.
fn parse_hhmm(raw: &str) -> Option<u16> {
    if raw.is_empty() || raw.len() > 4 || !raw.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let v: u16 = raw.parse().ok()?;
    let (hh, mm) = (v / 100, v % 100);
    if hh <= 23 && mm <= 59 {
        Some(hh * 60 + mm)
    } else {
        None
    }
}

/// Parse one data row against a header map.
///
/// Latitude/longitude range and brightness typical-range checks are
/// deliberately not applied here; those are QC findings. Positivity of
/// brightness, scan and track, and non-negativity of FRP, are hard record
/// invariants and are enforced.
pub fn parse_record(raw_row: &[&str], header: &HeaderMap) -> Result<FireDetection, ParseError> {
    let latitude = parse_finite("latitude", header.get(raw_row, COL_LATITUDE))?;
    let longitude = parse_finite("longitude", header.get(raw_row, COL_LONGITUDE))?;

    let bright_raw = header.get(raw_row, COL_BRIGHT_TI4);
    let bright_ti4 = parse_finite("bright_ti4", bright_raw)?;
    if bright_ti4 <= 0.0 {
        return Err(ParseError::UnparseableNumber {
            column: "bright_ti4".into(),
            value: bright_raw.into(),
        });
    }

    let scan_raw = header.get(raw_row, COL_SCAN);
    let scan = parse_finite("scan", scan_raw)?;
    if scan <= 0.0 {
        return Err(ParseError::UnparseableNumber { column: "scan".into(), value: scan_raw.into() });
    }

    let track_raw = header.get(raw_row, COL_TRACK);
    let track = parse_finite("track", track_raw)?;
    if track <= 0.0 {
        return Err(ParseError::UnparseableNumber {
            column: "track".into(),
            value: track_raw.into(),
        });
    }

    let date_raw = header.get(raw_row, COL_ACQ_DATE);
    let acq_date = NaiveDate::parse_from_str(date_raw, "%Y-%m-%d").map_err(|_| {
        ParseError::InvalidDate { column: "acq_date".into(), value: date_raw.into() }
    })?;

    let time_raw = header.get(raw_row, COL_ACQ_TIME);
    let acq_time = parse_hhmm(time_raw).ok_or_else(|| ParseError::InvalidTime {
        column: "acq_time".into(),
        value: time_raw.into(),
    })?;

    let conf_raw = header.get(raw_row, COL_CONFIDENCE);
    let confidence = Confidence::parse(conf_raw).ok_or_else(|| ParseError::InvalidConfidence {
        column: "confidence".into(),
        value: conf_raw.into(),
    })?;

    let dn_raw = header.get(raw_row, COL_DAYNIGHT);
    let daynight = DayNight::parse(dn_raw).ok_or_else(|| ParseError::InvalidDayNight {
        column: "daynight".into(),
        value: dn_raw.into(),
    })?;

    let frp_raw = header.get(raw_row, COL_FRP);
    let frp = parse_finite("frp", frp_raw)?;
    if frp < 0.0 {
        return Err(ParseError::UnparseableNumber { column: "frp".into(), value: frp_raw.into() });
    }

    let bright_ti5 = match header.bright_ti5 {
        Some(i) => {
            let raw = raw_row.get(i).copied().unwrap_or("").trim();
            if raw.is_empty() {
                None
            } else {
                Some(parse_finite("bright_ti5", raw)?)
            }
        }
        None => None,
    };

    Ok(FireDetection {
        latitude,
        longitude,
        bright_ti4,
        bright_ti5,
        scan,
        track,
        acq_date,
        acq_time,
        acq_time_raw: time_raw.to_string(),
        satellite: header.get(raw_row, COL_SATELLITE).to_string(),
        instrument: header.get(raw_row, COL_INSTRUMENT).to_string(),
        confidence,
        version: header.get(raw_row, COL_VERSION).to_string(),
        frp,
        daynight,
    })
}

/// How the dataset reader treats rows that fail to parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorPolicy {
    /// Abort on the first bad row, reporting its 1-based data row number.
    Strict,
    /// Skip bad rows, tallying a counter per error kind.
    SkipAndCount,
}

/// Per-error-kind tallies of rows skipped under [`ErrorPolicy::SkipAndCount`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipCounts {
    pub unparseable_number: u64,
    pub invalid_confidence: u64,
    pub invalid_daynight: u64,
    pub invalid_date: u64,
    pub invalid_time: u64,
}

impl SkipCounts {
    fn record(&mut self, e: &ParseError) {
        match e {
            ParseError::UnparseableNumber { .. } => self.unparseable_number += 1,
            ParseError::InvalidConfidence { .. } => self.invalid_confidence += 1,
            ParseError::InvalidDayNight { .. } => self.invalid_daynight += 1,
            ParseError::InvalidDate { .. } => self.invalid_date += 1,
            ParseError::InvalidTime { .. } => self.invalid_time += 1,
            // A missing column fails at open time, never per row.
            ParseError::MissingColumn { .. } => {}
        }
    }

    pub fn total(&self) -> u64 {
        self.unparseable_number
            + self.invalid_confidence
            + self.invalid_daynight
            + self.invalid_date
            + self.invalid_time
    }

    pub fn merge(&mut self, other: &SkipCounts) {
        self.unparseable_number += other.unparseable_number;
        self.invalid_confidence += other.invalid_confidence;
        self.invalid_daynight += other.invalid_daynight;
        self.invalid_date += other.invalid_date;
        self.invalid_time += other.invalid_time;
    }
}

/// Errors surfaced while streaming a dataset.
#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: {source}")]
    Parse { row: u64, source: ParseError },
    #[error("{0}")]
    Header(ParseError),
}

/// Streaming reader over a FIRMS CSV. Yields records in file order.
pub struct DatasetReader<R: Read> {
    reader: csv::Reader<R>,
    header: HeaderMap,
    policy: ErrorPolicy,
    row: u64,
    skips: SkipCounts,
    fused: bool,
    buf: csv::StringRecord,
}

impl DatasetReader<File> {
    pub fn open(path: &Path, policy: ErrorPolicy) -> Result<Self, DatasetError> {
        Self::from_reader(File::open(path)?, policy)
    }
}

impl<R: Read> DatasetReader<R> {
    pub fn from_reader(rdr: R, policy: ErrorPolicy) -> Result<Self, DatasetError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .buffer_capacity(1 << 20)
            .from_reader(rdr);
        let headers: Vec<String> = reader.headers()?.iter().map(|s| s.to_string()).collect();
        let header = HeaderMap::from_header(&headers).map_err(DatasetError::Header)?;
        Ok(DatasetReader {
            reader,
            header,
            policy,
            row: 0,
            skips: SkipCounts::default(),
            fused: false,
            buf: csv::StringRecord::new(),
        })
    }

    /// Rows skipped so far (SkipAndCount mode only ever populates this).
    pub fn skip_counts(&self) -> SkipCounts {
        self.skips
    }

    /// 1-based number of data rows consumed so far, skipped rows included.
    pub fn rows_seen(&self) -> u64 {
        self.row
    }
}

impl<R: Read> Iterator for DatasetReader<R> {
    type Item = Result<FireDetection, DatasetError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.fused {
            return None;
        }
        loop {
            match self.reader.read_record(&mut self.buf) {
                Ok(false) => return None,
                Ok(true) => {
                    self.row += 1;
                    let fields: Vec<&str> = self.buf.iter().collect();
                    match parse_record(&fields, &self.header) {
                        Ok(rec) => return Some(Ok(rec)),
                        Err(e) => match self.policy {
                            ErrorPolicy::Strict => {
                                self.fused = true;
                                return Some(Err(DatasetError::Parse { row: self.row, source: e }));
                            }
                            ErrorPolicy::SkipAndCount => {
                                self.skips.record(&e);
                                continue;
                            }
                        },
                    }
                }
                Err(e) => {
                    self.fused = true;
                    return Some(Err(DatasetError::Csv(e)));
                }
            }
        }
    }
}

/// Open a dataset file for streaming.
pub fn open_dataset(path: &Path, policy: ErrorPolicy) -> Result<DatasetReader<File>, DatasetError> {
    DatasetReader::open(path, policy)
}

/// Read an entire file into memory, returning records plus skip counts.
pub fn read_all(
    path: &Path,
    policy: ErrorPolicy,
) -> Result<(Vec<FireDetection>, SkipCounts), DatasetError> {
    let mut rdr = open_dataset(path, policy)?;
    let mut out = Vec::new();
    for rec in &mut rdr {
        out.push(rec?);
    }
    Ok((out, rdr.skip_counts()))
}

/// Write records in canonical column order. The header row is always the
/// 14-column canonical layout.
pub fn write_csv<'a, W: Write>(
    w: &mut W,
    records: impl IntoIterator<Item = &'a FireDetection>,
) -> io::Result<()> {
    writeln!(w, "{}", CANONICAL_COLUMNS.join(","))?;
    for rec in records {
        writeln!(w, "{}", rec.to_csv_fields().join(","))?;
    }
    Ok(())
}

/// Satellite tokens considered known. The archive encodes Suomi-NPP and
/// NOAA-20 with short tokens that vary between extract vintages, so the
/// vocabulary is configurable; unknown tokens are carried through and
/// surfaced by QC as an informational count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SatelliteVocabulary {
    pub tokens: BTreeSet<String>,
}

impl Default for SatelliteVocabulary {
    fn default() -> Self {
        SatelliteVocabulary {
            tokens: ["N", "1", "N20", "NPP"].iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl SatelliteVocabulary {
    pub fn is_known(&self, token: &str) -> bool {
        self.tokens.contains(token)
    }
}

/// Fields derived from a record for downstream aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedFields {
    /// Calendar month of acquisition, 1..=12.
    pub month: u32,
    pub is_night: bool,
    /// (row, col) indices into the lat/lon grid.
    pub grid_cell: (usize, usize),
    /// Latitude band index.
    pub lat_band: usize,
}

/// Does `width` divide 180 degrees into a whole number of intervals?
pub fn divides_180(width: f64) -> bool {
    if !(width > 0.0) {
        return false;
    }
    let n = 180.0 / width;
    n >= 1.0 && (n - n.round()).abs() < 1e-9
}

fn band_index(coord: f64, origin: f64, width: f64, n_cells: usize) -> usize {
    let raw = ((coord - origin) / width).floor();
    if raw < 0.0 {
        0
    } else {
        (raw as usize).min(n_cells - 1)
    }
}

/// Compute derived fields. Total and deterministic for any parsed record:
/// the upper edges (lat 90, lon 180) clamp into the last cell, and
/// out-of-range coordinates (a QC finding, not a parse failure) clamp into
/// the nearest edge cell.
pub fn derive_fields(rec: &FireDetection, grid_cell_size: f64, band_width: f64) -> DerivedFields {
    let n_rows = (180.0 / grid_cell_size).round() as usize;
    let n_cols = (360.0 / grid_cell_size).round() as usize;
    let n_bands = (180.0 / band_width).round() as usize;
    DerivedFields {
        month: rec.acq_date.month(),
        is_night: rec.is_night(),
        grid_cell: (
            band_index(rec.latitude, -90.0, grid_cell_size, n_rows),
            band_index(rec.longitude, -180.0, grid_cell_size, n_cols),
        ),
        lat_band: band_index(rec.latitude, -90.0, band_width, n_bands),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const TEST_HEADER: &str =
        "latitude,longitude,bright_ti4,scan,track,acq_date,acq_time,satellite,instrument,confidence,version,bright_ti5,frp,daynight";

    fn parse_one(row: &str) -> Result<FireDetection, ParseError> {
        let header: Vec<&str> = TEST_HEADER.split(',').collect();
        let map = HeaderMap::from_header(&header).unwrap();
        let fields: Vec<&str> = row.split(',').collect();
        parse_record(&fields, &map)
    }

    #[test]
    fn well_formed_row_round_trips() {
        let row = "-12.34567,45.60000,320.50,0.45,0.39,2023-08-15,0830,N20,VIIRS,n,2.0NRT,290.10,12.34,N";
        let rec = parse_one(row).unwrap();
        assert_eq!(rec.confidence, Confidence::Nominal);
        assert_eq!(rec.daynight, DayNight::Night);
        assert!(rec.is_night());
        assert_eq!(rec.acq_time, 8 * 60 + 30);
        assert_eq!(rec.bright_ti5, Some(290.1));
        assert_eq!(rec.to_csv_fields().join(","), row);
    }

    #[test]
    fn invalid_confidence_is_rejected() {
        let row = "1.0,2.0,300.00,0.40,0.40,2023-01-01,0000,N,VIIRS,x,2.0NRT,,1.00,D";
        match parse_one(row) {
            Err(ParseError::InvalidConfidence { column, value }) => {
                assert_eq!(column, "confidence");
                assert_eq!(value, "x");
            }
            other => panic!("expected InvalidConfidence, got {other:?}"),
        }
    }

    #[test]
    fn out_of_range_latitude_parses() {
        let row = "91.0,2.0,300.00,0.40,0.40,2023-01-01,0000,N,VIIRS,h,2.0NRT,,1.00,D";
        let rec = parse_one(row).unwrap();
        assert_eq!(rec.latitude, 91.0);
    }

    #[test]
    fn invalid_daynight_and_time_and_date() {
        let base = "1.0,2.0,300.00,0.40,0.40,{date},{time},N,VIIRS,h,2.0NRT,,1.00,{dn}";
        let mk = |date: &str, time: &str, dn: &str| {
            base.replace("{date}", date).replace("{time}", time).replace("{dn}", dn)
        };
        assert!(matches!(
            parse_one(&mk("2023-01-01", "0000", "X")),
            Err(ParseError::InvalidDayNight { .. })
        ));
        assert!(matches!(
            parse_one(&mk("2023-01-01", "2460", "D")),
            Err(ParseError::InvalidTime { .. })
        ));
        assert!(matches!(
            parse_one(&mk("2023-13-01", "0000", "D")),
            Err(ParseError::InvalidDate { .. })
        ));
    }

    #[test]
    fn nonpositive_brightness_is_rejected() {
        let row = "1.0,2.0,-5.00,0.40,0.40,2023-01-01,0000,N,VIIRS,h,2.0NRT,,1.00,D";
        assert!(matches!(parse_one(row), Err(ParseError::UnparseableNumber { .. })));
    }

    #[test]
    fn unpadded_time_is_accepted_and_retained() {
        let row = "1.0,2.0,300.00,0.40,0.40,2023-01-01,30,N,VIIRS,h,2.0NRT,,1.00,D";
        let rec = parse_one(row).unwrap();
        assert_eq!(rec.acq_time, 30);
        assert_eq!(rec.acq_time_raw, "30");
        assert_eq!(rec.to_csv_fields()[6], "30");
    }

    #[test]
    fn missing_column_is_reported() {
        let header: Vec<&str> = "latitude,longitude".split(',').collect();
        match HeaderMap::from_header(&header) {
            Err(ParseError::MissingColumn { column }) => assert_eq!(column, "bright_ti4"),
            other => panic!("expected MissingColumn, got {other:?}"),
        }
    }

    fn dataset(rows: &[&str]) -> String {
        let mut s = String::from(TEST_HEADER);
        for r in rows {
            s.push('\n');
            s.push_str(r);
        }
        s
    }

    const GOOD: &str = "1.0,2.0,300.00,0.40,0.40,2023-01-01,0000,N,VIIRS,h,2.0NRT,,1.00,D";
    const BAD_CONF: &str = "1.0,2.0,300.00,0.40,0.40,2023-01-01,0000,N,VIIRS,z,2.0NRT,,1.00,D";

    #[test]
    fn strict_mode_reports_row_number() {
        let data = dataset(&[GOOD, BAD_CONF, GOOD]);
        let mut rdr =
            DatasetReader::from_reader(data.as_bytes(), ErrorPolicy::Strict).unwrap();
        assert!(rdr.next().unwrap().is_ok());
        match rdr.next().unwrap() {
            Err(DatasetError::Parse { row, source }) => {
                assert_eq!(row, 2);
                assert!(matches!(source, ParseError::InvalidConfidence { .. }));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(rdr.next().is_none(), "strict reader fuses after the first error");
    }

    #[test]
    fn skip_and_count_tallies_per_kind() {
        let data = dataset(&[GOOD, BAD_CONF, GOOD]);
        let mut rdr =
            DatasetReader::from_reader(data.as_bytes(), ErrorPolicy::SkipAndCount).unwrap();
        let recs: Vec<_> = (&mut rdr).collect::<Result<_, _>>().unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(rdr.skip_counts().invalid_confidence, 1);
        assert_eq!(rdr.skip_counts().total(), 1);
    }

    #[test]
    fn clean_strict_stream_yields_all() {
        let data = dataset(&[GOOD, GOOD, GOOD]);
        let mut rdr = DatasetReader::from_reader(data.as_bytes(), ErrorPolicy::Strict).unwrap();
        let recs: Vec<_> = (&mut rdr).collect::<Result<_, _>>().unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(rdr.skip_counts().total(), 0);
    }

    #[test]
    fn grid_corners_and_clamping() {
        let mut rec = parse_one(GOOD).unwrap();
        rec.latitude = -90.0;
        rec.longitude = -180.0;
        assert_eq!(derive_fields(&rec, 10.0, 10.0).grid_cell, (0, 0));
        rec.latitude = 90.0;
        rec.longitude = 180.0;
        assert_eq!(derive_fields(&rec, 10.0, 10.0).grid_cell, (17, 35));
        rec.latitude = 89.9999;
        rec.longitude = 179.9999;
        assert_eq!(derive_fields(&rec, 10.0, 10.0).grid_cell, (17, 35));
    }

    #[test]
    fn month_comes_from_acq_date() {
        let row = "1.0,2.0,300.00,0.40,0.40,2023-08-15,0000,N,VIIRS,h,2.0NRT,,1.00,D";
        let rec = parse_one(row).unwrap();
        assert_eq!(derive_fields(&rec, 10.0, 10.0).month, 8);
    }

    #[test]
    fn every_coordinate_maps_to_exactly_one_cell() {
        let mut rec = parse_one(GOOD).unwrap();
        let mut lat = -90.0;
        while lat <= 90.0 {
            let mut lon = -180.0;
            while lon <= 180.0 {
                rec.latitude = lat;
                rec.longitude = lon;
                let d = derive_fields(&rec, 10.0, 10.0);
                assert!(d.grid_cell.0 < 18 && d.grid_cell.1 < 36);
                lon += 7.3;
            }
            lat += 4.7;
        }
    }
}
