//! Observation reports, their taxonomies, spatial grid / time binning, and
//! CSV/JSON ingestion.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// UTC seconds since the Unix epoch.
pub type Timestamp = i64;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row}: malformed record: {message}")]
    Malformed { row: usize, message: String },
    #[error("malformed JSON report list: {0}")]
    Json(String),
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: field `{field}` has invalid value `{value}`: {reason}")]
    Field {
        row: usize,
        field: &'static str,
        value: String,
        reason: String,
    },
    #[error("duplicate report id `{id}` at rows {first_row} and {second_row}")]
    DuplicateId {
        id: String,
        first_row: usize,
        second_row: usize,
    },
}

impl ReportError {
    /// Name of the offending field, when the error concerns a single field.
    pub fn field(&self) -> Option<&'static str> {
        match self {
            ReportError::Field { field, .. } => Some(field),
            _ => None,
        }
    }
}

macro_rules! literal_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $lit:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $lit),+
                }
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($lit => Ok($name::$variant),)+
                    other => Err(format!("unknown literal `{other}`")),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

literal_enum!(
    /// Who made the observation.
    Observer {
        Civilian => "civilian",
        Military => "military",
        StationarySensor => "stationary_sensor",
    }
);

literal_enum!(
    /// What the observer believes was seen or heard.
    ObsType {
        Submarine => "submarine",
        Periscope => "periscope",
        Diver => "diver",
        Waves => "waves",
        Sound => "sound",
        Magnetic => "magnetic",
        Other => "other",
    }
);

literal_enum!(
    /// Credibility class assigned by analysts. `Cat1` is the most credible.
    QualityCategory {
        Cat1 => "cat1",
        Cat2 => "cat2",
        Cat3 => "cat3",
        Cat4 => "cat4",
        NoActivity => "no_activity",
        NotDecidable => "not_decidable",
    }
);

impl QualityCategory {
    /// The graded categories 1-4; excludes the two verdict-only classes.
    pub fn is_graded(self) -> bool {
        matches!(
            self,
            QualityCategory::Cat1 | QualityCategory::Cat2 | QualityCategory::Cat3 | QualityCategory::Cat4
        )
    }
}

/// Planar projected coordinates in meters (x east, y north).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureBag {
    pub size_m: Option<f64>,
    pub speed_mps: Option<f64>,
    pub heading_deg: Option<f64>,
    pub shape: Option<String>,
    pub color: Option<String>,
    pub sound_character: Option<String>,
    pub lighting_character: Option<String>,
    pub bottom_track: Option<String>,
}

/// One intelligence report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ReportRecord", try_from = "ReportRecord")]
pub struct ObservationReport {
    pub id: String,
    pub time: Timestamp,
    pub position: Point,
    pub observer: Observer,
    pub obs_type: ObsType,
    pub quality: QualityCategory,
    pub distance_to_target: Option<f64>,
    pub features: FeatureBag,
}

/// Half-open time interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: Timestamp,
    pub end: Timestamp,
}

impl TimeWindow {
    pub fn new(start: Timestamp, end: Timestamp) -> Self {
        TimeWindow { start, end }
    }

    pub fn contains(&self, t: Timestamp) -> bool {
        t >= self.start && t < self.end
    }

    pub fn duration(&self) -> i64 {
        self.end - self.start
    }
}

/// Default analysis epoch: 1970-01-01 to 2100-01-01.
pub const DEFAULT_EPOCH: TimeWindow = TimeWindow {
    start: 0,
    end: 4_102_444_800,
};

pub fn format_timestamp(t: Timestamp) -> String {
    match DateTime::<Utc>::from_timestamp(t, 0) {
        Some(dt) => dt.format("%Y-%m-%dT%H:%M:%SZ").to_string(),
        None => t.to_string(),
    }
}

/// Parses an ISO-8601 / RFC 3339 timestamp, or a bare `YYYY-MM-DD` date (midnight UTC).
pub fn parse_timestamp(s: &str) -> Option<Timestamp> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|dt| dt.and_utc().timestamp())
}

/// A grid cell, zero-based. Labels are column letter plus one-based row (`E5`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub col: u16,
    pub row: u16,
}

impl Cell {
    pub const fn new(col: u16, row: u16) -> Self {
        Cell { col, row }
    }
}

pub fn column_letter(col: u16) -> char {
    (b'A' + col as u8) as char
}

pub fn parse_column_letter(c: char) -> Option<u16> {
    c.is_ascii_uppercase().then(|| (c as u8 - b'A') as u16)
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", column_letter(self.col), self.row + 1)
    }
}

impl FromStr for Cell {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        let col = chars
            .next()
            .and_then(parse_column_letter)
            .ok_or_else(|| format!("bad cell label `{s}`"))?;
        let row: u16 = chars.as_str().parse().map_err(|_| format!("bad cell label `{s}`"))?;
        if row == 0 {
            return Err(format!("bad cell label `{s}`"));
        }
        Ok(Cell::new(col, row - 1))
    }
}

/// Square-cell grid anchored at `origin` (south-west corner of cell `A1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Point,
    pub cell_size: f64,
    pub columns: u16,
    pub rows: u16,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            origin: Point::new(0.0, 0.0),
            cell_size: 5000.0,
            columns: 11,
            rows: 9,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return Err(format!("cell_size must be positive, got {}", self.cell_size));
        }
        if !self.origin.is_finite() {
            return Err("grid origin must be finite".into());
        }
        if self.columns == 0 || self.rows == 0 {
            return Err("grid needs at least one column and one row".into());
        }
        if self.columns > 26 {
            return Err(format!("at most 26 lettered columns, got {}", self.columns));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.columns as usize * self.rows as usize
    }

    pub fn width(&self) -> f64 {
        self.cell_size * self.columns as f64
    }

    pub fn height(&self) -> f64 {
        self.cell_size * self.rows as f64
    }

    pub fn contains_cell(&self, cell: Cell) -> bool {
        cell.col < self.columns && cell.row < self.rows
    }

    /// South-west corner of `cell`.
    pub fn cell_min(&self, cell: Cell) -> Point {
        Point::new(
            self.origin.x + cell.col as f64 * self.cell_size,
            self.origin.y + cell.row as f64 * self.cell_size,
        )
    }

    pub fn cell_center(&self, cell: Cell) -> Point {
        let min = self.cell_min(cell);
        Point::new(min.x + self.cell_size / 2.0, min.y + self.cell_size / 2.0)
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.rows).flat_map(move |row| (0..self.columns).map(move |col| Cell::new(col, row)))
    }
}

/// Label of the cell whose half-open extent contains `p`; `None` when outside the grid.
pub fn project_to_cell(p: Point, grid: &GridSpec) -> Option<Cell> {
    if !p.is_finite() {
        return None;
    }
    let fx = ((p.x - grid.origin.x) / grid.cell_size).floor();
    let fy = ((p.y - grid.origin.y) / grid.cell_size).floor();
    if fx < 0.0 || fy < 0.0 || fx >= grid.columns as f64 || fy >= grid.rows as f64 {
        return None;
    }
    Some(Cell::new(fx as u16, fy as u16))
}

/// Time binning relative to an anchor instant `T0`.
///
/// Past bin `T_k` (k >= 1) covers `[anchor - k*w, anchor - (k-1)*w)`. `T0` is the anchor
/// instant. Future bin `T_-j` covers `[anchor + (j-1)*w, anchor + j*w)` minus the anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeBinSpec {
    pub anchor: Timestamp,
    pub bin_width: i64,
    pub past_bins: u32,
    pub future_bins: u32,
}

impl Default for TimeBinSpec {
    fn default() -> Self {
        TimeBinSpec {
            anchor: 0,
            bin_width: 2880,
            past_bins: 8,
            future_bins: 4,
        }
    }
}

impl TimeBinSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.bin_width <= 0 {
            return Err(format!("bin_width must be positive, got {}", self.bin_width));
        }
        Ok(())
    }

    pub fn with_anchor(&self, anchor: Timestamp) -> Self {
        TimeBinSpec { anchor, ..*self }
    }

    /// Half-open `[start, end)` interval of bin `k`. `T0` is `[anchor, anchor + 1)`;
    /// `T_-1` starts one second after the anchor.
    pub fn bin_interval(&self, k: i32) -> (Timestamp, Timestamp) {
        let w = self.bin_width;
        let a = self.anchor;
        match k {
            0 => (a, a + 1),
            k if k > 0 => (a - k as i64 * w, a - (k as i64 - 1) * w),
            k => {
                let j = -(k as i64);
                let start = a + (j - 1) * w;
                (if j == 1 { start + 1 } else { start }, a + j * w)
            }
        }
    }

    /// Midpoint of bin `k` in seconds (exact, may be fractional).
    pub fn bin_midpoint(&self, k: i32) -> f64 {
        let w = self.bin_width as f64;
        let a = self.anchor as f64;
        match k {
            0 => a,
            k if k > 0 => a - (k as f64 - 0.5) * w,
            k => a + (-(k as f64) - 0.5) * w,
        }
    }
}

/// Bin index of `t` relative to the spec's anchor, or `None` beyond the configured range.
pub fn bin_time(t: Timestamp, bins: &TimeBinSpec) -> Option<i32> {
    let delta = t - bins.anchor;
    let w = bins.bin_width;
    if delta == 0 {
        Some(0)
    } else if delta < 0 {
        let k = (-delta + w - 1) / w;
        (k <= bins.past_bins as i64).then_some(k as i32)
    } else {
        let j = delta / w + 1;
        (j <= bins.future_bins as i64).then_some(-(j as i32))
    }
}

/// Axis-aligned spatial window, inclusive of its lower edges only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x < self.max.x && p.y >= self.min.y && p.y < self.max.y
    }
}

/// Conjunctive report filter. `None` clauses accept everything.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub qualities: Option<BTreeSet<QualityCategory>>,
    pub obs_types: Option<BTreeSet<ObsType>>,
    pub observers: Option<BTreeSet<Observer>>,
    pub time_window: Option<TimeWindow>,
    pub spatial_window: Option<Rect>,
}

impl FilterSpec {
    /// Quality categories 1-3, the usual analysis subset.
    pub fn default_analysis() -> Self {
        FilterSpec {
            qualities: Some(
                [QualityCategory::Cat1, QualityCategory::Cat2, QualityCategory::Cat3]
                    .into_iter()
                    .collect(),
            ),
            ..FilterSpec::default()
        }
    }

    pub fn accepts(&self, r: &ObservationReport) -> bool {
        self.qualities.as_ref().is_none_or(|q| q.contains(&r.quality))
            && self.obs_types.as_ref().is_none_or(|t| t.contains(&r.obs_type))
            && self.observers.as_ref().is_none_or(|o| o.contains(&r.observer))
            && self.time_window.is_none_or(|w| w.contains(r.time))
            && self.spatial_window.is_none_or(|w| w.contains(r.position))
    }
}

pub fn filter_reports(reports: &[ObservationReport], filter: &FilterSpec) -> Vec<ObservationReport> {
    reports.iter().filter(|r| filter.accepts(r)).cloned().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(ReportFormat::Csv),
            "json" => Some(ReportFormat::Json),
            _ => None,
        }
    }
}

pub const CSV_COLUMNS: [&str; 16] = [
    "id",
    "time",
    "x_m",
    "y_m",
    "observer",
    "obs_type",
    "quality",
    "distance_m",
    "size_m",
    "speed_mps",
    "heading_deg",
    "shape",
    "color",
    "sound",
    "lighting",
    "bottom_track",
];

/// Flat file representation shared by the CSV and JSON formats.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ReportRecord {
    pub id: String,
    pub time: String,
    pub x_m: f64,
    pub y_m: f64,
    pub observer: String,
    pub obs_type: String,
    pub quality: String,
    #[serde(default)]
    pub distance_m: Option<f64>,
    #[serde(default)]
    pub size_m: Option<f64>,
    #[serde(default)]
    pub speed_mps: Option<f64>,
    #[serde(default)]
    pub heading_deg: Option<f64>,
    #[serde(default)]
    pub shape: Option<String>,
    #[serde(default)]
    pub color: Option<String>,
    #[serde(default)]
    pub sound: Option<String>,
    #[serde(default)]
    pub lighting: Option<String>,
    #[serde(default)]
    pub bottom_track: Option<String>,
}

impl From<ObservationReport> for ReportRecord {
    fn from(r: ObservationReport) -> Self {
        ReportRecord {
            id: r.id,
            time: format_timestamp(r.time),
            x_m: r.position.x,
            y_m: r.position.y,
            observer: r.observer.as_str().to_string(),
            obs_type: r.obs_type.as_str().to_string(),
            quality: r.quality.as_str().to_string(),
            distance_m: r.distance_to_target,
            size_m: r.features.size_m,
            speed_mps: r.features.speed_mps,
            heading_deg: r.features.heading_deg,
            shape: r.features.shape,
            color: r.features.color,
            sound: r.features.sound_character,
            lighting: r.features.lighting_character,
            bottom_track: r.features.bottom_track,
        }
    }
}

impl TryFrom<ReportRecord> for ObservationReport {
    type Error = ReportError;

    fn try_from(rec: ReportRecord) -> Result<Self, Self::Error> {
        rec.into_report(0, &DEFAULT_EPOCH)
    }
}

fn field_err(row: usize, field: &'static str, value: impl Into<String>, reason: impl Into<String>) -> ReportError {
    ReportError::Field {
        row,
        field,
        value: value.into(),
        reason: reason.into(),
    }
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.filter(|v| !v.is_empty())
}

impl ReportRecord {
    fn into_report(self, row: usize, epoch: &TimeWindow) -> Result<ObservationReport, ReportError> {
        if self.id.is_empty() {
            return Err(field_err(row, "id", "", "id must not be empty"));
        }
        let time = parse_timestamp(&self.time)
            .ok_or_else(|| field_err(row, "time", &self.time, "expected ISO-8601 UTC timestamp"))?;
        if !epoch.contains(time) {
            return Err(field_err(row, "time", &self.time, "outside the analysis epoch"));
        }
        if !self.x_m.is_finite() {
            return Err(field_err(row, "x_m", self.x_m.to_string(), "must be finite"));
        }
        if !self.y_m.is_finite() {
            return Err(field_err(row, "y_m", self.y_m.to_string(), "must be finite"));
        }
        let observer = self
            .observer
            .parse()
            .map_err(|e: String| field_err(row, "observer", &self.observer, e))?;
        let obs_type = self
            .obs_type
            .parse()
            .map_err(|e: String| field_err(row, "obs_type", &self.obs_type, e))?;
        let quality = self
            .quality
            .parse()
            .map_err(|e: String| field_err(row, "quality", &self.quality, e))?;
        if let Some(d) = self.distance_m {
            if !(d.is_finite() && d >= 0.0) {
                return Err(field_err(row, "distance_m", d.to_string(), "must be finite and >= 0"));
            }
        }
        for (name, v) in [("size_m", self.size_m), ("speed_mps", self.speed_mps)] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(field_err(row, name, v.to_string(), "must be finite"));
                }
            }
        }
        if let Some(h) = self.heading_deg {
            if !(h.is_finite() && (0.0..360.0).contains(&h)) {
                return Err(field_err(row, "heading_deg", h.to_string(), "must lie in [0, 360)"));
            }
        }
        Ok(ObservationReport {
            id: self.id,
            time,
            position: Point::new(self.x_m, self.y_m),
            observer,
            obs_type,
            quality,
            distance_to_target: self.distance_m,
            features: FeatureBag {
                size_m: self.size_m,
                speed_mps: self.speed_mps,
                heading_deg: self.heading_deg,
                shape: non_empty(self.shape),
                color: non_empty(self.color),
                sound_character: non_empty(self.sound),
                lighting_character: non_empty(self.lighting),
                bottom_track: non_empty(self.bottom_track),
            },
        })
    }
}

fn csv_optional_f64(row: usize, field: &'static str, raw: &str) -> Result<Option<f64>, ReportError> {
    if raw.is_empty() {
        return Ok(None);
    }
    raw.parse::<f64>()
        .map(Some)
        .map_err(|_| field_err(row, field, raw, "expected a number"))
}

fn parse_csv(text: &str) -> Result<Vec<(usize, ReportRecord)>, ReportError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| ReportError::Malformed {
            row: 1,
            message: e.to_string(),
        })?
        .clone();
    let index: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    for required in &CSV_COLUMNS[..7] {
        if !index.contains_key(required) {
            return Err(ReportError::MissingColumn(required.to_string()));
        }
    }
    let mut out = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| ReportError::Malformed {
            row: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let row = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() > headers.len() {
            return Err(ReportError::Malformed {
                row,
                message: format!("{} fields but header has {}", record.len(), headers.len()),
            });
        }
        let get = |name: &str| -> &str { index.get(name).and_then(|&i| record.get(i)).unwrap_or("") };
        let required_f64 = |name: &'static str| -> Result<f64, ReportError> {
            let raw = get(name);
            raw.parse::<f64>().map_err(|_| field_err(row, name, raw, "expected a number"))
        };
        let opt_str = |name: &str| -> Option<String> { non_empty(Some(get(name).to_string())) };
        out.push((
            row,
            ReportRecord {
                id: get("id").to_string(),
                time: get("time").to_string(),
                x_m: required_f64("x_m")?,
                y_m: required_f64("y_m")?,
                observer: get("observer").to_string(),
                obs_type: get("obs_type").to_string(),
                quality: get("quality").to_string(),
                distance_m: csv_optional_f64(row, "distance_m", get("distance_m"))?,
                size_m: csv_optional_f64(row, "size_m", get("size_m"))?,
                speed_mps: csv_optional_f64(row, "speed_mps", get("speed_mps"))?,
                heading_deg: csv_optional_f64(row, "heading_deg", get("heading_deg"))?,
                shape: opt_str("shape"),
                color: opt_str("color"),
                sound: opt_str("sound"),
                lighting: opt_str("lighting"),
                bottom_track: opt_str("bottom_track"),
            },
        ));
    }
    Ok(out)
}

fn parse_json(text: &str) -> Result<Vec<(usize, ReportRecord)>, ReportError> {
    let values: Vec<serde_json::Value> = serde_json::from_str(text).map_err(|e| ReportError::Json(e.to_string()))?;
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let row = i + 1;
            serde_json::from_value::<ReportRecord>(v)
                .map(|rec| (row, rec))
                .map_err(|e| ReportError::Malformed {
                    row,
                    message: e.to_string(),
                })
        })
        .collect()
}

/// Parses a report file body. Rows are numbered by file line for CSV and by
/// one-based array position for JSON.
pub fn parse_reports(text: &str, format: ReportFormat) -> Result<Vec<ObservationReport>, ReportError> {
    parse_reports_in_epoch(text, format, &DEFAULT_EPOCH)
}

pub fn parse_reports_in_epoch(
    text: &str,
    format: ReportFormat,
    epoch: &TimeWindow,
) -> Result<Vec<ObservationReport>, ReportError> {
    let records = match format {
        ReportFormat::Csv => parse_csv(text)?,
        ReportFormat::Json => parse_json(text)?,
    };
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut out = Vec::with_capacity(records.len());
    for (row, rec) in records {
        if let Some(&first_row) = seen.get(&rec.id) {
            return Err(ReportError::DuplicateId {
                id: rec.id,
                first_row,
                second_row: row,
            });
        }
        seen.insert(rec.id.clone(), row);
        out.push(rec.into_report(row, epoch)?);
    }
    Ok(out)
}

/// Reads a report file, inferring the format from its extension (JSON otherwise).
pub fn read_reports(path: &Path) -> Result<Vec<ObservationReport>, ReportError> {
    let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_reports(&text, ReportFormat::from_path(path).unwrap_or(ReportFormat::Json))
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_reports(reports: &[ObservationReport], format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let records: Vec<ReportRecord> = reports.iter().cloned().map(ReportRecord::from).collect();
            let mut s = serde_json::to_string_pretty(&records).expect("report records serialize");
            s.push('\n');
            s
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_COLUMNS).expect("in-memory write");
            for r in reports {
                let rec = ReportRecord::from(r.clone());
                w.write_record([
                    rec.id,
                    rec.time,
                    rec.x_m.to_string(),
                    rec.y_m.to_string(),
                    rec.observer,
                    rec.obs_type,
                    rec.quality,
                    fmt_opt_f64(rec.distance_m),
                    fmt_opt_f64(rec.size_m),
                    fmt_opt_f64(rec.speed_mps),
                    fmt_opt_f64(rec.heading_deg),
                    rec.shape.unwrap_or_default(),
                    rec.color.unwrap_or_default(),
                    rec.sound.unwrap_or_default(),
                    rec.lighting.unwrap_or_default(),
                    rec.bottom_track.unwrap_or_default(),
                ])
                .expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("flush")).expect("csv output is utf-8")
        }
    }
}
