//! Density tables and SVG figures: observation density along a coastline,
//! a grid heatmap with non-linear color scaling, and per-day category counts.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::{DateTime, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report::{project_to_cell, GridSpec, ObservationReport, Point, Timestamp};

#[derive(Debug, Error, PartialEq)]
pub enum GeoError {
    #[error("coastline needs at least 2 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("coastline vertices {0} and {1} coincide")]
    RepeatedVertex(usize, usize),
    #[error("coastline vertex {0} is not finite")]
    NonFinite(usize),
    #[error("bin width must be positive, got {0}")]
    BadBinWidth(f64),
    #[error("coastline file: {0}")]
    Parse(String),
}

/// Polyline with cumulative arclengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coastline {
    points: Vec<Point>,
    cumulative: Vec<f64>,
}

impl Coastline {
    pub fn new(points: Vec<Point>) -> Result<Self, GeoError> {
        if points.len() < 2 {
            return Err(GeoError::TooFewVertices(points.len()));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(GeoError::NonFinite(i));
        }
        let mut cumulative = vec![0.0];
        for (i, w) in points.windows(2).enumerate() {
            let d = w[0].distance(&w[1]);
            if d == 0.0 {
                return Err(GeoError::RepeatedVertex(i, i + 1));
            }
            cumulative.push(cumulative[i] + d);
        }
        Ok(Coastline { points, cumulative })
    }

    /// Parses `x_m,y_m` rows (a header line is optional).
    pub fn from_csv(text: &str) -> Result<Self, GeoError> {
        let mut points = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(',').map(str::trim);
            let (x, y) = (parts.next().unwrap_or(""), parts.next().unwrap_or(""));
            match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(x), Ok(y)) => points.push(Point::new(x, y)),
                _ if line_no == 0 => continue,
                _ => return Err(GeoError::Parse(format!("line {}: expected `x_m,y_m`", line_no + 1))),
            }
        }
        Coastline::new(points)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().expect("at least two vertices")
    }

    /// Point at arclength `s` (clamped to the polyline).
    pub fn point_at(&self, s: f64) -> Point {
        let s = s.clamp(0.0, self.length());
        let seg = match self.cumulative.iter().position(|&c| c > s) {
            Some(i) => i - 1,
            None => self.points.len() - 2,
        };
        let (a, b) = (self.points[seg], self.points[seg + 1]);
        let t = (s - self.cumulative[seg]) / (self.cumulative[seg + 1] - self.cumulative[seg]);
        Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
    }
}

/// Arclength of the nearest polyline point to `p`, and the distance to it.
/// Ties resolve to the smallest arclength.
pub fn arclength_project(p: Point, coast: &Coastline) -> (f64, f64) {
    let mut best = (f64::INFINITY, f64::INFINITY);
    for (i, w) in coast.points.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let len2 = dx * dx + dy * dy;
        let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
        let foot = Point::new(a.x + t * dx, a.y + t * dy);
        let offset = p.distance(&foot);
        if offset < best.1 {
            best = (coast.cumulative[i] + t * len2.sqrt(), offset);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySeries {
    pub bin_width: f64,
    pub centers: Vec<f64>,
    pub counts: Vec<u64>,
    /// Reports farther than `max_offset` from the coastline.
    pub excluded: u64,
}

impl DensitySeries {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_start_m,bin_end_m,center_m,count\n");
        for (c, n) in self.centers.iter().zip(&self.counts) {
            let half = self.bin_width / 2.0;
            let _ = writeln!(out, "{},{},{},{}", c - half, c + half, c, n);
        }
        out
    }

    pub fn to_svg(&self) -> String {
        let (w, h, pad) = (800.0, 300.0, 40.0);
        let max = self.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
        let bar_w = (w - 2.0 * pad) / self.counts.len().max(1) as f64;
        let mut svg = svg_header(w, h, "Observation density along the coastline");
        for (i, &n) in self.counts.iter().enumerate() {
            let bh = (h - 2.0 * pad) * n as f64 / max;
            let _ = writeln!(
                svg,
                r##"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="#3b6ea5" data-count="{}"/>"##,
                pad + i as f64 * bar_w,
                h - pad - bh,
                bar_w,
                bh,
                n
            );
        }
        let _ = writeln!(
            svg,
            r##"<line x1="{pad}" y1="{0}" x2="{1}" y2="{0}" stroke="#000"/>"##,
            h - pad,
            w - pad
        );
        svg.push_str("</svg>\n");
        svg
    }
}

/// Histogram of report arclengths for reports within `max_offset` of the coastline.
pub fn coast_density(
    reports: &[ObservationReport],
    coast: &Coastline,
    bin_width: f64,
    max_offset: f64,
) -> Result<DensitySeries, GeoError> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(GeoError::BadBinWidth(bin_width));
    }
    let bins = ((coast.length() / bin_width).ceil() as usize).max(1);
    let mut counts = vec![0u64; bins];
    let mut excluded = 0;
    for r in reports {
        let (s, offset) = arclength_project(r.position, coast);
        if offset <= max_offset {
            counts[((s / bin_width) as usize).min(bins - 1)] += 1;
        } else {
            excluded += 1;
        }
    }
    Ok(DensitySeries {
        bin_width,
        centers: (0..bins).map(|i| (i as f64 + 0.5) * bin_width).collect(),
        counts,
        excluded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorScale {
    Linear,
    Log1p,
    Rank,
}

impl std::str::FromStr for ColorScale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(ColorScale::Linear),
            "log1p" => Ok(ColorScale::Log1p),
            "rank" => Ok(ColorScale::Rank),
            other => Err(format!("unknown color scale `{other}`")),
        }
    }
}

/// Per-cell counts and normalized color values, indexed `[row][col]` from row 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub grid: GridSpec,
    pub scale: ColorScale,
    pub counts: Vec<Vec<u64>>,
    pub colors: Vec<Vec<f64>>,
}

impl Heatmap {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("col,row,label,count,color\n");
        for cell in self.grid.cells() {
            let (r, c) = (cell.row as usize, cell.col as usize);
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                c,
                r,
                cell,
                self.counts[r][c],
                self.colors[r][c]
            );
        }
        out
    }

    /// One rect per cell; `fill-opacity` carries the color value verbatim.
    pub fn to_svg(&self) -> String {
        let px = 40.0;
        let (w, h) = (self.grid.columns as f64 * px, self.grid.rows as f64 * px);
        let mut svg = svg_header(w, h, "Report density per grid cell");
        for cell in self.grid.cells() {
            let (r, c) = (cell.row as usize, cell.col as usize);
            // north up: row 1 at the bottom
            let y = h - (r as f64 + 1.0) * px;
            let _ = writeln!(
                svg,
                r##"<rect x="{}" y="{}" width="{px}" height="{px}" fill="#b30000" fill-opacity="{}" data-cell="{}" data-count="{}"/>"##,
                c as f64 * px,
                y,
                self.colors[r][c],
                cell,
                self.counts[r][c]
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn scale_colors(counts: &[Vec<u64>], scale: ColorScale) -> Vec<Vec<f64>> {
    let max = counts.iter().flatten().copied().max().unwrap_or(0);
    let distinct: Vec<u64> = {
        let mut v: Vec<u64> = counts.iter().flatten().copied().filter(|&c| c > 0).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let value = |c: u64| -> f64 {
        if c == 0 || max == 0 {
            return 0.0;
        }
        match scale {
            ColorScale::Linear => c as f64 / max as f64,
            ColorScale::Log1p => (c as f64).ln_1p() / (max as f64).ln_1p(),
            ColorScale::Rank => {
                let rank = distinct.binary_search(&c).expect("count is present") + 1;
                rank as f64 / distinct.len() as f64
            }
        }
    };
    counts.iter().map(|row| row.iter().map(|&c| value(c)).collect()).collect()
}

/// Counts reports per grid cell; out-of-grid reports are ignored.
pub fn density_grid(reports: &[ObservationReport], grid: &GridSpec, scale: ColorScale) -> Heatmap {
    let mut counts = vec![vec![0u64; grid.columns as usize]; grid.rows as usize];
    for r in reports {
        if let Some(cell) = project_to_cell(r.position, grid) {
            counts[cell.row as usize][cell.col as usize] += 1;
        }
    }
    Heatmap {
        grid: *grid,
        scale,
        colors: scale_colors(&counts, scale),
        counts,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DailyCategory {
    ObsType,
    Quality,
}

impl std::str::FromStr for DailyCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "obs_type" | "type" => Ok(DailyCategory::ObsType),
            "quality" => Ok(DailyCategory::Quality),
            other => Err(format!("unknown category `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailyRow {
    pub date: NaiveDate,
    pub category: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailyCounts {
    pub by: DailyCategory,
    /// Categories in taxonomy order, restricted to those present.
    pub categories: Vec<String>,
    pub rows: Vec<DailyRow>,
}

const PALETTE: [&str; 7] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d"];

impl DailyCounts {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("date,category,count\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{}", r.date, r.category, r.count);
        }
        out
    }

    /// Stacked bars, one column per calendar day from the first to the last report.
    pub fn to_svg(&self) -> String {
        let (h, pad, day_w) = (300.0, 40.0, 4.0);
        let (Some(first), Some(last)) = (self.rows.first(), self.rows.last()) else {
            let mut svg = svg_header(2.0 * pad, h, "Reports per day");
            svg.push_str("</svg>\n");
            return svg;
        };
        let days = (last.date - first.date).num_days() as usize + 1;
        let mut per_day: BTreeMap<NaiveDate, u64> = BTreeMap::new();
        for r in &self.rows {
            *per_day.entry(r.date).or_default() += r.count;
        }
        let max = per_day.values().copied().max().unwrap_or(1) as f64;
        let w = 2.0 * pad + days as f64 * day_w;
        let mut svg = svg_header(w, h, "Reports per day");
        let mut stacked: BTreeMap<NaiveDate, f64> = BTreeMap::new();
        for r in &self.rows {
            let idx = self.categories.iter().position(|c| *c == r.category).unwrap_or(0);
            let day = (r.date - first.date).num_days() as f64;
            let base = stacked.entry(r.date).or_insert(0.0);
            let bh = (h - 2.0 * pad) * r.count as f64 / max;
            let _ = writeln!(
                svg,
                r##"<rect x="{:.3}" y="{:.3}" width="{day_w}" height="{:.3}" fill="{}" data-date="{}" data-category="{}" data-count="{}"/>"##,
                pad + day * day_w,
                h - pad - *base - bh,
                bh,
                PALETTE[idx % PALETTE.len()],
                r.date,
                r.category,
                r.count
            );
            *base += bh;
        }
        for (i, c) in self.categories.iter().enumerate() {
            let _ = writeln!(
                svg,
                r##"<text x="{pad}" y="{:.3}" font-size="10" fill="{}">{}</text>"##,
                12.0 + i as f64 * 12.0,
                PALETTE[i % PALETTE.len()],
                c
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn utc_date(t: Timestamp) -> NaiveDate {
    DateTime::from_timestamp(t, 0).map(|d| d.date_naive()).unwrap_or_default()
}

/// One row per (UTC date, category) with at least one report.
pub fn daily_counts(reports: &[ObservationReport], by: DailyCategory) -> DailyCounts {
    // key on taxonomy order so categories sort like the enums
    let mut table: BTreeMap<(NaiveDate, usize), (String, u64)> = BTreeMap::new();
    let mut present: BTreeMap<usize, String> = BTreeMap::new();
    for r in reports {
        let (rank, name) = match by {
            DailyCategory::ObsType => (r.obs_type as usize, r.obs_type.as_str()),
            DailyCategory::Quality => (r.quality as usize, r.quality.as_str()),
        };
        present.insert(rank, name.to_string());
        table.entry((utc_date(r.time), rank)).or_insert_with(|| (name.to_string(), 0)).1 += 1;
    }
    DailyCounts {
        by,
        categories: present.into_values().collect(),
        rows: table
            .into_iter()
            .map(|((date, _), (category, count))| DailyRow { date, category, count })
            .collect(),
    }
}

fn svg_header(w: f64, h: f64, title: &str) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<title>{title}</title>\n<rect width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>\n"
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::{FeatureBag, ObsType, Observer, QualityCategory};

    fn report(id: &str, t: i64, x: f64, y: f64, obs_type: ObsType) -> ObservationReport {
        ObservationReport {
            id: id.into(),
            time: t,
            position: Point::new(x, y),
            observer: Observer::Civilian,
            obs_type,
            quality: QualityCategory::Cat2,
            distance_to_target: None,
            features: FeatureBag::default(),
        }
    }

    fn straight() -> Coastline {
        Coastline::new(vec![Point::new(0.0, 0.0), Point::new(10_000.0, 0.0)]).unwrap()
    }

    #[test]
    fn coastline_validation() {
        assert_eq!(Coastline::new(vec![Point::new(0.0, 0.0)]), Err(GeoError::TooFewVertices(1)));
        assert_eq!(
            Coastline::new(vec![Point::new(0.0, 0.0), Point::new(0.0, 0.0)]),
            Err(GeoError::RepeatedVertex(0, 1))
        );
        let c = Coastline::from_csv("x_m,y_m\n0,0\n3,4\n").unwrap();
        assert_eq!(c.length(), 5.0);
        assert!(Coastline::from_csv("0,0\nfoo,1\n").is_err());
    }

    #[test]
    fn projection_examples() {
        assert_eq!(arclength_project(Point::new(3000.0, 1000.0), &straight()), (3000.0, 1000.0));
        let (s, off) = arclength_project(Point::new(-2000.0, 500.0), &straight());
        assert_eq!(s, 0.0);
        assert!((off - (2000.0f64.powi(2) + 500.0f64.powi(2)).sqrt()).abs() < 1e-9);
        let bent = Coastline::new(vec![Point::new(0.0, 0.0), Point::new(10_000.0, 0.0), Point::new(10_000.0, 10_000.0)]).unwrap();
        assert_eq!(arclength_project(Point::new(11_000.0, 5000.0), &bent), (15_000.0, 1000.0));
        // equidistant from both segments' shared vertex region: smallest s wins
        let (s, _) = arclength_project(Point::new(11_000.0, -1000.0), &bent);
        assert_eq!(s, 10_000.0);
    }

    #[test]
    fn density_examples() {
        let c = straight();
        let empty = coast_density(&[], &c, 1000.0, 500.0).unwrap();
        assert_eq!(empty.counts, vec![0; 10]);
        let five: Vec<_> = (0..5).map(|i| report(&i.to_string(), 0, 100.0 * i as f64, 10.0, ObsType::Submarine)).collect();
        let d = coast_density(&five, &c, 1000.0, 500.0).unwrap();
        assert_eq!(d.counts[0], 5);
        let far = coast_density(&five, &c, 1000.0, 5.0).unwrap();
        assert_eq!(far.excluded, 5);
        assert_eq!(coast_density(&five, &c, 0.0, 5.0), Err(GeoError::BadBinWidth(0.0)));
        // endpoint lands in the last bin
        let end = coast_density(&[report("e", 0, 10_000.0, 0.0, ObsType::Sound)], &c, 1000.0, 1.0).unwrap();
        assert_eq!(end.counts[9], 1);
        assert!(d.to_csv().starts_with("bin_start_m,bin_end_m,center_m,count\n0,1000,500,5\n"));
    }

    #[test]
    fn two_hot_spots() {
        let coast = Coastline::new(vec![Point::new(0.0, 0.0), Point::new(100_000.0, 0.0)]).unwrap();
        let mut rs = Vec::new();
        for i in 0..20 {
            let jitter = (i % 5) as f64 * 300.0;
            rs.push(report(&format!("a{i}"), 0, 22_000.0 + jitter, 1000.0, ObsType::Submarine));
            rs.push(report(&format!("b{i}"), 0, 72_000.0 + jitter, -1000.0, ObsType::Submarine));
        }
        let d = coast_density(&rs, &coast, 5000.0, 20_000.0).unwrap();
        let maxima: Vec<usize> = (0..d.counts.len())
            .filter(|&i| {
                let left = if i == 0 { 0 } else { d.counts[i - 1] };
                let right = d.counts.get(i + 1).copied().unwrap_or(0);
                d.counts[i] > left && d.counts[i] > right
            })
            .collect();
        assert_eq!(maxima, vec![4, 14]);
    }

    #[test]
    fn heatmap_examples() {
        let g = GridSpec {
            columns: 2,
            rows: 2,
            ..GridSpec::default()
        };
        let rs: Vec<_> = (0..4).map(|i| report(&i.to_string(), 0, 100.0, 100.0, ObsType::Diver)).collect();
        let h = density_grid(&rs, &g, ColorScale::Log1p);
        assert_eq!(h.counts, vec![vec![4, 0], vec![0, 0]]);
        assert_eq!(h.colors, vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
        let blank = density_grid(&[], &g, ColorScale::Log1p);
        assert_eq!(blank.total(), 0);
        assert!(blank.colors.iter().flatten().all(|&c| c == 0.0));
    }

    #[test]
    fn rank_scale_is_evenly_spaced() {
        let g = GridSpec {
            columns: 3,
            rows: 1,
            ..GridSpec::default()
        };
        let mut rs = Vec::new();
        for (col, n) in [(0, 1), (1, 10), (2, 100)] {
            for i in 0..n {
                rs.push(report(&format!("{col}-{i}"), 0, col as f64 * 5000.0 + 10.0, 10.0, ObsType::Diver));
            }
        }
        let h = density_grid(&rs, &g, ColorScale::Rank);
        assert_eq!(h.colors[0], vec![1.0 / 3.0, 2.0 / 3.0, 1.0]);
        let lin = density_grid(&rs, &g, ColorScale::Linear);
        assert_eq!(lin.colors[0], vec![0.01, 0.1, 1.0]);
    }

    #[test]
    fn daily_rows() {
        let d0 = crate::report::parse_timestamp("2026-03-01T08:00:00Z").unwrap();
        let rs = vec![
            report("a", d0, 0.0, 0.0, ObsType::Submarine),
            report("b", d0 + 60, 0.0, 0.0, ObsType::Diver),
            report("c", d0 + 120, 0.0, 0.0, ObsType::Submarine),
        ];
        let t = daily_counts(&rs, DailyCategory::ObsType);
        assert_eq!(t.to_csv(), "date,category,count\n2026-03-01,submarine,2\n2026-03-01,diver,1\n");
        let q = daily_counts(&rs, DailyCategory::Quality);
        assert_eq!(q.rows.len(), 1);
        assert_eq!(q.rows[0].count, 3);
    }
}
