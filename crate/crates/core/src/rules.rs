//! Area-and-time prediction rules of the form `If [HIJ345 & T456] ... then [CDEF67 & T-1-2]`,
//! learned from event sequences with a generational genetic algorithm.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report::{
    bin_time, column_letter, format_timestamp, parse_column_letter, parse_timestamp, project_to_cell, Cell, GridSpec,
    ObservationReport, Point, TimeBinSpec, Timestamp,
};

#[derive(Debug, Error, PartialEq)]
pub enum RuleError {
    #[error("training set is empty")]
    EmptyTraining,
    #[error("training sequence {0} has no continuation")]
    MissingContinuation(usize),
    #[error("invalid GA parameters: {0}")]
    BadParams(String),
    #[error("invalid rule: {0}")]
    InvalidRule(String),
    #[error("cannot parse {what} `{text}`")]
    Parse { what: &'static str, text: String },
    #[error("rule list is empty")]
    NoRules,
}

/// Rectangle of grid cells, inclusive on both ends. Coordinates are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AreaPattern {
    pub cols: (u16, u16),
    pub rows: (u16, u16),
}

impl AreaPattern {
    pub fn cell(cell: Cell) -> Self {
        AreaPattern {
            cols: (cell.col, cell.col),
            rows: (cell.row, cell.row),
        }
    }

    pub fn contains(&self, cell: Cell) -> bool {
        (self.cols.0..=self.cols.1).contains(&cell.col) && (self.rows.0..=self.rows.1).contains(&cell.row)
    }

    pub fn cell_count(&self) -> usize {
        (self.cols.1 - self.cols.0 + 1) as usize * (self.rows.1 - self.rows.0 + 1) as usize
    }

    pub fn covers(&self, other: &AreaPattern) -> bool {
        self.cols.0 <= other.cols.0 && other.cols.1 <= self.cols.1 && self.rows.0 <= other.rows.0 && other.rows.1 <= self.rows.1
    }

    pub fn in_extent(&self, grid: &GridSpec) -> bool {
        self.cols.0 <= self.cols.1 && self.rows.0 <= self.rows.1 && self.cols.1 < grid.columns && self.rows.1 < grid.rows
    }

    /// Geometric center of the rectangle in grid coordinates.
    pub fn center(&self, grid: &GridSpec) -> Point {
        let lo = grid.cell_min(Cell::new(self.cols.0, self.rows.0));
        let hi = grid.cell_min(Cell::new(self.cols.1, self.rows.1));
        Point::new(
            (lo.x + hi.x + grid.cell_size) / 2.0,
            (lo.y + hi.y + grid.cell_size) / 2.0,
        )
    }

    pub fn cols_label(&self) -> String {
        range_label(self.cols.0, self.cols.1, |c| column_letter(c).to_string())
    }

    pub fn rows_label(&self) -> String {
        range_label(self.rows.0, self.rows.1, |r| (r + 1).to_string())
    }

    pub fn parse(cols: &str, rows: &str) -> Result<Self, RuleError> {
        let err = |what, text: &str| RuleError::Parse { what, text: text.to_string() };
        let (c0, c1) = split_range(cols).ok_or_else(|| err("column range", cols))?;
        let letter = |s: &str| {
            let mut it = s.chars();
            match (it.next(), it.next()) {
                (Some(c), None) => parse_column_letter(c),
                _ => None,
            }
        };
        let (r0, r1) = split_range(rows).ok_or_else(|| err("row range", rows))?;
        let row = |s: &str| s.parse::<u16>().ok().filter(|&r| r >= 1).map(|r| r - 1);
        let area = AreaPattern {
            cols: (letter(c0).ok_or_else(|| err("column", c0))?, letter(c1).ok_or_else(|| err("column", c1))?),
            rows: (row(r0).ok_or_else(|| err("row", r0))?, row(r1).ok_or_else(|| err("row", r1))?),
        };
        if area.cols.0 > area.cols.1 || area.rows.0 > area.rows.1 {
            return Err(RuleError::InvalidRule(format!("empty area {}{}", cols, rows)));
        }
        Ok(area)
    }
}

impl fmt::Display for AreaPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.cols.0..=self.cols.1 {
            write!(f, "{}", column_letter(c))?;
        }
        for r in self.rows.0..=self.rows.1 {
            write!(f, "{}", r + 1)?;
        }
        Ok(())
    }
}

/// Inclusive bin range. Precedent patterns use indices >= 0, predictions <= -1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimePattern {
    pub lo: i32,
    pub hi: i32,
}

impl TimePattern {
    pub fn new(lo: i32, hi: i32) -> Self {
        TimePattern { lo, hi }
    }

    pub fn bin(k: i32) -> Self {
        TimePattern { lo: k, hi: k }
    }

    pub fn contains(&self, bin: i32) -> bool {
        (self.lo..=self.hi).contains(&bin)
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }

    pub fn covers(&self, other: &TimePattern) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn label(&self) -> String {
        range_label(self.lo, self.hi, |b| b.to_string())
    }

    pub fn parse(s: &str) -> Result<Self, RuleError> {
        let err = || RuleError::Parse {
            what: "bin range",
            text: s.to_string(),
        };
        let (a, b) = split_range(s).ok_or_else(err)?;
        let (a, b): (i32, i32) = (a.parse().map_err(|_| err())?, b.parse().map_err(|_| err())?);
        if a > b {
            return Err(RuleError::InvalidRule(format!("empty bin range `{s}`")));
        }
        Ok(TimePattern::new(a, b))
    }
}

impl fmt::Display for TimePattern {
    /// Precedent bins read oldest first (`T456`), prediction bins nearest first (`T-1-2`).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("T")?;
        if self.hi < 0 {
            for b in (self.lo..=self.hi).rev() {
                write!(f, "{b}")?;
            }
        } else {
            for b in self.lo..=self.hi {
                write!(f, "{b}")?;
            }
        }
        Ok(())
    }
}

fn range_label<T: PartialEq + Copy>(lo: T, hi: T, f: impl Fn(T) -> String) -> String {
    if lo == hi {
        f(lo)
    } else {
        format!("{}-{}", f(lo), f(hi))
    }
}

/// Splits `a-b` where either side may carry a leading minus sign; a bare `a` means `a-a`.
fn split_range(s: &str) -> Option<(&str, &str)> {
    let s = s.trim();
    let bytes = s.as_bytes();
    let sep = (1..bytes.len()).find(|&i| bytes[i] == b'-' && bytes[i - 1] != b'-');
    match sep {
        Some(i) => Some((&s[..i], &s[i + 1..])).filter(|(a, b)| !a.is_empty() && !b.is_empty()),
        None if !s.is_empty() => Some((s, s)),
        None => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Slot {
    pub area: AreaPattern,
    pub time: TimePattern,
}

impl Slot {
    pub fn new(area: AreaPattern, time: TimePattern) -> Self {
        Slot { area, time }
    }

    pub fn accepts(&self, cell: Cell, bin: i32) -> bool {
        self.area.contains(cell) && self.time.contains(bin)
    }

    pub fn covers(&self, other: &Slot) -> bool {
        self.area.covers(&other.area) && self.time.covers(&other.time)
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} & {}]", self.area, self.time)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "RuleShape", try_from = "RuleShape")]
pub struct PredictionRule {
    /// Oldest slot first.
    pub precedent: Vec<Slot>,
    pub prediction: Slot,
}

impl PredictionRule {
    pub fn validate(&self, grid: &GridSpec, bins: &TimeBinSpec) -> Result<(), RuleError> {
        if self.precedent.is_empty() {
            return Err(RuleError::InvalidRule("precedent is empty".into()));
        }
        for (i, s) in self.precedent.iter().chain([&self.prediction]).enumerate() {
            if !s.area.in_extent(grid) {
                return Err(RuleError::InvalidRule(format!("slot {i} area {} leaves the grid", s.area)));
            }
            if s.time.is_empty() {
                return Err(RuleError::InvalidRule(format!("slot {i} has an empty bin range")));
            }
        }
        for s in &self.precedent {
            if s.time.lo < 0 || s.time.hi > bins.past_bins as i32 {
                return Err(RuleError::InvalidRule(format!("precedent bins {} outside 0..={}", s.time.label(), bins.past_bins)));
            }
        }
        for w in self.precedent.windows(2) {
            if w[1].time.lo > w[0].time.lo || w[1].time.hi > w[0].time.hi {
                return Err(RuleError::InvalidRule("precedent bins must not increase toward T0".into()));
            }
        }
        let p = self.prediction.time;
        if p.hi > -1 || p.lo < -(bins.future_bins as i32) {
            return Err(RuleError::InvalidRule(format!("prediction bins {} outside -{}..=-1", p.label(), bins.future_bins)));
        }
        Ok(())
    }

    pub fn specificity(&self) -> f64 {
        1.0 / (self.prediction.area.cell_count() * self.prediction.time.len()) as f64
    }

    /// Whether every range of `self` contains the corresponding range of `other`.
    pub fn generalizes(&self, other: &PredictionRule) -> bool {
        self.precedent.len() == other.precedent.len()
            && self.precedent.iter().zip(&other.precedent).all(|(a, b)| a.covers(b))
            && self.prediction.covers(&other.prediction)
    }
}

impl fmt::Display for PredictionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("If ")?;
        for (i, s) in self.precedent.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, " then {}", self.prediction)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "SeqEventRecord", try_from = "SeqEventRecord")]
pub struct SeqEvent {
    pub cell: Cell,
    pub bin: i32,
    pub position: Point,
    pub time: Timestamp,
}

#[derive(Serialize, Deserialize)]
struct SeqEventRecord {
    cell: String,
    bin: i32,
    x_m: f64,
    y_m: f64,
    time: String,
}

impl From<SeqEvent> for SeqEventRecord {
    fn from(e: SeqEvent) -> Self {
        SeqEventRecord {
            cell: e.cell.to_string(),
            bin: e.bin,
            x_m: e.position.x,
            y_m: e.position.y,
            time: format_timestamp(e.time),
        }
    }
}

impl TryFrom<SeqEventRecord> for SeqEvent {
    type Error = String;

    fn try_from(r: SeqEventRecord) -> Result<Self, Self::Error> {
        Ok(SeqEvent {
            cell: r.cell.parse()?,
            bin: r.bin,
            position: Point::new(r.x_m, r.y_m),
            time: parse_timestamp(&r.time).ok_or_else(|| format!("bad timestamp `{}`", r.time))?,
        })
    }
}

/// Events ordered by time, the last one binned to `T0`, plus an optional true continuation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSequence {
    pub events: Vec<SeqEvent>,
    #[serde(with = "iso_time")]
    pub anchor: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuation: Option<SeqEvent>,
}

mod iso_time {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &Timestamp, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_timestamp(*t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Timestamp, D::Error> {
        let text = String::deserialize(d)?;
        parse_timestamp(&text).ok_or_else(|| serde::de::Error::custom(format!("bad timestamp `{text}`")))
    }
}

impl EventSequence {
    /// Builds the current situation from reports: the latest report is `T0`, and
    /// earlier reports inside the grid and the past bin range become events.
    pub fn from_reports(reports: &[ObservationReport], grid: &GridSpec, bins: &TimeBinSpec) -> Option<Self> {
        let anchor = reports.iter().map(|r| r.time).max()?;
        let spec = bins.with_anchor(anchor);
        let mut events: Vec<SeqEvent> = reports
            .iter()
            .filter_map(|r| {
                let cell = project_to_cell(r.position, grid)?;
                let bin = bin_time(r.time, &spec).filter(|&b| b >= 0)?;
                Some(SeqEvent {
                    cell,
                    bin,
                    position: r.position,
                    time: r.time,
                })
            })
            .collect();
        events.sort_by(|a, b| a.time.cmp(&b.time).then(a.cell.cmp(&b.cell)));
        (!events.is_empty()).then_some(EventSequence {
            events,
            anchor,
            continuation: None,
        })
    }
}

/// Order-preserving assignment of distinct events to precedent slots. Taking the
/// earliest fitting event for each slot in turn finds one whenever any exists.
pub fn matches(rule: &PredictionRule, seq: &EventSequence) -> bool {
    let mut slots = rule.precedent.iter();
    let mut current = slots.next();
    for e in &seq.events {
        match current {
            Some(s) if s.accepts(e.cell, e.bin) => current = slots.next(),
            Some(_) => {}
            None => break,
        }
    }
    current.is_none()
}

pub fn prediction_satisfied(rule: &PredictionRule, continuation: &SeqEvent) -> bool {
    rule.prediction.accepts(continuation.cell, continuation.bin)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreParams {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for ScoreParams {
    fn default() -> Self {
        ScoreParams { alpha: 0.25, beta: 0.25 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleStats {
    pub matches: usize,
    pub hits: usize,
    pub precision_laplace: f64,
    pub specificity: f64,
    pub score: f64,
}

impl RuleStats {
    pub fn from_counts(rule: &PredictionRule, matches: usize, hits: usize, total: usize, params: &ScoreParams) -> Self {
        let precision_laplace = (hits as f64 + 1.0) / (matches as f64 + 2.0);
        let specificity = rule.specificity();
        let support = if total == 0 { 0.0 } else { matches as f64 / total as f64 };
        RuleStats {
            matches,
            hits,
            precision_laplace,
            specificity,
            score: precision_laplace * support.powf(params.beta) * specificity.powf(params.alpha),
        }
    }
}

pub fn evaluate_rule(rule: &PredictionRule, training: &[EventSequence], params: &ScoreParams) -> Result<RuleStats, RuleError> {
    if training.is_empty() {
        return Err(RuleError::EmptyTraining);
    }
    let (mut m, mut h) = (0, 0);
    for (i, seq) in training.iter().enumerate() {
        let cont = seq.continuation.as_ref().ok_or(RuleError::MissingContinuation(i))?;
        if matches(rule, seq) {
            m += 1;
            if prediction_satisfied(rule, cont) {
                h += 1;
            }
        }
    }
    Ok(RuleStats::from_counts(rule, m, h, training.len(), params))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaParams {
    pub population: usize,
    pub generations: usize,
    pub tournament_k: usize,
    pub p_crossover: f64,
    pub p_mutation: f64,
    pub elitism: usize,
    /// Precedent length L.
    pub precedent_len: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            population: 200,
            generations: 100,
            tournament_k: 3,
            p_crossover: 0.7,
            p_mutation: 0.5,
            elitism: 4,
            precedent_len: 3,
            alpha: 0.25,
            beta: 0.25,
            seed: 0,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<(), RuleError> {
        let bad = |m: String| Err(RuleError::BadParams(m));
        if self.population < 2 {
            return bad(format!("population must be at least 2, got {}", self.population));
        }
        if self.tournament_k == 0 {
            return bad("tournament_k must be at least 1".into());
        }
        if self.precedent_len == 0 {
            return bad("precedent length must be at least 1".into());
        }
        for (name, p) in [("p_crossover", self.p_crossover), ("p_mutation", self.p_mutation)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        for (name, e) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(e >= 0.0 && e.is_finite()) {
                return bad(format!("{name} must be a finite non-negative exponent, got {e}"));
            }
        }
        Ok(())
    }

    pub fn score_params(&self) -> ScoreParams {
        ScoreParams {
            alpha: self.alpha,
            beta: self.beta,
        }
    }
}

pub type RankedRule = (PredictionRule, RuleStats);

#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    /// Deduplicated final population, best first.
    pub ranked: Vec<RankedRule>,
    /// Best score after evaluating each generation (initial population first).
    pub best_history: Vec<f64>,
}

fn rank_order(a: &RankedRule, b: &RankedRule) -> Ordering {
    b.1.score
        .total_cmp(&a.1.score)
        .then(b.1.precision_laplace.total_cmp(&a.1.precision_laplace))
        .then(b.1.matches.cmp(&a.1.matches))
        .then(a.0.cmp(&b.0))
}

/// Largest number of cells or bins a seeded range extends past the observed event.
const SEED_SPREAD: i32 = 2;

struct Context<'a> {
    training: &'a [EventSequence],
    grid: &'a GridSpec,
    bins: &'a TimeBinSpec,
    ga: &'a GaParams,
}

impl Context<'_> {
    fn rng(&self, generation: usize, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.ga.seed);
        rng.set_stream(((generation as u64) << 32) | index as u64);
        rng
    }

    fn random_area(&self, rng: &mut ChaCha8Rng) -> AreaPattern {
        let c = Cell::new(rng.random_range(0..self.grid.columns), rng.random_range(0..self.grid.rows));
        self.widen_area(AreaPattern::cell(c), rng)
    }

    fn widen_area(&self, a: AreaPattern, rng: &mut ChaCha8Rng) -> AreaPattern {
        let up = |v: u16, max: u16, rng: &mut ChaCha8Rng| (v + rng.random_range(0..=SEED_SPREAD as u16)).min(max - 1);
        let down = |v: u16, rng: &mut ChaCha8Rng| v.saturating_sub(rng.random_range(0..=SEED_SPREAD as u16));
        AreaPattern {
            cols: (down(a.cols.0, rng), up(a.cols.1, self.grid.columns, rng)),
            rows: (down(a.rows.0, rng), up(a.rows.1, self.grid.rows, rng)),
        }
    }

    /// Seeds an individual from a training sequence so the initial population
    /// covers observed behavior; falls back to a random rule.
    fn seeded_rule(&self, rng: &mut ChaCha8Rng) -> PredictionRule {
        let l = self.ga.precedent_len;
        let past = self.bins.past_bins as i32;
        let future = self.bins.future_bins as i32;
        let seq = &self.training[rng.random_range(0..self.training.len())];
        let usable: Vec<&SeqEvent> = seq.events.iter().filter(|e| (0..=past).contains(&e.bin) && self.grid.contains_cell(e.cell)).collect();
        let mut precedent: Vec<Slot> = if usable.len() >= l {
            // keep T0's event and a random ordered choice of earlier ones
            let mut picks: BTreeSet<usize> = BTreeSet::from([usable.len() - 1]);
            while picks.len() < l {
                picks.insert(rng.random_range(0..usable.len() - 1));
            }
            picks
                .into_iter()
                .map(|i| {
                    let e = usable[i];
                    let lo = (e.bin - rng.random_range(0..=SEED_SPREAD)).max(0);
                    let hi = (e.bin + rng.random_range(0..=SEED_SPREAD)).min(past);
                    Slot::new(self.widen_area(AreaPattern::cell(e.cell), rng), TimePattern::new(lo, hi))
                })
                .collect()
        } else {
            let mut bins: Vec<i32> = (0..l).map(|_| rng.random_range(0..=past)).collect();
            bins.sort_unstable_by(|a, b| b.cmp(a));
            bins.into_iter().map(|b| Slot::new(self.random_area(rng), TimePattern::bin(b))).collect()
        };
        repair_order(&mut precedent);
        let prediction = match seq.continuation {
            Some(c) if self.grid.contains_cell(c.cell) && (-future..=-1).contains(&c.bin) => {
                let lo = (c.bin - rng.random_range(0..=1)).max(-future);
                let hi = (c.bin + rng.random_range(0..=1)).min(-1);
                Slot::new(self.widen_area(AreaPattern::cell(c.cell), rng), TimePattern::new(lo, hi))
            }
            _ => {
                let b = rng.random_range(-future..=-1);
                Slot::new(self.random_area(rng), TimePattern::bin(b))
            }
        };
        PredictionRule { precedent, prediction }
    }

    fn tournament<'p>(&self, pop: &'p [RankedRule], rng: &mut ChaCha8Rng) -> &'p PredictionRule {
        let mut best = rng.random_range(0..pop.len());
        for _ in 1..self.ga.tournament_k {
            let c = rng.random_range(0..pop.len());
            if rank_order(&pop[c], &pop[best]) == Ordering::Less {
                best = c;
            }
        }
        &pop[best].0
    }

    fn crossover(&self, a: &PredictionRule, b: &PredictionRule, rng: &mut ChaCha8Rng) -> PredictionRule {
        let mut child = a.clone();
        for (i, s) in child.precedent.iter_mut().enumerate() {
            if rng.random_bool(0.5) {
                *s = b.precedent[i];
            }
        }
        if rng.random_bool(0.5) {
            child.prediction = b.prediction;
        }
        if child.validate(self.grid, self.bins).is_ok() {
            child
        } else {
            a.clone()
        }
    }

    /// Grows, shrinks or shifts one range of one slot by one unit; retries until the
    /// result is valid and leaves the rule unchanged if no attempt succeeds.
    fn mutate(&self, rule: &PredictionRule, rng: &mut ChaCha8Rng) -> PredictionRule {
        let slots = rule.precedent.len() + 1;
        for _ in 0..16 {
            let mut m = rule.clone();
            let which = rng.random_range(0..slots);
            let slot = if which == rule.precedent.len() {
                &mut m.prediction
            } else {
                &mut m.precedent[which]
            };
            let op = rng.random_range(0..3);
            let side = rng.random_bool(0.5);
            let delta = if rng.random_bool(0.5) { 1 } else { -1 };
            match rng.random_range(0..3) {
                0 => nudge_u16(&mut slot.area.cols, op, side, delta),
                1 => nudge_u16(&mut slot.area.rows, op, side, delta),
                _ => nudge_i32(&mut slot.time.lo, &mut slot.time.hi, op, side, delta),
            }
            if m != *rule && m.validate(self.grid, self.bins).is_ok() {
                return m;
            }
        }
        rule.clone()
    }

    fn evaluate(&self, rules: Vec<PredictionRule>) -> Vec<RankedRule> {
        let params = self.ga.score_params();
        rules
            .into_par_iter()
            .map(|r| {
                let stats = evaluate_rule(&r, self.training, &params).expect("training validated");
                (r, stats)
            })
            .collect()
    }
}

// op 0 grows the range, 1 shrinks it, 2 shifts it; `side` picks the low or high end
fn nudge_i32(lo: &mut i32, hi: &mut i32, op: u32, side: bool, delta: i32) {
    match (op, side) {
        (0, false) => *lo -= 1,
        (0, true) => *hi += 1,
        (1, false) => *lo += 1,
        (1, true) => *hi -= 1,
        _ => {
            *lo += delta;
            *hi += delta;
        }
    }
}

fn nudge_u16(range: &mut (u16, u16), op: u32, side: bool, delta: i32) {
    let (mut lo, mut hi) = (range.0 as i32, range.1 as i32);
    nudge_i32(&mut lo, &mut hi, op, side, delta);
    if lo >= 0 && hi >= 0 {
        *range = (lo as u16, hi as u16);
    }
}

/// Makes precedent bin bounds non-increasing toward T0 without emptying any slot.
fn repair_order(precedent: &mut [Slot]) {
    for i in 1..precedent.len() {
        let prev = precedent[i - 1].time;
        let t = &mut precedent[i].time;
        t.lo = t.lo.min(prev.lo);
        t.hi = t.hi.min(prev.hi);
    }
}

pub fn evolve(training: &[EventSequence], grid: &GridSpec, bins: &TimeBinSpec, ga: &GaParams) -> Result<Evolution, RuleError> {
    ga.validate()?;
    grid.validate().map_err(RuleError::BadParams)?;
    bins.validate().map_err(RuleError::BadParams)?;
    if bins.future_bins == 0 {
        return Err(RuleError::BadParams("at least one future bin is required".into()));
    }
    if training.is_empty() {
        return Err(RuleError::EmptyTraining);
    }
    if let Some(i) = training.iter().position(|s| s.continuation.is_none()) {
        return Err(RuleError::MissingContinuation(i));
    }
    let ctx = Context { training, grid, bins, ga };
    // elitism larger than the population simply keeps everyone
    let elitism = ga.elitism.min(ga.population);

    let initial: Vec<PredictionRule> = (0..ga.population)
        .into_par_iter()
        .map(|i| ctx.seeded_rule(&mut ctx.rng(0, i)))
        .collect();
    let mut pop = ctx.evaluate(initial);
    pop.sort_by(rank_order);
    let mut best_history = vec![pop[0].1.score];

    for g in 1..=ga.generations {
        let parents = &pop;
        let children: Vec<PredictionRule> = (elitism..ga.population)
            .into_par_iter()
            .map(|i| {
                let mut rng = ctx.rng(g, i);
                let a = ctx.tournament(parents, &mut rng);
                let mut child = if rng.random_bool(ga.p_crossover) {
                    let b = ctx.tournament(parents, &mut rng);
                    ctx.crossover(a, b, &mut rng)
                } else {
                    a.clone()
                };
                if rng.random_bool(ga.p_mutation) {
                    child = ctx.mutate(&child, &mut rng);
                }
                child
            })
            .collect();
        let mut next: Vec<RankedRule> = pop[..elitism].to_vec();
        next.extend(ctx.evaluate(children));
        next.sort_by(rank_order);
        let best = next[0].1.score;
        if elitism > 0 {
            debug_assert!(best >= *best_history.last().expect("non-empty"), "elitism lost the best rule");
        }
        best_history.push(best);
        pop = next;
    }

    let mut seen = BTreeSet::new();
    pop.retain(|(r, _)| seen.insert(r.clone()));
    Ok(Evolution { ranked: pop, best_history })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub rule: usize,
    pub area: String,
    pub cols: String,
    pub rows: String,
    pub bins: String,
    pub probability: f64,
    pub score: f64,
    #[serde(skip)]
    pub slot: Option<Slot>,
}

/// Predictions of the `top_k` best-scoring rules whose precedent matches `current`.
/// `rule` is the index into `rules`.
pub fn predict(rules: &[RankedRule], current: &EventSequence, top_k: usize) -> Result<Vec<Prediction>, RuleError> {
    if rules.is_empty() {
        return Err(RuleError::NoRules);
    }
    let mut hits: Vec<usize> = (0..rules.len()).filter(|&i| matches(&rules[i].0, current)).collect();
    hits.sort_by(|&a, &b| rules[b].1.score.total_cmp(&rules[a].1.score).then(a.cmp(&b)));
    Ok(hits
        .into_iter()
        .take(top_k)
        .map(|i| {
            let (rule, stats) = &rules[i];
            let p = rule.prediction;
            Prediction {
                rule: i,
                area: format!("{}", p),
                cols: p.area.cols_label(),
                rows: p.area.rows_label(),
                bins: p.time.label(),
                probability: stats.precision_laplace,
                score: stats.score,
                slot: Some(p),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternRecord {
    pub cols: String,
    pub rows: String,
    pub bins: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRecord {
    pub matches: usize,
    pub hits: usize,
    pub precision: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleRecord {
    pub precedent: Vec<PatternRecord>,
    pub prediction: PatternRecord,
    pub stats: StatsRecord,
}

impl From<&Slot> for PatternRecord {
    fn from(s: &Slot) -> Self {
        PatternRecord {
            cols: s.area.cols_label(),
            rows: s.area.rows_label(),
            bins: s.time.label(),
        }
    }
}

impl TryFrom<&PatternRecord> for Slot {
    type Error = RuleError;

    fn try_from(p: &PatternRecord) -> Result<Self, RuleError> {
        Ok(Slot::new(AreaPattern::parse(&p.cols, &p.rows)?, TimePattern::parse(&p.bins)?))
    }
}

/// Serialized form of a bare rule (no statistics).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleShape {
    pub precedent: Vec<PatternRecord>,
    pub prediction: PatternRecord,
}

impl From<PredictionRule> for RuleShape {
    fn from(r: PredictionRule) -> Self {
        RuleShape {
            precedent: r.precedent.iter().map(PatternRecord::from).collect(),
            prediction: PatternRecord::from(&r.prediction),
        }
    }
}

impl TryFrom<RuleShape> for PredictionRule {
    type Error = RuleError;

    fn try_from(r: RuleShape) -> Result<Self, RuleError> {
        Ok(PredictionRule {
            precedent: r.precedent.iter().map(Slot::try_from).collect::<Result<_, _>>()?,
            prediction: Slot::try_from(&r.prediction)?,
        })
    }
}

pub fn rules_to_records(rules: &[RankedRule]) -> Vec<RuleRecord> {
    rules
        .iter()
        .map(|(r, s)| RuleRecord {
            precedent: r.precedent.iter().map(PatternRecord::from).collect(),
            prediction: PatternRecord::from(&r.prediction),
            stats: StatsRecord {
                matches: s.matches,
                hits: s.hits,
                precision: s.precision_laplace,
                score: s.score,
            },
        })
        .collect()
}

/// Rebuilds ranked rules from records, validating each against the grid and bins.
pub fn rules_from_records(records: &[RuleRecord], grid: &GridSpec, bins: &TimeBinSpec) -> Result<Vec<RankedRule>, RuleError> {
    records
        .iter()
        .map(|rec| {
            let rule = PredictionRule {
                precedent: rec.precedent.iter().map(Slot::try_from).collect::<Result<_, _>>()?,
                prediction: Slot::try_from(&rec.prediction)?,
            };
            rule.validate(grid, bins)?;
            if rec.stats.hits > rec.stats.matches {
                return Err(RuleError::InvalidRule(format!("{} hits exceed {} matches", rec.stats.hits, rec.stats.matches)));
            }
            let stats = RuleStats {
                matches: rec.stats.matches,
                hits: rec.stats.hits,
                precision_laplace: rec.stats.precision,
                specificity: rule.specificity(),
                score: rec.stats.score,
            };
            Ok((rule, stats))
        })
        .collect()
}
