//! Labeled synthetic scenarios: target tracks, sensors, noisy observer reports,
//! false alarms and cell-level event sequences with an optional planted rule.
//! Also scores association and prediction output against the ground truth.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::association::Sensor;
use crate::report::{
    parse_timestamp, Cell, FeatureBag, GridSpec, ObsType, ObservationReport, Observer, Point, QualityCategory,
    TimeBinSpec, Timestamp,
};
use crate::rules::{matches, prediction_satisfied, EventSequence, PredictionRule, SeqEvent, Slot};

#[derive(Debug, Error, PartialEq)]
pub enum SimulationError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("partition does not cover the labeled reports: {0}")]
    IdMismatch(String),
}

/// Per-axis noise is truncated at this many standard deviations.
pub const NOISE_TRUNCATION: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SequenceConfig {
    pub count: usize,
    pub bins: TimeBinSpec,
    /// Events per sequence when no template is used (inclusive range).
    pub events: (usize, usize),
    pub planted_rule: Option<PredictionRule>,
    /// Probability that a sequence matching the planted precedent continues into its prediction.
    pub p_plant: f64,
    /// Fraction of sequences drawn from the planted precedent's slots.
    pub template_prob: f64,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        SequenceConfig {
            count: 0,
            bins: TimeBinSpec::default(),
            events: (3, 5),
            planted_rule: None,
            p_plant: 0.7,
            template_prob: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub grid: GridSpec,
    pub start: Timestamp,
    /// Seconds.
    pub duration: i64,
    pub n_targets: usize,
    /// Meters per second.
    pub speed_range: (f64, f64),
    pub waypoint_count: usize,
    pub sensors: Vec<Sensor>,
    /// Reports per target-hour.
    pub observer_density: f64,
    /// Reports per hour over the whole grid.
    pub false_alarm_rate: f64,
    pub position_noise_sigma: f64,
    /// Speeds must stay below this (the association hard limit).
    pub v_hard: f64,
    /// Optional x-intervals, one per target, that confine that target's waypoints.
    pub target_zones: Option<Vec<(f64, f64)>>,
    /// Probability weights for cat1..cat4.
    pub quality_weights: [f64; 4],
    pub sequences: SequenceConfig,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            grid: GridSpec::default(),
            start: parse_timestamp("2026-01-01").expect("valid literal"),
            duration: 6 * 3600,
            n_targets: 2,
            speed_range: (1.0, 4.0),
            waypoint_count: 3,
            sensors: Vec::new(),
            observer_density: 2.0,
            false_alarm_rate: 0.5,
            position_noise_sigma: 200.0,
            v_hard: 12.0,
            target_zones: None,
            quality_weights: [0.0, 0.3, 0.5, 0.2],
            sequences: SequenceConfig::default(),
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimulationError> {
        let bad = |m: String| Err(SimulationError::Invalid(m));
        self.grid.validate().map_err(SimulationError::Invalid)?;
        if self.duration <= 0 {
            return bad(format!("duration must be positive, got {}", self.duration));
        }
        let (lo, hi) = self.speed_range;
        if !(lo > 0.0 && lo <= hi && hi < self.v_hard) {
            return bad(format!("speed range ({lo}, {hi}) must satisfy 0 < min <= max < {}", self.v_hard));
        }
        if self.n_targets > 0 && self.waypoint_count == 0 {
            return bad("targets need at least one waypoint".into());
        }
        for (name, v) in [
            ("observer_density", self.observer_density),
            ("false_alarm_rate", self.false_alarm_rate),
            ("position_noise_sigma", self.position_noise_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if self.quality_weights.iter().any(|w| w.is_nan() || *w < 0.0) || self.quality_weights.iter().sum::<f64>() <= 0.0 {
            return bad("quality weights must be non-negative with a positive sum".into());
        }
        if let Some(zones) = &self.target_zones {
            if zones.len() != self.n_targets {
                return bad(format!("{} target zones for {} targets", zones.len(), self.n_targets));
            }
            let (x0, x1) = (self.grid.origin.x, self.grid.origin.x + self.grid.width());
            if zones.iter().any(|&(a, b)| !(x0 <= a && a < b && b <= x1)) {
                return bad("target zones must be non-empty x-intervals inside the grid".into());
            }
        }
        for s in &self.sensors {
            s.validate().map_err(|e| SimulationError::Invalid(e.to_string()))?;
        }
        let seq = &self.sequences;
        seq.bins.validate().map_err(SimulationError::Invalid)?;
        if seq.count > 0 {
            if seq.bins.future_bins == 0 || seq.bins.past_bins == 0 {
                return bad("sequences need at least one past and one future bin".into());
            }
            if !(1 <= seq.events.0 && seq.events.0 <= seq.events.1) {
                return bad(format!("bad sequence event range {:?}", seq.events));
            }
            for (name, p) in [("p_plant", seq.p_plant), ("template_prob", seq.template_prob)] {
                if !(0.0..=1.0).contains(&p) {
                    return bad(format!("{name} must lie in [0, 1], got {p}"));
                }
            }
            if let Some(rule) = &seq.planted_rule {
                rule.validate(&self.grid, &seq.bins)
                    .map_err(|e| SimulationError::Invalid(format!("planted rule: {e}")))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub time: Timestamp,
    pub position: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub target: usize,
    /// Waypoint arrivals; the target holds its last position afterwards.
    pub points: Vec<TrackPoint>,
}

impl Track {
    pub fn position_at(&self, t: Timestamp) -> Point {
        let first = self.points[0];
        if t <= first.time {
            return first.position;
        }
        for w in self.points.windows(2) {
            let (a, b) = (w[0], w[1]);
            if t <= b.time {
                let f = (t - a.time) as f64 / (b.time - a.time) as f64;
                return Point::new(
                    a.position.x + f * (b.position.x - a.position.x),
                    a.position.y + f * (b.position.y - a.position.y),
                );
            }
        }
        self.points.last().expect("non-empty").position
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Target(usize),
    FalseAlarm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledReport {
    pub report: ObservationReport,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub tracks: Vec<Track>,
    pub reports: Vec<LabeledReport>,
    pub sensors: Vec<Sensor>,
    pub sequences: Vec<EventSequence>,
}

impl GroundTruth {
    pub fn reports(&self) -> Vec<ObservationReport> {
        self.reports.iter().map(|l| l.report.clone()).collect()
    }

    pub fn target_reports(&self) -> Vec<ObservationReport> {
        self.reports
            .iter()
            .filter(|l| l.source != Source::FalseAlarm)
            .map(|l| l.report.clone())
            .collect()
    }

    /// True grouping of target reports, one group per target that produced any.
    pub fn true_groups(&self) -> Vec<Vec<String>> {
        let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        for l in &self.reports {
            if let Source::Target(t) = l.source {
                groups.entry(t).or_default().push(l.report.id.clone());
            }
        }
        groups.into_values().collect()
    }
}

fn uniform_point(rng: &mut ChaCha8Rng, x: (f64, f64), y: (f64, f64)) -> Point {
    Point::new(rng.random_range(x.0..x.1), rng.random_range(y.0..y.1))
}

fn truncated_noise(rng: &mut ChaCha8Rng, normal: &Normal<f64>, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    loop {
        let v = normal.sample(rng);
        if v.abs() <= NOISE_TRUNCATION * sigma {
            return v;
        }
    }
}

/// Poisson event times on `[start, end)`, rounded down to whole seconds.
fn poisson_times(rng: &mut ChaCha8Rng, rate_per_hour: f64, start: Timestamp, end: Timestamp) -> Vec<Timestamp> {
    if rate_per_hour <= 0.0 {
        return Vec::new();
    }
    let exp = Exp::new(rate_per_hour / 3600.0).expect("positive rate");
    let mut out = Vec::new();
    let mut t = start as f64;
    loop {
        t += exp.sample(rng);
        if t >= end as f64 {
            return out;
        }
        out.push(t.floor() as Timestamp);
    }
}

fn simulate_track(cfg: &ScenarioConfig, target: usize, rng: &mut ChaCha8Rng) -> Track {
    let g = &cfg.grid;
    let x = match &cfg.target_zones {
        // waypoints keep to the middle half of the zone
        Some(zones) => {
            let (a, b) = zones[target];
            (a + (b - a) / 4.0, b - (b - a) / 4.0)
        }
        None => (g.origin.x, g.origin.x + g.width()),
    };
    let y = (g.origin.y, g.origin.y + g.height());
    let end = cfg.start + cfg.duration;
    let mut points = vec![TrackPoint {
        time: cfg.start,
        position: uniform_point(rng, x, y),
    }];
    for _ in 1..cfg.waypoint_count {
        let prev = *points.last().expect("non-empty");
        let next = uniform_point(rng, x, y);
        let speed = rng.random_range(cfg.speed_range.0..=cfg.speed_range.1);
        // rounding the leg duration up keeps the realized speed within range
        let dt = ((prev.position.distance(&next) / speed).ceil() as i64).max(1);
        if prev.time + dt > end {
            let f = (end - prev.time) as f64 / dt as f64;
            if end > prev.time {
                points.push(TrackPoint {
                    time: end,
                    position: Point::new(
                        prev.position.x + f * (next.x - prev.position.x),
                        prev.position.y + f * (next.y - prev.position.y),
                    ),
                });
            }
            break;
        }
        points.push(TrackPoint {
            time: prev.time + dt,
            position: next,
        });
    }
    Track { target, points }
}

fn random_report(rng: &mut ChaCha8Rng, cfg: &ScenarioConfig, time: Timestamp, position: Point) -> ObservationReport {
    let quality = [
        QualityCategory::Cat1,
        QualityCategory::Cat2,
        QualityCategory::Cat3,
        QualityCategory::Cat4,
    ]
    .into_iter()
    .zip(cfg.quality_weights)
    .collect::<Vec<_>>()
    .choose_weighted(rng, |q| q.1)
    .expect("validated weights")
    .0;
    ObservationReport {
        id: String::new(),
        time,
        position,
        observer: *[Observer::Civilian, Observer::Military].choose(rng).expect("non-empty"),
        obs_type: *ObsType::ALL.choose(rng).expect("non-empty"),
        quality,
        distance_to_target: None,
        features: FeatureBag::default(),
    }
}

/// Sensors fire at most once per minute while a target is inside their disk
/// during an active window, each time with their detection probability.
fn simulate_detections(cfg: &ScenarioConfig, tracks: &[Track], rng: &mut ChaCha8Rng) -> Vec<Sensor> {
    let mut sensors = cfg.sensors.clone();
    for s in sensors.iter_mut() {
        let mut fired: BTreeSet<Timestamp> = s.detections.iter().copied().collect();
        for t in (cfg.start..cfg.start + cfg.duration).step_by(60) {
            if !s.active_windows.iter().any(|w| w.contains(t)) {
                continue;
            }
            let present = tracks.iter().any(|tr| tr.position_at(t).distance(&s.position) <= s.radius);
            if present && rng.random_bool(s.detection_prob) {
                fired.insert(t);
            }
        }
        s.detections = fired.into_iter().collect();
    }
    sensors
}

fn random_cell_in(rng: &mut ChaCha8Rng, slot: &Slot) -> (Cell, i32) {
    let a = slot.area;
    (
        Cell::new(rng.random_range(a.cols.0..=a.cols.1), rng.random_range(a.rows.0..=a.rows.1)),
        rng.random_range(slot.time.lo..=slot.time.hi),
    )
}

fn step(rng: &mut ChaCha8Rng, from: Cell, reach: i32, grid: &GridSpec) -> Cell {
    let mv = |v: u16, max: u16, rng: &mut ChaCha8Rng| (v as i32 + rng.random_range(-reach..=reach)).clamp(0, max as i32 - 1) as u16;
    Cell::new(mv(from.col, grid.columns, rng), mv(from.row, grid.rows, rng))
}

fn event_in(rng: &mut ChaCha8Rng, grid: &GridSpec, bins: &TimeBinSpec, cell: Cell, bin: i32) -> SeqEvent {
    let (lo, hi) = bins.bin_interval(bin);
    let min = grid.cell_min(cell);
    let s = grid.cell_size;
    SeqEvent {
        cell,
        bin,
        position: uniform_point(rng, (min.x, min.x + s), (min.y, min.y + s)),
        time: rng.random_range(lo..hi),
    }
}

/// Cells and bins of one sequence, oldest first, ending at T0.
fn sequence_skeleton(rng: &mut ChaCha8Rng, cfg: &ScenarioConfig) -> Vec<(Cell, i32)> {
    let seq = &cfg.sequences;
    let grid = &cfg.grid;
    let past = seq.bins.past_bins as i32;
    if let Some(rule) = seq.planted_rule.as_ref().filter(|_| rng.random_bool(seq.template_prob)) {
        let mut picks: Vec<(Cell, i32)> = rule.precedent.iter().map(|s| random_cell_in(rng, s)).collect();
        // slot ranges may overlap; sorting bins keeps each pick inside some valid order
        let mut bins: Vec<i32> = picks.iter().map(|p| p.1).collect();
        bins.sort_unstable_by(|a, b| b.cmp(a));
        // a bin sorted into a slot stays inside it because slot bounds are non-increasing
        for (p, b) in picks.iter_mut().zip(bins) {
            p.1 = b;
        }
        if picks.last().is_some_and(|p| p.1 != 0) {
            let last = picks.last().expect("non-empty").0;
            picks.push((step(rng, last, 1, grid), 0));
        }
        return picks;
    }
    let n = rng.random_range(seq.events.0..=seq.events.1);
    let mut bins: Vec<i32> = (1..n).map(|_| rng.random_range(1..=past)).collect();
    bins.sort_unstable_by(|a, b| b.cmp(a));
    bins.push(0);
    let mut cell = Cell::new(rng.random_range(0..grid.columns), rng.random_range(0..grid.rows));
    bins.into_iter()
        .enumerate()
        .map(|(i, b)| {
            if i > 0 {
                cell = step(rng, cell, 1, grid);
            }
            (cell, b)
        })
        .collect()
}

fn simulate_sequence(rng: &mut ChaCha8Rng, cfg: &ScenarioConfig) -> EventSequence {
    let sc = &cfg.sequences;
    let grid = &cfg.grid;
    let w = sc.bins.bin_width;
    let lo = cfg.start + sc.bins.past_bins as i64 * w;
    let hi = (cfg.start + cfg.duration - sc.bins.future_bins as i64 * w).max(lo + 1);
    let anchor = rng.random_range(lo..hi);
    let bins = sc.bins.with_anchor(anchor);
    let skeleton = sequence_skeleton(rng, cfg);

    let mut events: Vec<SeqEvent> = skeleton.iter().map(|&(c, b)| event_in(rng, grid, &bins, c, b)).collect();
    // keep skeleton order within a shared bin
    let mut i = 0;
    while i < events.len() {
        let j = (i..events.len()).take_while(|&k| events[k].bin == events[i].bin).last().expect("i in range") + 1;
        let mut times: Vec<Timestamp> = events[i..j].iter().map(|e| e.time).collect();
        times.sort_unstable();
        for (e, t) in events[i..j].iter_mut().zip(times) {
            e.time = t;
        }
        i = j;
    }
    let mut seq = EventSequence {
        events,
        anchor,
        continuation: None,
    };

    let last = seq.events.last().expect("skeleton ends at T0").cell;
    let future = sc.bins.future_bins as i32;
    let free_step = |rng: &mut ChaCha8Rng| (step(rng, last, 2, grid), rng.random_range(-future..=-1));
    let (cell, bin) = match &sc.planted_rule {
        Some(rule) if matches(rule, &seq) => {
            if rng.random_bool(sc.p_plant) {
                random_cell_in(rng, &rule.prediction)
            } else {
                // a miss must land outside the prediction
                let mut pick = free_step(rng);
                for _ in 0..100 {
                    if !rule.prediction.accepts(pick.0, pick.1) {
                        break;
                    }
                    pick = free_step(rng);
                }
                if rule.prediction.accepts(pick.0, pick.1) {
                    let outside = grid.cells().find(|c| !rule.prediction.area.contains(*c));
                    pick = (outside.unwrap_or(pick.0), pick.1);
                }
                pick
            }
        }
        _ => free_step(rng),
    };
    seq.continuation = Some(event_in(rng, grid, &bins, cell, bin));
    seq
}

pub fn simulate(cfg: &ScenarioConfig) -> Result<GroundTruth, SimulationError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, cfg.position_noise_sigma.max(f64::MIN_POSITIVE)).expect("finite sigma");
    let end = cfg.start + cfg.duration;

    let tracks: Vec<Track> = (0..cfg.n_targets).map(|t| simulate_track(cfg, t, &mut rng)).collect();

    let mut labeled = Vec::new();
    for tr in &tracks {
        for t in poisson_times(&mut rng, cfg.observer_density, cfg.start, end) {
            let truth = tr.position_at(t);
            let noisy = Point::new(
                truth.x + truncated_noise(&mut rng, &normal, cfg.position_noise_sigma),
                truth.y + truncated_noise(&mut rng, &normal, cfg.position_noise_sigma),
            );
            labeled.push(LabeledReport {
                report: random_report(&mut rng, cfg, t, noisy),
                source: Source::Target(tr.target),
            });
        }
    }
    let g = &cfg.grid;
    for t in poisson_times(&mut rng, cfg.false_alarm_rate, cfg.start, end) {
        let p = uniform_point(&mut rng, (g.origin.x, g.origin.x + g.width()), (g.origin.y, g.origin.y + g.height()));
        labeled.push(LabeledReport {
            report: random_report(&mut rng, cfg, t, p),
            source: Source::FalseAlarm,
        });
    }
    // stable sort keeps generation order for simultaneous reports
    labeled.sort_by_key(|l| l.report.time);
    for (i, l) in labeled.iter_mut().enumerate() {
        l.report.id = format!("r{i:05}");
    }

    let sensors = simulate_detections(cfg, &tracks, &mut rng);
    let sequences = (0..cfg.sequences.count).map(|_| simulate_sequence(&mut rng, cfg)).collect();
    Ok(GroundTruth {
        tracks,
        reports: labeled,
        sensors,
        sequences,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssociationScore {
    pub adjusted_rand: f64,
    pub pair_precision: f64,
    pub pair_recall: f64,
}

fn pairs(n: u64) -> f64 {
    (n * n.saturating_sub(1) / 2) as f64
}

/// Adjusted Rand index and pair precision/recall between two groupings of the same ids.
pub fn compare_groupings(found: &[Vec<String>], truth: &[Vec<String>]) -> Result<AssociationScore, SimulationError> {
    let index = |groups: &[Vec<String>], what: &str| -> Result<BTreeMap<String, usize>, SimulationError> {
        let mut map = BTreeMap::new();
        for (g, ids) in groups.iter().enumerate() {
            for id in ids {
                if map.insert(id.clone(), g).is_some() {
                    return Err(SimulationError::IdMismatch(format!("{id} appears twice in the {what}")));
                }
            }
        }
        Ok(map)
    };
    let f = index(found, "partition")?;
    let t = index(truth, "truth")?;
    if f.len() != t.len() || f.keys().ne(t.keys()) {
        let missing: Vec<&String> = t.keys().filter(|k| !f.contains_key(*k)).collect();
        let extra: Vec<&String> = f.keys().filter(|k| !t.contains_key(*k)).collect();
        return Err(SimulationError::IdMismatch(format!("missing {missing:?}, unexpected {extra:?}")));
    }
    let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for (id, &g) in &f {
        *table.entry((g, t[id])).or_default() += 1;
    }
    let count = |groups: &[Vec<String>]| groups.iter().map(|g| pairs(g.len() as u64)).sum::<f64>();
    let both: f64 = table.values().map(|&n| pairs(n)).sum();
    let (same_found, same_truth) = (count(found), count(truth));
    let total = pairs(f.len() as u64);
    let expected = if total == 0.0 { 0.0 } else { same_found * same_truth / total };
    let max = (same_found + same_truth) / 2.0;
    let adjusted_rand = if max == expected { 1.0 } else { (both - expected) / (max - expected) };
    let ratio = |num: f64, den: f64| if den == 0.0 { 1.0 } else { num / den };
    Ok(AssociationScore {
        adjusted_rand,
        pair_precision: ratio(both, same_found),
        pair_recall: ratio(both, same_truth),
    })
}

/// Scores a partition of the target reports (false alarms removed by the caller).
pub fn score_association(subsets: &[Vec<String>], truth: &GroundTruth) -> Result<AssociationScore, SimulationError> {
    compare_groupings(subsets, &truth.true_groups())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionScore {
    pub sequences: usize,
    pub predicted: usize,
    pub hit_rate: f64,
    /// Over sequences with a prediction; `None` when there are none.
    pub mean_position_error_m: Option<f64>,
    pub mean_time_error_s: Option<f64>,
}

/// `preds[i]` is the top prediction for `sequences[i]`, if any.
pub fn score_prediction(
    preds: &[Option<Slot>],
    sequences: &[EventSequence],
    grid: &GridSpec,
    bins: &TimeBinSpec,
) -> Result<PredictionScore, SimulationError> {
    if preds.len() != sequences.len() {
        return Err(SimulationError::IdMismatch(format!(
            "{} predictions for {} sequences",
            preds.len(),
            sequences.len()
        )));
    }
    let (mut hits, mut predicted, mut pos, mut time) = (0, 0, 0.0, 0.0);
    for (i, (p, s)) in preds.iter().zip(sequences).enumerate() {
        let c = s
            .continuation
            .ok_or_else(|| SimulationError::IdMismatch(format!("sequence {i} has no continuation")))?;
        let Some(p) = p else { continue };
        predicted += 1;
        if p.accepts(c.cell, c.bin) {
            hits += 1;
        }
        pos += p.area.center(grid).distance(&c.position);
        let spec = bins.with_anchor(s.anchor);
        let mid = (spec.bin_midpoint(p.time.lo) + spec.bin_midpoint(p.time.hi)) / 2.0;
        time += (mid - c.time as f64).abs();
    }
    let mean = |v: f64| (predicted > 0).then(|| v / predicted as f64);
    Ok(PredictionScore {
        sequences: sequences.len(),
        predicted,
        hit_rate: if sequences.is_empty() { 0.0 } else { hits as f64 / sequences.len() as f64 },
        mean_position_error_m: mean(pos),
        mean_time_error_s: mean(time),
    })
}

/// Matches and hits of a rule over sequences, counted directly.
pub fn rule_counts(rule: &PredictionRule, sequences: &[EventSequence]) -> (usize, usize) {
    sequences
        .iter()
        .filter(|s| matches(rule, s))
        .fold((0, 0), |(m, h), s| {
            let hit = s.continuation.as_ref().is_some_and(|c| prediction_satisfied(rule, c));
            (m + 1, h + hit as usize)
        })
}

/// The planted rule used by the example scenarios: the generalized rule from the
/// worked example, `If [HIJ345 & T456] [EF34 & T1234] [DEF456 & T0] then [CDEF67 & T-1-2]`.
pub fn example_planted_rule() -> PredictionRule {
    use crate::rules::{AreaPattern, TimePattern};
    let slot = |c: &str, r: &str, b: &str| Slot::new(AreaPattern::parse(c, r).expect("literal"), TimePattern::parse(b).expect("literal"));
    PredictionRule {
        precedent: vec![slot("H-J", "3-5", "4-6"), slot("E-F", "3-4", "1-4"), slot("D-F", "4-6", "0")],
        prediction: slot("C-F", "6-7", "-2--1"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::TimeWindow;

    fn base() -> ScenarioConfig {
        ScenarioConfig {
            seed: 7,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn deterministic() {
        let a = serde_json::to_string(&simulate(&base()).unwrap()).unwrap();
        let b = serde_json::to_string(&simulate(&base()).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn false_alarms_only() {
        let cfg = ScenarioConfig {
            n_targets: 0,
            false_alarm_rate: 5.0,
            ..base()
        };
        let gt = simulate(&cfg).unwrap();
        assert!(!gt.reports.is_empty());
        assert!(gt.reports.iter().all(|l| l.source == Source::FalseAlarm));
    }

    #[test]
    fn tracks_are_feasible_and_reports_near_them() {
        let cfg = ScenarioConfig {
            n_targets: 4,
            observer_density: 10.0,
            ..base()
        };
        let gt = simulate(&cfg).unwrap();
        for tr in &gt.tracks {
            for w in tr.points.windows(2) {
                let d = w[0].position.distance(&w[1].position);
                assert!(d <= cfg.speed_range.1 * (w[1].time - w[0].time) as f64 + 1e-6);
            }
        }
        let tol = NOISE_TRUNCATION * cfg.position_noise_sigma * 2f64.sqrt() + 1e-6;
        let mut per_target = 0;
        for l in &gt.reports {
            if let Source::Target(t) = l.source {
                per_target += 1;
                assert!(gt.tracks[t].position_at(l.report.time).distance(&l.report.position) <= tol);
            }
        }
        let alarms = gt.reports.iter().filter(|l| l.source == Source::FalseAlarm).count();
        assert_eq!(gt.reports.len(), per_target + alarms);
        assert!(gt.reports.windows(2).all(|w| w[0].report.time <= w[1].report.time));
    }

    #[test]
    fn infeasible_configs_rejected() {
        assert!(simulate(&ScenarioConfig { speed_range: (1.0, 13.0), ..base() }).is_err());
        assert!(simulate(&ScenarioConfig { duration: 0, ..base() }).is_err());
        assert!(simulate(&ScenarioConfig {
            target_zones: Some(vec![(0.0, 1000.0)]),
            ..base()
        })
        .is_err());
    }

    #[test]
    fn sensors_fire_when_targets_pass() {
        let cfg = ScenarioConfig {
            n_targets: 1,
            waypoint_count: 1,
            sensors: vec![Sensor {
                id: "s".into(),
                position: Point::new(27_500.0, 22_500.0),
                radius: 100_000.0,
                detection_prob: 1.0,
                active_windows: vec![TimeWindow::new(base().start, base().start + 600)],
                detections: vec![],
            }],
            ..base()
        };
        let gt = simulate(&cfg).unwrap();
        assert_eq!(gt.sensors[0].detections.len(), 10);
    }

    fn planted(p_plant: f64) -> ScenarioConfig {
        ScenarioConfig {
            duration: 30 * 86_400,
            sequences: SequenceConfig {
                count: 400,
                planted_rule: Some(example_planted_rule()),
                p_plant,
                ..SequenceConfig::default()
            },
            ..base()
        }
    }

    #[test]
    fn planted_rule_always_fires_at_full_strength() {
        let gt = simulate(&planted(1.0)).unwrap();
        let rule = example_planted_rule();
        let (m, h) = rule_counts(&rule, &gt.sequences);
        assert!(m > 50);
        assert_eq!(m, h);
        let matched: Vec<EventSequence> = gt.sequences.iter().filter(|s| matches(&rule, s)).cloned().collect();
        let preds = vec![Some(rule.prediction); matched.len()];
        let score = score_prediction(&preds, &matched, &GridSpec::default(), &planted(1.0).sequences.bins).unwrap();
        assert_eq!(score.hit_rate, 1.0);
    }

    #[test]
    fn sequences_are_well_formed() {
        let cfg = planted(0.7);
        let gt = simulate(&cfg).unwrap();
        for s in &gt.sequences {
            assert!(s.events.windows(2).all(|w| w[0].time <= w[1].time));
            let last = s.events.last().unwrap();
            assert_eq!((last.bin, last.time), (0, s.anchor));
            let spec = cfg.sequences.bins.with_anchor(s.anchor);
            for e in s.events.iter().chain(s.continuation.as_ref()) {
                assert_eq!(crate::report::bin_time(e.time, &spec), Some(e.bin));
                assert_eq!(crate::report::project_to_cell(e.position, &cfg.grid), Some(e.cell));
            }
        }
        let (m, h) = rule_counts(&example_planted_rule(), &gt.sequences);
        let p = h as f64 / m as f64;
        assert!((0.55..=0.85).contains(&p), "empirical precision {p}");
    }

    fn ids(groups: &[&[&str]]) -> Vec<Vec<String>> {
        groups.iter().map(|g| g.iter().map(|s| s.to_string()).collect()).collect()
    }

    #[test]
    fn association_scores() {
        let truth = ids(&[&["a", "b"], &["c"]]);
        let s = compare_groupings(&truth, &truth).unwrap();
        assert_eq!((s.adjusted_rand, s.pair_precision, s.pair_recall), (1.0, 1.0, 1.0));

        let a: Vec<String> = (0..10).map(|i| format!("a{i}")).collect();
        let b: Vec<String> = (0..10).map(|i| format!("b{i}")).collect();
        let all: Vec<String> = a.iter().chain(&b).cloned().collect();
        let s = compare_groupings(&[all], &[a, b]).unwrap();
        assert_eq!(s.pair_recall, 1.0);
        assert_eq!(s.pair_precision, 90.0 / 190.0);

        assert!(compare_groupings(&ids(&[&["a"]]), &ids(&[&["b"]])).is_err());
    }

    #[test]
    fn random_partitions_have_ari_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let truth: Vec<Vec<String>> = (0..4).map(|g| (0..15).map(|i| format!("{g}-{i}")).collect()).collect();
        let mut total = 0.0;
        let trials = 300;
        for _ in 0..trials {
            let mut found = vec![Vec::new(); 4];
            for id in truth.iter().flatten() {
                found[rng.random_range(0..4)].push(id.clone());
            }
            total += compare_groupings(&found, &truth).unwrap().adjusted_rand;
        }
        assert!((total / trials as f64).abs() < 0.02);
    }

    #[test]
    fn exact_predictions_are_within_half_a_cell_and_bin() {
        let gt = simulate(&planted(0.7)).unwrap();
        let preds: Vec<Option<Slot>> = gt
            .sequences
            .iter()
            .map(|s| {
                let c = s.continuation.unwrap();
                Some(Slot::new(crate::rules::AreaPattern::cell(c.cell), crate::rules::TimePattern::bin(c.bin)))
            })
            .collect();
        let score = score_prediction(&preds, &gt.sequences, &GridSpec::default(), &TimeBinSpec::default()).unwrap();
        assert_eq!(score.hit_rate, 1.0);
        assert!(score.mean_position_error_m.unwrap() <= 3536.0);
        assert!(score.mean_time_error_s.unwrap() <= 1440.0);
        let none = score_prediction(&vec![None; gt.sequences.len()], &gt.sequences, &GridSpec::default(), &TimeBinSpec::default()).unwrap();
        assert_eq!(none.hit_rate, 0.0);
    }
}
