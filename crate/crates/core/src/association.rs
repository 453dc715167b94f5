//! Report-to-target association by metaconflict minimization.
//!
//! Every pair of reports gets a conflict in `[0, 1]`, read as the probability
//! that the two reports come from different targets. A subset's conflict is
//! `1 - Π(1 - c_pair)` over its pairs, the prior over the number of targets
//! contributes a domain conflict `c0`, and the partition criterion is the
//! metaconflict `1 - (1 - c0) Π(1 - c_i)`.
//!
//! Partitions are handled internally as restricted growth strings over the
//! reports sorted by id, which doubles as the canonical form used for
//! tie-breaking.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evidence::{ConflictLedger, ReliabilityMap};
use crate::report::{format_timestamp, parse_timestamp, ObservationReport, Point, TimeWindow, Timestamp};

/// Smallest energy change the local search treats as a real improvement.
const DELTA_EPS: f64 = 1e-12;
/// Energy charged for a certain conflict; larger than any finite `-ln(1 - c)` in f64.
const HARD_PENALTY: f64 = 64.0;
pub const BRUTE_FORCE_LIMIT: usize = 10;

#[derive(Debug, Error, PartialEq)]
pub enum AssociationError {
    #[error("invalid conflict parameters: {0}")]
    BadParams(String),
    #[error("invalid sensor `{id}`: {reason}")]
    BadSensor { id: String, reason: String },
    #[error("invalid count prior: {0}")]
    BadPrior(String),
    #[error("subset count {0} is outside the prior's domain")]
    OutsideDomain(usize),
    #[error("no reports to associate")]
    NoReports,
    #[error("brute force refuses {0} reports (limit {BRUTE_FORCE_LIMIT})")]
    TooManyReports(usize),
    #[error("invalid partition: {0}")]
    BadPartition(String),
    #[error("unknown report id `{0}`")]
    UnknownReport(String),
    #[error("every subset count has metaconflict 1; posterior undefined")]
    NoInformation,
}

/// Kinematic and sensor parameters of the pairwise conflict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConflictParams {
    /// Speeds up to this are conflict-free (m/s).
    pub v_max: f64,
    /// Speeds at or above this are impossible (m/s).
    pub v_hard: f64,
    /// Upper bound on the conflict contributed by silent sensors.
    pub sensor_weight_cap: f64,
    /// When set, pair conflicts are discounted by the product of both reports'
    /// quality reliabilities.
    #[serde(default)]
    pub reliability: Option<ReliabilityMap>,
}

impl Default for ConflictParams {
    fn default() -> Self {
        ConflictParams {
            v_max: 4.0,
            v_hard: 12.0,
            sensor_weight_cap: 0.99,
            reliability: None,
        }
    }
}

impl ConflictParams {
    pub fn validate(&self) -> Result<(), AssociationError> {
        if !(self.v_max > 0.0 && self.v_max < self.v_hard && self.v_hard.is_finite()) {
            return Err(AssociationError::BadParams(format!(
                "need 0 < v_max < v_hard, got v_max={} v_hard={}",
                self.v_max, self.v_hard
            )));
        }
        if !(0.0..=1.0).contains(&self.sensor_weight_cap) {
            return Err(AssociationError::BadParams(format!(
                "sensor_weight_cap {} outside [0, 1]",
                self.sensor_weight_cap
            )));
        }
        Ok(())
    }
}

/// Stationary sensor guarding a disk. `detections` lists the instants it fired.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SensorRecord", try_from = "SensorRecord")]
pub struct Sensor {
    pub id: String,
    pub position: Point,
    pub radius: f64,
    pub detection_prob: f64,
    pub active_windows: Vec<TimeWindow>,
    pub detections: Vec<Timestamp>,
}

impl Sensor {
    pub fn validate(&self) -> Result<(), AssociationError> {
        let bad = |reason: String| AssociationError::BadSensor {
            id: self.id.clone(),
            reason,
        };
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(bad(format!("radius {} must be positive", self.radius)));
        }
        if !(0.0..=1.0).contains(&self.detection_prob) {
            return Err(bad(format!("detection_prob {} outside [0, 1]", self.detection_prob)));
        }
        if !self.position.is_finite() {
            return Err(bad("position must be finite".into()));
        }
        let mut windows = self.active_windows.clone();
        windows.sort_by_key(|w| w.start);
        for w in &windows {
            if w.end <= w.start {
                return Err(bad(format!("empty window [{}, {})", w.start, w.end)));
            }
        }
        if windows.windows(2).any(|p| p[1].start < p[0].end) {
            return Err(bad("active windows overlap".into()));
        }
        Ok(())
    }

    fn active_during(&self, from: f64, to: f64) -> bool {
        self.active_windows
            .iter()
            .any(|w| (w.start as f64) <= to && from < w.end as f64)
    }

    fn fired_during(&self, from: Timestamp, to: Timestamp) -> bool {
        self.detections.iter().any(|&t| t >= from && t <= to)
    }

    /// Parameter interval `[s0, s1] ⊆ [0, 1]` of the segment `a→b` inside the disk.
    fn segment_overlap(&self, a: Point, b: Point) -> Option<(f64, f64)> {
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let (fx, fy) = (a.x - self.position.x, a.y - self.position.y);
        let r2 = self.radius * self.radius;
        let qa = dx * dx + dy * dy;
        let qc = fx * fx + fy * fy - r2;
        if qa == 0.0 {
            return (qc <= 0.0).then_some((0.0, 1.0));
        }
        let qb = 2.0 * (fx * dx + fy * dy);
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        let s0 = ((-qb - sq) / (2.0 * qa)).max(0.0);
        let s1 = ((-qb + sq) / (2.0 * qa)).min(1.0);
        (s0 <= s1).then_some((s0, s1))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WindowRecord {
    start: String,
    end: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SensorRecord {
    id: String,
    x_m: f64,
    y_m: f64,
    radius_m: f64,
    detection_prob: f64,
    #[serde(default)]
    windows: Vec<WindowRecord>,
    #[serde(default)]
    detections: Vec<String>,
}

impl From<Sensor> for SensorRecord {
    fn from(s: Sensor) -> Self {
        SensorRecord {
            id: s.id,
            x_m: s.position.x,
            y_m: s.position.y,
            radius_m: s.radius,
            detection_prob: s.detection_prob,
            windows: s
                .active_windows
                .iter()
                .map(|w| WindowRecord {
                    start: format_timestamp(w.start),
                    end: format_timestamp(w.end),
                })
                .collect(),
            detections: s.detections.iter().map(|&t| format_timestamp(t)).collect(),
        }
    }
}

impl TryFrom<SensorRecord> for Sensor {
    type Error = AssociationError;

    fn try_from(r: SensorRecord) -> Result<Self, Self::Error> {
        let ts = |s: &str| {
            parse_timestamp(s).ok_or_else(|| AssociationError::BadSensor {
                id: r.id.clone(),
                reason: format!("bad timestamp `{s}`"),
            })
        };
        let active_windows = r
            .windows
            .iter()
            .map(|w| Ok(TimeWindow::new(ts(&w.start)?, ts(&w.end)?)))
            .collect::<Result<Vec<_>, AssociationError>>()?;
        let detections = r.detections.iter().map(|d| ts(d)).collect::<Result<Vec<_>, _>>()?;
        let sensor = Sensor {
            id: r.id.clone(),
            position: Point::new(r.x_m, r.y_m),
            radius: r.radius_m,
            detection_prob: r.detection_prob,
            active_windows,
            detections,
        };
        sensor.validate()?;
        Ok(sensor)
    }
}

/// Prior weights over the number of targets, on `1..=n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountPrior {
    weights: BTreeMap<usize, f64>,
}

impl CountPrior {
    /// Missing counts between 1 and the largest key get weight 0.
    pub fn new(weights: BTreeMap<usize, f64>) -> Result<Self, AssociationError> {
        if weights.contains_key(&0) {
            return Err(AssociationError::BadPrior("subset counts start at 1".into()));
        }
        if weights.values().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(AssociationError::BadPrior("weights must be finite and >= 0".into()));
        }
        if !weights.values().any(|&w| w > 0.0) {
            return Err(AssociationError::BadPrior("at least one weight must be positive".into()));
        }
        Ok(CountPrior { weights })
    }

    pub fn uniform(n_max: usize) -> Result<Self, AssociationError> {
        CountPrior::new((1..=n_max).map(|n| (n, 1.0)).collect())
    }

    /// Weights `q^n` on `1..=n_max`.
    pub fn geometric(q: f64, n_max: usize) -> Result<Self, AssociationError> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(AssociationError::BadPrior(format!("geometric ratio {q} outside (0, 1]")));
        }
        CountPrior::new((1..=n_max).map(|n| (n, q.powi(n as i32))).collect())
    }

    pub fn n_max(&self) -> usize {
        self.weights.keys().next_back().copied().unwrap_or(0)
    }

    pub fn weight(&self, n: usize) -> f64 {
        self.weights.get(&n).copied().unwrap_or(0.0)
    }

    fn max_weight(&self) -> f64 {
        self.weights.values().copied().fold(0.0, f64::max)
    }

    /// `c0(n) = 1 - prior(n) / max prior`.
    pub fn domain_conflict(&self, n: usize) -> Result<f64, AssociationError> {
        if n == 0 || n > self.n_max() {
            return Err(AssociationError::OutsideDomain(n));
        }
        Ok(1.0 - self.weight(n) / self.max_weight())
    }
}

pub fn domain_conflict(n: usize, prior: &CountPrior) -> Result<f64, AssociationError> {
    prior.domain_conflict(n)
}

/// Conflict between two reports from required speed and silent sensors on the path.
pub fn pairwise_conflict(r1: &ObservationReport, r2: &ObservationReport, p: &ConflictParams, sensors: &[Sensor]) -> f64 {
    let key = |r: &ObservationReport| (r.time, r.position.x, r.position.y);
    let (a, b) = if key(r1).partial_cmp(&key(r2)) == Some(Ordering::Greater) {
        (r2, r1)
    } else {
        (r1, r2)
    };
    let distance = a.position.distance(&b.position);
    let dt = (b.time - a.time) as f64;
    let v_req = if dt > 0.0 {
        distance / dt
    } else if distance > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let c_kin = ((v_req - p.v_max) / (p.v_hard - p.v_max)).clamp(0.0, 1.0);

    let mut silent_keep = 1.0;
    for s in sensors {
        let Some((s0, s1)) = s.segment_overlap(a.position, b.position) else {
            continue;
        };
        let (t0, t1) = (a.time as f64 + s0 * dt, a.time as f64 + s1 * dt);
        if s.active_during(t0, t1) && !s.fired_during(a.time, b.time) {
            silent_keep *= 1.0 - s.detection_prob;
        }
    }
    let c_sens = (1.0 - silent_keep).min(p.sensor_weight_cap);
    let c = 1.0 - (1.0 - c_kin) * (1.0 - c_sens);
    match &p.reliability {
        // discounting m(different) = c by both sources' reliabilities
        Some(map) => c * map.reliability(a.quality) * map.reliability(b.quality),
        None => c,
    }
}

/// `1 - Π(1 - c_pair)` over unordered pairs of `rs`.
pub fn subset_conflict(rs: &[ObservationReport], p: &ConflictParams, sensors: &[Sensor]) -> f64 {
    let mut keep = 1.0;
    for i in 0..rs.len() {
        for j in i + 1..rs.len() {
            keep *= 1.0 - pairwise_conflict(&rs[i], &rs[j], p, sensors);
        }
    }
    1.0 - keep
}

/// Local-search settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchParams {
    pub restarts: usize,
    pub seed: u64,
    pub max_iters: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            restarts: 8,
            seed: 0,
            max_iters: 1000,
        }
    }
}

/// Disjoint cover of the reports, subsets in canonical order (by smallest id),
/// each subset sorted by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub subsets: Vec<Vec<String>>,
    pub ledger: ConflictLedger,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountPosterior {
    pub probabilities: BTreeMap<usize, f64>,
    /// Best metaconflict found with exactly `n` subsets.
    pub best_mcf: BTreeMap<usize, f64>,
}

impl CountPosterior {
    /// Most probable count; the smaller count wins ties.
    pub fn mode(&self) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for (&n, &p) in &self.probabilities {
            if p > best.1 {
                best = (n, p);
            }
        }
        best.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Subset(usize),
    NewSubset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipProfile {
    pub report_id: String,
    pub placements: Vec<(Placement, f64)>,
}

impl MembershipProfile {
    pub fn plausibility(&self, placement: Placement) -> Option<f64> {
        self.placements.iter().find(|(p, _)| *p == placement).map(|&(_, v)| v)
    }
}

/// Output document of an association run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub subsets: Vec<Vec<String>>,
    pub c0: f64,
    pub cluster_conflicts: Vec<f64>,
    pub mcf: f64,
    pub posterior: BTreeMap<usize, f64>,
}

impl PartitionReport {
    pub fn new(partition: &Partition, posterior: &CountPosterior) -> Self {
        PartitionReport {
            subsets: partition.subsets.clone(),
            c0: partition.ledger.c0,
            cluster_conflicts: partition.ledger.cluster_conflicts.clone(),
            mcf: partition.ledger.mcf,
            posterior: posterior.probabilities.clone(),
        }
    }
}

/// Relabels so that labels appear in order of first occurrence.
fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map: HashMap<usize, usize> = HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

fn block_count(labels: &[usize]) -> usize {
    labels.iter().copied().max().map_or(0, |m| m + 1)
}

/// Candidate ordering: metaconflict, then fewer subsets, then canonical form.
fn candidate_cmp(a: &(f64, usize, Vec<usize>), b: &(f64, usize, Vec<usize>)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then_with(|| a.2.cmp(&b.2))
}

/// Reports (sorted by id) with their precomputed conflict matrix and prior.
#[derive(Debug, Clone)]
pub struct AssociationProblem {
    ids: Vec<String>,
    conflicts: Vec<f64>,
    prior: CountPrior,
}

impl AssociationProblem {
    pub fn new(
        reports: &[ObservationReport],
        params: &ConflictParams,
        sensors: &[Sensor],
        prior: &CountPrior,
    ) -> Result<Self, AssociationError> {
        params.validate()?;
        for s in sensors {
            s.validate()?;
        }
        let mut sorted: Vec<&ObservationReport> = reports.iter().collect();
        sorted.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = sorted.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(AssociationError::BadPartition(format!("duplicate report id `{}`", w[0].id)));
        }
        let n = sorted.len();
        let mut conflicts = vec![0.0; n * n];
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| (0..n).map(|j| if i < j { pairwise_conflict(sorted[i], sorted[j], params, sensors) } else { 0.0 }).collect())
            .collect();
        for i in 0..n {
            for j in i + 1..n {
                conflicts[i * n + j] = rows[i][j];
                conflicts[j * n + i] = rows[i][j];
            }
        }
        Ok(AssociationProblem {
            ids: sorted.into_iter().map(|r| r.id.clone()).collect(),
            conflicts,
            prior: prior.clone(),
        })
    }

    /// Builds a problem from an explicit symmetric conflict matrix (row-major, `ids.len()²`).
    /// Ids are re-sorted together with the matrix.
    pub fn from_conflicts(ids: Vec<String>, conflicts: Vec<f64>, prior: CountPrior) -> Result<Self, AssociationError> {
        let n = ids.len();
        if conflicts.len() != n * n {
            return Err(AssociationError::BadPartition(format!(
                "conflict matrix has {} entries, expected {}",
                conflicts.len(),
                n * n
            )));
        }
        if conflicts.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(AssociationError::BadPartition("conflicts must lie in [0, 1]".into()));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| ids[a].cmp(&ids[b]));
        let mut sorted = vec![0.0; n * n];
        for (i, &oi) in order.iter().enumerate() {
            for (j, &oj) in order.iter().enumerate() {
                sorted[i * n + j] = if i == j { 0.0 } else { conflicts[oi * n + oj] };
            }
        }
        Ok(AssociationProblem {
            ids: order.into_iter().map(|i| ids[i].clone()).collect(),
            conflicts: sorted,
            prior,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn conflict(&self, i: usize, j: usize) -> f64 {
        self.conflicts[i * self.ids.len() + j]
    }

    fn weight(&self, i: usize, j: usize) -> f64 {
        let c = self.conflict(i, j);
        if c >= 1.0 {
            HARD_PENALTY
        } else {
            -(1.0 - c).ln()
        }
    }

    /// Largest admissible subset count.
    pub fn n_max(&self) -> usize {
        self.ids.len().min(self.prior.n_max())
    }

    /// Domain conflict; counts beyond the prior's domain are impossible (1).
    fn c0(&self, n: usize) -> f64 {
        self.prior.domain_conflict(n).unwrap_or(1.0)
    }

    fn keep_of(&self, members: &[usize]) -> f64 {
        let mut keep = 1.0;
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                keep *= 1.0 - self.conflict(i, j);
            }
        }
        keep
    }

    fn groups_of(labels: &[usize]) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); block_count(labels)];
        for (i, &l) in labels.iter().enumerate() {
            groups[l].push(i);
        }
        groups
    }

    /// Ledger of a canonically labeled partition.
    pub fn ledger(&self, labels: &[usize]) -> ConflictLedger {
        let groups = Self::groups_of(labels);
        let cs = groups.iter().map(|g| 1.0 - self.keep_of(g)).collect();
        ConflictLedger::new(self.c0(groups.len()), cs)
    }

    fn labels_from_subsets(&self, subsets: &[Vec<String>]) -> Result<Vec<usize>, AssociationError> {
        let index: HashMap<&str, usize> = self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
        let mut labels = vec![usize::MAX; self.ids.len()];
        for (s, subset) in subsets.iter().enumerate() {
            if subset.is_empty() {
                return Err(AssociationError::BadPartition("empty subset".into()));
            }
            for id in subset {
                let &i = index.get(id.as_str()).ok_or_else(|| AssociationError::UnknownReport(id.clone()))?;
                if labels[i] != usize::MAX {
                    return Err(AssociationError::BadPartition(format!("report `{id}` appears twice")));
                }
                labels[i] = s;
            }
        }
        if let Some(i) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(AssociationError::BadPartition(format!("report `{}` not covered", self.ids[i])));
        }
        Ok(canonical_labels(&labels))
    }

    pub fn partition(&self, labels: &[usize]) -> Partition {
        let labels = canonical_labels(labels);
        let ledger = self.ledger(&labels);
        let subsets = Self::groups_of(&labels)
            .into_iter()
            .map(|g| g.into_iter().map(|i| self.ids[i].clone()).collect())
            .collect::<Vec<Vec<String>>>();
        Partition {
            n: subsets.len(),
            subsets,
            ledger,
        }
    }

    pub fn evaluate(&self, subsets: &[Vec<String>]) -> Result<ConflictLedger, AssociationError> {
        let labels = self.labels_from_subsets(subsets)?;
        let n = block_count(&labels);
        self.prior.domain_conflict(n)?;
        Ok(self.ledger(&labels))
    }

    fn random_start(&self, rng: &mut ChaCha8Rng, fixed_n: Option<usize>) -> Vec<usize> {
        let m = self.ids.len();
        match fixed_n {
            Some(n) => {
                let mut order: Vec<usize> = (0..m).collect();
                order.shuffle(rng);
                let mut labels = vec![0; m];
                for (k, &i) in order.iter().enumerate() {
                    labels[i] = if k < n { k } else { rng.random_range(0..n) };
                }
                labels
            }
            None => {
                let n0 = rng.random_range(1..=self.n_max());
                (0..m).map(|_| rng.random_range(0..n0)).collect()
            }
        }
    }

    /// Steepest-descent local search from `start`. Returns canonical labels.
    ///
    /// The search minimizes `-ln(1 - mcf) = -ln(1 - c0) + Σ -ln(1 - c_ij)` over
    /// pairs sharing a subset, which orders partitions exactly like metaconflict
    /// while it is below one. Certain conflicts cost a large finite penalty so
    /// partitions stuck at metaconflict one can still be told apart.
    fn descend(&self, start: Vec<usize>, fixed_n: Option<usize>, max_iters: usize) -> Vec<usize> {
        let m = self.len();
        let n_max = self.n_max();
        // group ids are slots 0..m; a report's slot never needs to exceed m - 1
        let mut label = canonical_labels(&start);
        let mut size = vec![0usize; m];
        for &l in &label {
            size[l] += 1;
        }
        // s[r * m + g] = Σ w(r, j) over j in slot g, j != r
        let mut s = vec![0.0; m * m];
        for r in 0..m {
            for j in 0..m {
                if j != r {
                    s[r * m + label[j]] += self.weight(r, j);
                }
            }
        }
        let e0 = |n: usize| -> f64 {
            let c0 = self.c0(n);
            if c0 >= 1.0 {
                HARD_PENALTY
            } else {
                -(1.0 - c0).ln()
            }
        };
        let allowed = |n: usize| n >= 1 && n <= n_max && fixed_n.is_none_or(|f| f == n);

        for _ in 0..max_iters {
            let k = size.iter().filter(|&&c| c > 0).count();
            let active: Vec<usize> = (0..m).filter(|&g| size[g] > 0).collect();
            let empty = (0..m).find(|&g| size[g] == 0);

            // best single move, and best subset-shedding move that does not worsen
            let mut best: Option<(f64, usize, usize)> = None;
            let mut shed: Option<(f64, usize, usize)> = None;
            for r in 0..m {
                let src = label[r];
                let single = size[src] == 1;
                let targets = active.iter().copied().filter(|&g| g != src).chain(empty.filter(|_| !single));
                for dst in targets {
                    let new_n = k - usize::from(single) + usize::from(size[dst] == 0);
                    if !allowed(new_n) {
                        continue;
                    }
                    let delta = s[r * m + dst] - s[r * m + src] + e0(new_n) - e0(k);
                    if best.is_none_or(|b| delta < b.0 - DELTA_EPS) {
                        best = Some((delta, r, dst));
                    }
                    if new_n < k && delta <= DELTA_EPS && shed.is_none_or(|b| delta < b.0 - DELTA_EPS) {
                        shed = Some((delta, r, dst));
                    }
                }
            }

            let moves: Vec<(usize, usize)> = match best {
                Some((d, r, dst)) if d < -DELTA_EPS => vec![(r, dst)],
                _ => match self.compound_move(&label, &size, &s, &active, k, &e0, &allowed) {
                    Some(mv) => mv,
                    None => match shed {
                        Some((_, r, dst)) => vec![(r, dst)],
                        None => break,
                    },
                },
            };
            for (r, dst) in moves {
                let src = label[r];
                for x in 0..m {
                    if x != r {
                        let w = self.weight(x, r);
                        s[x * m + src] -= w;
                        s[x * m + dst] += w;
                    }
                }
                size[src] -= 1;
                size[dst] += 1;
                label[r] = dst;
            }
        }
        canonical_labels(&label)
    }

    /// Best improving merge of two subsets or swap of two reports between
    /// subsets, as a list of single-report relocations.
    #[allow(clippy::too_many_arguments)]
    fn compound_move(
        &self,
        label: &[usize],
        size: &[usize],
        s: &[f64],
        active: &[usize],
        k: usize,
        e0: &dyn Fn(usize) -> f64,
        allowed: &dyn Fn(usize) -> bool,
    ) -> Option<Vec<(usize, usize)>> {
        let m = self.len();
        let members = |g: usize| (0..m).filter(move |&r| label[r] == g);
        let mut best: Option<(f64, Vec<(usize, usize)>)> = None;
        let mut offer = |delta: f64, moves: Vec<(usize, usize)>| {
            if delta < -DELTA_EPS && best.as_ref().is_none_or(|b| delta < b.0 - DELTA_EPS) {
                best = Some((delta, moves));
            }
        };
        for (ai, &a) in active.iter().enumerate() {
            for &b in &active[ai + 1..] {
                if allowed(k - 1) {
                    let joined: f64 = members(b).map(|r| s[r * m + a]).sum();
                    offer(joined + e0(k - 1) - e0(k), members(b).map(|r| (r, a)).collect());
                }
                if size[a] == 0 || size[b] == 0 {
                    continue;
                }
                for r in members(a) {
                    for t in members(b) {
                        let w = self.weight(r, t);
                        let delta = (s[r * m + b] - w - s[r * m + a]) + (s[t * m + a] - w - s[t * m + b]);
                        offer(delta, vec![(r, b), (t, a)]);
                    }
                }
            }
        }
        best.map(|b| b.1)
    }

    fn best_of_restarts(&self, search: &SearchParams, fixed_n: Option<usize>) -> Vec<usize> {
        let restarts = search.restarts.max(1);
        let results: Vec<(f64, usize, Vec<usize>)> = (0..restarts)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
                rng.set_stream(i as u64 + 1 + fixed_n.map_or(0, |n| (n as u64) << 32));
                // the first unconstrained start is the single-subset partition
                let start = if i == 0 && fixed_n.is_none() {
                    vec![0; self.len()]
                } else {
                    self.random_start(&mut rng, fixed_n)
                };
                let labels = self.descend(start, fixed_n, search.max_iters);
                (self.ledger(&labels).mcf, block_count(&labels), labels)
            })
            .collect();
        results.into_iter().min_by(candidate_cmp).expect("at least one restart").2
    }

    pub fn minimize(&self, search: &SearchParams) -> Result<Partition, AssociationError> {
        if self.is_empty() {
            return Err(AssociationError::NoReports);
        }
        Ok(self.partition(&self.best_of_restarts(search, None)))
    }

    /// Best partition with exactly `n` subsets found by constrained local search.
    pub fn minimize_with_count(&self, n: usize, search: &SearchParams) -> Result<Partition, AssociationError> {
        if self.is_empty() {
            return Err(AssociationError::NoReports);
        }
        if n == 0 || n > self.len() {
            return Err(AssociationError::OutsideDomain(n));
        }
        Ok(self.partition(&self.best_of_restarts(search, Some(n))))
    }

    /// Exhaustive minimizer over restricted growth strings, optionally with exactly `n` subsets.
    pub fn brute_force(&self, fixed_n: Option<usize>) -> Result<Partition, AssociationError> {
        let m = self.len();
        if m == 0 {
            return Err(AssociationError::NoReports);
        }
        if m > BRUTE_FORCE_LIMIT {
            return Err(AssociationError::TooManyReports(m));
        }
        let cap = fixed_n.unwrap_or(self.n_max()).min(m);
        let mut best: Option<(f64, usize, Vec<usize>)> = None;
        let mut labels = vec![0usize; m];
        // prefix maxima: maxes[i] = max(labels[..=i])
        let mut maxes = vec![0usize; m];
        loop {
            let n = maxes[m - 1] + 1;
            if fixed_n.is_none_or(|f| f == n) {
                let cand = (self.ledger(&labels).mcf, n, labels.clone());
                if best.as_ref().is_none_or(|b| candidate_cmp(&cand, b) == Ordering::Less) {
                    best = Some(cand);
                }
            }
            // next restricted growth string in lexicographic order with at most `cap` blocks
            let mut i = m - 1;
            loop {
                if i == 0 {
                    return best
                        .map(|b| self.partition(&b.2))
                        .ok_or(AssociationError::OutsideDomain(fixed_n.unwrap_or(0)));
                }
                if labels[i] <= maxes[i - 1] && labels[i] + 1 < cap {
                    labels[i] += 1;
                    maxes[i] = maxes[i - 1].max(labels[i]);
                    for j in i + 1..m {
                        labels[j] = 0;
                        maxes[j] = maxes[i];
                    }
                    break;
                }
                i -= 1;
            }
        }
    }

    pub fn posterior(&self, search: &SearchParams) -> Result<CountPosterior, AssociationError> {
        if self.is_empty() {
            return Err(AssociationError::NoReports);
        }
        let mut best_mcf = BTreeMap::new();
        for n in 1..=self.prior.n_max() {
            let mcf = if n <= self.len() {
                self.partition(&self.best_of_restarts(search, Some(n))).ledger.mcf
            } else {
                1.0
            };
            best_mcf.insert(n, mcf);
        }
        let total: f64 = best_mcf.values().map(|m| 1.0 - m).sum();
        if total <= 0.0 {
            return Err(AssociationError::NoInformation);
        }
        let probabilities = best_mcf.iter().map(|(&n, m)| (n, (1.0 - m) / total)).collect();
        Ok(CountPosterior {
            probabilities,
            best_mcf,
        })
    }

    /// Plausibility of each placement of `report_id`, relative to the best one.
    pub fn membership(&self, report_id: &str, base: &Partition) -> Result<MembershipProfile, AssociationError> {
        let r = self
            .ids
            .iter()
            .position(|id| id == report_id)
            .ok_or_else(|| AssociationError::UnknownReport(report_id.to_string()))?;
        let labels = self.labels_from_subsets(&base.subsets)?;
        // subset indices follow `base.subsets`, which may not be canonically ordered
        let order: Vec<usize> = base
            .subsets
            .iter()
            .map(|s| labels[self.ids.iter().position(|id| *id == s[0]).expect("validated")])
            .collect();
        let k = block_count(&labels);
        let own = labels[r];
        let single = labels.iter().filter(|&&l| l == own).count() == 1;

        let mut raw: Vec<(Placement, f64)> = Vec::new();
        for (idx, &canon) in order.iter().enumerate() {
            let mut moved = labels.clone();
            moved[r] = canon;
            raw.push((Placement::Subset(idx), 1.0 - self.ledger(&canonical_labels(&moved)).mcf));
        }
        if !single {
            let mut moved = labels.clone();
            moved[r] = k;
            raw.push((Placement::NewSubset, 1.0 - self.ledger(&canonical_labels(&moved)).mcf));
        }
        let max = raw.iter().map(|p| p.1).fold(0.0, f64::max);
        let own_idx = order.iter().position(|&c| c == own).expect("report is covered");
        let placements = if max > 0.0 {
            raw.into_iter().map(|(p, w)| (p, w / max)).collect()
        } else {
            raw.into_iter()
                .map(|(p, _)| (p, if p == Placement::Subset(own_idx) { 1.0 } else { 0.0 }))
                .collect()
        };
        Ok(MembershipProfile {
            report_id: report_id.to_string(),
            placements,
        })
    }
}

pub fn evaluate_partition(
    subsets: &[Vec<String>],
    reports: &[ObservationReport],
    params: &ConflictParams,
    sensors: &[Sensor],
    prior: &CountPrior,
) -> Result<ConflictLedger, AssociationError> {
    AssociationProblem::new(reports, params, sensors, prior)?.evaluate(subsets)
}

pub fn minimize_metaconflict(
    reports: &[ObservationReport],
    params: &ConflictParams,
    sensors: &[Sensor],
    prior: &CountPrior,
    search: &SearchParams,
) -> Result<Partition, AssociationError> {
    AssociationProblem::new(reports, params, sensors, prior)?.minimize(search)
}

pub fn brute_force_partition(
    reports: &[ObservationReport],
    params: &ConflictParams,
    sensors: &[Sensor],
    prior: &CountPrior,
) -> Result<Partition, AssociationError> {
    if reports.len() > BRUTE_FORCE_LIMIT {
        return Err(AssociationError::TooManyReports(reports.len()));
    }
    AssociationProblem::new(reports, params, sensors, prior)?.brute_force(None)
}

pub fn posterior_subset_count(
    reports: &[ObservationReport],
    params: &ConflictParams,
    sensors: &[Sensor],
    prior: &CountPrior,
    search: &SearchParams,
) -> Result<CountPosterior, AssociationError> {
    AssociationProblem::new(reports, params, sensors, prior)?.posterior(search)
}

pub fn membership_profile(
    report_id: &str,
    reports: &[ObservationReport],
    params: &ConflictParams,
    sensors: &[Sensor],
    prior: &CountPrior,
    base: &Partition,
) -> Result<MembershipProfile, AssociationError> {
    AssociationProblem::new(reports, params, sensors, prior)?.membership(report_id, base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::{FeatureBag, ObsType, Observer, QualityCategory};

    fn rep(id: &str, t: i64, x: f64, y: f64) -> ObservationReport {
        ObservationReport {
            id: id.into(),
            time: t,
            position: Point::new(x, y),
            observer: Observer::Civilian,
            obs_type: ObsType::Submarine,
            quality: QualityCategory::Cat2,
            distance_to_target: None,
            features: FeatureBag::default(),
        }
    }

    fn f3(prior: CountPrior) -> AssociationProblem {
        #[rustfmt::skip]
        let c = vec![
            0.0, 0.0, 0.9,
            0.0, 0.0, 0.9,
            0.9, 0.9, 0.0,
        ];
        AssociationProblem::from_conflicts(vec!["r1".into(), "r2".into(), "r3".into()], c, prior).unwrap()
    }

    fn ids(p: &Partition) -> Vec<Vec<&str>> {
        p.subsets.iter().map(|s| s.iter().map(String::as_str).collect()).collect()
    }

    #[test]
    fn kinematic_conflict_examples() {
        let p = ConflictParams::default();
        assert_eq!(pairwise_conflict(&rep("a", 0, 5.0, 5.0), &rep("b", 100, 5.0, 5.0), &p, &[]), 0.0);
        let c = pairwise_conflict(&rep("a", 0, 0.0, 0.0), &rep("b", 3600, 28_800.0, 0.0), &p, &[]);
        assert!((c - 0.5).abs() < 1e-15);
        assert_eq!(pairwise_conflict(&rep("a", 0, 0.0, 0.0), &rep("b", 0, 1.0, 0.0), &p, &[]), 1.0);
        assert_eq!(pairwise_conflict(&rep("a", 0, 0.0, 0.0), &rep("b", 0, 0.0, 0.0), &p, &[]), 0.0);
    }

    fn sensor_on_path(detections: Vec<Timestamp>) -> Sensor {
        Sensor {
            id: "s1".into(),
            position: Point::new(14_400.0, 100.0),
            radius: 500.0,
            detection_prob: 0.9,
            active_windows: vec![TimeWindow::new(0, 7200)],
            detections,
        }
    }

    #[test]
    fn silent_sensor_adds_conflict() {
        let p = ConflictParams::default();
        let (a, b) = (rep("a", 0, 0.0, 0.0), rep("b", 3600, 28_800.0, 0.0));
        let c = pairwise_conflict(&a, &b, &p, &[sensor_on_path(vec![])]);
        assert!((c - 0.95).abs() < 1e-12, "{c}");
        // symmetric
        assert_eq!(c, pairwise_conflict(&b, &a, &p, &[sensor_on_path(vec![])]));
        // a sensor that fired during the transit adds nothing
        let fired = pairwise_conflict(&a, &b, &p, &[sensor_on_path(vec![1800])]);
        assert!((fired - 0.5).abs() < 1e-15);
        // inactive sensor adds nothing
        let mut off = sensor_on_path(vec![]);
        off.active_windows = vec![TimeWindow::new(5000, 6000)];
        assert!((pairwise_conflict(&a, &b, &p, &[off]) - 0.5).abs() < 1e-15);
        // off-path sensor adds nothing
        let mut far = sensor_on_path(vec![]);
        far.position = Point::new(14_400.0, 5000.0);
        assert!((pairwise_conflict(&a, &b, &p, &[far]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sensor_conflict_is_capped() {
        let p = ConflictParams::default();
        let (a, b) = (rep("a", 0, 0.0, 0.0), rep("b", 3600, 1000.0, 0.0));
        let mut s = sensor_on_path(vec![]);
        s.position = Point::new(500.0, 0.0);
        s.detection_prob = 1.0;
        assert!((pairwise_conflict(&a, &b, &p, &[s]) - 0.99).abs() < 1e-15);
    }

    #[test]
    fn reliability_discounts_pair_conflict() {
        let p = ConflictParams {
            reliability: Some(ReliabilityMap::default()),
            ..ConflictParams::default()
        };
        let c = pairwise_conflict(&rep("a", 0, 0.0, 0.0), &rep("b", 3600, 28_800.0, 0.0), &p, &[]);
        // both cat2 → 0.85², matching Shafer discounting of m(different) = 0.5
        let frame = crate::evidence::Frame::new(["same", "different"]).unwrap();
        let m = crate::evidence::MassFunction::simple(frame, 0b10, 0.5).unwrap();
        let d = crate::evidence::discount(&m, 0.85 * 0.85);
        assert!((c - d.mass(0b10)).abs() < 1e-15);
    }

    #[test]
    fn params_and_sensor_validation() {
        let bad = ConflictParams {
            v_max: 12.0,
            ..ConflictParams::default()
        };
        assert!(bad.validate().is_err());
        let mut s = sensor_on_path(vec![]);
        s.active_windows = vec![TimeWindow::new(0, 100), TimeWindow::new(50, 200)];
        assert!(s.validate().is_err());
        s.active_windows = vec![];
        s.radius = 0.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn sensor_json_round_trip() {
        let s = Sensor {
            active_windows: vec![TimeWindow::new(1_767_225_600, 1_767_312_000)],
            detections: vec![1_767_230_000],
            ..sensor_on_path(vec![])
        };
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"radius_m\":500.0"));
        assert!(json.contains("2026-01-01T00:00:00Z"));
        assert_eq!(serde_json::from_str::<Sensor>(&json).unwrap(), s);
        let bad = r#"{"id":"x","x_m":0,"y_m":0,"radius_m":-1,"detection_prob":0.5}"#;
        assert!(serde_json::from_str::<Sensor>(bad).is_err());
    }

    #[test]
    fn subset_conflict_examples() {
        let p = ConflictParams::default();
        assert_eq!(subset_conflict(&[rep("a", 0, 0.0, 0.0)], &p, &[]), 0.0);
        let pair = [rep("a", 0, 0.0, 0.0), rep("b", 3600, 28_800.0, 0.0)];
        assert!((subset_conflict(&pair, &p, &[]) - 0.5).abs() < 1e-15);
        let prob = f3(CountPrior::uniform(3).unwrap());
        assert!((1.0 - prob.ledger(&[0, 0, 0]).mcf - 0.01).abs() < 1e-12);
    }

    #[test]
    fn domain_conflict_examples() {
        let u = CountPrior::uniform(4).unwrap();
        for n in 1..=4 {
            assert_eq!(domain_conflict(n, &u), Ok(0.0));
        }
        let g = CountPrior::geometric(0.5, 4).unwrap();
        let got: Vec<f64> = (1..=4).map(|n| domain_conflict(n, &g).unwrap()).collect();
        assert_eq!(got, [0.0, 0.5, 0.75, 0.875]);
        assert_eq!(domain_conflict(5, &g), Err(AssociationError::OutsideDomain(5)));
        assert_eq!(domain_conflict(0, &g), Err(AssociationError::OutsideDomain(0)));
        assert!(CountPrior::new(BTreeMap::from([(1, 0.0)])).is_err());
        assert!(CountPrior::new(BTreeMap::from([(1, -1.0)])).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let p = ConflictParams::default();
        let reports: Vec<_> = (0..4).map(|i| rep(&format!("r{i}"), i * 100, 0.0, 0.0)).collect();
        let singletons: Vec<Vec<String>> = reports.iter().map(|r| vec![r.id.clone()]).collect();
        let u = CountPrior::uniform(4).unwrap();
        assert_eq!(evaluate_partition(&singletons, &reports, &p, &[], &u).unwrap().mcf, 0.0);

        let prob = f3(u);
        let all = prob.evaluate(&[vec!["r1".into(), "r2".into(), "r3".into()]]).unwrap();
        assert!((all.mcf - 0.99).abs() < 1e-12);
        let split = prob.evaluate(&[vec!["r3".into()], vec!["r2".into(), "r1".into()]]).unwrap();
        assert_eq!(split.mcf, 0.0);
        assert!(split.is_consistent());

        assert!(prob.evaluate(&[vec!["r1".into()], vec!["r2".into()]]).is_err());
        assert!(prob.evaluate(&[vec!["r1".into(), "r1".into()], vec!["r2".into(), "r3".into()]]).is_err());
        assert!(prob.evaluate(&[vec!["r1".into(), "r2".into(), "r3".into(), "zz".into()]]).is_err());
    }

    #[test]
    fn f3_minimizer_and_oracle() {
        let prob = f3(CountPrior::geometric(0.5, 3).unwrap());
        let ls = prob.minimize(&SearchParams::default()).unwrap();
        assert_eq!(ids(&ls), vec![vec!["r1", "r2"], vec!["r3"]]);
        assert!((ls.ledger.mcf - 0.5).abs() < 1e-15);
        let bf = prob.brute_force(None).unwrap();
        assert_eq!(bf, ls);
    }

    #[test]
    fn single_report() {
        let prior = CountPrior::geometric(0.5, 3).unwrap();
        let r = [rep("only", 0, 0.0, 0.0)];
        let p = ConflictParams::default();
        let ls = minimize_metaconflict(&r, &p, &[], &prior, &SearchParams::default()).unwrap();
        assert_eq!(ids(&ls), vec![vec!["only"]]);
        assert_eq!(ls.ledger.mcf, 0.0);
        assert_eq!(brute_force_partition(&r, &p, &[], &prior).unwrap(), ls);
        let post = posterior_subset_count(&r, &p, &[], &prior, &SearchParams::default()).unwrap();
        assert_eq!(post.probabilities[&1], 1.0);
        assert_eq!(post.probabilities[&2], 0.0);
        assert_eq!(post.mode(), 1);
        assert_eq!(
            minimize_metaconflict(&[], &p, &[], &prior, &SearchParams::default()),
            Err(AssociationError::NoReports)
        );
    }

    #[test]
    fn compatible_reports_collapse_to_one_subset() {
        let reports: Vec<_> = (0..20).map(|i| rep(&format!("r{i:02}"), i * 600, (i * 100) as f64, 0.0)).collect();
        let prior = CountPrior::uniform(20).unwrap();
        let p = ConflictParams::default();
        let search = SearchParams {
            restarts: 4,
            seed: 7,
            max_iters: 1000,
        };
        let part = minimize_metaconflict(&reports, &p, &[], &prior, &search).unwrap();
        assert_eq!(part.n, 1);
        assert_eq!(part.ledger.mcf, 0.0);
    }

    #[test]
    fn brute_force_refuses_large_inputs_and_separates_conflicting() {
        let p = ConflictParams::default();
        let prior = CountPrior::uniform(11).unwrap();
        let many: Vec<_> = (0..11).map(|i| rep(&format!("r{i:02}"), 0, i as f64 * 1000.0, 0.0)).collect();
        assert_eq!(
            brute_force_partition(&many, &p, &[], &prior),
            Err(AssociationError::TooManyReports(11))
        );
        let ten = &many[..10];
        let prior10 = CountPrior::uniform(10).unwrap();
        let bf = brute_force_partition(ten, &p, &[], &prior10).unwrap();
        assert_eq!(bf.n, 10);
        assert_eq!(bf.ledger.mcf, 0.0);
    }

    #[test]
    fn brute_force_enumerates_bell_numbers() {
        // count partitions visited by brute force through the fixed-n variants
        let prior = CountPrior::uniform(5).unwrap();
        let prob = AssociationProblem::from_conflicts((0..5).map(|i| i.to_string()).collect(), vec![0.0; 25], prior).unwrap();
        for n in 1..=5 {
            assert_eq!(prob.brute_force(Some(n)).unwrap().n, n);
        }
    }

    #[test]
    fn posterior_examples() {
        let prob = f3(CountPrior::geometric(0.5, 3).unwrap());
        let post = prob.posterior(&SearchParams::default()).unwrap();
        let expect = [0.01 / 0.76, 0.5 / 0.76, 0.25 / 0.76];
        for (n, e) in (1..=3).zip(expect) {
            assert!((post.probabilities[&n] - e).abs() < 1e-12, "n={n}");
        }
        assert_eq!(post.mode(), 2);

        let ok = AssociationProblem::from_conflicts((0..4).map(|i| i.to_string()).collect(), vec![0.0; 16], CountPrior::uniform(4).unwrap()).unwrap();
        let post = ok.posterior(&SearchParams::default()).unwrap();
        for n in 1..=4 {
            assert!((post.probabilities[&n] - 0.25).abs() < 1e-15);
        }

        let hopeless = AssociationProblem::from_conflicts(
            vec!["a".into(), "b".into()],
            vec![0.0, 1.0, 1.0, 0.0],
            CountPrior::new(BTreeMap::from([(1, 1.0), (2, 0.0)])).unwrap(),
        )
        .unwrap();
        assert_eq!(hopeless.posterior(&SearchParams::default()), Err(AssociationError::NoInformation));
    }

    #[test]
    fn membership_examples() {
        let prob = f3(CountPrior::uniform(3).unwrap());
        let base = prob.minimize(&SearchParams::default()).unwrap();
        assert_eq!(ids(&base), vec![vec!["r1", "r2"], vec!["r3"]]);
        let prof = prob.membership("r3", &base).unwrap();
        assert!((prof.plausibility(Placement::Subset(0)).unwrap() - 0.01).abs() < 1e-12);
        assert_eq!(prof.plausibility(Placement::Subset(1)), Some(1.0));
        assert_eq!(prof.plausibility(Placement::NewSubset), None);

        let pair = AssociationProblem::from_conflicts(vec!["a".into(), "b".into()], vec![0.0; 4], CountPrior::uniform(2).unwrap()).unwrap();
        let base = pair.minimize(&SearchParams::default()).unwrap();
        for id in ["a", "b"] {
            let prof = pair.membership(id, &base).unwrap();
            assert!(prof.placements.iter().all(|&(_, v)| v == 1.0), "{prof:?}");
        }

        let hard = AssociationProblem::from_conflicts(
            vec!["a".into(), "b".into()],
            vec![0.0, 1.0, 1.0, 0.0],
            CountPrior::uniform(2).unwrap(),
        )
        .unwrap();
        let base = hard.minimize(&SearchParams::default()).unwrap();
        let prof = hard.membership("a", &base).unwrap();
        assert_eq!(prof.plausibility(Placement::Subset(0)), Some(1.0));
        assert_eq!(prof.plausibility(Placement::Subset(1)), Some(0.0));
        assert!(hard.membership("zz", &base).is_err());
    }

    #[test]
    fn partition_report_shape() {
        let prob = f3(CountPrior::geometric(0.5, 3).unwrap());
        let part = prob.minimize(&SearchParams::default()).unwrap();
        let post = prob.posterior(&SearchParams::default()).unwrap();
        let v = serde_json::to_value(PartitionReport::new(&part, &post)).unwrap();
        assert_eq!(v["subsets"], serde_json::json!([["r1", "r2"], ["r3"]]));
        assert_eq!(v["c0"], serde_json::json!(0.5));
        assert!(v["posterior"]["2"].is_number());
    }
}
