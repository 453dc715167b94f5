//! Agglomerative hierarchical clustering with Lance-Williams updates, and the
//! two-stage space/time clustering of reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::report::{ObservationReport, Point, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Ward,
    Complete,
    Single,
}

impl std::str::FromStr for Linkage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ward" => Ok(Linkage::Ward),
            "complete" => Ok(Linkage::Complete),
            "single" => Ok(Linkage::Single),
            other => Err(format!("unknown linkage `{other}`")),
        }
    }
}

/// Where to cut the tree into flat clusters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stop {
    /// Exactly `k` clusters (or fewer points).
    Clusters(usize),
    /// Apply every merge with height at or below the threshold.
    Height(f64),
}

/// One merge. Clusters are numbered like SciPy: leaves `0..n`, merge `i` creates `n + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTree {
    /// Leaf ids sorted ascending; leaf `i` is `leaves[i]`.
    pub leaves: Vec<String>,
    pub merges: Vec<Merge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub tree: ClusterTree,
    /// Flat clusters of ids, ordered by their smallest leaf.
    pub clusters: Vec<Vec<String>>,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn lance_williams(linkage: Linkage, d_ki: f64, d_kj: f64, d_ij: f64, n_i: f64, n_j: f64, n_k: f64) -> f64 {
    match linkage {
        Linkage::Single => d_ki.min(d_kj),
        Linkage::Complete => d_ki.max(d_kj),
        Linkage::Ward => {
            let t = n_i + n_j + n_k;
            (((n_i + n_k) * d_ki * d_ki + (n_j + n_k) * d_kj * d_kj - n_k * d_ij * d_ij) / t)
                .max(0.0)
                .sqrt()
        }
    }
}

impl ClusterTree {
    /// Flat labels per leaf for the given cut, numbered by first appearance.
    pub fn cut(&self, stop: Stop) -> Vec<usize> {
        let n = self.leaves.len();
        let applied = match stop {
            Stop::Clusters(k) => n.saturating_sub(k.max(1)).min(self.merges.len()),
            Stop::Height(h) => self.merges.iter().take_while(|m| m.height <= h).count(),
        };
        let mut parent: Vec<usize> = (0..n + self.merges.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (i, m) in self.merges.iter().take(applied).enumerate() {
            let (ra, rb) = (find(&mut parent, m.a), find(&mut parent, m.b));
            parent[ra] = n + i;
            parent[rb] = n + i;
        }
        let mut names = BTreeMap::new();
        (0..n)
            .map(|leaf| {
                let root = find(&mut parent, leaf);
                let next = names.len();
                *names.entry(root).or_insert(next)
            })
            .collect()
    }
}

/// Agglomerative clustering of `(id, coordinates)` points.
///
/// Points are processed in id order and, among equal distances, the pair with
/// the lexicographically smallest `(slot, slot)` index merges first, so the
/// result does not depend on input order.
pub fn hcluster(points: &[(String, Vec<f64>)], linkage: Linkage, stop: Stop) -> Clustering {
    let mut sorted: Vec<&(String, Vec<f64>)> = points.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let n = sorted.len();
    let mut dist = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = euclidean(&sorted[i].1, &sorted[j].1);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut node = (0..n).collect::<Vec<_>>();
    // nearest active partner with larger slot index
    let nearest = |i: usize, dist: &[f64], active: &[bool]| -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for j in i + 1..n {
            if active[j] && best.is_none_or(|(d, _)| dist[i * n + j] < d) {
                best = Some((dist[i * n + j], j));
            }
        }
        best
    };
    let mut row_min: Vec<Option<(f64, usize)>> = (0..n).map(|i| nearest(i, &dist, &active)).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    for step in 0..n.saturating_sub(1) {
        let mut pick: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if let (true, Some((d, j))) = (active[i], row_min[i]) {
                if pick.is_none_or(|(pd, _, _)| d < pd) {
                    pick = Some((d, i, j));
                }
            }
        }
        let (height, i, j) = pick.expect("at least two active clusters");
        let (na, nb) = (node[i], node[j]);
        merges.push(Merge {
            a: na.min(nb),
            b: na.max(nb),
            height,
            size: size[i] + size[j],
        });
        for k in 0..n {
            if active[k] && k != i && k != j {
                let d = lance_williams(
                    linkage,
                    dist[k * n + i],
                    dist[k * n + j],
                    dist[i * n + j],
                    size[i] as f64,
                    size[j] as f64,
                    size[k] as f64,
                );
                dist[k * n + i] = d;
                dist[i * n + k] = d;
            }
        }
        active[j] = false;
        size[i] += size[j];
        node[i] = n + step;
        for k in 0..n {
            if !active[k] {
                continue;
            }
            let stale = k == i || row_min[k].is_some_and(|(_, p)| p == i || p == j);
            if stale {
                row_min[k] = nearest(k, &dist, &active);
            } else if k < i {
                let d = dist[k * n + i];
                if row_min[k].is_none_or(|(best, p)| d < best || (d == best && i < p)) {
                    row_min[k] = Some((d, i));
                }
            }
        }
    }

    let tree = ClusterTree {
        leaves: sorted.iter().map(|p| p.0.clone()).collect(),
        merges,
    };
    let labels = tree.cut(stop);
    let mut clusters: Vec<Vec<String>> = vec![Vec::new(); labels.iter().copied().max().map_or(0, |m| m + 1)];
    for (leaf, &l) in labels.iter().enumerate() {
        clusters[l].push(tree.leaves[leaf].clone());
    }
    Clustering { tree, clusters }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageOrder {
    SpaceThenTime,
    TimeThenSpace,
}

impl std::str::FromStr for StageOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "space_then_time" | "space-then-time" => Ok(StageOrder::SpaceThenTime),
            "time_then_space" | "time-then-space" => Ok(StageOrder::TimeThenSpace),
            other => Err(format!("unknown stage order `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStageParams {
    pub linkage: Linkage,
    /// Cut for the spatial stage (distances in meters).
    pub space_stop: Stop,
    /// Cut for the temporal stage (distances in seconds).
    pub time_stop: Stop,
}

impl Default for TwoStageParams {
    fn default() -> Self {
        TwoStageParams {
            linkage: Linkage::Ward,
            space_stop: Stop::Height(10_000.0),
            time_stop: Stop::Height(86_400.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub members: Vec<String>,
    pub centroid: Point,
    pub time_start: Timestamp,
    pub time_end: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageOneCluster {
    #[serde(flatten)]
    pub summary: ClusterSummary,
    pub subclusters: Vec<ClusterSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStageReport {
    pub order: StageOrder,
    pub stage1_tree: ClusterTree,
    pub clusters: Vec<StageOneCluster>,
}

impl TwoStageReport {
    /// Rows `(id, stage1_cluster, stage2_cluster)` sorted by id.
    pub fn assignments(&self) -> Vec<(String, usize, usize)> {
        let mut rows: Vec<_> = self
            .clusters
            .iter()
            .enumerate()
            .flat_map(|(i, c)| {
                c.subclusters
                    .iter()
                    .enumerate()
                    .flat_map(move |(j, s)| s.members.iter().map(move |id| (id.clone(), i, j)))
            })
            .collect();
        rows.sort();
        rows
    }

    pub fn assignments_csv(&self) -> String {
        let mut out = String::from("id,stage1_cluster,stage2_cluster\n");
        for (id, a, b) in self.assignments() {
            out.push_str(&format!("{id},{a},{b}\n"));
        }
        out
    }
}

fn summarize(members: &[&ObservationReport]) -> ClusterSummary {
    let n = members.len() as f64;
    let cx = members.iter().map(|r| r.position.x).sum::<f64>() / n;
    let cy = members.iter().map(|r| r.position.y).sum::<f64>() / n;
    let mut ids: Vec<String> = members.iter().map(|r| r.id.clone()).collect();
    ids.sort();
    ClusterSummary {
        members: ids,
        centroid: Point::new(cx, cy),
        time_start: members.iter().map(|r| r.time).min().unwrap_or_default(),
        time_end: members.iter().map(|r| r.time).max().unwrap_or_default(),
    }
}

type Features = dyn Fn(&ObservationReport) -> Vec<f64>;

/// Clusters on one dimension, then within every stage-one cluster on the other.
pub fn two_stage_cluster(reports: &[ObservationReport], order: StageOrder, params: &TwoStageParams) -> TwoStageReport {
    let by_id: BTreeMap<&str, &ObservationReport> = reports.iter().map(|r| (r.id.as_str(), r)).collect();
    let spatial = |r: &ObservationReport| vec![r.position.x, r.position.y];
    let temporal = |r: &ObservationReport| vec![r.time as f64];
    let (first, first_stop, second, second_stop): (&Features, _, &Features, _) =
        match order {
            StageOrder::SpaceThenTime => (&spatial, params.space_stop, &temporal, params.time_stop),
            StageOrder::TimeThenSpace => (&temporal, params.time_stop, &spatial, params.space_stop),
        };
    let points: Vec<(String, Vec<f64>)> = reports.iter().map(|r| (r.id.clone(), first(r))).collect();
    let stage1 = hcluster(&points, params.linkage, first_stop);
    let clusters = stage1
        .clusters
        .iter()
        .map(|ids| {
            let members: Vec<&ObservationReport> = ids.iter().map(|id| by_id[id.as_str()]).collect();
            let inner: Vec<(String, Vec<f64>)> = members.iter().map(|r| (r.id.clone(), second(r))).collect();
            let subclusters = hcluster(&inner, params.linkage, second_stop)
                .clusters
                .iter()
                .map(|sub| summarize(&sub.iter().map(|id| by_id[id.as_str()]).collect::<Vec<_>>()))
                .collect();
            StageOneCluster {
                summary: summarize(&members),
                subclusters,
            }
        })
        .collect();
    TwoStageReport {
        order,
        stage1_tree: stage1.tree,
        clusters,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::{FeatureBag, ObsType, Observer, QualityCategory};

    fn pts(coords: &[f64]) -> Vec<(String, Vec<f64>)> {
        coords.iter().enumerate().map(|(i, &x)| (format!("p{i}"), vec![x])).collect()
    }

    #[test]
    fn single_point() {
        let c = hcluster(&pts(&[3.0]), Linkage::Ward, Stop::Clusters(1));
        assert!(c.tree.merges.is_empty());
        assert_eq!(c.clusters, vec![vec!["p0".to_string()]]);
        let empty = hcluster(&[], Linkage::Single, Stop::Clusters(2));
        assert!(empty.clusters.is_empty());
    }

    #[test]
    fn collinear_complete_linkage() {
        let c = hcluster(&pts(&[0.0, 1000.0, 10_000.0]), Linkage::Complete, Stop::Clusters(2));
        assert_eq!(c.clusters, vec![vec!["p0".to_string(), "p1".into()], vec!["p2".into()]]);
        assert_eq!(c.tree.merges[0].height, 1000.0);
        assert_eq!(c.tree.merges[1].height, 10_000.0);
        assert_eq!((c.tree.merges[1].a, c.tree.merges[1].b), (2, 3));
    }

    #[test]
    fn linkage_update_rules() {
        // four points on a line at 0, 1, 3, 7
        let p = pts(&[0.0, 1.0, 3.0, 7.0]);
        let h = |l| {
            hcluster(&p, l, Stop::Clusters(1))
                .tree
                .merges
                .iter()
                .map(|m| m.height)
                .collect::<Vec<_>>()
        };
        assert_eq!(h(Linkage::Single), [1.0, 2.0, 4.0]);
        assert_eq!(h(Linkage::Complete), [1.0, 3.0, 7.0]);
        // ward heights: sqrt(2 n_a n_b / (n_a + n_b)) * centroid distance
        let ward = h(Linkage::Ward);
        assert!((ward[0] - 1.0).abs() < 1e-12);
        let d2 = (2.0 * 2.0 * 1.0 / 3.0f64).sqrt() * 2.5;
        assert!((ward[1] - d2).abs() < 1e-12, "{ward:?}");
        let d3 = (2.0 * 3.0 * 1.0 / 4.0f64).sqrt() * (7.0 - 4.0 / 3.0);
        assert!((ward[2] - d3).abs() < 1e-12, "{ward:?}");
    }

    #[test]
    fn ties_break_on_smallest_pair() {
        let c = hcluster(&pts(&[0.0, 1.0, 2.0]), Linkage::Single, Stop::Clusters(2));
        assert_eq!(c.clusters[0], vec!["p0".to_string(), "p1".into()]);
    }

    #[test]
    fn height_cut() {
        let p = pts(&[0.0, 1.0, 3.0, 7.0]);
        let c = hcluster(&p, Linkage::Single, Stop::Height(2.0));
        assert_eq!(c.clusters.len(), 2);
        let c = hcluster(&p, Linkage::Single, Stop::Height(0.5));
        assert_eq!(c.clusters.len(), 4);
    }

    fn report(id: &str, t: i64, x: f64, y: f64) -> ObservationReport {
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

    fn burst_fixture() -> Vec<ObservationReport> {
        let mut rs = Vec::new();
        for i in 0..5 {
            rs.push(report(&format!("a{i}"), i * 600, 1000.0, 2000.0));
            rs.push(report(&format!("b{i}"), 20 * 86_400 + i * 600, 1000.0, 2000.0));
        }
        rs
    }

    #[test]
    fn space_then_time_bursts() {
        let r = two_stage_cluster(&burst_fixture(), StageOrder::SpaceThenTime, &TwoStageParams::default());
        assert_eq!(r.clusters.len(), 1);
        assert_eq!(r.clusters[0].subclusters.len(), 2);
        assert_eq!(r.clusters[0].summary.centroid, Point::new(1000.0, 2000.0));
        let sub = &r.clusters[0].subclusters;
        assert_eq!(sub[0].members, ["a0", "a1", "a2", "a3", "a4"]);
        assert_eq!((sub[1].time_start, sub[1].time_end), (20 * 86_400, 20 * 86_400 + 2400));
    }

    #[test]
    fn time_then_space_bursts() {
        let r = two_stage_cluster(&burst_fixture(), StageOrder::TimeThenSpace, &TwoStageParams::default());
        assert_eq!(r.clusters.len(), 2);
        assert!(r.clusters.iter().all(|c| c.subclusters.len() == 1));
        let csv = r.assignments_csv();
        assert!(csv.starts_with("id,stage1_cluster,stage2_cluster\na0,0,0\n"));
        assert!(csv.contains("b4,1,0\n"));
    }

    #[test]
    fn single_report_either_order() {
        let one = [report("x", 0, 0.0, 0.0)];
        for order in [StageOrder::SpaceThenTime, StageOrder::TimeThenSpace] {
            let r = two_stage_cluster(&one, order, &TwoStageParams::default());
            assert_eq!(r.clusters.len(), 1);
            assert_eq!(r.clusters[0].subclusters.len(), 1);
        }
    }
}
