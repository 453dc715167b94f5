//! Belief-function arithmetic over small frames of discernment.
//!
//! Subsets of a frame are bitmasks over the frame's element order, so frames
//! are capped at 16 elements. Combination sums products in a canonical order,
//! which makes [`combine_dempster`] exactly commutative.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report::QualityCategory;

pub const MAX_FRAME: usize = 16;
const MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum EvidenceError {
    #[error("frame must have between 1 and {MAX_FRAME} elements, got {0}")]
    FrameSize(usize),
    #[error("duplicate frame element `{0}`")]
    DuplicateElement(String),
    #[error("focal set {0:#b} is empty or outside the frame")]
    BadFocalSet(u16),
    #[error("mass {0} outside [0, 1]")]
    BadMass(f64),
    #[error("masses sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("mass functions are defined on different frames")]
    FrameMismatch,
    #[error("total conflict: Dempster normalization undefined")]
    TotalConflict,
}

/// Ordered set of mutually exclusive hypotheses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    elements: Vec<String>,
}

impl Frame {
    pub fn new<I, S>(elements: I) -> Result<Self, EvidenceError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let elements: Vec<String> = elements.into_iter().map(Into::into).collect();
        if elements.is_empty() || elements.len() > MAX_FRAME {
            return Err(EvidenceError::FrameSize(elements.len()));
        }
        for (i, e) in elements.iter().enumerate() {
            if elements[..i].contains(e) {
                return Err(EvidenceError::DuplicateElement(e.clone()));
            }
        }
        Ok(Frame { elements })
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Bitmask of the whole frame (Θ).
    pub fn full(&self) -> u16 {
        if self.elements.len() == 16 {
            u16::MAX
        } else {
            (1u16 << self.elements.len()) - 1
        }
    }

    /// Bitmask for the named elements; `None` if any name is not in the frame.
    pub fn subset(&self, names: &[&str]) -> Option<u16> {
        names.iter().try_fold(0u16, |acc, n| {
            self.elements.iter().position(|e| e == n).map(|i| acc | (1 << i))
        })
    }
}

/// Basic belief assignment. Focal sets carry strictly positive mass summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassFunction {
    frame: Frame,
    masses: BTreeMap<u16, f64>,
}

impl MassFunction {
    /// Builds a mass function; zero-mass entries are dropped and repeated focal
    /// sets are summed.
    pub fn new(frame: Frame, entries: impl IntoIterator<Item = (u16, f64)>) -> Result<Self, EvidenceError> {
        let full = frame.full();
        let mut masses = BTreeMap::new();
        for (set, m) in entries {
            if set == 0 || set & !full != 0 {
                return Err(EvidenceError::BadFocalSet(set));
            }
            if !(0.0..=1.0).contains(&m) {
                return Err(EvidenceError::BadMass(m));
            }
            if m > 0.0 {
                *masses.entry(set).or_insert(0.0) += m;
            }
        }
        let total: f64 = masses.values().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(EvidenceError::NotNormalized(total));
        }
        Ok(MassFunction { frame, masses })
    }

    /// All mass on the full frame.
    pub fn vacuous(frame: Frame) -> Self {
        let full = frame.full();
        MassFunction {
            frame,
            masses: BTreeMap::from([(full, 1.0)]),
        }
    }

    /// Simple support function: `m(set) = weight`, remainder on the frame.
    pub fn simple(frame: Frame, set: u16, weight: f64) -> Result<Self, EvidenceError> {
        let full = frame.full();
        MassFunction::new(frame, [(set, weight), (full, 1.0 - weight)])
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn mass(&self, set: u16) -> f64 {
        self.masses.get(&set).copied().unwrap_or(0.0)
    }

    /// Focal sets in ascending bitmask order.
    pub fn focal_sets(&self) -> impl Iterator<Item = (u16, f64)> + '_ {
        self.masses.iter().map(|(&s, &m)| (s, m))
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.values().sum()
    }
}

/// Sum in ascending order of magnitude so the result does not depend on the
/// order contributions were produced in.
fn canonical_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.into_iter().sum()
}

/// Unnormalized conjunctive combination: returns per-intersection products and the
/// conflict weight `k`.
fn conjunctive(m1: &MassFunction, m2: &MassFunction) -> (BTreeMap<u16, f64>, f64) {
    let mut landing: BTreeMap<u16, Vec<f64>> = BTreeMap::new();
    let mut conflict = Vec::new();
    for (a, ma) in m1.focal_sets() {
        for (b, mb) in m2.focal_sets() {
            let product = ma * mb;
            match a & b {
                0 => conflict.push(product),
                c => landing.entry(c).or_default().push(product),
            }
        }
    }
    let combined = landing.into_iter().map(|(s, v)| (s, canonical_sum(v))).collect();
    (combined, canonical_sum(conflict))
}

/// Dempster's rule. Returns the normalized combination and the conflict weight `k`.
pub fn combine_dempster(m1: &MassFunction, m2: &MassFunction) -> Result<(MassFunction, f64), EvidenceError> {
    if m1.frame != m2.frame {
        return Err(EvidenceError::FrameMismatch);
    }
    let (combined, k) = conjunctive(m1, m2);
    let norm = 1.0 - k;
    if combined.is_empty() || norm <= f64::EPSILON {
        return Err(EvidenceError::TotalConflict);
    }
    let masses = combined
        .into_iter()
        .map(|(s, m)| (s, m / norm))
        .filter(|&(_, m)| m > 0.0)
        .collect();
    Ok((
        MassFunction {
            frame: m1.frame.clone(),
            masses,
        },
        k.clamp(0.0, 1.0),
    ))
}

/// Total conflict of sequentially combining `ms`: `1 - Π(1 - k_step)`.
///
/// Once a step reaches total conflict the result is 1 and combination stops.
pub fn conflict_of_set(ms: &[MassFunction]) -> Result<f64, EvidenceError> {
    let Some((first, rest)) = ms.split_first() else {
        return Ok(0.0);
    };
    let mut acc = first.clone();
    let mut keep = 1.0;
    for m in rest {
        if m.frame != acc.frame {
            return Err(EvidenceError::FrameMismatch);
        }
        match combine_dempster(&acc, m) {
            Ok((next, k)) => {
                keep *= 1.0 - k;
                acc = next;
            }
            Err(EvidenceError::TotalConflict) => return Ok(1.0),
            Err(e) => return Err(e),
        }
    }
    Ok((1.0 - keep).clamp(0.0, 1.0))
}

/// `1 - (1 - c0) Π (1 - c_i)`.
pub fn metaconflict(c0: f64, cluster_conflicts: &[f64]) -> f64 {
    let keep = cluster_conflicts.iter().fold(1.0 - c0, |acc, c| acc * (1.0 - c));
    (1.0 - keep).clamp(0.0, 1.0)
}

/// Shafer discounting: focal masses scaled by `reliability`, deficit moved to Θ.
pub fn discount(m: &MassFunction, reliability: f64) -> MassFunction {
    let r = reliability.clamp(0.0, 1.0);
    let full = m.frame.full();
    let mut masses: BTreeMap<u16, f64> = m
        .focal_sets()
        .filter(|&(s, _)| s != full)
        .map(|(s, v)| (s, v * r))
        .filter(|&(_, v)| v > 0.0)
        .collect();
    let focal_rest: f64 = masses.values().sum();
    let theta = 1.0 - focal_rest;
    if theta > 0.0 {
        masses.insert(full, theta);
    }
    MassFunction {
        frame: m.frame.clone(),
        masses,
    }
}

/// Conflict bookkeeping for one partition: domain conflict, per-subset conflicts
/// and the resulting metaconflict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConflictLedger {
    pub c0: f64,
    pub cluster_conflicts: Vec<f64>,
    pub mcf: f64,
}

impl ConflictLedger {
    pub fn new(c0: f64, cluster_conflicts: Vec<f64>) -> Self {
        let mcf = metaconflict(c0, &cluster_conflicts);
        ConflictLedger {
            c0,
            cluster_conflicts,
            mcf,
        }
    }

    pub fn is_consistent(&self) -> bool {
        (metaconflict(self.c0, &self.cluster_conflicts) - self.mcf).abs() <= 1e-12
    }
}

/// Quality category → reliability used for discounting report evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityMap {
    pub cat1: f64,
    pub cat2: f64,
    pub cat3: f64,
    pub cat4: f64,
    /// Used for `no_activity` and `not_decidable`.
    pub ungraded: f64,
}

impl Default for ReliabilityMap {
    fn default() -> Self {
        ReliabilityMap {
            cat1: 0.95,
            cat2: 0.85,
            cat3: 0.7,
            cat4: 0.5,
            ungraded: 0.0,
        }
    }
}

impl ReliabilityMap {
    pub fn reliability(&self, q: QualityCategory) -> f64 {
        match q {
            QualityCategory::Cat1 => self.cat1,
            QualityCategory::Cat2 => self.cat2,
            QualityCategory::Cat3 => self.cat3,
            QualityCategory::Cat4 => self.cat4,
            QualityCategory::NoActivity | QualityCategory::NotDecidable => self.ungraded,
        }
    }
}
