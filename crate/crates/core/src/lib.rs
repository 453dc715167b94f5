//! Evidential fusion and spatio-temporal analytics for uncertain observation
//! reports.
//!
//! The crate is organised by pipeline stage:
//!
//! - [`report`] holds the report record, taxonomies, grid/time binning and file IO.
//! - [`evidence`] implements belief-function arithmetic (Dempster's rule, discounting,
//!   metaconflict).
//! - [`association`] partitions reports into per-target subsets by minimizing
//!   metaconflict, and derives a posterior over the number of targets.
//! - [`rules`] learns `If [area & time] ... then [area & time]` prediction rules with a
//!   genetic algorithm.
//! - [`stats`] and [`cluster`] provide the randomness tests and two-stage hierarchical
//!   clustering.
//! - [`geo`] produces density tables and SVG figures.
//! - [`simulator`] generates labeled scenarios and scores outputs against ground truth.

pub mod association;
pub mod cluster;
pub mod evidence;
pub mod geo;
pub mod report;
pub mod rules;
pub mod simulator;
pub mod stats;

pub use report::{Cell, GridSpec, ObservationReport, Point, QualityCategory, TimeBinSpec, Timestamp};
