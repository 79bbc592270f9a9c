//! Proxemic metrics over resampled frames.
//!
//! Distances are 3D euclidean. Floor-plane products use `(x, z)`; height
//! uses `y`. Every operation is a pure function of its inputs.

mod attention;
pub mod export;
mod groups;
mod histogram;
mod pairwise;
mod spatial;
mod zones;

pub use attention::{fov_containment, FovStats};
pub use groups::{dbscan, detect_groups, group_timeline, modal_cluster_count, Clustering, GroupFrame};
pub use histogram::{
    height_histogram, intimate_collision_rate, nearest_neighbour_series, zone_histogram, Histogram,
    HistogramKind, NnSample,
};
pub use pairwise::{bearing_angle, pairwise, pairwise_points, PairwiseMatrices, SquareMatrix};
pub use spatial::{
    central_interval, occupancy, occupied_extent, quiver, Extent, GridSpec, OccupancyGrid, QuiverCell,
    QuiverField, QUIVER_MIN_MAGNITUDE,
};
pub use zones::{classify_zone, ProxemicZone, ZoneBoundaries};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("nothing to analyse: {0}")]
    Empty(&'static str),
    #[error("invalid {name}: {value}")]
    InvalidParameter { name: &'static str, value: String },
    #[error("distance must be finite and non-negative (got {0})")]
    InvalidDistance(f64),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

/// Tunable analysis parameters with their default values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineParams {
    pub zones: ZoneBoundaries,
    /// Nearest-neighbour histogram bin width and range, meters.
    pub nn_bin_width: f64,
    pub nn_range: f64,
    /// Height histogram bin width and range, meters.
    pub height_bin_width: f64,
    pub height_range: f64,
    pub cell_size: f64,
    /// View-cone half angle, degrees.
    pub half_angle_deg: f64,
    pub eps: f64,
    pub min_size: usize,
    pub quantile: f64,
}

impl Default for EngineParams {
    fn default() -> Self {
        EngineParams {
            zones: ZoneBoundaries::default(),
            nn_bin_width: 0.25,
            nn_range: 6.0,
            height_bin_width: 0.5,
            height_range: 7.0,
            cell_size: 1.0,
            half_angle_deg: 45.0,
            eps: 1.2,
            min_size: 2,
            quantile: 0.95,
        }
    }
}
