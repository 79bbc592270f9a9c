//! Floor-plane products: occupancy counts, mean view directions and the
//! extent actually used by a crowd.

use super::EngineError;
use crate::resample::FrameStore;
use crate::telemetry::RoomGeometry;
use serde::{Deserialize, Serialize};

/// Cells with a mean horizontal direction shorter than this are undefined.
pub const QUIVER_MIN_MAGNITUDE: f64 = 1e-3;

/// Square cells over a room's `x`-`z` floor. Row 0 is the minimum-`z` edge
/// and column 0 the minimum-`x` edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min_x: f64,
    pub min_z: f64,
    pub bounds_x: f64,
    pub bounds_z: f64,
    pub cell_size: f64,
    pub cols: usize,
    pub rows: usize,
}

impl GridSpec {
    pub fn for_room(room: &RoomGeometry, cell_size: f64) -> Result<Self, EngineError> {
        room.check()
            .map_err(|e| EngineError::InvalidParameter { name: "room", value: e.to_string() })?;
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(EngineError::InvalidParameter { name: "cell_size", value: cell_size.to_string() });
        }
        let cells = |extent: f64| {
            let r = extent / cell_size;
            if (r - r.round()).abs() < 1e-9 { r.round() } else { r.ceil() }.max(1.0) as usize
        };
        Ok(GridSpec {
            min_x: room.min_x(),
            min_z: room.min_z(),
            bounds_x: room.bounds_x,
            bounds_z: room.bounds_z,
            cell_size,
            cols: cells(room.bounds_x),
            rows: cells(room.bounds_z),
        })
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(row, col)` of the cell holding `(x, z)`, or `None` outside the room.
    pub fn cell_of(&self, x: f64, z: f64) -> Option<(usize, usize)> {
        let (dx, dz) = (x - self.min_x, z - self.min_z);
        if !(dx >= 0.0 && dx < self.bounds_x && dz >= 0.0 && dz < self.bounds_z) {
            return None;
        }
        let col = ((dx / self.cell_size) as usize).min(self.cols - 1);
        let row = ((dz / self.cell_size) as usize).min(self.rows - 1);
        Some((row, col))
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    /// Floor coordinates `(x, z)` of a cell's centre.
    pub fn cell_centre(&self, row: usize, col: usize) -> [f64; 2] {
        [
            self.min_x + (col as f64 + 0.5) * self.cell_size,
            self.min_z + (row as f64 + 0.5) * self.cell_size,
        ]
    }
}

/// Per-cell pose counts. Poses outside the room are not binned; they are
/// tallied in `clipped`, so `total() + clipped` equals the pose count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    pub grid: GridSpec,
    pub counts: Vec<u64>,
    pub clipped: u64,
}

impl OccupancyGrid {
    pub fn empty(grid: GridSpec) -> Self {
        OccupancyGrid { grid, counts: vec![0; grid.len()], clipped: 0 }
    }

    pub fn count(&self, row: usize, col: usize) -> u64 {
        self.counts[self.grid.index(row, col)]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn max(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    /// Adds another grid over the same cells.
    pub fn merge(&mut self, other: &OccupancyGrid) -> Result<(), EngineError> {
        if self.grid != other.grid {
            return Err(EngineError::DimensionMismatch { left: self.grid.len(), right: other.grid.len() });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.clipped += other.clipped;
        Ok(())
    }
}

pub fn occupancy(store: &FrameStore, room: &RoomGeometry, cell_size: f64) -> Result<OccupancyGrid, EngineError> {
    let mut grid = OccupancyGrid::empty(GridSpec::for_room(room, cell_size)?);
    for (_, _, pose) in store.poses() {
        match grid.grid.cell_of(pose.position.x, pose.position.z) {
            Some((r, c)) => {
                let i = grid.grid.index(r, c);
                grid.counts[i] += 1;
            }
            None => grid.clipped += 1,
        }
    }
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuiverCell {
    /// Unit mean view direction `(dx, dz)`, if defined.
    pub direction: Option<[f64; 2]>,
    /// Length of the mean horizontal direction before normalisation.
    pub magnitude: f64,
    pub samples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuiverField {
    pub grid: GridSpec,
    pub cells: Vec<QuiverCell>,
}

impl QuiverField {
    pub fn cell(&self, row: usize, col: usize) -> &QuiverCell {
        &self.cells[self.grid.index(row, col)]
    }

    pub fn defined(&self) -> impl Iterator<Item = (usize, usize, [f64; 2], f64)> + '_ {
        self.cells.iter().enumerate().filter_map(|(i, c)| {
            c.direction.map(|d| (i / self.grid.cols, i % self.grid.cols, d, c.magnitude))
        })
    }
}

/// Mean horizontal view direction per cell. Out-of-room poses are ignored,
/// matching [`occupancy`].
pub fn quiver(store: &FrameStore, room: &RoomGeometry, cell_size: f64) -> Result<QuiverField, EngineError> {
    let grid = GridSpec::for_room(room, cell_size)?;
    let mut sums = vec![([0.0f64; 2], 0u64); grid.len()];
    for (_, _, pose) in store.poses() {
        if let Some((r, c)) = grid.cell_of(pose.position.x, pose.position.z) {
            let (sum, n) = &mut sums[grid.index(r, c)];
            sum[0] += pose.direction.x;
            sum[1] += pose.direction.z;
            *n += 1;
        }
    }
    let cells = sums
        .into_iter()
        .map(|(sum, n)| {
            if n == 0 {
                return QuiverCell { direction: None, magnitude: 0.0, samples: 0 };
            }
            let mean = [sum[0] / n as f64, sum[1] / n as f64];
            let magnitude = mean[0].hypot(mean[1]);
            let direction = (magnitude >= QUIVER_MIN_MAGNITUDE).then(|| [mean[0] / magnitude, mean[1] / magnitude]);
            QuiverCell { direction, magnitude, samples: n }
        })
        .collect();
    Ok(QuiverField { grid, cells })
}

/// Axis-aligned floor box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub min_x: f64,
    pub max_x: f64,
    pub min_z: f64,
    pub max_z: f64,
}

impl Extent {
    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn depth(&self) -> f64 {
        self.max_z - self.min_z
    }
}

/// Interval holding the central `quantile` share of `values`.
///
/// Keeps `ceil(quantile * n)` order statistics and trims the rest, splitting
/// the trim as evenly as possible with the extra sample dropped at the top.
pub fn central_interval(values: &mut [f64], quantile: f64) -> (f64, f64) {
    let n = values.len();
    values.sort_by(f64::total_cmp);
    let keep = ((quantile * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    let drop = n - keep;
    let low = drop / 2;
    let high = drop - low;
    (values[low], values[n - 1 - high])
}

/// Per-axis central-`quantile` box of all pose floor positions.
pub fn occupied_extent(store: &FrameStore, quantile: f64) -> Result<Extent, EngineError> {
    if !(quantile > 0.5 && quantile <= 1.0) {
        return Err(EngineError::InvalidParameter { name: "quantile", value: quantile.to_string() });
    }
    let (mut xs, mut zs): (Vec<f64>, Vec<f64>) =
        store.poses().map(|(_, _, p)| (p.position.x, p.position.z)).unzip();
    if xs.is_empty() {
        return Err(EngineError::Empty("frame store has no poses"));
    }
    let (min_x, max_x) = central_interval(&mut xs, quantile);
    let (min_z, max_z) = central_interval(&mut zs, quantile);
    Ok(Extent { min_x, max_x, min_z, max_z })
}
