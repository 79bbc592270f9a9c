//! Readers for the CSV tables written by the engine exports, so figures can
//! be rendered from saved metrics.

use super::{HistogramSeries, RenderError};
use crate::engine::{GridSpec, HistogramKind, OccupancyGrid, QuiverCell, QuiverField};
use serde::de::DeserializeOwned;
use serde::Deserialize;

fn rows<T: DeserializeOwned>(text: &str) -> Result<Vec<T>, RenderError> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| RenderError::Table(format!("row {}: {e}", i + 1))))
        .collect()
}

fn header(text: &str) -> &str {
    text.lines().next().unwrap_or("").trim()
}

#[derive(Deserialize)]
struct ChartRow {
    series: String,
    kind: HistogramKind,
    bin: usize,
    bin_lo: f64,
    bin_hi: f64,
    value: f64,
}

/// Inverse of [`chart_csv`](super::chart_csv). Series keep their order of
/// first appearance; bins must be listed in order.
pub fn parse_chart_csv(text: &str) -> Result<Vec<HistogramSeries>, RenderError> {
    let mut out: Vec<HistogramSeries> = Vec::new();
    for row in rows::<ChartRow>(text)? {
        let idx = match out.iter().position(|s| s.label == row.series) {
            Some(i) => i,
            None => {
                out.push(HistogramSeries {
                    label: row.series.clone(),
                    kind: row.kind,
                    origin: row.bin_lo,
                    bin_width: row.bin_hi - row.bin_lo,
                    values: Vec::new(),
                });
                out.len() - 1
            }
        };
        let s = &mut out[idx];
        if row.bin != s.values.len() || row.kind != s.kind {
            return Err(RenderError::Table(format!("series `{}`: bin {} out of order", s.label, row.bin)));
        }
        s.values.push(row.value);
    }
    if out.is_empty() {
        return Err(RenderError::Table("no rows".into()));
    }
    Ok(out)
}

#[derive(Deserialize)]
struct HistogramRow {
    bin_lo: f64,
    bin_hi: f64,
    #[allow(dead_code)]
    count: u64,
    probability: f64,
}

/// Reads an engine histogram table (`bin_lo,bin_hi,count,probability`) as a
/// series of probabilities.
pub fn parse_histogram_csv(text: &str, label: &str, kind: HistogramKind) -> Result<HistogramSeries, RenderError> {
    let rows = rows::<HistogramRow>(text)?;
    let first = rows.first().ok_or_else(|| RenderError::Table("no rows".into()))?;
    Ok(HistogramSeries {
        label: label.to_owned(),
        kind,
        origin: first.bin_lo,
        bin_width: first.bin_hi - first.bin_lo,
        values: rows.iter().map(|r| r.probability).collect(),
    })
}

/// Reads whichever histogram layout `text` holds.
pub fn parse_any_histogram(text: &str, label: &str, kind: HistogramKind) -> Result<Vec<HistogramSeries>, RenderError> {
    if header(text).starts_with("series,") {
        parse_chart_csv(text)
    } else {
        Ok(vec![parse_histogram_csv(text, label, kind)?])
    }
}

fn centred_grid(rows: usize, cols: usize, cell_size: f64) -> Result<GridSpec, RenderError> {
    if rows == 0 || cols == 0 {
        return Err(RenderError::Table("no rows".into()));
    }
    if !(cell_size.is_finite() && cell_size > 0.0) {
        return Err(RenderError::InvalidSpec(format!("cell size {cell_size}")));
    }
    let (bx, bz) = (cols as f64 * cell_size, rows as f64 * cell_size);
    Ok(GridSpec { min_x: -bx / 2.0, min_z: -bz / 2.0, bounds_x: bx, bounds_z: bz, cell_size, cols, rows })
}

/// Places `(row, col)` records into a dense vector, requiring every cell
/// exactly once.
fn dense<T: Clone>(cells: Vec<(usize, usize, T)>, cell_size: f64, empty: T) -> Result<(GridSpec, Vec<T>), RenderError> {
    let rows = cells.iter().map(|c| c.0 + 1).max().unwrap_or(0);
    let cols = cells.iter().map(|c| c.1 + 1).max().unwrap_or(0);
    let grid = centred_grid(rows, cols, cell_size)?;
    let mut seen = vec![false; grid.len()];
    let mut out = vec![empty; grid.len()];
    for (r, c, v) in cells {
        let i = grid.index(r, c);
        if std::mem::replace(&mut seen[i], true) {
            return Err(RenderError::Table(format!("cell ({r}, {c}) listed twice")));
        }
        out[i] = v;
    }
    if seen.iter().any(|s| !s) {
        return Err(RenderError::Table("grid table is missing cells".into()));
    }
    Ok((grid, out))
}

#[derive(Deserialize)]
struct GridRow {
    row: usize,
    col: usize,
    count: u64,
}

/// Reads `row,col,count`. Tables carry no room placement, so the grid is
/// centred on the origin with square cells of `cell_size`.
pub fn parse_grid_csv(text: &str, cell_size: f64) -> Result<OccupancyGrid, RenderError> {
    let cells = rows::<GridRow>(text)?.into_iter().map(|r| (r.row, r.col, r.count)).collect();
    let (grid, counts) = dense(cells, cell_size, 0)?;
    Ok(OccupancyGrid { grid, counts, clipped: 0 })
}

#[derive(Deserialize)]
struct QuiverRow {
    row: usize,
    col: usize,
    dx: Option<f64>,
    dz: Option<f64>,
    magnitude: f64,
}

/// Reads `row,col,dx,dz,magnitude`; blank directions are undefined cells.
pub fn parse_quiver_csv(text: &str, cell_size: f64) -> Result<QuiverField, RenderError> {
    let cells = rows::<QuiverRow>(text)?
        .into_iter()
        .map(|r| {
            let direction = match (r.dx, r.dz) {
                (Some(dx), Some(dz)) => Some([dx, dz]),
                _ => None,
            };
            (r.row, r.col, QuiverCell { direction, magnitude: r.magnitude, samples: 0 })
        })
        .collect();
    let (grid, cells) = dense(cells, cell_size, QuiverCell { direction: None, magnitude: 0.0, samples: 0 })?;
    Ok(QuiverField { grid, cells })
}
