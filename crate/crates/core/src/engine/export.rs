//! CSV tables for every engine product.
//!
//! Floats are written in Rust's shortest round-trip form, so parsing a
//! table back yields bit-identical values. Undefined values are empty cells.

use super::{Clustering, GroupFrame, Histogram, NnSample, OccupancyGrid, PairwiseMatrices, QuiverField};
use std::fmt::Write as _;

/// Long form: `frame,i,j,distance,angle` with user ids for `i` and `j`.
pub fn matrices_csv<'a>(frames: impl IntoIterator<Item = &'a PairwiseMatrices>) -> String {
    let mut out = String::from("frame,i,j,distance,angle\n");
    for m in frames {
        for (i, ui) in m.users.iter().enumerate() {
            for (j, uj) in m.users.iter().enumerate() {
                let angle = m.angle.get(i, j).map(|a| a.to_string()).unwrap_or_default();
                let _ = writeln!(out, "{},{ui},{uj},{},{angle}", m.frame_index, m.distance.get(i, j));
            }
        }
    }
    out
}

pub fn histogram_csv(h: &Histogram) -> String {
    let mut out = String::from("bin_lo,bin_hi,count,probability\n");
    for (i, (&count, &p)) in h.counts.iter().zip(&h.probabilities).enumerate() {
        let (lo, hi) = h.bin_range(i);
        let _ = writeln!(out, "{lo},{hi},{count},{p}");
    }
    out
}

pub fn grid_csv(g: &OccupancyGrid) -> String {
    let mut out = String::from("row,col,count\n");
    for row in 0..g.grid.rows {
        for col in 0..g.grid.cols {
            let _ = writeln!(out, "{row},{col},{}", g.count(row, col));
        }
    }
    out
}

pub fn quiver_csv(q: &QuiverField) -> String {
    let mut out = String::from("row,col,dx,dz,magnitude\n");
    for row in 0..q.grid.rows {
        for col in 0..q.grid.cols {
            let c = q.cell(row, col);
            let (dx, dz) = c.direction.map_or((String::new(), String::new()), |d| (d[0].to_string(), d[1].to_string()));
            let _ = writeln!(out, "{row},{col},{dx},{dz},{}", c.magnitude);
        }
    }
    out
}

/// `frame,cluster_id,user_id`; noise users get cluster id `-1`.
pub fn clusters_csv<'a>(frames: impl IntoIterator<Item = (u64, &'a Clustering)>) -> String {
    let mut out = String::from("frame,cluster_id,user_id\n");
    for (frame, c) in frames {
        for (id, members) in c.clusters.iter().enumerate() {
            for u in members {
                let _ = writeln!(out, "{frame},{id},{u}");
            }
        }
        for u in &c.noise {
            let _ = writeln!(out, "{frame},-1,{u}");
        }
    }
    out
}

pub fn nn_samples_csv(samples: &[NnSample]) -> String {
    let mut out = String::from("frame,user_id,distance\n");
    for s in samples {
        let _ = writeln!(out, "{},{},{}", s.frame, s.user_id, s.distance);
    }
    out
}

/// `frame,clusters,sizes` with sizes joined by `;`.
pub fn timeline_csv(timeline: &[GroupFrame]) -> String {
    let mut out = String::from("frame,clusters,sizes\n");
    for g in timeline {
        let sizes: Vec<String> = g.sizes.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "{},{},{}", g.frame, g.cluster_count(), sizes.join(";"));
    }
    out
}
