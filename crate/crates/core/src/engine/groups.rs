//! Density-based grouping of users within a frame.
//!
//! Users closer than `eps` are neighbours. A user with at least
//! `min_size - 1` neighbours is a core member; clusters are the connected
//! components of core members plus any border users reachable from them.
//! Everyone else is noise. With `min_size = 2` this is exactly connectivity
//! under the `eps` threshold with singletons as noise.

use super::EngineError;
use crate::geom::Vec3;
use crate::resample::{Frame, FrameStore};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};

/// Cluster label per point, `None` for noise. Clusters are numbered in the
/// order their first core point appears in the input.
pub fn dbscan(points: &[Vec3], eps: f64, min_size: usize) -> Result<Vec<Option<usize>>, EngineError> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(EngineError::InvalidParameter { name: "eps", value: eps.to_string() });
    }
    if min_size < 2 {
        return Err(EngineError::InvalidParameter { name: "min_size", value: min_size.to_string() });
    }
    let n = points.len();
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i && points[i].distance(points[j]) <= eps).collect())
        .collect();
    let is_core = |i: usize| neighbours[i].len() + 1 >= min_size;

    let mut labels = vec![None; n];
    let mut next = 0;
    for seed in 0..n {
        if labels[seed].is_some() || !is_core(seed) {
            continue;
        }
        let id = next;
        next += 1;
        labels[seed] = Some(id);
        let mut queue = VecDeque::from([seed]);
        while let Some(p) = queue.pop_front() {
            for &q in &neighbours[p] {
                if labels[q].is_none() {
                    labels[q] = Some(id);
                    if is_core(q) {
                        queue.push_back(q);
                    }
                }
            }
        }
    }
    Ok(labels)
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Clustering {
    /// Member user ids per cluster, each sorted.
    pub clusters: Vec<Vec<String>>,
    pub noise: Vec<String>,
}

impl Clustering {
    /// Cluster sizes, largest first.
    pub fn sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.clusters.iter().map(Vec::len).collect();
        s.sort_unstable_by(|a, b| b.cmp(a));
        s
    }
}

pub fn detect_groups(frame: &Frame, eps: f64, min_size: usize) -> Result<Clustering, EngineError> {
    let users: Vec<&String> = frame.keys().collect();
    let points: Vec<Vec3> = frame.values().map(|p| p.position).collect();
    let labels = dbscan(&points, eps, min_size)?;
    let mut clusters: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    let mut noise = Vec::new();
    for (user, label) in users.into_iter().zip(labels) {
        match label {
            Some(id) => clusters.entry(id).or_default().push(user.clone()),
            None => noise.push(user.clone()),
        }
    }
    Ok(Clustering { clusters: clusters.into_values().collect(), noise })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFrame {
    pub frame: u64,
    pub sizes: Vec<usize>,
}

impl GroupFrame {
    pub fn cluster_count(&self) -> usize {
        self.sizes.len()
    }
}

pub fn group_timeline(store: &FrameStore, eps: f64, min_size: usize) -> Result<Vec<GroupFrame>, EngineError> {
    store
        .frames()
        .map(|(frame, poses)| Ok(GroupFrame { frame, sizes: detect_groups(poses, eps, min_size)?.sizes() }))
        .collect()
}

/// Most frequent per-frame cluster count (smallest on ties).
pub fn modal_cluster_count(timeline: &[GroupFrame]) -> Option<usize> {
    let mut freq: BTreeMap<usize, usize> = BTreeMap::new();
    for g in timeline {
        *freq.entry(g.cluster_count()).or_default() += 1;
    }
    let best = freq.values().copied().max()?;
    freq.into_iter().find(|&(_, n)| n == best).map(|(k, _)| k)
}
