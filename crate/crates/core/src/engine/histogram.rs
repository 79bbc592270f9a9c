use super::EngineError;
use crate::resample::FrameStore;
use serde::{Deserialize, Serialize};

/// What a histogram's samples measure; decides axis labelling when rendered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum HistogramKind {
    /// Distance to the nearest other user, in meters.
    NearestNeighbour,
    /// Vertical coordinate of poses, in meters.
    Height,
}

/// Fixed-width histogram over `[origin, origin + bins * bin_width)`.
///
/// Samples past either end are counted in the edge bins and in `clipped`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub kind: HistogramKind,
    pub origin: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
    pub probabilities: Vec<f64>,
    pub total: u64,
    pub clipped: u64,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn bin_range(&self, i: usize) -> (f64, f64) {
        let lo = self.origin + i as f64 * self.bin_width;
        (lo, lo + self.bin_width)
    }

    /// Index of the most populated bin (first one on ties).
    pub fn mode(&self) -> Option<usize> {
        if self.is_empty() {
            return None;
        }
        let max = *self.counts.iter().max()?;
        self.counts.iter().position(|&c| c == max)
    }

    /// Probability mass in bins whose lower edge is at or above `threshold`.
    pub fn mass_from(&self, threshold: f64) -> f64 {
        (0..self.bins())
            .filter(|&i| self.bin_range(i).0 >= threshold - 1e-12)
            .map(|i| self.probabilities[i])
            .sum()
    }
}

fn bin_count(bin_width: f64, range: f64) -> Result<usize, EngineError> {
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(EngineError::InvalidParameter { name: "bin_width", value: bin_width.to_string() });
    }
    if !(range.is_finite() && range > 0.0) {
        return Err(EngineError::InvalidParameter { name: "range", value: range.to_string() });
    }
    let ratio = range / bin_width;
    let bins = if (ratio - ratio.round()).abs() < 1e-9 { ratio.round() } else { ratio.ceil() };
    if bins > 1e6 {
        return Err(EngineError::InvalidParameter { name: "bin_width", value: bin_width.to_string() });
    }
    Ok(bins as usize)
}

fn build(kind: HistogramKind, samples: impl IntoIterator<Item = f64>, bin_width: f64, range: f64) -> Result<Histogram, EngineError> {
    let bins = bin_count(bin_width, range)?;
    let mut counts = vec![0u64; bins];
    let mut clipped = 0;
    let mut total = 0;
    for x in samples {
        let raw = (x / bin_width).floor();
        let idx = if raw < 0.0 {
            clipped += 1;
            0
        } else if raw >= bins as f64 {
            clipped += 1;
            bins - 1
        } else {
            raw as usize
        };
        counts[idx] += 1;
        total += 1;
    }
    let probabilities = counts
        .iter()
        .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
        .collect();
    Ok(Histogram { kind, origin: 0.0, bin_width, counts, probabilities, total, clipped })
}

/// Normalised histogram of nearest-neighbour distances over `[0, range)`.
/// Distances at or beyond `range` land in the last bin.
pub fn zone_histogram(samples: &[f64], bin_width: f64, range: f64) -> Result<Histogram, EngineError> {
    if let Some(&bad) = samples.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(EngineError::InvalidDistance(bad));
    }
    build(HistogramKind::NearestNeighbour, samples.iter().copied(), bin_width, range)
}

/// Histogram of the vertical (`y`) coordinate of every pose over `[0, range)`.
pub fn height_histogram(store: &FrameStore, bin_width: f64, range: f64) -> Result<Histogram, EngineError> {
    build(HistogramKind::Height, store.poses().map(|(_, _, p)| p.position.y), bin_width, range)
}

/// Distance from one user to the closest other user in the same frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnSample {
    pub frame: u64,
    pub user_id: String,
    pub distance: f64,
}

/// One sample per (frame, user) for every user that is not alone.
pub fn nearest_neighbour_series(store: &FrameStore) -> Vec<NnSample> {
    let mut out = Vec::new();
    for (frame, poses) in store.frames() {
        if poses.len() < 2 {
            continue;
        }
        let pts: Vec<_> = poses.values().map(|p| p.position).collect();
        for (i, user) in poses.keys().enumerate() {
            let nearest = pts
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| pts[i].distance(*q))
                .fold(f64::INFINITY, f64::min);
            out.push(NnSample { frame, user_id: user.clone(), distance: nearest });
        }
    }
    out
}

/// Fraction of samples strictly closer than `threshold` (the intimate edge).
pub fn intimate_collision_rate(samples: &[f64], threshold: f64) -> Result<f64, EngineError> {
    if samples.is_empty() {
        return Err(EngineError::Empty("no nearest-neighbour samples"));
    }
    let hits = samples.iter().filter(|&&d| d < threshold).count();
    Ok(hits as f64 / samples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Quat, Vec3};
    use crate::resample::{FrameClock, Pose};
    use proptest::prelude::*;

    fn store_with(frames: &[Vec<(&str, Vec3)>]) -> FrameStore {
        let clock = FrameClock::new(6_000, 0).unwrap();
        let mut store = FrameStore::new("hall", clock);
        for (i, poses) in frames.iter().enumerate() {
            for (u, p) in poses {
                let pose = Pose {
                    position: *p,
                    direction: Vec3::new(1.0, 0.0, 0.0),
                    orientation: Quat::IDENTITY,
                    source_ts: clock.frame_start(i as u64),
                };
                store.insert(i as u64, *u, pose).unwrap();
            }
        }
        store
    }

    #[test]
    fn all_ones_fill_one_bin() {
        let h = zone_histogram(&[1.0; 7], 0.25, 6.0).unwrap();
        assert_eq!(h.bins(), 24);
        assert_eq!(h.probabilities[4], 1.0);
        assert_eq!(h.bin_range(4), (1.0, 1.25));
        assert_eq!(h.mode(), Some(4));
    }

    #[test]
    fn empty_input_is_flagged() {
        let h = zone_histogram(&[], 0.25, 6.0).unwrap();
        assert!(h.is_empty());
        assert!(h.probabilities.iter().all(|&p| p == 0.0));
        assert_eq!(h.mode(), None);
    }

    #[test]
    fn far_samples_clip_into_last_bin() {
        let h = zone_histogram(&[6.0, 50.0, 0.1], 0.25, 6.0).unwrap();
        assert_eq!(h.counts[23], 2);
        assert_eq!(h.clipped, 2);
        assert!(zone_histogram(&[-1.0], 0.25, 6.0).is_err());
        assert!(zone_histogram(&[1.0], 0.0, 6.0).is_err());
    }

    #[test]
    fn collision_rate_examples() {
        assert_eq!(intimate_collision_rate(&[0.3, 1.0, 2.0, 5.0], 0.45).unwrap(), 0.25);
        assert_eq!(intimate_collision_rate(&[0.45, 0.9], 0.45).unwrap(), 0.0);
        assert!(intimate_collision_rate(&[], 0.45).is_err());
    }

    #[test]
    fn lone_users_emit_nothing() {
        let store = store_with(&[vec![("a", Vec3::ZERO)]]);
        assert!(nearest_neighbour_series(&store).is_empty());
    }

    #[test]
    fn fixed_pair_one_meter_apart() {
        let frames: Vec<_> = (0..50)
            .map(|_| vec![("a", Vec3::ZERO), ("b", Vec3::new(0.0, 0.0, 1.0))])
            .collect();
        let samples = nearest_neighbour_series(&store_with(&frames));
        assert_eq!(samples.len(), 100);
        assert!(samples.iter().all(|s| s.distance == 1.0));
    }

    #[test]
    fn height_bins() {
        let floor: Vec<_> = (0..10).map(|i| vec![("a", Vec3::new(0.0, 0.1 * (i % 5) as f64, 0.0))]).collect();
        let h = height_histogram(&store_with(&floor), 0.5, 7.0).unwrap();
        assert_eq!(h.bins(), 14);
        assert_eq!(h.probabilities[0], 1.0);

        let hover: Vec<_> = (0..10).map(|_| vec![("a", Vec3::new(0.0, 3.2, 0.0))]).collect();
        let h = height_histogram(&store_with(&hover), 0.5, 7.0).unwrap();
        assert_eq!(h.bin_range(6), (3.0, 3.5));
        assert_eq!(h.probabilities[6], 1.0);
    }

    proptest! {
        #[test]
        fn probabilities_sum_to_one(mut samples in prop::collection::vec(0.0f64..10.0, 1..300), width in 0.05f64..1.5) {
            let h = zone_histogram(&samples, width, 6.0).unwrap();
            let sum: f64 = h.probabilities.iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-6);
            prop_assert_eq!(h.counts.iter().sum::<u64>(), samples.len() as u64);
            samples.reverse();
            let again = zone_histogram(&samples, width, 6.0).unwrap();
            prop_assert_eq!(again.counts, h.counts);
        }
    }
}
